"""Dense state-vector kernels for small spin-1/2 chains.

Basis convention: site 0 is the most significant bit of the basis index and
spin up maps to bit 0, so ``sigma_z |up> = +|up>`` and embeddings follow the
ordinary ``np.kron`` order (site 0 is the leftmost tensor factor).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_SITES = 14

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
BORN_FLOOR = 1e-15


class SizeGuardError(ValueError):
    """Raised when a dense construction would exceed the site guard."""


class DimensionError(ValueError):
    pass


class BornRuleError(RuntimeError):
    """All outcome probabilities vanished, the state is numerically invalid."""


def check_sites(n_sites: int, max_sites: int | None = None) -> None:
    limit = MAX_SITES if max_sites is None else max_sites
    if n_sites < 1:
        raise DimensionError(f"n_sites must be positive, got {n_sites}")
    if n_sites > limit:
        raise SizeGuardError(
            f"n_sites={n_sites} exceeds the dense guard of {limit} sites"
        )


def n_sites_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized pure state of ``n_sites`` spins."""

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        check_sites(self.n_sites)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2**self.n_sites:
            raise DimensionError(
                f"expected {2**self.n_sites} amplitudes, got {amps.size}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> "QuantumState":
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(n_sites_of(vec.size), vec)

    @classmethod
    def all_up(cls, n_sites: int) -> "QuantumState":
        amps = np.zeros(2**n_sites, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_sites, amps)

    @classmethod
    def product(cls, local_states: Sequence[Sequence[complex]]) -> "QuantumState":
        vec = np.ones(1, dtype=np.complex128)
        for loc in local_states:
            loc = np.asarray(loc, dtype=np.complex128)
            vec = np.kron(vec, loc / np.linalg.norm(loc))
        return cls.from_vector(vec)

    @classmethod
    def bloch_product(cls, angles: Sequence[tuple[float, float]]) -> "QuantumState":
        """Product state from per-site Bloch angles ``(polar, azimuth)``."""
        return cls.product(
            [(np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)) for th, ph in angles]
        )

    @classmethod
    def random(cls, n_sites: int, rng: np.random.Generator) -> "QuantumState":
        """Haar-random pure state."""
        dim = 2**n_sites
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls.from_vector(vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class EvolutionCache:
    """Spectral decomposition ``H = V diag(lam) V^dagger`` of a Hermitian matrix."""

    hamiltonian_fingerprint: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.eigenvalues * t)

    def propagator(self, t: float) -> np.ndarray:
        """Dense ``exp(-iHt)``."""
        v = self.eigenvectors
        return (v * self.phases(t)) @ v.conj().T


def fingerprint(matrix: np.ndarray) -> str:
    m = np.ascontiguousarray(matrix, dtype=np.complex128)
    return hashlib.sha256(m.tobytes()).hexdigest()[:16]


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) < tol)


def make_evolution_cache(h: np.ndarray) -> EvolutionCache:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"Hamiltonian must be square, got shape {h.shape}")
    n_sites_of(h.shape[0])
    if not is_hermitian(h):
        raise ValueError("Hamiltonian is not Hermitian within 1e-12")
    # Symmetrize so eigh sees exactly Hermitian input.
    lam, vec = np.linalg.eigh(0.5 * (h + h.conj().T))
    lam.setflags(write=False)
    vec.setflags(write=False)
    return EvolutionCache(fingerprint(h), lam, vec)


def _check_dim(n: int, expected: int) -> None:
    if n != expected:
        raise DimensionError(f"dimension mismatch: {n} vs {expected}")


def evolve_vector(vec: np.ndarray, cache: EvolutionCache, t: float) -> np.ndarray:
    """``exp(-iHt) vec`` for an unnormalized vector; ``t=0`` is returned untouched."""
    _check_dim(vec.shape[0], cache.dim)
    if t == 0:
        return vec.copy()
    v = cache.eigenvectors
    return v @ (cache.phases(t) * (v.conj().T @ vec))


def evolve(
    state: QuantumState, cache: EvolutionCache, t: float, sign: str = "forward"
) -> QuantumState:
    """Apply ``exp(-iHt)`` (forward) or ``exp(+iHt)`` (backward) to ``state``."""
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    if sign not in ("forward", "backward"):
        raise ValueError(f"sign must be 'forward' or 'backward', got {sign!r}")
    tt = t if sign == "forward" else -t
    out = evolve_vector(state.amplitudes, cache, tt)
    # Renormalize away rounding drift (stays within NORM_TOL anyway).
    return QuantumState(state.n_sites, out / np.linalg.norm(out))


def heisenberg_op(op: np.ndarray, cache: EvolutionCache, t: float) -> np.ndarray:
    """``exp(iHt) op exp(-iHt)``."""
    op = np.asarray(op, dtype=np.complex128)
    _check_dim(op.shape[0], cache.dim)
    if t == 0:
        return op.copy()
    v = cache.eigenvectors
    ph = cache.phases(t)
    inner = v.conj().T @ op @ v
    inner = ph.conj()[:, None] * inner * ph[None, :]
    return v @ inner @ v.conj().T


def expectation(state: QuantumState | np.ndarray, op: np.ndarray) -> complex:
    vec = state.amplitudes if isinstance(state, QuantumState) else state
    _check_dim(np.shape(op)[0], vec.shape[0])
    return complex(np.vdot(vec, op @ vec))


def operator_norm(op: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    op = np.asarray(op)
    if op.size == 0:
        return 0.0
    if is_hermitian(op):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (op + op.conj().T)))))
    return float(np.linalg.norm(op, 2))


# ---------------------------------------------------------------- embeddings

def _validate_sites(sites: Sequence[int], n_sites: int) -> tuple[int, ...]:
    sites = tuple(int(s) for s in sites)
    if len(set(sites)) != len(sites):
        raise ValueError(f"sites must be distinct, got {sites}")
    for s in sites:
        if not 0 <= s < n_sites:
            raise IndexError(f"site {s} out of range for {n_sites} sites")
    return sites


def embed_local(op: np.ndarray, sites: Sequence[int] | int, n_sites: int) -> np.ndarray:
    """Embed an operator acting on ``sites`` into the full ``2**n_sites`` space.

    ``op`` is given in the tensor order of ``sites`` as listed.
    """
    check_sites(n_sites)
    if isinstance(sites, (int, np.integer)):
        sites = (int(sites),)
    sites = _validate_sites(sites, n_sites)
    op = np.asarray(op, dtype=np.complex128)
    k = len(sites)
    if op.shape != (2**k, 2**k):
        raise DimensionError(
            f"operator of shape {op.shape} does not act on {k} site(s)"
        )
    if sites == tuple(range(sites[0], sites[0] + k)):
        left = np.eye(2 ** sites[0])
        right = np.eye(2 ** (n_sites - sites[0] - k))
        return np.kron(np.kron(left, op), right)
    # General placement: act on the identity column by column.
    dim = 2**n_sites
    out = np.empty((dim, dim), dtype=np.complex128)
    eye = np.eye(dim, dtype=np.complex128)
    for col in range(dim):
        out[:, col] = apply_local(op, sites, eye[:, col], n_sites)
    return out


def apply_local(
    op: np.ndarray, sites: Sequence[int], vec: np.ndarray, n_sites: int
) -> np.ndarray:
    """Apply a ``2**k x 2**k`` operator on ``sites`` to a state vector.

    The last axis of ``vec`` may be batched: shape ``(2**n,)`` or ``(2**n, m)``.
    """
    k = len(sites)
    batch = vec.shape[1:]
    psi = vec.reshape((2,) * n_sites + batch)
    op_t = np.asarray(op, dtype=np.complex128).reshape((2,) * (2 * k))
    out = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), list(sites)))
    # tensordot puts the op's output axes first; move them back into place.
    out = np.moveaxis(out, list(range(k)), list(sites))
    return out.reshape(vec.shape)
