"""Local observables with explicit spectral projectors, and Born-rule sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .quantum import (
    BORN_FLOOR,
    BornRuleError,
    QuantumState,
    _validate_sites,
    apply_local,
    embed_local,
    is_hermitian,
)

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = {"x": SX, "y": SY, "z": SZ}

PROJECTOR_TOL = 1e-12


def pauli(axis: str) -> np.ndarray:
    try:
        return PAULI[axis]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}") from None


def spin_projectors(axis: str) -> tuple[np.ndarray, np.ndarray]:
    s = pauli(axis)
    return 0.5 * (I2 + s), 0.5 * (I2 - s)


@dataclass(frozen=True)
class PauliObservable:
    """Single-site spin component ``sigma_site^axis``."""

    site: int
    axis: str

    def __post_init__(self):
        pauli(self.axis)
        if self.site < 0:
            raise IndexError(f"site must be non-negative, got {self.site}")

    @property
    def support(self) -> tuple[int, ...]:
        return (self.site,)

    @property
    def norm(self) -> float:
        return 1.0

    def local_matrix(self) -> np.ndarray:
        return pauli(self.axis)

    def local_spectrum(self) -> list[tuple[float, np.ndarray]]:
        plus, minus = spin_projectors(self.axis)
        return [(1.0, plus), (-1.0, minus)]

    def dense(self, n_sites: int) -> np.ndarray:
        return embed_local(self.local_matrix(), self.support, n_sites)


@dataclass(frozen=True, eq=False)
class DichotomicObservable:
    """``e (P_plus - P_minus)`` on an ordered multi-site support."""

    support: tuple[int, ...]
    eigenvalue_magnitude: float
    plus_projector: np.ndarray

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        if len(set(support)) != len(support) or not support:
            raise ValueError(f"support must be a non-empty set of sites, got {support}")
        object.__setattr__(self, "support", support)
        if not self.eigenvalue_magnitude > 0:
            raise ValueError("eigenvalue magnitude must be positive")
        p = np.asarray(self.plus_projector, dtype=np.complex128)
        d = 2 ** len(support)
        if p.shape != (d, d):
            raise ValueError(f"projector must be {d}x{d}, got {p.shape}")
        if not is_hermitian(p, PROJECTOR_TOL):
            raise ValueError("projector is not Hermitian")
        if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
            raise ValueError("projector is not idempotent")
        p.setflags(write=False)
        object.__setattr__(self, "plus_projector", p)

    @classmethod
    def pauli_string(cls, sites: Sequence[int], axes: str) -> "DichotomicObservable":
        """Tensor product of Pauli operators, eigenvalues +-1."""
        if len(sites) != len(axes):
            raise ValueError("need one axis per site")
        op = np.ones((1, 1), dtype=np.complex128)
        for a in axes:
            op = np.kron(op, pauli(a))
        return cls(tuple(sites), 1.0, 0.5 * (np.eye(op.shape[0]) + op))

    @property
    def minus_projector(self) -> np.ndarray:
        return np.eye(self.plus_projector.shape[0]) - self.plus_projector

    @property
    def norm(self) -> float:
        return float(self.eigenvalue_magnitude)

    def local_matrix(self) -> np.ndarray:
        return self.eigenvalue_magnitude * (self.plus_projector - self.minus_projector)

    def local_spectrum(self) -> list[tuple[float, np.ndarray]]:
        e = float(self.eigenvalue_magnitude)
        return [(e, self.plus_projector), (-e, self.minus_projector)]

    def dense(self, n_sites: int) -> np.ndarray:
        return embed_local(self.local_matrix(), self.support, n_sites)


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """General Hermitian observable on a few sites, measured in its eigenbasis."""

    support: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(s) for s in self.support))
        m = np.asarray(self.matrix, dtype=np.complex128)
        if not is_hermitian(m):
            raise ValueError("observable matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))

    def local_matrix(self) -> np.ndarray:
        return self.matrix

    def local_spectrum(self, decimals: int = 10) -> list[tuple[float, np.ndarray]]:
        lam, vec = np.linalg.eigh(self.matrix)
        # Merge numerically degenerate eigenvalues into one eigenspace.
        keys = np.round(lam, decimals)
        out = []
        for value in np.unique(keys):
            cols = vec[:, keys == value]
            out.append((float(lam[keys == value].mean()), cols @ cols.conj().T))
        return out

    def dense(self, n_sites: int) -> np.ndarray:
        return embed_local(self.matrix, self.support, n_sites)


Observable = Union[PauliObservable, DichotomicObservable, HermitianObservable]


def check_support(obs: Observable, n_sites: int) -> None:
    _validate_sites(obs.support, n_sites)


def outcome_probabilities(
    vec: np.ndarray, obs: Observable, n_sites: int
) -> tuple[list[float], list[np.ndarray]]:
    """Born probabilities and unnormalized projected vectors for each eigenvalue."""
    values, branches = [], []
    for value, proj in obs.local_spectrum():
        values.append(value)
        branches.append(apply_local(proj, obs.support, vec, n_sites))
    return values, branches


def born_sample(
    state: QuantumState, obs: Observable, rng: np.random.Generator
) -> tuple[float, QuantumState]:
    """Projectively measure ``obs``; return the eigenvalue and collapsed state."""
    check_support(obs, state.n_sites)
    values, branches = outcome_probabilities(state.amplitudes, obs, state.n_sites)
    probs = np.array([np.vdot(b, b).real for b in branches])
    if np.all(probs < BORN_FLOOR):
        raise BornRuleError("all outcome probabilities are below 1e-15")
    probs[probs < BORN_FLOOR] = 0.0
    u = rng.random() * probs.sum()
    k = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), len(probs) - 1)
    post = branches[k] / np.sqrt(probs[k])
    return values[k], QuantumState(state.n_sites, post / np.linalg.norm(post))
