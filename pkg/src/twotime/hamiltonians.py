"""On-site plus zz-pair spin Hamiltonians, the Rydberg-dressed chain, and
site-decoupled variants used after removing an atom."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .observables import SX, SY, SZ
from .quantum import _validate_sites, check_sites

SYMMETRY_TOL = 1e-14


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpinHamiltonian:
    """``H = sum_{m<n} U_mn sz_m sz_n + sum_m h_m . sigma_m`` (hbar = 1).

    ``couplings`` is symmetric with an exactly zero diagonal.
    """

    n_sites: int
    fields: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        n = self.n_sites
        fields = np.array(self.fields, dtype=float).reshape(n, 3)
        u = np.array(self.couplings, dtype=float)
        if u.shape != (n, n):
            raise ValueError(f"couplings must be {n}x{n}, got {u.shape}")
        if np.max(np.abs(u - u.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(u) != 0):
            raise ValueError("couplings must have a zero diagonal")
        object.__setattr__(self, "fields", _readonly(fields))
        object.__setattr__(self, "couplings", _readonly(u))

    @classmethod
    def zero(cls, n_sites: int) -> "SpinHamiltonian":
        return cls(n_sites, np.zeros((n_sites, 3)), np.zeros((n_sites, n_sites)))

    def pair_norm_sum(self, site: int) -> float:
        """``sum_{n != site} ||H_{site,n}||``; each zz term has norm ``|U|``."""
        _validate_sites([site], self.n_sites)
        return float(np.sum(np.abs(self.couplings[site])))

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "fields": self.fields.tolist(),
            "couplings": self.couplings.tolist(),
        }


@dataclass(frozen=True)
class RydbergModelSpec:
    n_sites: int
    u0: float = 1.0
    rc: float = 1.0
    fields: tuple = ()

    def field_array(self) -> np.ndarray:
        if len(self.fields) == 0:
            return np.zeros((self.n_sites, 3))
        f = np.asarray(self.fields, dtype=float)
        if f.shape != (self.n_sites, 3):
            raise ValueError(f"fields must have shape ({self.n_sites}, 3), got {f.shape}")
        return f


def soft_core(d, u0: float, rc: float):
    """Rydberg-dressed pair strength ``U0 / (1 + (d/Rc)^6)``."""
    d = np.asarray(d, dtype=float)
    return u0 / (1.0 + (d / rc) ** 6)


def build_rydberg_chain(spec: RydbergModelSpec) -> SpinHamiltonian:
    if not spec.u0 > 0 or not spec.rc > 0:
        raise ValueError("U0 and Rc must be positive")
    n = spec.n_sites
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    u = soft_core(dist, spec.u0, spec.rc)
    np.fill_diagonal(u, 0.0)
    return SpinHamiltonian(n, spec.field_array(), u)


def decouple_site(h: SpinHamiltonian, i: int, keep_onsite: bool = True) -> SpinHamiltonian:
    """Remove every pair term touching site ``i`` (and its field unless kept)."""
    _validate_sites([i], h.n_sites)
    u = h.couplings.copy()
    u[i, :] = 0.0
    u[:, i] = 0.0
    fields = h.fields.copy()
    if not keep_onsite:
        fields[i] = 0.0
    return replace(h, fields=fields, couplings=u)


def with_onsite(h: SpinHamiltonian, i: int, field) -> SpinHamiltonian:
    """Copy of ``h`` whose site-``i`` field is replaced by ``field``."""
    _validate_sites([i], h.n_sites)
    fields = h.fields.copy()
    fields[i] = np.asarray(field, dtype=float)
    return replace(h, fields=fields)


def onsite_matrix(field) -> np.ndarray:
    hx, hy, hz = np.asarray(field, dtype=float)
    return hx * SX + hy * SY + hz * SZ


def zz_diagonal(n_sites: int, i: int, j: int) -> np.ndarray:
    """Diagonal of ``sz_i sz_j`` in the computational basis."""
    idx = np.arange(2**n_sites)
    zi = 1 - 2 * ((idx >> (n_sites - 1 - i)) & 1)
    zj = 1 - 2 * ((idx >> (n_sites - 1 - j)) & 1)
    return (zi * zj).astype(float)


def to_dense(h: SpinHamiltonian, max_sites: int | None = None) -> np.ndarray:
    n = h.n_sites
    check_sites(n, max_sites)
    dim = 2**n
    diag = np.zeros(dim)
    for m in range(n):
        for k in range(m + 1, n):
            if h.couplings[m, k] != 0:
                diag += h.couplings[m, k] * zz_diagonal(n, m, k)
    out = np.diag(diag).astype(np.complex128)
    for m in range(n):
        if np.any(h.fields[m] != 0):
            left = np.eye(2**m)
            right = np.eye(2 ** (n - m - 1))
            out += np.kron(np.kron(left, onsite_matrix(h.fields[m])), right)
    return out


def pair_terms_dense(h: SpinHamiltonian, i: int) -> np.ndarray:
    """Dense ``sum_{n != i} H_{in}``."""
    n = h.n_sites
    diag = np.zeros(2**n)
    for k in range(n):
        if k != i and h.couplings[i, k] != 0:
            diag += h.couplings[i, k] * zz_diagonal(n, i, k)
    return np.diag(diag).astype(np.complex128)


def hamiltonian_from_dict(d: dict) -> SpinHamiltonian:
    """Build from ``{"n_sites", "u0", "rc", "fields", "couplings"?}``.

    An explicit ``couplings`` matrix overrides the soft-core law.
    """
    n = int(d["n_sites"])
    fields = d.get("fields") or np.zeros((n, 3))
    if d.get("couplings") is not None:
        return SpinHamiltonian(n, fields, d["couplings"])
    spec = RydbergModelSpec(n, float(d.get("u0", 1.0)), float(d.get("rc", 1.0)),
                            tuple(map(tuple, np.asarray(fields, dtype=float))))
    return build_rydberg_chain(spec)
