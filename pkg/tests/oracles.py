"""Independent reference implementations used as test oracles.

Nothing here calls into the package's numerics: operators are built by
explicit basis loops or Kronecker products, propagators by ``scipy.linalg.expm``
and integrals by adaptive quadrature.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np
from scipy import integrate, linalg

I2 = np.eye(2, dtype=complex)
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# ------------------------------------------------------------- operators

def embed_loop(local: np.ndarray, sites, n: int) -> np.ndarray:
    """Matrix elements assembled basis state by basis state (site 0 = MSB)."""
    sites = list(sites)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)

    def bit(b, s):
        return (b >> (n - 1 - s)) & 1

    def local_index(b):
        return reduce(lambda acc, s: 2 * acc + bit(b, s), sites, 0)

    others = [s for s in range(n) if s not in sites]
    for row in range(dim):
        for col in range(dim):
            if all(bit(row, s) == bit(col, s) for s in others):
                out[row, col] = local[local_index(row), local_index(col)]
    return out


def kron_chain(ops) -> np.ndarray:
    return reduce(np.kron, ops)


def single(op: np.ndarray, site: int, n: int) -> np.ndarray:
    return kron_chain([op if k == site else I2 for k in range(n)])


def dense_hamiltonian(fields, couplings) -> np.ndarray:
    fields = np.asarray(fields, dtype=float)
    u = np.asarray(couplings, dtype=float)
    n = len(fields)
    h = np.zeros((2**n, 2**n), dtype=complex)
    for m in range(n):
        for a, axis in enumerate("xyz"):
            if fields[m, a]:
                h += fields[m, a] * single(PAULI[axis], m, n)
        for k in range(m + 1, n):
            if u[m, k]:
                h += u[m, k] * single(PAULI["z"], m, n) @ single(PAULI["z"], k, n)
    return h


def rydberg_couplings(n: int, u0: float, rc: float) -> np.ndarray:
    u = np.zeros((n, n))
    for m in range(n):
        for k in range(n):
            if m != k:
                u[m, k] = u0 / (1 + (abs(m - k) / rc) ** 6)
    return u


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    return linalg.expm(-1j * t * h)


def two_time(psi, h, o1, o2, t1, t2) -> complex:
    """``<psi| U(t1)^dag o1 U(t1) U(t2)^dag o2 U(t2) |psi>`` with expm."""
    u1, u2 = propagator(h, t1), propagator(h, t2)
    o1t = u1.conj().T @ o1 @ u1
    o2t = u2.conj().T @ o2 @ u2
    return complex(psi.conj() @ o1t @ o2t @ psi)


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False)[0])


# ----------------------------------------------------------------- bounds

def f_quad(R: float, u0: float = 1.0, rc: float = 1.0) -> float:
    val, _ = integrate.quad(lambda x: 1.0 / (1.0 + ((x - 1.0) / rc) ** 6), R, np.inf,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2 * u0 * val


def s_brute(a: int, rc: float = 1.0, m_max: int = 200_000) -> float:
    return math.fsum(1.0 / (1.0 + (m / rc) ** 6) for m in range(a, m_max + 1))


def lr_pointwise(tau, x, f, v, c2, kappa, eta) -> float:
    """Long-range bound per unit coupling, ``||O2|| = |X2| = 1``."""
    r = x**kappa
    fr = f(r)
    g = 2 * (1 + x)
    return 2 * (math.exp(v * tau - x**eta) + 2 * tau * g * fr
                + c2 * r * fr * tau * math.exp(v * tau - x**eta))


def beta_quad(dt, x, f, v, c2, kappa, eta) -> float:
    val, _ = integrate.quad(lambda t: lr_pointwise(t, x, f, v, c2, kappa, eta), 0.0, dt,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def beta_printed(dt, x, f, v, c2, kappa, eta) -> float:
    """Closed form as printed, with ``4 g f dt`` as the middle term."""
    r = x**kappa
    fr = f(r)
    g = 2 * (1 + x)
    return 2 * ((math.exp(v * dt) - 1) / v * math.exp(-(x**eta)) + 2 * g * fr * dt
                + c2 * r * fr / v**2 * (math.exp(v * dt) * (v * dt - 1) + 1) * math.exp(-(x**eta)))


def e_full_site_sum(dt, rho, beta_fn, u0=1.0, rc=1.0, n_max=4000) -> float:
    """Sum over every site n != i of an infinite chain with i = 0, j = rho.

    ``x = min(rho, |n - j|)`` is the distance from the support of ``H_in``
    to ``j``.
    """
    cache: dict[int, float] = {}
    terms = []
    for n in range(-n_max, n_max + 1):
        if n == 0:
            continue
        x = min(rho, abs(n - rho))
        if x not in cache:
            cache[x] = beta_fn(dt, x)
        terms.append(u0 / (1 + (abs(n) / rc) ** 6) * cache[x])
    return math.fsum(terms)
