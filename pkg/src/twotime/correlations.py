"""Exact, expectation-level correlation quantities for the measurement protocols.

Everything here is computed from dense linear algebra; shot-based estimation
lives in :mod:`twotime.protocols`.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, replace

import numpy as np

from .hamiltonians import SpinHamiltonian, to_dense
from .observables import (
    Observable,
    PauliObservable,
    check_support,
    spin_projectors,
)
from .quantum import (
    DimensionError,
    EvolutionCache,
    QuantumState,
    apply_local,
    evolve_vector,
    heisenberg_op,
    make_evolution_cache,
    operator_norm,
)

MIN_SIN_THETA = 1e-6

_caches: "weakref.WeakKeyDictionary[SpinHamiltonian, EvolutionCache]" = (
    weakref.WeakKeyDictionary()
)


def spectral_cache(h: SpinHamiltonian) -> EvolutionCache:
    """Eigendecomposition of ``h``, memoized per Hamiltonian object."""
    cache = _caches.get(h)
    if cache is None:
        cache = make_evolution_cache(to_dense(h))
        _caches[h] = cache
    return cache


class DegenerateAngleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CorrelationQuery:
    """Inputs of ``C(t1, t2) = <psi| sigma_i^a(t1) O2(t2) |psi>``."""

    initial_state: QuantumState
    hamiltonian: SpinHamiltonian
    o1: PauliObservable
    o2: Observable
    t1: float
    t2: float

    def __post_init__(self):
        n = self.hamiltonian.n_sites
        if self.initial_state.n_sites != n:
            raise DimensionError(
                f"state has {self.initial_state.n_sites} sites, Hamiltonian {n}"
            )
        if not isinstance(self.o1, PauliObservable):
            raise TypeError("o1 must be a single-site PauliObservable")
        check_support(self.o1, n)
        check_support(self.o2, n)
        if set(self.o1.support) & set(self.o2.support):
            raise ValueError("o1 and o2 must have disjoint supports")
        if not 0 <= self.t1 <= self.t2:
            raise ValueError(f"need 0 <= t1 <= t2, got t1={self.t1}, t2={self.t2}")

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.n_sites

    @property
    def dt(self) -> float:
        return self.t2 - self.t1

    @property
    def site(self) -> int:
        return self.o1.site

    def with_times(self, t1: float, t2: float) -> "CorrelationQuery":
        return replace(self, t1=t1, t2=t2)

    def cache(self) -> EvolutionCache:
        return spectral_cache(self.hamiltonian)


# ------------------------------------------------------------------ helpers

def _o1_apply(q: CorrelationQuery, vec: np.ndarray) -> np.ndarray:
    return apply_local(q.o1.local_matrix(), q.o1.support, vec, q.n_sites)


def _o2_expect(q: CorrelationQuery, vec: np.ndarray, other: np.ndarray | None = None) -> complex:
    """``<other| O2 |vec>`` (``other`` defaults to ``vec``)."""
    o2v = apply_local(q.o2.local_matrix(), q.o2.support, vec, q.n_sites)
    return complex(np.vdot(vec if other is None else other, o2v))


def _state_at_t1(q: CorrelationQuery) -> np.ndarray:
    return evolve_vector(q.initial_state.amplitudes, q.cache(), q.t1)


def _o1_branches(q: CorrelationQuery, vec: np.ndarray):
    plus, minus = spin_projectors(q.o1.axis)
    return [
        (1.0, apply_local(plus, q.o1.support, vec, q.n_sites)),
        (-1.0, apply_local(minus, q.o1.support, vec, q.n_sites)),
    ]


def _o2_probabilities(q: CorrelationQuery, vec: np.ndarray) -> list[tuple[float, float]]:
    out = []
    for omega, proj in q.o2.local_spectrum():
        branch = apply_local(proj, q.o2.support, vec, q.n_sites)
        out.append((omega, float(np.vdot(branch, branch).real)))
    return out


def _check_prime(q: CorrelationQuery, h_prime: SpinHamiltonian) -> None:
    if h_prime.n_sites != q.n_sites:
        raise DimensionError(
            f"h_prime has {h_prime.n_sites} sites, query has {q.n_sites}"
        )


# --------------------------------------------------------------- quantities

def exact_two_time(q: CorrelationQuery) -> complex:
    """``<psi| sigma_i^a(t1) O2(t2) |psi>`` by dense Heisenberg conjugation."""
    cache = q.cache()
    n = q.n_sites
    o1_t = heisenberg_op(q.o1.dense(n), cache, q.t1)
    o2_t = heisenberg_op(q.o2.dense(n), cache, q.t2)
    psi = q.initial_state.amplitudes
    return complex(np.vdot(psi, o1_t @ (o2_t @ psi)))


def rotated_state(q: CorrelationQuery, theta: float) -> QuantumState:
    """``U(t2-t1) exp(-i theta sigma_i^a / 2) U(t1) |psi>``."""
    phi = _state_at_t1(q)
    rotated = np.cos(theta / 2) * phi - 1j * np.sin(theta / 2) * _o1_apply(q, phi)
    out = evolve_vector(rotated, q.cache(), q.dt)
    return QuantumState(q.n_sites, out / np.linalg.norm(out))


def rotation_expectation(q: CorrelationQuery, theta: float) -> float:
    """``E_theta``: expectation of O2 in the locally rotated state."""
    vec = rotated_state(q, theta).amplitudes
    return _o2_expect(q, vec).real


def _check_angle(theta: float) -> float:
    s = np.sin(theta)
    if abs(s) < MIN_SIN_THETA:
        raise DegenerateAngleError(f"|sin(theta)| < {MIN_SIN_THETA} for theta={theta}")
    return s


def im_c_from_rotations(q: CorrelationQuery, theta: float) -> float:
    """``(E_{-theta} - E_theta) / (2 sin theta)``, equal to ``Im C``."""
    s = _check_angle(theta)
    return (rotation_expectation(q, -theta) - rotation_expectation(q, theta)) / (2 * s)


def noisy_rotation_estimate(
    q: CorrelationQuery, theta: float, delta1: float, delta2: float
) -> float:
    """Exact value of the rotation estimator when the forward rotation is
    ``theta + delta1`` and the backward one ``-theta + delta2``."""
    s = _check_angle(theta)
    e1 = rotation_expectation(q, theta + delta1)
    e2 = rotation_expectation(q, -theta + delta2)
    return (e2 - e1) / (2 * s)


def expectation_pair(q: CorrelationQuery) -> tuple[float, float]:
    """``(<O2(t2)>, <sigma_i^a(t1) O2(t2) sigma_i^a(t1)>)`` in the initial state."""
    cache = q.cache()
    phi = _state_at_t1(q)
    plain = evolve_vector(phi, cache, q.dt)
    flipped = evolve_vector(_o1_apply(q, phi), cache, q.dt)
    return _o2_expect(q, plain).real, _o2_expect(q, flipped).real


def scaling_term(q: CorrelationQuery) -> float:
    one, two = expectation_pair(q)
    return two - one


def commutator_norm(q: CorrelationQuery) -> float:
    """``|| [O2(t2 - t1), sigma_i^a] ||`` with O2 evolved under the query Hamiltonian."""
    n = q.n_sites
    o2_t = heisenberg_op(q.o2.dense(n), q.cache(), q.dt)
    s = q.o1.dense(n)
    # i[A, B] is Hermitian for Hermitian A, B.
    return operator_norm(1j * (o2_t @ s - s @ o2_t))


def joint_probabilities(
    q: CorrelationQuery, h_prime: SpinHamiltonian | None = None
) -> dict[tuple[float, float], float]:
    """``P(nu, omega)`` for measuring sigma_i^a at t1 and O2 at t2.

    Between the two measurements the state evolves under ``h_prime`` when
    given (atom removed at t1), otherwise under the query Hamiltonian.
    """
    later = q.cache() if h_prime is None else spectral_cache(h_prime)
    if h_prime is not None:
        _check_prime(q, h_prime)
    phi = _state_at_t1(q)
    probs = {}
    for nu, branch in _o1_branches(q, phi):
        evolved = evolve_vector(branch, later, q.dt)
        for omega, p in _o2_probabilities(q, evolved):
            probs[(nu, omega)] = p
    return probs


def deferred_joint_probabilities(
    q: CorrelationQuery, h_prime: SpinHamiltonian
) -> dict[tuple[float, float], float]:
    """``P(nu, omega)`` when site i is decoupled at t1 but measured at t2."""
    _check_prime(q, h_prime)
    phi = _state_at_t1(q)
    evolved = evolve_vector(phi, spectral_cache(h_prime), q.dt)
    probs = {}
    for nu, branch in _o1_branches(q, evolved):
        for omega, p in _o2_probabilities(q, branch):
            probs[(nu, omega)] = p
    return probs


def correlation_from_joint(probs: dict[tuple[float, float], float]) -> float:
    """``sum_{nu, omega} nu omega P(nu, omega)``."""
    return float(sum(nu * omega * p for (nu, omega), p in probs.items()))


def projective_correlation(q: CorrelationQuery) -> float:
    return correlation_from_joint(joint_probabilities(q))


def modified_projective_correlation(q: CorrelationQuery, h_prime: SpinHamiltonian) -> float:
    return correlation_from_joint(joint_probabilities(q, h_prime))


def deferred_correlation(q: CorrelationQuery, h_prime: SpinHamiltonian) -> float:
    return correlation_from_joint(deferred_joint_probabilities(q, h_prime))


def modified_correlation_direct(q: CorrelationQuery, h_prime: SpinHamiltonian) -> float:
    """``Re <psi(t1)| sigma_i^a exp(iH'dt) O2 exp(-iH'dt) |psi(t1)>``.

    Equal to :func:`modified_projective_correlation`; this path skips the
    projectors entirely.
    """
    _check_prime(q, h_prime)
    later = spectral_cache(h_prime)
    phi = _state_at_t1(q)
    a = evolve_vector(phi, later, q.dt)
    b = evolve_vector(_o1_apply(q, phi), later, q.dt)
    return _o2_expect(q, a, other=b).real


def epsilon_actual(q: CorrelationQuery, h_prime: SpinHamiltonian) -> float:
    """``|C_H - C_{H,H'}|``: error caused by decoupling site i at t1."""
    _check_prime(q, h_prime)
    cache = q.cache()
    later = spectral_cache(h_prime)
    phi = _state_at_t1(q)
    flipped = _o1_apply(q, phi)
    full = _o2_expect(
        q, evolve_vector(phi, cache, q.dt), other=evolve_vector(flipped, cache, q.dt)
    ).real
    cut = _o2_expect(
        q, evolve_vector(phi, later, q.dt), other=evolve_vector(flipped, later, q.dt)
    ).real
    return abs(full - cut)

