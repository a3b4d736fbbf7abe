"""Shot-by-shot Monte Carlo emulation of the measurement protocols.

Shots are grouped in fixed-size blocks; block ``k`` draws all of its random
numbers from its own counter-based Philox stream keyed by ``(seed, k)``.  The
result therefore depends only on the seed, never on how blocks are spread over
worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .correlations import (
    CorrelationQuery,
    _check_angle,
    _check_prime,
    _o1_apply,
    _o1_branches,
    _state_at_t1,
    spectral_cache,
)
from .hamiltonians import SpinHamiltonian
from .quantum import BORN_FLOOR, BornRuleError, apply_local, evolve_vector

BLOCK_SIZE = 4096
MAX_SEED = 2**64 - 1
NOISE_KINDS = ("none", "systematic", "statistical")


class ProtocolError(ValueError):
    pass


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of shots."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class AngleNoiseModel:
    """Imperfect rotation angles.

    ``systematic`` shifts every rotation by ``delta``; ``statistical`` adds a
    zero-mean Gaussian jitter of width ``sigma`` on top of ``delta`` (which
    defaults to zero).
    """

    kind: str = "none"
    delta: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "none" and (self.delta != 0 or self.sigma != 0):
            raise ValueError("kind 'none' requires delta = sigma = 0")
        if self.kind == "systematic" and self.sigma != 0:
            raise ValueError("systematic noise has no jitter; use kind 'statistical'")

    def perturb(self, angles: np.ndarray, normals: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return angles
        if self.kind == "systematic":
            return angles + self.delta
        return angles + self.delta + self.sigma * normals


def sample_noisy_angle(theta: float, noise: AngleNoiseModel, rng: np.random.Generator) -> float:
    z = rng.standard_normal() if noise.kind == "statistical" else 0.0
    return float(noise.perturb(np.asarray(theta, dtype=float), np.asarray(z)))


@dataclass
class ProtocolResult:
    estimate: float
    shots: int
    std_error: float
    outcome_tallies: dict[tuple[float, ...], int]
    seed: int
    kind: str = ""
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        tallies = [
            {"outcome": list(k), "count": int(v)}
            for k, v in sorted(self.outcome_tallies.items())
        ]
        return {
            "kind": self.kind,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "shots": self.shots,
            "seed": self.seed,
            "params": self.params,
            "outcome_tallies": tallies,
        }


# ------------------------------------------------------------------ engine

def _check_run(shots: int, seed: int) -> None:
    if not isinstance(shots, (int, np.integer)) or shots < 1:
        raise ProtocolError(f"shots must be a positive integer, got {shots!r}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ProtocolError("seed must be an unsigned 64-bit integer")


def _select(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Born selection per row of ``probs`` with uniforms ``u``."""
    probs = np.where(probs < BORN_FLOOR, 0.0, probs)
    total = probs.sum(axis=1)
    if np.any(total == 0):
        raise BornRuleError("all outcome probabilities are below 1e-15")
    cum = np.cumsum(probs, axis=1)
    k = (cum <= (u * total)[:, None]).sum(axis=1)
    return np.minimum(k, probs.shape[1] - 1)


def _run_blocks(
    shots: int,
    seed: int,
    threads: int,
    block_fn: Callable[[np.random.Generator, int], np.ndarray],
) -> np.ndarray:
    """Run ``block_fn`` per block; returns per-shot outcome rows in shot order."""
    n_blocks = -(-shots // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, shots - b * BLOCK_SIZE) for b in range(n_blocks)]

    def job(b: int) -> np.ndarray:
        return block_fn(block_generator(seed, b), sizes[b])

    if threads <= 1 or n_blocks == 1:
        parts = [job(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, range(n_blocks)))
    return np.concatenate(parts, axis=0)


def _summarize(values: np.ndarray, outcomes: np.ndarray, seed: int, kind: str, params: dict):
    shots = values.size
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / np.sqrt(shots)) if shots > 1 else 0.0
    keys, counts = np.unique(outcomes, axis=0, return_counts=True)
    tallies = {tuple(float(x) for x in k): int(c) for k, c in zip(keys, counts)}
    return ProtocolResult(estimate, shots, std_error, tallies, int(seed), kind, params)


def _omega_table(q: CorrelationQuery) -> tuple[np.ndarray, list[np.ndarray]]:
    spectrum = q.o2.local_spectrum()
    return np.array([w for w, _ in spectrum]), [p for _, p in spectrum]


# -------------------------------------------------------------- protocols

def run_rotation_protocol(
    q: CorrelationQuery,
    theta: float,
    noise: AngleNoiseModel = AngleNoiseModel(),
    shots: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> ProtocolResult:
    """Estimate ``Im C`` from rotations by ``+theta`` and ``-theta``.

    One shot is a pair of experimental runs, one per rotation sign, each with
    its own noisy angle and its own measurement of O2.  The per-shot value is
    ``(omega_minus - omega_plus) / (2 sin theta)``.

    Each run's pre-measurement state is ``cos(a/2) A - i sin(a/2) B`` with the
    fixed vectors ``A = U(dt) U(t1) psi`` and ``B = U(dt) sigma U(t1) psi``, so
    Born probabilities for any angle ``a`` follow from a few overlaps.
    """
    s = _check_angle(theta)
    _check_run(shots, seed)
    cache = q.cache()
    phi = _state_at_t1(q)
    vec_a = evolve_vector(phi, cache, q.dt)
    vec_b = evolve_vector(_o1_apply(q, phi), cache, q.dt)
    omegas, projs = _omega_table(q)
    paa, pbb, pab = [], [], []
    for proj in projs:
        pa = apply_local(proj, q.o2.support, vec_a, q.n_sites)
        pb = apply_local(proj, q.o2.support, vec_b, q.n_sites)
        paa.append(np.vdot(vec_a, pa).real)
        pbb.append(np.vdot(vec_b, pb).real)
        pab.append(np.vdot(vec_a, pb).imag)
    paa, pbb, pab = map(np.array, (paa, pbb, pab))

    def probabilities(angles: np.ndarray) -> np.ndarray:
        c, sn = np.cos(angles / 2)[:, None], np.sin(angles / 2)[:, None]
        return np.clip(c * c * paa + sn * sn * pbb + 2 * c * sn * pab, 0.0, None)

    def block(gen: np.random.Generator, n: int) -> np.ndarray:
        normals = gen.standard_normal((n, 2))
        uniforms = gen.random((n, 2))
        plus = noise.perturb(np.full(n, float(theta)), normals[:, 0])
        minus = noise.perturb(np.full(n, -float(theta)), normals[:, 1])
        w_minus = omegas[_select(probabilities(minus), uniforms[:, 0])]
        w_plus = omegas[_select(probabilities(plus), uniforms[:, 1])]
        return np.stack([w_minus, w_plus], axis=1)

    outcomes = _run_blocks(shots, seed, threads, block)
    values = (outcomes[:, 0] - outcomes[:, 1]) / (2 * s)
    params = {"theta": float(theta), "noise": vars(noise).copy()}
    return _summarize(values, outcomes, seed, "rotation", params)


def run_projective_protocol(
    q: CorrelationQuery,
    shots: int = 10_000,
    seed: int = 0,
    modified: SpinHamiltonian | None = None,
    deferred: bool = False,
    threads: int = 1,
) -> ProtocolResult:
    """Estimate ``sum_omega omega (P(+, omega) - P(-, omega))``.

    Unmodified: measure sigma_i^a at t1, evolve under H, measure O2.
    ``modified``: evolve under the decoupled Hamiltonian after t1.
    ``deferred``: decouple at t1 but measure sigma_i^a together with O2 at t2.

    Each shot is a sequence of two Born draws; the post-measurement branch
    states are shared between shots because only two of them exist.
    """
    _check_run(shots, seed)
    if deferred and modified is None:
        raise ProtocolError("the deferred variant needs a decoupled Hamiltonian")
    if modified is not None:
        _check_prime(q, modified)
    later = q.cache() if modified is None else spectral_cache(modified)
    omegas, projs = _omega_table(q)
    phi = _state_at_t1(q)

    if deferred:
        phi = evolve_vector(phi, later, q.dt)
    branches = _o1_branches(q, phi)
    nus = np.array([nu for nu, _ in branches])
    p_nu = np.array([np.vdot(b, b).real for _, b in branches])
    cond = []
    for _, branch in branches:
        vec = branch if deferred else evolve_vector(branch, later, q.dt)
        row = []
        for proj in projs:
            pv = apply_local(proj, q.o2.support, vec, q.n_sites)
            row.append(np.vdot(pv, pv).real)
        row = np.array(row)
        total = row.sum()
        cond.append(row / total if total > 0 else row)
    cond = np.array(cond)

    def block(gen: np.random.Generator, n: int) -> np.ndarray:
        uniforms = gen.random((n, 2))
        k_nu = _select(np.broadcast_to(p_nu, (n, p_nu.size)), uniforms[:, 0])
        k_om = _select(cond[k_nu], uniforms[:, 1])
        return np.stack([nus[k_nu], omegas[k_om]], axis=1)

    outcomes = _run_blocks(shots, seed, threads, block)
    values = outcomes[:, 0] * outcomes[:, 1]
    kind = "deferred" if deferred else ("modified" if modified is not None else "projective")
    return _summarize(values, outcomes, seed, kind, {})
