"""Random Rydberg chains, states and correlation queries for property checks."""

from __future__ import annotations

import numpy as np

from .correlations import CorrelationQuery
from .hamiltonians import RydbergModelSpec, SpinHamiltonian, build_rydberg_chain
from .observables import PauliObservable
from .quantum import QuantumState

AXES = ("x", "y", "z")


def random_fields(n_sites: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * rng.normal(size=(n_sites, 3))


def random_chain(
    n_sites: int,
    rng: np.random.Generator,
    u0_range: tuple[float, float] = (0.5, 2.0),
    rc_range: tuple[float, float] = (0.5, 2.0),
    field_scale: float = 1.0,
) -> SpinHamiltonian:
    spec = RydbergModelSpec(
        n_sites,
        float(rng.uniform(*u0_range)),
        float(rng.uniform(*rc_range)),
        tuple(map(tuple, random_fields(n_sites, rng, field_scale))),
    )
    return build_rydberg_chain(spec)


def random_product_state(n_sites: int, rng: np.random.Generator) -> QuantumState:
    angles = [(float(np.arccos(rng.uniform(-1, 1))), float(rng.uniform(0, 2 * np.pi)))
              for _ in range(n_sites)]
    return QuantumState.bloch_product(angles)


def random_state(n_sites: int, rng: np.random.Generator, product: bool = False) -> QuantumState:
    if product:
        return random_product_state(n_sites, rng)
    return QuantumState.random(n_sites, rng)


def random_query(
    rng: np.random.Generator,
    n_range: tuple[int, int] = (2, 6),
    t_max: float = 2.0,
    h: SpinHamiltonian | None = None,
) -> CorrelationQuery:
    """Random chain (unless ``h`` is given), Haar state, distinct Pauli sites."""
    if h is None:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        h = random_chain(n, rng)
    n = h.n_sites
    i, j = (int(k) for k in rng.choice(n, size=2, replace=False))
    t1, t2 = np.sort(rng.uniform(0, t_max, size=2))
    return CorrelationQuery(
        QuantumState.random(n, rng),
        h,
        PauliObservable(i, AXES[rng.integers(3)]),
        PauliObservable(j, AXES[rng.integers(3)]),
        float(t1),
        float(t2),
    )
