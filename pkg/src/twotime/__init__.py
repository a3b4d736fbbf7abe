"""Ancilla-free measurement protocols for two-time correlations in spin-1/2 chains."""

from .bounds import (
    BoundGridPoint,
    BoundParams,
    bounds_grid,
    combined_bound,
    e_full,
    e_naive,
    e_prime,
    matsuta_bound,
    rotation_noise_bound,
)
from .correlations import (
    CorrelationQuery,
    commutator_norm,
    deferred_correlation,
    epsilon_actual,
    exact_two_time,
    im_c_from_rotations,
    modified_projective_correlation,
    projective_correlation,
    scaling_term,
)
from .hamiltonians import RydbergModelSpec, SpinHamiltonian, build_rydberg_chain, decouple_site
from .observables import DichotomicObservable, HermitianObservable, PauliObservable
from .protocols import AngleNoiseModel, ProtocolResult, run_projective_protocol, run_rotation_protocol
from .quantum import QuantumState

__version__ = "0.1.0"
