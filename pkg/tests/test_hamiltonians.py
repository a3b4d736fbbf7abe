from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import PAULI, dense_hamiltonian, rydberg_couplings, single, spectral_norm
from twotime.hamiltonians import (
    RydbergModelSpec,
    SpinHamiltonian,
    build_rydberg_chain,
    decouple_site,
    hamiltonian_from_dict,
    pair_terms_dense,
    soft_core,
    to_dense,
)
from twotime.quantum import SizeGuardError, is_hermitian


def random_spec(n, seed, u0=1.0, rc=1.0):
    rng = np.random.default_rng(seed)
    return RydbergModelSpec(n, u0, rc, tuple(map(tuple, rng.normal(size=(n, 3)))))


def test_validation():
    with pytest.raises(ValueError):
        SpinHamiltonian(2, np.zeros((2, 3)), [[0, 1], [0.5, 0]])
    with pytest.raises(ValueError):
        SpinHamiltonian(2, np.zeros((2, 3)), [[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        build_rydberg_chain(RydbergModelSpec(3, u0=-1.0))
    with pytest.raises(SizeGuardError):
        to_dense(SpinHamiltonian.zero(15))
    with pytest.raises(SizeGuardError):
        to_dense(SpinHamiltonian.zero(5), max_sites=4)


def test_soft_core_examples():
    assert soft_core(1, 1.0, 1.0) == 0.5
    assert soft_core(2, 1.0, 1.0) == pytest.approx(1 / 65, rel=1e-15)
    assert soft_core(1, 1.0, 100.0) == pytest.approx(1.0, rel=1e-10)


def test_couplings_follow_law_exactly():
    spec = RydbergModelSpec(7, 1.7, 1.3)
    h = build_rydberg_chain(spec)
    np.testing.assert_array_equal(h.couplings, rydberg_couplings(7, 1.7, 1.3))
    assert np.array_equal(h.couplings, h.couplings.T)
    assert np.all(np.diag(h.couplings) == 0)


def test_soft_core_monotone_and_asymptotic():
    d = np.linspace(0, 60, 601)
    u = soft_core(d, 1.3, 2.0)
    assert np.all(np.diff(u) < 0)
    far = np.array([20.0, 40.0, 80.0])
    np.testing.assert_allclose(soft_core(far, 1.3, 2.0) * far**6, 1.3 * 2.0**6, rtol=0.01)


def test_to_dense_examples():
    h = SpinHamiltonian(1, [[0, 0, 1]], [[0]])
    np.testing.assert_array_equal(to_dense(h), np.diag([1, -1]))
    h = SpinHamiltonian(2, np.zeros((2, 3)), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(to_dense(h), np.diag([1, -1, -1, 1]))
    dense = to_dense(build_rydberg_chain(random_spec(3, 0)))
    assert abs(np.trace(dense)) < 1e-12
    assert abs(np.linalg.eigvalsh(dense).sum()) < 1e-12


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_to_dense_matches_kron_oracle(n, seed):
    h = build_rydberg_chain(random_spec(n, seed))
    dense = to_dense(h)
    assert is_hermitian(dense, 1e-12)
    assert np.max(np.abs(dense - dense_hamiltonian(h.fields, h.couplings))) < 1e-12


def test_decouple_examples():
    h = build_rydberg_chain(random_spec(4, 1))
    hp = decouple_site(h, 1)
    assert np.array_equal(decouple_site(hp, 1).couplings, hp.couplings)
    assert np.array_equal(decouple_site(hp, 1).fields, hp.fields)

    h2 = build_rydberg_chain(RydbergModelSpec(2, 1.0, 1.0, ((0.1, 0.2, 0.3), (0.4, -0.5, 0.6))))
    bare = decouple_site(h2, 0, keep_onsite=False)
    expected = sum(c * single(PAULI[a], 1, 2) for c, a in zip((0.4, -0.5, 0.6), "xyz"))
    np.testing.assert_allclose(to_dense(bare), expected, atol=1e-15)


@pytest.mark.parametrize("keep", [True, False])
def test_decouple_triangle_bound(keep):
    h = build_rydberg_chain(random_spec(4, 2))
    diff = spectral_norm(to_dense(h) - to_dense(decouple_site(h, 1, keep_onsite=keep)))
    bound = sum(h.couplings[1, n] for n in range(4) if n != 1)
    if not keep:
        bound += np.linalg.norm(h.fields[1])
    assert diff <= bound + 1e-12


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2**32), data=st.data())
def test_decouple_equals_subtracting_pair_terms(n, seed, data):
    i = data.draw(st.integers(0, n - 1))
    h = build_rydberg_chain(random_spec(n, seed))
    pairs = sum(h.couplings[i, k] * single(PAULI["z"], i, n) @ single(PAULI["z"], k, n)
                for k in range(n) if k != i)
    lhs = to_dense(decouple_site(h, i))
    assert np.max(np.abs(lhs - (to_dense(h) - pairs))) < 1e-12
    assert np.max(np.abs(pair_terms_dense(h, i) - pairs)) < 1e-12


@pytest.mark.parametrize("axis", "xyz")
def test_bare_decoupled_commutes_with_site_projectors(axis):
    h = build_rydberg_chain(random_spec(4, 3))
    hp = to_dense(decouple_site(h, 2, keep_onsite=False))
    proj = single(0.5 * (np.eye(2) + PAULI[axis]), 2, 4)
    assert spectral_norm(hp @ proj - proj @ hp) < 1e-12


def test_from_dict_round_trip():
    h = build_rydberg_chain(random_spec(3, 4, u0=1.5, rc=0.8))
    again = hamiltonian_from_dict(h.to_dict())
    np.testing.assert_array_equal(again.couplings, h.couplings)
    np.testing.assert_array_equal(again.fields, h.fields)
    law = hamiltonian_from_dict({"n_sites": 3, "u0": 1.5, "rc": 0.8})
    np.testing.assert_allclose(law.couplings, rydberg_couplings(3, 1.5, 0.8), rtol=1e-15)
