from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import PAULI, embed_loop, propagator, single
from twotime.hamiltonians import RydbergModelSpec, build_rydberg_chain, to_dense
from twotime.observables import (
    DichotomicObservable,
    PauliObservable,
    born_sample,
    spin_projectors,
)
from twotime.quantum import (
    BornRuleError,
    DimensionError,
    QuantumState,
    SizeGuardError,
    apply_local,
    embed_local,
    evolve,
    expectation,
    heisenberg_op,
    make_evolution_cache,
    operator_norm,
)

SX, SY, SZ = PAULI["x"], PAULI["y"], PAULI["z"]


def ising_two_spin():
    return make_evolution_cache(single(SZ, 0, 2) @ single(SZ, 1, 2))


def plus_plus():
    return QuantumState.product([(1, 1), (1, 1)])


# ------------------------------------------------------------------ state

def test_state_validation():
    with pytest.raises(ValueError):
        QuantumState(1, np.array([1.0, 1.0]))
    with pytest.raises(DimensionError):
        QuantumState(2, np.array([1.0, 0.0]))
    with pytest.raises(SizeGuardError):
        QuantumState.all_up(15)
    s = QuantumState.all_up(3)
    assert s.amplitudes.size == 8 and s.amplitudes[0] == 1
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_basis_convention_site0_most_significant():
    # |down, up> has site 0 flipped -> index 0b10
    s = QuantumState.product([(0, 1), (1, 0)])
    assert np.argmax(np.abs(s.amplitudes)) == 2


# --------------------------------------------------------------- embedding

def test_embed_examples():
    np.testing.assert_array_equal(embed_local(SZ, [0], 1), np.diag([1, -1]))
    np.testing.assert_array_equal(embed_local(SX, [1], 2), np.kron(np.eye(2), SX))
    plus, _ = spin_projectors("z")
    np.testing.assert_array_equal(embed_local(plus, [0], 2), np.diag([1, 1, 0, 0]))


@pytest.mark.parametrize("sites", [(0,), (2,), (0, 1), (1, 3), (3, 0), (2, 0, 3)])
def test_embed_matches_basis_loop(sites):
    rng = np.random.default_rng(len(sites) * 10 + sites[0])
    d = 2 ** len(sites)
    local = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    np.testing.assert_allclose(embed_local(local, sites, 4), embed_loop(local, sites, 4),
                               atol=1e-14)


def test_apply_local_matches_dense():
    rng = np.random.default_rng(3)
    local = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    vec = rng.normal(size=32) + 1j * rng.normal(size=32)
    for sites in [(0, 1), (4, 2), (1, 3)]:
        np.testing.assert_allclose(apply_local(local, sites, vec, 5),
                                   embed_loop(local, sites, 5) @ vec, atol=1e-12)


def test_embed_rejects_bad_sites():
    with pytest.raises(IndexError):
        embed_local(SZ, [2], 2)
    with pytest.raises(ValueError):
        embed_local(np.eye(4), [0, 0], 2)


# ---------------------------------------------------------------- evolution

def test_cache_examples():
    cache = make_evolution_cache(np.zeros((4, 4)))
    np.testing.assert_array_equal(cache.eigenvalues, 0)
    np.testing.assert_allclose(cache.propagator(3.7), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(sorted(make_evolution_cache(SZ).eigenvalues), [-1, 1])


def test_cache_reconstruction_and_unitarity():
    h = to_dense(build_rydberg_chain(RydbergModelSpec(3, 1.0, 1.0, ((0.3, 0, 1), (0, 1, 0), (1, 1, 1)))))
    cache = make_evolution_cache(h)
    v = cache.eigenvectors
    assert np.max(np.abs(v @ np.diag(cache.eigenvalues) @ v.conj().T - h)) < 1e-10
    assert np.max(np.abs(v @ v.conj().T - np.eye(8))) < 1e-10


def test_cache_rejects_non_hermitian():
    with pytest.raises(ValueError):
        make_evolution_cache(np.array([[0, 1], [0, 0]]))


def test_evolve_free_and_reversible():
    rng = np.random.default_rng(0)
    psi = QuantumState.random(3, rng)
    zero = make_evolution_cache(np.zeros((8, 8)))
    np.testing.assert_allclose(evolve(psi, zero, 5.0).amplitudes, psi.amplitudes)
    h = to_dense(build_rydberg_chain(RydbergModelSpec(3, 1.0, 1.0, ((0.5, 0, 0),) * 3)))
    cache = make_evolution_cache(h)
    back = evolve(evolve(psi, cache, 2.3), cache, 2.3, sign="backward")
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-10


def test_evolve_ising_closed_form():
    # <y2(t)> = <y2> cos 2t + <z1 x2> sin 2t
    t = math.pi / 8
    y2 = single(SY, 1, 2)
    up_plus = QuantumState.product([(1, 0), (1, 1)])
    assert abs(expectation(evolve(up_plus, ising_two_spin(), t), y2) - math.sin(2 * t)) < 1e-12
    # <z1> = 0 for |++>, so the single-time value vanishes.
    assert abs(expectation(evolve(plus_plus(), ising_two_spin(), t), y2)) < 1e-12


def test_evolve_matches_expm():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = a + a.conj().T
    psi = QuantumState.random(3, rng)
    out = evolve(psi, make_evolution_cache(h), 0.77).amplitudes
    np.testing.assert_allclose(out, propagator(h, 0.77) @ psi.amplitudes, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0, 10), t1=st.floats(0, 5), t2=st.floats(0, 5), seed=st.integers(0, 2**32))
def test_norm_and_group_property(t, t1, t2, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    cache = make_evolution_cache(a + a.conj().T)
    psi = QuantumState.random(3, rng)
    assert abs(np.linalg.norm(evolve(psi, cache, t).amplitudes) - 1) < 1e-10
    two = evolve(evolve(psi, cache, t1), cache, t2).amplitudes
    one = evolve(psi, cache, t1 + t2).amplitudes
    assert np.max(np.abs(two - one)) < 1e-9


def test_bad_sign():
    with pytest.raises(ValueError):
        evolve(QuantumState.all_up(1), make_evolution_cache(SZ), 1.0, sign="sideways")


# --------------------------------------------------------------- observables

def test_expectation_examples():
    up = QuantumState.all_up(3)
    assert expectation(up, embed_local(SZ, [1], 3)) == 1
    assert expectation(up, embed_local(SX, [2], 3)) == 0
    zz = single(SZ, 0, 2) @ single(SZ, 1, 2)
    assert abs(expectation(plus_plus(), zz)) < 1e-15


def test_operator_norm_examples():
    assert operator_norm(np.eye(4)) == pytest.approx(1, abs=1e-15)
    assert operator_norm(embed_local(SZ, [1], 3)) == pytest.approx(1, abs=1e-15)
    comm = SX @ SY - SY @ SX
    np.testing.assert_allclose(comm, 2j * SZ)
    assert operator_norm(comm) == pytest.approx(2, abs=1e-14)


def test_submultiplicativity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        b = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) * (1 + 1e-12)


def test_heisenberg_examples():
    cache = ising_two_spin()
    x2 = single(SX, 1, 2)
    np.testing.assert_array_equal(heisenberg_op(x2, cache, 0.0), x2)
    free = make_evolution_cache(np.zeros((4, 4)))
    np.testing.assert_allclose(heisenberg_op(x2, free, 3.0), x2, atol=1e-15)
    for t in (0.1, 0.7, 2.0):
        expected = x2 * math.cos(2 * t) - single(SZ, 0, 2) @ single(SY, 1, 2) * math.sin(2 * t)
        assert np.max(np.abs(heisenberg_op(x2, cache, t) - expected)) < 1e-10


def test_heisenberg_vs_schrodinger():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    cache = make_evolution_cache(a + a.conj().T)
    psi = QuantumState.random(4, rng)
    op = embed_local(SY, [2], 4)
    for t in (0.0, 0.4, 3.3):
        lhs = expectation(psi, heisenberg_op(op, cache, t))
        rhs = expectation(evolve(psi, cache, t), op)
        assert abs(lhs - rhs) < 1e-10


# ------------------------------------------------------------------- Born

def test_born_eigenstate():
    rng = np.random.default_rng(0)
    up = QuantumState.all_up(3)
    for _ in range(20):
        nu, post = born_sample(up, PauliObservable(1, "z"), rng)
        assert nu == 1 and np.array_equal(post.amplitudes, up.amplitudes)


def test_born_equal_superposition():
    rng = np.random.default_rng(1)
    plus = QuantumState.product([(1, 1)])
    n = 100_000
    hits = sum(born_sample(plus, PauliObservable(0, "z"), rng)[0] == 1 for _ in range(n))
    assert abs(hits / n - 0.5) < 3 * math.sqrt(0.25 / n)


def test_born_random_state_frequencies():
    rng = np.random.default_rng(2)
    psi = QuantumState.random(3, rng)
    obs = DichotomicObservable.pauli_string([0, 2], "xy")
    plus = embed_local(obs.plus_projector, obs.support, 3)
    p = expectation(psi, plus).real
    n = 100_000
    hits = sum(born_sample(psi, obs, rng)[0] == 1 for _ in range(n))
    assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_born_completeness_and_collapse():
    rng = np.random.default_rng(3)
    for _ in range(20):
        psi = QuantumState.random(3, rng)
        axis = "xyz"[rng.integers(3)]
        p = [expectation(psi, embed_local(pr, [1], 3)).real for pr in spin_projectors(axis)]
        assert abs(sum(p) - 1) < 1e-12
        nu, post = born_sample(psi, PauliObservable(1, axis), rng)
        assert abs(expectation(post, embed_local(PAULI[axis], [1], 3)) - nu) < 1e-12


def test_born_sub_floor_branch_never_selected():
    rng = np.random.default_rng(0)
    # P(-1) = 1e-18 sits below the 1e-15 floor and must be treated as zero.
    state = QuantumState.from_vector([1.0, 1e-9])
    for _ in range(1000):
        assert born_sample(state, PauliObservable(0, "z"), rng)[0] == 1


def test_born_all_below_floor_raises():
    from twotime.protocols import _select

    with pytest.raises(BornRuleError):
        _select(np.array([[1e-16, 1e-17]]), np.array([0.5]))
