import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gentkit import coherence, registry
from gentkit.algebra import h_purity, project
from gentkit.opspace import ground_space
from gentkit.states import product_state, random_pure, schmidt

seeds = st.integers(0, 2**31 - 1)
HL = registry.bipartite_local(2, 2)
SPIN1 = registry.spin(1)


@given(seeds, st.booleans())
def test_bipartite_coherence_iff_product(seed, product):
    if product:
        psi = product_state(random_pure(2, seed=seed), random_pure(3, seed=seed + 1))
    else:
        psi = random_pure(6, seed=seed)
    alg = registry.bipartite_local(2, 3)
    p2 = schmidt(psi, (2, 3)).coefficients[1]
    assert coherence.is_coherent(alg, psi).is_coherent == (p2 < 1e-8)


@given(seeds)
def test_spin_orbit_states_are_coherent(seed):
    rng = np.random.default_rng(seed)
    jx, jy, jz = registry.spin_matrices(1)
    theta = rng.normal(size=3)
    psi = expm(1j * (theta[0] * jx + theta[1] * jy + theta[2] * jz)) @ np.array([0, 0, 1.0])
    assert coherence.is_coherent(SPIN1, psi).is_coherent


@given(seeds)
def test_spin_random_states_are_not_coherent(seed):
    assert not coherence.is_coherent(SPIN1, random_pure(3, seed=seed)).is_coherent


@given(seeds)
def test_dispersion_is_linear_in_purity(seed):
    # irreducible: sum <x_i^2> is the Casimir value, sum <x_i>^2 is purity - 1/d
    for alg in (HL, SPIN1):
        psi = random_pure(alg.hilbert_dim, seed=seed)
        c = np.real(coherence.casimir(alg)[0, 0])
        pur = h_purity(alg, psi.density().matrix)
        assert abs(coherence.dispersion(alg, psi) + pur - c - 1 / alg.hilbert_dim) < 1e-9


def test_dispersion_minimal_on_coherent_states():
    coh = coherence.dispersion(SPIN1, [0, 0, 1])
    for s in range(20):
        assert coherence.dispersion(SPIN1, random_pure(3, seed=s)) >= coh - 1e-12


@given(seeds)
def test_witness_has_state_as_unique_ground_state(seed):
    psi = product_state(random_pure(2, seed=seed), random_pure(2, seed=seed + 7)).amplitudes
    h = coherence.ground_state_witness(HL, psi)
    g = ground_space(h)
    assert g.shape[1] == 1
    assert abs(abs(np.vdot(g[:, 0], psi)) - 1) < 1e-9
    assert HL.residual(h) <= 1e-10
    w = np.linalg.eigvalsh(h)
    assert abs(w[1] - w[0] - 1) < 1e-10


def test_witness_examples():
    np.testing.assert_allclose(coherence.ground_state_witness(SPIN1, [1, 0, 0]), registry.spin_matrices(1)[2],
                               atol=1e-12)
    np.testing.assert_allclose(coherence.ground_state_witness(HL, [1, 0, 0, 0]), np.diag([-1, 0, 0, 1]), atol=1e-12)
    with pytest.raises(coherence.NotCoherent):
        coherence.ground_state_witness(HL, np.array([1, 0, 0, 1]) / np.sqrt(2))


@given(seeds)
def test_purity_ascent_monotone(seed):
    rng = np.random.default_rng(seed)
    start = rng.normal(size=4) + 1j * rng.normal(size=4)
    _, hist, _ = coherence.purity_ascent(HL, start)
    assert np.all(np.diff(hist) >= -1e-13)


def test_max_purity_values():
    assert abs(coherence.max_purity(SPIN1).value - 5 / 6) < 1e-9
    assert abs(coherence.max_purity(HL).value - 0.75) < 1e-9
    assert abs(coherence.max_purity(registry.spin(1.5)).value - (1 / 4 + 0.75 * 0.6)) < 1e-9


def test_projector_limit_tends_to_ground_projector():
    h = np.diag([0.0, 1.0, 2.0])
    np.testing.assert_allclose(coherence.projector_limit(h, 60.0), np.diag([1, 0, 0]), atol=1e-12)


def test_cross_sector_superposition_has_mixing_gap():
    alg = registry.fermion_np(2)
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert coherence.sector_mixing_gap(alg, psi) > 0.1
    assert not coherence.is_coherent(alg, psi).is_coherent
    assert abs(coherence.sector_mixing_gap(alg, [0, 1, 0, 0])) < 1e-12


def test_witness_lies_in_supporting_cartan_direction():
    psi = np.array([1, 0, 0, 0.0])
    p = project(HL, np.outer(psi, psi))
    h = coherence.ground_state_witness(HL, psi)
    t = p - np.trace(p) / 4 * np.eye(4)
    assert np.linalg.matrix_rank(np.stack([h.ravel(), t.ravel()]), tol=1e-10) == 1
