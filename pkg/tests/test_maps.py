import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gentkit import maps, registry
from gentkit.maps import ExplicitMap, ProtocolRound
from gentkit.opspace import SIGMA_Z, partial_trace, random_hermitian, random_unitary
from gentkit.states import bell_state, random_density, random_pure

seeds = st.integers(0, 2**31 - 1)
HL = registry.bipartite_local(2, 2)
HA = registry.unilocal(2, 2, "a")
HB = registry.unilocal(2, 2, "b")
P0, P1 = np.diag([1.0, 0]), np.diag([0, 1.0])
I2 = np.eye(2)
LOWER = np.array([[0, 1.0], [0, 0]])


def conditional_reset():
    return ExplicitMap((np.kron(P0, I2), np.kron(P1, P0), np.kron(P1, LOWER)))


def random_povm_ops(n, k, rng):
    g = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(k)]
    s = sum(x.conj().T @ x for x in g)
    w, v = np.linalg.eigh(s)
    inv = v @ np.diag(w ** -0.5) @ v.conj().T
    return [x @ inv for x in g]


def test_map_validation():
    with pytest.raises(ValueError):
        ExplicitMap(())
    with pytest.raises(ValueError):
        ExplicitMap((np.eye(2), np.eye(3)))
    assert maps.is_quantum_map(conditional_reset())
    assert not maps.is_quantum_map(ExplicitMap((np.kron(P0, I2),)))


def test_conditional_reset_output_and_lift():
    m = conditional_reset()
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    out = maps.apply(m, psi).matrix
    np.testing.assert_allclose(out, np.diag([0, 0.5, 0.5, 0]), atol=1e-12)
    rep = maps.lifts_to(m, HL)
    assert not rep.liftable and rep.residual == pytest.approx(0.5)


def test_apply_outcome_and_zero_probability():
    m = ExplicitMap((np.kron(P0, I2), np.kron(P1, I2)))
    p, post = maps.apply_outcome(m, 0, bell_state())
    assert p == pytest.approx(0.5)
    np.testing.assert_allclose(post.matrix, np.diag([1, 0, 0, 0]), atol=1e-12)
    with pytest.raises(maps.ZeroProbabilityError):
        maps.apply_outcome(m, 1, np.array([1, 0, 0, 0]))


@given(seeds)
def test_unilocal_maps_lift_and_commute(seed):
    rng = np.random.default_rng(seed)
    ops = [np.kron(a, I2) for a in random_povm_ops(2, 3, rng)]
    m = ExplicitMap(tuple(ops))
    rep = maps.lifts_to(m, HL)
    assert rep.liftable and rep.residual <= 1e-10
    assert maps.diagram_residual(m, HL, rep.lifted_action) <= 1e-8


@given(seeds)
def test_lifts_to_agrees_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    v = random_unitary(2, rng)
    liftable = ExplicitMap(tuple(np.kron(a, v) for a in random_povm_ops(2, 2, rng)))
    psi = random_pure(4, seed=seed).density().matrix
    ra, rb = partial_trace(psi, (2, 2), "b"), partial_trace(psi, (2, 2), "a")
    assert maps.restricted_images_agree(liftable, HL, psi, np.kron(ra, rb)) <= 1e-8
    assert maps.lifts_to(liftable, HL).liftable
    bad = conditional_reset()
    bell = bell_state().density().matrix
    assert maps.restricted_images_agree(bad, HL, bell, np.eye(4) / 4) > 1e-3


@given(seeds, st.booleans(), st.booleans())
def test_single_product_operator_lifts_only_for_unitaries(seed, ua, ub):
    rng = np.random.default_rng(seed)
    a = random_unitary(2, rng) * rng.uniform(0.5, 2) if ua else rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = random_unitary(2, rng) * rng.uniform(0.5, 2) if ub else rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rep = maps.lifts_to(ExplicitMap((np.kron(a, b),)), HL)
    if rep.liftable:
        assert maps.proportional_to_unitary_defect(a) <= 1e-7
        assert maps.proportional_to_unitary_defect(b) <= 1e-7
    assert rep.liftable == (ua and ub)


@given(seeds)
def test_identity_lift_on_b_means_trivial_b_action(seed):
    rng = np.random.default_rng(seed)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
    ops = [np.kron(a, ph * I2) for a, ph in zip(random_povm_ops(2, 2, rng), phases)]
    rep = maps.lifts_to(ExplicitMap(tuple(ops)), HB)
    np.testing.assert_allclose(rep.lifted_action, np.eye(HB.dim), atol=1e-10)
    v = random_unitary(2, rng)
    twisted = [np.kron(a, v) for a in random_povm_ops(2, 2, rng)]
    rep = maps.lifts_to(ExplicitMap(tuple(twisted)), HB)
    assert rep.liftable and np.linalg.norm(rep.lifted_action - np.eye(HB.dim)) > 1e-3


@given(seeds, st.sampled_from(["shared", "distinct", "general"]))
def test_liftable_separable_maps_have_unitary_second_factors(seed, kind):
    # first factors P0, P1 have linearly independent D_k^dagger D_k
    rng = np.random.default_rng(seed)
    v = random_unitary(2, rng)
    if kind == "shared":
        es = [np.exp(1j * rng.uniform(0, 6)) * v for _ in range(2)]
    elif kind == "distinct":
        es = [random_unitary(2, rng) for _ in range(2)]
    else:
        es = [random_hermitian(2, rng) + 3 * I2 for _ in range(2)]
    ops = tuple(np.kron(p, e) for p, e in zip((P0, P1), es))
    rep = maps.lifts_to(ExplicitMap(ops), HL)
    if rep.liftable:
        for e in es:
            assert maps.proportional_to_unitary_defect(e) <= 1e-7
    if kind == "shared":
        assert rep.liftable
    if kind == "general":
        assert not rep.liftable


def test_separability_verdicts():
    rng = np.random.default_rng(1)
    x, y = random_hermitian(2, rng), random_hermitian(2, rng)
    good = ExplicitMap((np.kron(expm(x), expm(y)),))
    assert maps.separable_certificate(good, HL) == [maps.CERTIFIED_NUMERICALLY]
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert maps.separable_certificate(ExplicitMap((swap,)), HL) == [maps.UNCERTIFIED]
    elements = [np.kron(x, I2), np.kron(I2, y)]
    cert = ExplicitMap((expm(elements[0]) @ expm(elements[1]),), certificates=({"kind": "exp", "elements": elements},))
    assert maps.separable_certificate(cert, HL) == [maps.CERTIFIED_BY_CONSTRUCTION]
    assert maps.is_separable(good, HL) and not maps.is_separable(ExplicitMap((swap,)), HL)


def test_maximal_ground_spaces():
    assert maps.is_maximally_unilocal(np.kron(SIGMA_Z, I2), HL)
    assert not maps.is_maximally_unilocal(np.kron(SIGMA_Z, I2) + np.kron(I2, SIGMA_Z), HL)
    su3 = registry.full_matrix(3)
    assert maps.is_maximally_unilocal(np.diag([0.0, 0, 1]), su3)
    assert not maps.is_maximally_unilocal(np.diag([0.0, 1, 2]), su3)
    rep = maps.maximal_ground_report(np.diag([0.0, 1, 1]), su3)
    assert not rep.maximal and rep.witness is not None


@given(seeds)
def test_conditional_compose_preserves_quantum_maps(seed):
    rng = np.random.default_rng(seed)
    first = ExplicitMap(tuple(random_povm_ops(4, 2, rng)))
    branches = [ExplicitMap(tuple(random_povm_ops(4, k, rng))) for k in (1, 3)]
    comp = maps.conditional_compose(first, branches)
    assert len(comp) == 4 and maps.is_quantum_map(comp)
    rho = random_density(4, seed=seed).matrix
    direct = sum(b(a @ rho @ a.conj().T) for a, br in zip(first.kraus, branches) for b in [br])
    np.testing.assert_allclose(comp(rho), direct, atol=1e-12)


def measure_a():
    return ExplicitMap((np.kron(P0, I2), np.kron(P1, I2)))


def test_bell_measurement_costs_one_bit():
    rep = maps.communication_complexity(ProtocolRound(measure_a()), bell_state())
    assert rep.per_round == (pytest.approx(1.0),) and rep.total == pytest.approx(1.0)
    assert maps.communication_complexity(ProtocolRound(measure_a()), bell_state(), omit_last_round=True).total == 0


def test_deterministic_protocols_cost_nothing():
    u = ExplicitMap((np.kron(random_unitary(2, np.random.default_rng(0)), I2),))
    rep = maps.communication_complexity(ProtocolRound(u, (ProtocolRound(u),)), bell_state())
    assert rep.total == 0
    rep = maps.communication_complexity(ProtocolRound(measure_a()), np.array([1.0, 0, 0, 0]))
    assert rep.total == 0


def test_three_round_additivity():
    m_b = ExplicitMap((np.kron(I2, P0), np.kron(I2, P1)))
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    m_x = ExplicitMap((np.kron(hadamard @ P0 @ hadamard, I2), np.kron(hadamard @ P1 @ hadamard, I2)))
    third = ProtocolRound(m_x)
    second = ProtocolRound(m_b, (third, third))
    proto = ProtocolRound(measure_a(), (second, None))
    psi = random_pure(4, seed=3)
    rep = maps.communication_complexity(proto, psi)
    assert len(rep.per_round) == 3
    assert rep.total == pytest.approx(sum(rep.per_round))
    # the tree total equals the first-round entropy plus branch-weighted sub-totals
    p, post = maps.apply_outcome(measure_a(), 0, psi)
    sub = maps.communication_complexity(second, post)
    probs = maps.outcome_probabilities(measure_a(), psi)
    h1 = -np.sum(probs * np.log2(probs))
    assert rep.total == pytest.approx(h1 + p * sub.total)


def test_g2_dimensions_and_outside_element():
    g2a = maps.compute_G2(HA)
    g2b = maps.compute_G2(HB)
    ha_big = registry.unilocal(4, 4, "a")
    assert g2a.dim == ha_big.dim and g2b.dim == ha_big.dim
    g2l = maps.compute_G2(HL)
    hl_big = registry.multipartite_subset((2, 2, 2, 2), [(0, 2), (1, 3)])
    x = np.kron(np.kron(SIGMA_Z, I2), np.kron(I2, SIGMA_Z))
    assert g2l.residual(x) < 1e-9
    assert hl_big.residual(x) / np.linalg.norm(x) > 0.5


def test_spin_binary_maps_are_trivial():
    found = maps.binary_separable_maps(registry.spin(1), count=5, seed=1)
    assert len(found) == 5
    for m in found:
        assert maps.is_quantum_map(m)
        for c in m.kraus:
            assert maps.scaled_unitary_distance(c) <= 1e-6
