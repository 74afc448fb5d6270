import numpy as np
import pytest

from gentkit import registry
from gentkit.algebra import closure_defect, compress, is_irreducible
from gentkit.coherence import is_coherent, max_purity
from gentkit.opspace import commutator
from gentkit.registry import AlgebraSpec, SpecError, build

SPECS = [
    ("bipartite_local", {"dims": [2, 2]}, 7, True),
    ("bipartite_local", {"dims": [2, 3]}, 12, True),
    ("unilocal_a", {"dims": [2, 2]}, 4, False),
    ("unilocal_b", {"dims": [2, 3]}, 9, False),
    ("spin", {"j": 1}, 4, True),
    ("spin", {"j": 1.5}, 4, True),
    ("fermion_quadratic_np", {"modes": 2}, 5, False),
    ("fermion_quadratic_full", {"modes": 3}, 16, False),
    ("full_matrix", {"dims": [3]}, 9, True),
    ("trivial", {"dims": [2, 2]}, 1, False),
    ("multipartite_subset", {"dims": [2, 2, 2, 2], "subsets": [[0, 2], [1, 3]]}, 31, True),
]


@pytest.mark.parametrize("kind,params,dim,irreducible", SPECS)
def test_builtin_algebras(kind, params, dim, irreducible):
    alg = build({"kind": kind, "params": params})
    assert alg.dim == dim
    assert closure_defect(alg) <= 1e-9
    for b in alg.basis:
        np.testing.assert_allclose(b, b.conj().T, atol=1e-12)
    if irreducible:
        assert is_irreducible(alg)


def test_build_cached():
    spec = AlgebraSpec("spin", {"j": 1})
    assert build(spec) is build({"kind": "spin", "params": {"j": 1}})


@pytest.mark.parametrize("bad", [
    {"kind": "nope", "params": {}},
    {"kind": "spin", "params": {"j": 0.3}},
    {"kind": "bipartite_local", "params": {"dims": [2]}},
    {"kind": "fermion_quadratic_np", "params": {"modes": 9}},
])
def test_bad_specs(bad):
    with pytest.raises(SpecError):
        build(bad)


def test_spin_matrices_commutation():
    jx, jy, jz = registry.spin_matrices(1)
    np.testing.assert_allclose(commutator(jx, jy), 1j * jz, atol=1e-12)
    np.testing.assert_allclose(jx @ jx + jy @ jy + jz @ jz, 2 * np.eye(3), atol=1e-12)


def test_jordan_wigner_anticommutation():
    a = registry.annihilators(3)
    for i in range(3):
        for j in range(3):
            anti = a[i] @ a[j].conj().T + a[j].conj().T @ a[i]
            np.testing.assert_allclose(anti, np.eye(8) * (i == j), atol=1e-12)


@pytest.mark.parametrize("modes", [2, 3])
def test_slater_states_maximize_sector_purity(modes):
    alg = registry.fermion_np(modes)
    sectors = registry.number_sectors(modes)
    for psi in registry.coherent_examples({"kind": "fermion_quadratic_np", "params": {"modes": modes}}, seed=2):
        amp = psi.amplitudes
        k = int(np.argmax([np.linalg.norm(s.conj().T @ amp) for s in sectors]))
        sub = compress(alg, sectors[k])
        vec = sectors[k].conj().T @ amp
        pur = float(np.sum(np.abs(sub.coefficients(np.outer(vec, vec.conj()))) ** 2))
        assert pur >= max_purity(sub).value - 1e-9
        assert is_coherent(alg, psi).is_coherent


def test_hierarchy_two_and_three_parts():
    assert [a.dim for _, a in registry.hierarchy((2, 2))] == [1, 4, 7, 16]
    labels = [n for n, _ in registry.hierarchy((2, 2, 2))]
    assert labels == ["trivial", "a", "b", "c", "ab", "ac", "bc", "abc"]
    assert [n for n, _ in registry.hierarchy((3,))] == ["trivial", "full"]


def test_embed_places_operator():
    x = np.array([[0, 1], [1, 0]])
    op = registry.embed(x, (2, 3), [0])
    np.testing.assert_allclose(op, np.kron(x, np.eye(3)))
