"""Built-in algebras (local, unilocal, subsystem, spin, fermionic) and canonical coherent states."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraRep, from_basis, from_generators, is_subalgebra
from .opspace import gell_mann, hermitian_operator_basis, kron, SIGMA_Z
from .states import PureState

KINDS = (
    "bipartite_local",
    "unilocal_a",
    "unilocal_b",
    "multipartite_subset",
    "spin",
    "fermion_quadratic_np",
    "fermion_quadratic_full",
    "full_matrix",
    "trivial",
    "custom",
)
MAX_FERMION_MODES = 6
MAX_HIERARCHY_DIM = 64


class SpecError(ValueError):
    """Invalid algebra specification."""


@dataclass(frozen=True)
class AlgebraSpec:
    """Kind plus parameters.

    Parameters by kind: ``dims`` for the subsystem kinds and ``full_matrix``/``trivial``;
    ``dims`` and ``subsets`` (lists of subsystem indices) for ``multipartite_subset``;
    ``j`` (integer or half integer) for ``spin``; ``modes`` for the fermionic kinds;
    ``basis`` (list of matrices) for ``custom``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def coerce(cls, spec) -> "AlgebraSpec":
        if isinstance(spec, AlgebraSpec):
            return spec
        if isinstance(spec, dict):
            return cls(kind=spec["kind"], params=dict(spec.get("params", {})))
        raise SpecError(f"cannot interpret {spec!r} as an algebra spec")

    def key(self):
        items = []
        for k, v in sorted(self.params.items()):
            if k == "basis":
                v = np.asarray(v, dtype=complex).tobytes()
            elif isinstance(v, (list, tuple)):
                v = tuple(tuple(x) if isinstance(x, (list, tuple)) else x for x in v)
            items.append((k, v))
        return (self.kind, tuple(items))


def _dims(params, n_expected=None) -> tuple[int, ...]:
    dims = params.get("dims")
    if dims is None:
        raise SpecError("parameter 'dims' is required")
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise SpecError("dimensions must be positive")
    if n_expected is not None and len(dims) != n_expected:
        raise SpecError(f"expected {n_expected} subsystem dimensions, got {len(dims)}")
    return dims


def embed(op: np.ndarray, dims, sites) -> np.ndarray:
    """Operator acting as ``op`` on the listed subsystems (in order) and trivially elsewhere."""
    dims = list(dims)
    sites = list(sites)
    n = len(dims)
    d_in = int(np.prod([dims[s] for s in sites]))
    if op.shape != (d_in, d_in):
        raise SpecError("operator size does not match the chosen subsystems")
    rest = [i for i in range(n) if i not in sites]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    # reorder tensor factors from (sites, rest) to natural order
    order = sites + rest
    shape = [dims[i] for i in order]
    t = full.reshape(shape + shape)
    perm = [order.index(i) for i in range(n)]
    t = t.transpose(perm + [p + n for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def _subset_basis(dims, subsets) -> list[np.ndarray]:
    d = int(np.prod(dims))
    mats = [np.eye(d, dtype=complex)]
    for s in subsets:
        s = sorted(int(i) for i in s)
        if not s:
            continue
        if any(i < 0 or i >= len(dims) for i in s):
            raise SpecError(f"subset {s} out of range for {len(dims)} subsystems")
        ds = int(np.prod([dims[i] for i in s]))
        for g in gell_mann(ds):
            mats.append(embed(g, dims, s))
    return mats


def spin_matrices(j) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(Jx, Jy, Jz)`` for spin ``j``; basis index ``m + j`` so ``Jz = diag(-j, ..., j)``."""
    two_j = round(2 * j)
    if two_j < 1 or abs(2 * j - two_j) > 1e-12:
        raise SpecError("spin must be a positive integer or half integer")
    m = np.arange(two_j + 1) - two_j / 2
    jz = np.diag(m).astype(complex)
    jp = np.zeros((two_j + 1, two_j + 1), dtype=complex)
    for k in range(two_j):
        jp[k + 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    return jx, jy, jz


def annihilators(modes: int) -> list[np.ndarray]:
    """Jordan-Wigner annihilation operators on ``(C^2)^modes``; ``|1>`` marks an occupied mode."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for i in range(modes):
        ops.append(kron(*([SIGMA_Z] * i + [lower] + [eye] * (modes - i - 1))))
    return ops


def _check_modes(params) -> int:
    n = int(params.get("modes", 0))
    if not 1 <= n <= MAX_FERMION_MODES:
        raise SpecError(f"mode count must be in [1, {MAX_FERMION_MODES}]")
    return n


def _build(spec: AlgebraSpec) -> AlgebraRep:
    kind, p = spec.kind, spec.params
    meta = {"kind": kind}
    if kind == "bipartite_local":
        dims = _dims(p, 2)
        meta["dims"] = dims
        return from_basis(_subset_basis(dims, [[0], [1]]), meta=meta, check_closure=False)
    if kind in ("unilocal_a", "unilocal_b"):
        dims = _dims(p, 2)
        meta["dims"] = dims
        site = [0] if kind == "unilocal_a" else [1]
        return from_basis(_subset_basis(dims, [site]), meta=meta, check_closure=False)
    if kind == "multipartite_subset":
        dims = _dims(p)
        subsets = [tuple(sorted(s)) for s in p.get("subsets", [])]
        if not subsets:
            raise SpecError("multipartite_subset needs at least one subset")
        meta.update(dims=dims, subsets=tuple(subsets))
        mats = _subset_basis(dims, subsets)
        disjoint = len(set(itertools.chain(*subsets))) == sum(len(s) for s in subsets)
        if disjoint:
            return from_basis(mats, meta=meta, check_closure=False)
        return from_generators(mats, meta=meta)
    if kind == "spin":
        j = p.get("j")
        if j is None:
            raise SpecError("parameter 'j' is required")
        jx, jy, jz = spin_matrices(float(j))
        meta["j"] = float(j)
        return from_basis([np.eye(jz.shape[0]), jx, jy, jz], meta=meta, check_closure=False)
    if kind in ("fermion_quadratic_np", "fermion_quadratic_full"):
        n = _check_modes(p)
        meta["modes"] = n
        a = annihilators(n)
        mats = [np.eye(2 ** n, dtype=complex)]
        mats += [ai.conj().T @ aj for ai in a for aj in a]
        if kind == "fermion_quadratic_full":
            mats += [a[i] @ a[k] for i in range(n) for k in range(i + 1, n)]
            mats += [a[k].conj().T @ a[i].conj().T for i in range(n) for k in range(i + 1, n)]
        return from_basis(mats, meta=meta, check_closure=False)
    if kind == "full_matrix":
        dims = _dims(p)
        d = int(np.prod(dims))
        meta["dims"] = dims
        return AlgebraRep(basis=np.array(hermitian_operator_basis(d)), meta=meta)
    if kind == "trivial":
        dims = _dims(p)
        d = int(np.prod(dims))
        meta["dims"] = dims
        return AlgebraRep(basis=np.eye(d, dtype=complex)[None] / np.sqrt(d), meta=meta)
    if kind == "custom":
        basis = p.get("basis")
        if not basis:
            raise SpecError("custom algebra needs a nonempty 'basis'")
        return from_generators([np.asarray(b, dtype=complex) for b in basis], meta=meta)
    raise SpecError(f"unknown algebra kind {kind!r}")


_CACHE: dict = {}


def build(spec) -> AlgebraRep:
    """Construct the algebra described by ``spec`` (an AlgebraSpec or ``{"kind", "params"}``)."""
    spec = AlgebraSpec.coerce(spec)
    if spec.kind == "custom":
        return _build(spec)
    key = spec.key()
    if key not in _CACHE:
        _CACHE[key] = _build(spec)
    return _CACHE[key]


def bipartite_local(na: int, nb: int) -> AlgebraRep:
    return build(AlgebraSpec("bipartite_local", {"dims": (na, nb)}))


def unilocal(na: int, nb: int, side: str = "a") -> AlgebraRep:
    return build(AlgebraSpec(f"unilocal_{side}", {"dims": (na, nb)}))


def spin(j) -> AlgebraRep:
    return build(AlgebraSpec("spin", {"j": j}))


def full_matrix(d: int) -> AlgebraRep:
    return build(AlgebraSpec("full_matrix", {"dims": (d,)}))


def fermion_np(modes: int) -> AlgebraRep:
    return build(AlgebraSpec("fermion_quadratic_np", {"modes": modes}))


def fermion_full(modes: int) -> AlgebraRep:
    return build(AlgebraSpec("fermion_quadratic_full", {"modes": modes}))


def multipartite_subset(dims, subsets) -> AlgebraRep:
    return build(AlgebraSpec("multipartite_subset", {"dims": tuple(dims), "subsets": [tuple(s) for s in subsets]}))


def slater_determinant(orbitals: np.ndarray) -> PureState:
    """Fock-space state ``b_1^dagger ... b_k^dagger |vac>`` for orthonormal orbital columns.

    ``orbitals`` has shape ``(modes, k)``; column ``l`` defines ``b_l^dagger = sum_i U_il a_i^dagger``.
    """
    u = np.asarray(orbitals, dtype=complex)
    if u.ndim == 1:
        u = u[:, None]
    n, k = u.shape
    if np.linalg.norm(u.conj().T @ u - np.eye(k)) > 1e-9:
        raise ValueError("orbital columns must be orthonormal")
    a = annihilators(n)
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = 1
    for l in reversed(range(k)):
        v = sum(u[i, l] * (a[i].conj().T @ v) for i in range(n))
    return PureState.normalized(v)


def number_sectors(modes: int) -> list[np.ndarray]:
    """Isometries onto fixed particle-number subspaces of the Fock space, ordered by number."""
    counts = np.array([bin(i).count("1") for i in range(2 ** modes)])
    eye = np.eye(2 ** modes, dtype=complex)
    return [eye[:, counts == k] for k in range(modes + 1)]


def coherent_examples(spec, seed: int = 0, count: int = 3) -> list[PureState]:
    """Canonical coherent states for a built-in kind.

    Subsystem kinds give product states and spins give their extreme weight states.
    Fermionic kinds give Slater determinants.
    """
    spec = AlgebraSpec.coerce(spec)
    rng = np.random.default_rng(seed)
    kind, p = spec.kind, spec.params
    out = []
    if kind in ("bipartite_local", "multipartite_subset"):
        dims = _dims(p)
        d = int(np.prod(dims))
        out.append(PureState(np.eye(d, dtype=complex)[0]))
        for _ in range(count):
            factors = [rng.normal(size=n) + 1j * rng.normal(size=n) for n in dims]
            v = kron(*[f[:, None] for f in factors]).ravel()
            out.append(PureState.normalized(v))
        return out
    if kind == "spin":
        jx, _, _ = spin_matrices(float(p["j"]))
        d = jx.shape[0]
        out.append(PureState(np.eye(d, dtype=complex)[0]))
        out.append(PureState(np.eye(d, dtype=complex)[-1]))
        return out
    if kind in ("fermion_quadratic_np", "fermion_quadratic_full"):
        n = _check_modes(p)
        for k in range(1, n + 1):
            g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
            q, _ = np.linalg.qr(g)
            out.append(slater_determinant(q))
        return out
    if kind == "full_matrix":
        d = int(np.prod(_dims(p)))
        out.append(PureState(np.eye(d, dtype=complex)[0]))
        return out
    raise SpecError(f"no canonical coherent states for kind {kind!r}")


def hierarchy(parts) -> list[tuple[str, AlgebraRep]]:
    """Inclusion-ordered subsystem algebras for a list of subsystem dimensions.

    One part gives ``trivial, full``; two parts give ``trivial, a, local, full``; three parts
    give the trivial algebra followed by the algebra of every nonempty subset of subsystems,
    ordered by subset size.  Inclusions are verified.
    """
    dims = tuple(int(x) for x in parts)
    if not 1 <= len(dims) <= 3:
        raise SpecError("hierarchy supports one to three parts")
    d = int(np.prod(dims))
    if d > MAX_HIERARCHY_DIM:
        raise SpecError(f"total dimension {d} exceeds {MAX_HIERARCHY_DIM}")
    trivial = build(AlgebraSpec("trivial", {"dims": dims}))
    full = build(AlgebraSpec("full_matrix", {"dims": dims}))
    if len(dims) == 1:
        chain = [("trivial", trivial), ("full", full)]
    elif len(dims) == 2:
        chain = [("trivial", trivial), ("a", unilocal(*dims, "a")),
                 ("local", bipartite_local(*dims)), ("full", full)]
    else:
        chain = [("trivial", trivial)]
        for size in (1, 2, 3):
            for s in itertools.combinations(range(3), size):
                chain.append(("".join("abc"[i] for i in s), multipartite_subset(dims, [s])))
    for (n1, a1), (n2, a2) in zip(chain, chain[1:]):
        if len(dims) < 3 and not is_subalgebra(a1, a2):
            raise RuntimeError(f"inclusion {n1} in {n2} failed")
    if len(dims) == 3:
        for (n1, a1) in chain[1:]:
            for (n2, a2) in chain[1:]:
                if set(n1) < set(n2) and not is_subalgebra(a1, a2):
                    raise RuntimeError(f"inclusion {n1} in {n2} failed")
    return chain
