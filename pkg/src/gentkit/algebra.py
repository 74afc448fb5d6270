"""Dagger-closed operator Lie algebras: projection, purity, commutants, Cartan data."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .opspace import (
    GAP_TOL,
    DimensionError,
    as_square,
    commutator,
    dagger,
    group_eigenvalues,
    hermitian_part,
    orthonormalize_vectors,
    span_residual,
)

CLOSURE_TOL = 1e-9
MAX_CLOSURE_ROUNDS = 10


class ClosureError(RuntimeError):
    """Lie closure did not stabilize within the round cap."""


class CartanError(RuntimeError):
    """A supporting Cartan subalgebra could not be built within tolerance."""


@dataclass(frozen=True, eq=False)
class AlgebraRep:
    """A dagger-closed Lie algebra of operators containing the identity.

    ``basis`` is an array of shape ``(n, d, d)`` holding HS-orthonormal Hermitian matrices,
    the first one being ``I/sqrt(d)``; the remaining ones are traceless.  Because the basis
    is Hermitian, its real span is ``Re(h)`` and its complex span is the algebra itself.
    ``meta`` records how the algebra was built (e.g. ``{"kind": "bipartite_local",
    "dims": (2, 2)}``) so that callers can use closed forms where they exist.
    """

    basis: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def hilbert_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def traceless_basis(self) -> np.ndarray:
        return self.basis[1:]

    @property
    def is_full(self) -> bool:
        return self.dim == self.hilbert_dim ** 2

    @property
    def flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha1(np.round(self.basis, 12).tobytes()).hexdigest()

    def coefficients(self, x) -> np.ndarray:
        """Coordinates ``tr(b_i x)`` of ``x`` in the basis (real when x is Hermitian)."""
        x = np.asarray(x, dtype=complex)
        return self.flat.conj() @ x.ravel()

    def element(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs), self.basis, axes=1)

    def residual(self, x) -> float:
        """HS norm of the part of ``x`` outside the algebra."""
        return span_residual(x, self.flat)

    def contains(self, x, tol: float = CLOSURE_TOL) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def __repr__(self) -> str:
        kind = self.meta.get("kind", "custom")
        return f"AlgebraRep(kind={kind!r}, hilbert_dim={self.hilbert_dim}, dim={self.dim})"


def _hermitian_candidates(mats) -> list[np.ndarray]:
    out = []
    for m in mats:
        out.append(hermitian_part(m))
        out.append(hermitian_part(-1j * m))
    return out


def from_basis(mats: Sequence, meta: dict | None = None, check_closure: bool = True,
               tol: float = CLOSURE_TOL) -> AlgebraRep:
    """Build an AlgebraRep from a spanning set that is already Lie- and dagger-closed."""
    mats = [as_square(m) for m in mats]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("generators must share one square dimension")
    ident = np.eye(d, dtype=complex).ravel() / np.sqrt(d)
    first = ident[None, :]
    cands = np.array([h.ravel() for h in _hermitian_candidates(mats)])
    rest = orthonormalize_vectors(cands, tol=1e-10, start=first)
    # traceless Hermitian rows stay Hermitian under real Gram-Schmidt coefficients
    rows = np.vstack([first, rest])
    basis = rows.reshape(-1, d, d)
    basis = 0.5 * (basis + dagger(basis))
    alg = AlgebraRep(basis=basis, meta=dict(meta or {}))
    if check_closure:
        bad = closure_defect(alg)
        if bad > tol:
            raise ClosureError(f"spanning set is not Lie-closed (defect {bad:.3e})")
    return alg


def closure_defect(alg: AlgebraRep) -> float:
    """Largest out-of-span residual of commutators and adjoints of basis elements."""
    worst = 0.0
    b = alg.basis
    for i in range(1, alg.dim):
        comms = np.einsum("ij,njk->nik", b[i], b[i + 1:]) - np.einsum("nij,jk->nik", b[i + 1:], b[i])
        for c in comms:
            worst = max(worst, alg.residual(c))
        worst = max(worst, alg.residual(dagger(b[i])))
    return worst


def from_generators(gens: Sequence, tol: float = CLOSURE_TOL, meta: dict | None = None) -> AlgebraRep:
    """Smallest dagger-closed Lie algebra containing ``gens`` and the identity.

    Adjoints and pairwise commutators are added until the dimension stops growing.
    """
    gens = [as_square(g) for g in gens]
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise DimensionError("generators must share one square dimension")
    alg = from_basis(gens, meta=meta, check_closure=False)
    fresh = list(range(1, alg.dim))
    for _ in range(MAX_CLOSURE_ROUNDS):
        if alg.dim == d * d or not fresh:
            break
        b = alg.basis
        cands = []
        for i in fresh:
            for j in range(1, alg.dim):
                if j in fresh and j <= i:
                    continue
                c = commutator(b[i], b[j])
                if np.linalg.norm(c) > tol:
                    cands.append(hermitian_part(1j * c))
        if not cands:
            break
        flat = np.array([c.ravel() for c in cands])
        new = orthonormalize_vectors(flat, tol=max(tol, 1e-10), start=alg.flat)
        if len(new) == 0:
            break
        new = new.reshape(-1, d, d)
        new = 0.5 * (new + dagger(new))
        fresh = list(range(alg.dim, alg.dim + len(new)))
        alg = AlgebraRep(basis=np.concatenate([alg.basis, new]), meta=alg.meta)
    else:
        raise ClosureError("Lie closure did not stabilize within the round cap")
    return alg


def full_algebra(d: int) -> AlgebraRep:
    from .opspace import hermitian_operator_basis

    return AlgebraRep(basis=np.array(hermitian_operator_basis(d)), meta={"kind": "full_matrix", "dims": (d,)})


def project(alg: AlgebraRep, rho) -> np.ndarray:
    """HS-orthogonal projection of ``rho`` onto the algebra."""
    rho = as_square(rho)
    if rho.shape[0] != alg.hilbert_dim:
        raise DimensionError(f"operator of size {rho.shape[0]} vs algebra on {alg.hilbert_dim}")
    return alg.element(alg.coefficients(rho))


def orthogonal_complement(alg: AlgebraRep) -> np.ndarray:
    """Hermitian HS-orthonormal basis of the operators orthogonal to the algebra."""
    from .opspace import hermitian_operator_basis

    d = alg.hilbert_dim
    full = np.array([b.ravel() for b in hermitian_operator_basis(d)])
    rest = orthonormalize_vectors(full, tol=1e-8, start=alg.flat)
    rest = rest.reshape(-1, d, d)
    return 0.5 * (rest + dagger(rest))


def h_purity(alg: AlgebraRep, rho, validate: bool = True) -> float:
    """``tr(P_h(rho)^2)``, the squared HS length of the projected state."""
    from .states import as_density

    m = as_density(rho).matrix if validate else as_square(rho)
    c = alg.coefficients(m)
    return float(np.sum(np.abs(c) ** 2))


def _commuting_nullspace(targets: Sequence[np.ndarray], space: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Real coefficient vectors ``c`` with ``[sum_i c_i space_i, t] = 0`` for every target.

    Returns an orthonormal real basis of the solution space as rows.
    """
    n = len(space)
    if n == 0:
        return np.zeros((0, 0))
    if not targets:
        return np.eye(n)
    blocks = []
    for t in targets:
        cols = (np.einsum("nij,jk->nik", space, t) - np.einsum("ij,njk->nik", t, space)).reshape(n, -1).T
        blocks.append(cols.real)
        blocks.append(cols.imag)
    mat = np.vstack(blocks)
    scale = max(np.linalg.norm(mat, 2), 1.0)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > rtol * scale))
    return vh[rank:]


def commutant(alg: AlgebraRep, rtol: float = 1e-8) -> AlgebraRep:
    """All operators commuting with every element of the algebra."""
    d = alg.hilbert_dim
    eye = np.eye(d)
    rows = [np.kron(b, eye) - np.kron(eye, b.T) for b in alg.traceless_basis]
    if not rows:
        from .opspace import hermitian_operator_basis

        return AlgebraRep(basis=np.array(hermitian_operator_basis(d)), meta={"kind": "commutant"})
    gram = sum(r.conj().T @ r for r in rows)
    w, v = np.linalg.eigh(gram)
    scale = max(w[-1], 1.0)
    kernel = v[:, w <= rtol * scale].T
    mats = [k.reshape(d, d) for k in kernel]
    return from_basis(mats, meta={"kind": "commutant"}, check_closure=False)


def is_irreducible(alg: AlgebraRep) -> bool:
    return commutant(alg).dim == 1


def irreducible_components(alg: AlgebraRep, seed: int = 0) -> list[np.ndarray]:
    """Isometries onto invariant subspaces on which the algebra acts irreducibly.

    A generic Hermitian element of the commutant separates the irreducible summands.
    """
    comm = commutant(alg)
    d = alg.hilbert_dim
    if comm.dim == 1:
        return [np.eye(d, dtype=complex)]
    rng = np.random.default_rng(seed)
    x = comm.element(rng.normal(size=comm.dim))
    w, v = np.linalg.eigh(x)
    return [v[:, g] for g in group_eigenvalues(w, 1e-7)]


def compress(alg: AlgebraRep, iso: np.ndarray) -> AlgebraRep:
    """Algebra obtained by restricting every element to the range of the isometry ``iso``."""
    mats = [iso.conj().T @ b @ iso for b in alg.basis]
    meta = {"kind": "compressed", "parent": alg.meta.get("kind", "custom")}
    return from_basis(mats, meta=meta, check_closure=False)


@dataclass(frozen=True, eq=False)
class CartanDecomposition:
    """Commuting Hermitian generators with their joint eigenspaces (weight spaces).

    ``weights[k]`` lists the eigenvalue of each generator on ``weight_projectors[k]``.
    Weight spaces are ordered lexicographically by weight vector.  ``extensions`` holds the
    randomly drawn elements that were needed to complete a degenerate Cartan family.
    """

    cartan_basis: np.ndarray
    weights: np.ndarray
    weight_projectors: np.ndarray
    extensions: tuple = ()
    seed: int | None = None

    @property
    def rank(self) -> int:
        return len(self.cartan_basis)

    def weight_distribution(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex).ravel()
        return np.real(np.einsum("i,kij,j->k", psi.conj(), self.weight_projectors, psi))

    def weight_of(self, psi, tol: float = 1e-8):
        """Weight vector of ``psi`` if it lies in a single weight space, else None."""
        p = self.weight_distribution(psi)
        k = int(np.argmax(p))
        return self.weights[k] if p[k] >= 1 - tol else None


def weight_decomposition(cartan: Sequence, seed: int = 0, gap_tol: float = GAP_TOL,
                         dim: int | None = None) -> CartanDecomposition:
    """Simultaneous diagonalization of commuting Hermitian matrices.

    A seeded random combination is diagonalized and its eigenspaces grouped; each group is
    checked to be a joint eigenspace and split further by the individual generators if not.
    """
    cartan = [as_square(c) for c in cartan]
    if not cartan:
        if dim is None:
            raise ValueError("dim is required for an empty Cartan family")
        return CartanDecomposition(cartan_basis=np.zeros((0, dim, dim), dtype=complex),
                                   weights=np.zeros((1, 0)),
                                   weight_projectors=np.eye(dim, dtype=complex)[None], seed=seed)
    for i, a in enumerate(cartan):
        for b in cartan[i + 1:]:
            if np.linalg.norm(commutator(a, b)) > 1e-9 * max(1.0, np.linalg.norm(a) * np.linalg.norm(b)):
                raise ValueError("Cartan generators do not commute")
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=len(cartan))
    generic = hermitian_part(sum(c * x for c, x in zip(coeffs, cartan)))
    w, v = np.linalg.eigh(generic)
    blocks = [v[:, g] for g in group_eigenvalues(w, gap_tol)]
    # refine blocks that are not joint eigenspaces
    for x in cartan:
        refined = []
        for blk in blocks:
            sub = hermitian_part(blk.conj().T @ x @ blk)
            sw, sv = np.linalg.eigh(sub)
            for g in group_eigenvalues(sw, gap_tol):
                refined.append(blk @ sv[:, g])
        blocks = refined
    weights = np.array([[float(np.real(np.trace(b.conj().T @ x @ b))) / b.shape[1] for x in cartan]
                        for b in blocks])
    weights = np.round(weights, 12) + 0.0
    order = np.lexsort(weights.T[::-1])
    projectors = np.array([blocks[k] @ blocks[k].conj().T for k in order])
    return CartanDecomposition(cartan_basis=np.array(cartan), weights=weights[order],
                               weight_projectors=projectors, seed=seed)


def centralizer_in(alg: AlgebraRep, targets: Sequence[np.ndarray]) -> np.ndarray:
    """Hermitian traceless elements of the algebra commuting with all ``targets``.

    Returned as an HS-orthonormal array of shape ``(k, d, d)``.
    """
    space = alg.traceless_basis
    coeffs = _commuting_nullspace(list(targets), space)
    if len(coeffs) == 0:
        return np.zeros((0, alg.hilbert_dim, alg.hilbert_dim), dtype=complex)
    return np.tensordot(coeffs, space, axes=1)


def supporting_cartan(alg: AlgebraRep, rho, seed: int = 0, tol: float = 1e-8) -> CartanDecomposition:
    """A dagger-closed Cartan subalgebra of the traceless part containing ``P_h(rho)``.

    The negated, normalized traceless projection seeds the family, so a coherent ``rho``
    sits in the lexicographically lowest weight space; it is extended greedily by seeded random
    elements of the joint centralizer until nothing outside the family's span commutes
    with all of it.
    """
    from .states import as_density

    m = as_density(rho).matrix
    d = alg.hilbert_dim
    p = project(alg, m)
    t = hermitian_part(p - np.trace(p) / d * np.eye(d))
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    if np.linalg.norm(t) > tol:
        # sign chosen so that states maximizing <t> get the lowest weight
        chosen.append(-t / np.linalg.norm(t))
    extensions = []
    for _ in range(alg.dim):
        cent = centralizer_in(alg, chosen)
        flat = cent.reshape(len(cent), -1)
        if chosen:
            q = orthonormalize_vectors(np.array([c.ravel() for c in chosen]), tol=1e-12)
            flat = flat - (flat @ q.conj().T) @ q
        # remaining directions outside span(chosen)
        u, s, vh = np.linalg.svd(flat, full_matrices=False) if len(flat) else (None, np.zeros(0), None)
        keep = s > tol
        if not np.any(keep):
            break
        extra = vh[keep]
        x = (rng.normal(size=len(extra)) @ extra).reshape(d, d)
        x = hermitian_part(x)
        for c in chosen:
            x = x - np.real(np.vdot(c, x)) * c
        x = x / np.linalg.norm(x)
        chosen.append(x)
        extensions.append(x)
    else:
        raise CartanError("Cartan extension did not terminate")
    if chosen:
        pc = sum(np.vdot(c, t) * c for c in chosen)
        if np.linalg.norm(pc - t) > 1e-6 * max(1.0, np.linalg.norm(t)):
            raise CartanError("projection is not contained in the Cartan family")
    dec = weight_decomposition(chosen, seed=seed, dim=d)
    return CartanDecomposition(cartan_basis=dec.cartan_basis, weights=dec.weights,
                               weight_projectors=dec.weight_projectors,
                               extensions=tuple(extensions), seed=seed)


def cartan_is_maximal(alg: AlgebraRep, cartan: Sequence[np.ndarray], tol: float = 1e-8) -> bool:
    """True when no traceless algebra element outside span(cartan) commutes with all of it."""
    cent = centralizer_in(alg, list(cartan))
    if len(cartan) == 0:
        return len(cent) == 0
    q = orthonormalize_vectors(np.array([c.ravel() for c in cartan]), tol=1e-12)
    flat = cent.reshape(len(cent), -1)
    rest = flat - (flat @ q.conj().T) @ q
    return bool(np.all(np.linalg.norm(rest, axis=1) <= tol)) if len(rest) else True


def centralizer_of_state(alg: AlgebraRep, rho) -> np.ndarray:
    """Traceless Hermitian elements of the algebra commuting with ``P_h(rho)``."""
    from .states import as_density

    m = as_density(rho).matrix
    d = alg.hilbert_dim
    p = project(alg, m)
    t = hermitian_part(p - np.trace(p) / d * np.eye(d))
    if np.linalg.norm(t) <= 1e-12:
        return alg.traceless_basis.copy()
    return centralizer_in(alg, [t])


def is_subalgebra(small: AlgebraRep, big: AlgebraRep, tol: float = 1e-9) -> bool:
    return all(big.residual(b) <= tol for b in small.basis)
