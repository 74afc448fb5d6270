"""Explicit (Kraus) maps: action, liftability, separability certificates, protocols, G2."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm, logm, sqrtm
from scipy.optimize import least_squares

from .algebra import AlgebraRep, from_generators, orthogonal_complement, project
from .opspace import DimensionError, as_square, hermitian_part, orthonormalize_vectors, span_residual
from .states import DensityMatrix, as_density

TP_TOL = 1e-8
LIFT_TOL = 1e-8
LOG_TOL = 1e-7
MAX_G2_OPERATOR_DIM = 4096


class ZeroProbabilityError(ValueError):
    """Conditioning on an outcome that has zero probability."""


class NotInAlgebraError(ValueError):
    """An operator expected in the algebra lies outside it."""


@dataclass(frozen=True, eq=False)
class ExplicitMap:
    """Ordered Kraus operators ``(C_k)_k`` acting as ``rho -> sum_k C_k rho C_k^dagger``.

    ``certificates`` optionally records, per operator, how it was built.  Recognized
    entries are ``{"kind": "exp", "elements": [X1, X2, ...]}`` meaning the operator equals
    ``c * expm(X1) @ expm(X2) @ ...`` for a scalar ``c``, and ``{"kind": "limit"}`` for an
    operator asserted to be a limit of such products.
    """

    kraus: tuple
    certificates: tuple | None = None

    def __post_init__(self):
        ops = tuple(as_square(k) for k in self.kraus)
        if not ops:
            raise ValueError("an explicit map needs at least one operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise DimensionError("all operators must share one square dimension")
        if any(np.linalg.norm(k) == 0 for k in ops):
            raise ValueError("operators of an explicit map must be nonzero")
        object.__setattr__(self, "kraus", ops)
        if self.certificates is not None:
            certs = tuple(self.certificates)
            if len(certs) != len(ops):
                raise ValueError("one certificate entry per operator is required")
            object.__setattr__(self, "certificates", certs)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def __len__(self) -> int:
        return len(self.kraus)

    def superoperator(self) -> np.ndarray:
        """Matrix of ``X -> sum_k C_k X C_k^dagger`` on row-major vectorized operators."""
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return sum(k @ x @ k.conj().T for k in self.kraus)


def is_quantum_map(m: ExplicitMap, tol: float = TP_TOL) -> bool:
    s = sum(k.conj().T @ k for k in m.kraus)
    return float(np.linalg.norm(s - np.eye(m.dim))) <= tol


def apply(m: ExplicitMap, rho) -> DensityMatrix:
    """Image of a state under a trace-preserving explicit map."""
    if not is_quantum_map(m):
        raise ValueError("map is not trace preserving")
    r = as_density(rho).matrix
    if r.shape[0] != m.dim:
        raise DimensionError("state and map dimensions differ")
    return as_density(hermitian_part(m(r)))


def outcome_probabilities(m: ExplicitMap, rho) -> np.ndarray:
    r = as_density(rho).matrix
    return np.array([float(np.real(np.vdot(k @ r, k))) for k in m.kraus])


def apply_outcome(m: ExplicitMap, k: int, rho, tol: float = 1e-14) -> tuple[float, DensityMatrix]:
    """Probability ``tr(rho C_k^dagger C_k)`` and the normalized conditional state."""
    r = as_density(rho).matrix
    if r.shape[0] != m.dim:
        raise DimensionError("state and map dimensions differ")
    c = m.kraus[k]
    out = c @ r @ c.conj().T
    p = float(np.real(np.trace(out)))
    if p <= tol:
        raise ZeroProbabilityError(f"outcome {k} has probability {p:.3e}")
    return p, as_density(hermitian_part(out / p))


# ---------------------------------------------------------------- liftability


@dataclass(frozen=True)
class LiftReport:
    """Liftability verdict.

    ``residual`` is the largest HS norm of the in-algebra part of an image of an
    orthonormal complement element.  ``lifted_action[i, j] = tr(b_i C(b_j))`` in the
    algebra's Hermitian basis, present only when liftable.
    """

    liftable: bool
    residual: float
    lifted_action: np.ndarray | None = None


def lifts_to(m: ExplicitMap, alg: AlgebraRep, tol: float = LIFT_TOL) -> LiftReport:
    if m.dim != alg.hilbert_dim:
        raise DimensionError("map and algebra dimensions differ")
    comp = orthogonal_complement(alg)
    residual = 0.0
    for b in comp:
        residual = max(residual, float(np.linalg.norm(alg.coefficients(m(b)))))
    if residual > tol:
        return LiftReport(False, residual)
    action = np.array([alg.coefficients(m(b)) for b in alg.basis]).T
    return LiftReport(True, residual, np.real_if_close(action, tol=1e6))


def diagram_residual(m: ExplicitMap, alg: AlgebraRep, lifted: np.ndarray, probes=None) -> float:
    """Largest ``|P(C(E)) - C'(P(E))|`` over probe operators (a full Hermitian basis by default)."""
    if probes is None:
        from .opspace import hermitian_operator_basis

        probes = hermitian_operator_basis(alg.hilbert_dim)
    worst = 0.0
    for e in probes:
        lhs = alg.coefficients(m(e))
        rhs = lifted @ alg.coefficients(e)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


# ------------------------------------------------------ separability verdicts

CERTIFIED_BY_CONSTRUCTION = "certified_by_construction"
CERTIFIED_NUMERICALLY = "certified_numerically"
UNCERTIFIED = "uncertified"


def _log_in_algebra(c: np.ndarray, alg: AlgebraRep, levels: int = 5) -> bool:
    d = c.shape[0]
    det = np.linalg.det(c)
    if abs(det) < 1e-12 or np.linalg.cond(c) > 1e12:
        return False
    # scalar factors are exponentials of multiples of the identity, which lies in the algebra
    c = c / det ** (1.0 / d)
    root = c
    for n in range(levels):
        if n:
            root = sqrtm(root)
        with np.errstate(all="ignore"):
            lg = (2 ** n) * logm(root)
        if not np.all(np.isfinite(lg)):
            continue
        if alg.residual(lg) <= LOG_TOL * max(1.0, np.linalg.norm(lg)):
            return True
    return False


def _construction_ok(cert, c: np.ndarray, alg: AlgebraRep) -> bool:
    elems = [np.asarray(x, dtype=complex) for x in cert.get("elements", [])]
    if any(alg.residual(x) > 1e-9 * max(1.0, np.linalg.norm(x)) for x in elems):
        return False
    prod = np.eye(c.shape[0], dtype=complex)
    for x in elems:
        prod = prod @ expm(x)
    # equality up to a nonzero scalar
    k = np.vdot(prod, c) / np.vdot(prod, prod)
    return abs(k) > 0 and np.linalg.norm(c - k * prod) <= 1e-8 * np.linalg.norm(c)


def separable_certificate(m: ExplicitMap, alg: AlgebraRep) -> list[str]:
    """Per-operator evidence that the operator lies in the closure of ``exp(alg)``.

    Construction certificates are checked and passed through.  Otherwise invertible
    operators are tested by taking ``2^n log(C^(1/2^n))`` for n = 0..4 and checking that
    some branch lies in the algebra.  Non-invertible operators stay uncertified.
    """
    out = []
    certs = m.certificates or (None,) * len(m)
    for c, cert in zip(m.kraus, certs):
        if isinstance(cert, dict) and cert.get("kind") == "limit":
            out.append(CERTIFIED_BY_CONSTRUCTION)
        elif isinstance(cert, dict) and cert.get("kind") == "exp" and _construction_ok(cert, c, alg):
            out.append(CERTIFIED_BY_CONSTRUCTION)
        elif _log_in_algebra(c, alg):
            out.append(CERTIFIED_NUMERICALLY)
        else:
            out.append(UNCERTIFIED)
    return out


def is_separable(m: ExplicitMap, alg: AlgebraRep) -> bool:
    return all(v != UNCERTIFIED for v in separable_certificate(m, alg))


# -------------------------------------------------------- maximal ground spaces


@dataclass(frozen=True)
class UnilocalReport:
    """``witness``, when not maximal, has a ground space strictly containing the input's."""

    maximal: bool
    ground_dim: int
    annihilator_dim: int
    witness: np.ndarray | None = None


def maximal_ground_report(h, alg: AlgebraRep, gap_tol: float = 1e-8) -> UnilocalReport:
    """Decide whether the ground space of ``h`` is maximal among proper ground spaces in Re(alg).

    Shift ``h`` to ``h0 >= 0`` with kernel ``G``.  Another element of Re(alg) with ground
    space containing ``G`` can be shifted to a positive element vanishing on ``G``.  If the
    real space ``L`` of algebra elements vanishing on ``G`` contains some ``Z`` not
    proportional to ``h0``, then ``h0 - t Z`` for the first ``t`` at which it becomes
    singular on the complement of ``G`` has a strictly larger ground space.  Hence the ground
    space is maximal exactly when ``dim L = 1``.
    """
    from .opspace import ground_space

    h = as_square(h)
    if alg.residual(h) > 1e-9 * max(1.0, np.linalg.norm(h)) or np.linalg.norm(h - h.conj().T) > 1e-9 * max(1.0, np.linalg.norm(h)):
        raise NotInAlgebraError("operator is not a Hermitian element of the algebra")
    h = hermitian_part(h)
    d = alg.hilbert_dim
    trless = h - np.trace(h) / d * np.eye(d)
    if np.linalg.norm(trless) <= 1e-12 * max(1.0, np.linalg.norm(h)):
        return UnilocalReport(True, d, 0)
    g = ground_space(h, gap_tol)
    w = np.linalg.eigvalsh(h)
    h0 = h - w[0] * np.eye(d)
    # real-linear constraints Y g = 0 on coefficient vectors of Re(alg)
    cols = np.einsum("nij,jk->nik", alg.basis, g).reshape(alg.dim, -1).T
    mat = np.vstack([cols.real, cols.imag])
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > 1e-9 * max(s[0], 1.0)))
    kernel = vh[rank:]
    ldim = len(kernel)
    if ldim <= 1:
        return UnilocalReport(True, g.shape[1], ldim)
    c0 = np.real(alg.coefficients(h0))
    c0 = c0 / np.linalg.norm(c0)
    other = kernel - np.outer(kernel @ c0, c0)
    z = alg.element(other[np.argmax(np.linalg.norm(other, axis=1))])
    z = hermitian_part(z)
    # restrict to the complement of the ground space, where h0 is positive definite
    full = np.linalg.eigh(h)[1]
    comp = full[:, g.shape[1]:]
    hp = comp.conj().T @ h0 @ comp
    zp = comp.conj().T @ z @ comp
    wh, vhh = np.linalg.eigh(hermitian_part(hp))
    isq = (vhh / np.sqrt(wh)) @ vhh.conj().T
    mu = np.linalg.eigvalsh(hermitian_part(isq @ zp @ isq))
    if mu[-1] <= 0:
        z, mu = -z, -mu[::-1]
    witness = h0 - z / mu[-1]
    return UnilocalReport(False, g.shape[1], ldim, hermitian_part(witness))


def is_maximally_unilocal(h, alg: AlgebraRep, gap_tol: float = 1e-8) -> bool:
    return maximal_ground_report(h, alg, gap_tol).maximal


# ---------------------------------------------------- composition and protocols


def conditional_compose(first: ExplicitMap, branches: Sequence[ExplicitMap]) -> ExplicitMap:
    """Operators ``D_kl C_k`` ordered by ``k`` then ``l``."""
    if len(branches) != len(first):
        raise ValueError(f"need {len(first)} branch maps, got {len(branches)}")
    ops = []
    for c, br in zip(first.kraus, branches):
        if br.dim != first.dim:
            raise DimensionError("branch dimension differs from the first map")
        ops.extend(dkl @ c for dkl in br.kraus)
    return ExplicitMap(tuple(ops))


@dataclass(frozen=True, eq=False)
class ProtocolRound:
    """One round of a conditional protocol; ``branches[k]`` follows outcome ``k`` (None ends)."""

    map: ExplicitMap
    branches: tuple | None = None

    def __post_init__(self):
        if self.branches is not None:
            br = tuple(self.branches)
            if len(br) != len(self.map):
                raise ValueError("one branch entry per operator is required")
            object.__setattr__(self, "branches", br)

    @property
    def is_leaf(self) -> bool:
        return self.branches is None or all(b is None for b in self.branches)

    def depth(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + max(b.depth() for b in self.branches if b is not None)

    def flatten(self) -> ExplicitMap:
        """The explicit map obtained by composing every round conditionally."""
        if self.is_leaf:
            return self.map
        ident = ExplicitMap((np.eye(self.map.dim),))
        return conditional_compose(self.map, [b.flatten() if b is not None else ident for b in self.branches])


@dataclass(frozen=True)
class ComplexityReport:
    per_round: tuple
    total: float


def _round_cost(m: ExplicitMap, probs: np.ndarray, mode: str) -> float:
    if mode == "entropy":
        p = probs[probs > 1e-15]
        p = p / p.sum()
        return float(-np.sum(p * np.log2(p)))
    if mode == "log_count":
        return float(np.log2(len(m)))
    raise ValueError("mode must be 'entropy' or 'log_count'")


def communication_complexity(protocol: ProtocolRound, rho, mode: str = "entropy",
                             omit_last_round: bool = False) -> ComplexityReport:
    """Expected number of bits announced, accumulated per round.

    A round reached with probability ``q`` in state ``sigma`` contributes ``q H`` where
    ``H`` is the outcome entropy (``entropy`` mode) or ``log2`` of the operator count
    (``log_count`` mode).  With ``omit_last_round`` rounds that have no follow-up branches
    contribute nothing, since their outcome need not be sent.
    """
    rounds: dict[int, float] = {}

    def visit(node: ProtocolRound, state: np.ndarray, q: float, depth: int):
        if not is_quantum_map(node.map):
            raise ValueError(f"round {depth} is not trace preserving")
        if state.shape[0] != node.map.dim:
            raise DimensionError("protocol and state dimensions differ")
        probs = outcome_probabilities(node.map, state)
        cost = 0.0 if (omit_last_round and node.is_leaf) else _round_cost(node.map, probs, mode)
        rounds[depth] = rounds.get(depth, 0.0) + q * cost
        if node.is_leaf:
            return
        for k, br in enumerate(node.branches):
            if br is None or probs[k] <= 1e-15:
                continue
            _, cond = apply_outcome(node.map, k, state)
            visit(br, cond.matrix, q * probs[k], depth + 1)

    visit(protocol, as_density(rho).matrix, 1.0, 1)
    per = tuple(rounds[k] for k in sorted(rounds))
    return ComplexityReport(per_round=per, total=float(sum(per)))


# -------------------------------------------------------------- G2 scaling


@dataclass(frozen=True, eq=False)
class OperatorSpan:
    """Complex span of HS-orthonormal operators (not necessarily Lie-closed)."""

    basis: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def residual(self, x) -> float:
        return span_residual(x, self.basis.reshape(self.dim, -1))

    def relative_residual(self, x) -> float:
        return self.residual(x) / max(np.linalg.norm(x), 1e-300)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.relative_residual(x) <= tol


def _partial_trace_pair(c: np.ndarray, d: int, keep: int) -> np.ndarray:
    t = c.reshape(d, d, d, d)
    return np.einsum("ijik->jk", t) if keep == 2 else np.einsum("ijkj->ik", t)


def compute_G2(alg_sub: AlgebraRep) -> OperatorSpan:
    """Operators ``C`` on two copies with both one-sided partial pairings landing in ``alg_sub``.

    The span is the joint kernel of the linear maps
    ``C -> Q(tr_1(C (X^dagger (x) I)))`` and ``C -> Q(tr_2(C (I (x) X^dagger)))`` over a basis
    of operators ``X``, where ``Q`` projects onto the orthogonal complement of ``alg_sub``.
    """
    d = alg_sub.hilbert_dim
    big = d * d
    if big * big > MAX_G2_OPERATOR_DIM:
        raise ValueError(f"two-copy operator space of dimension {big * big} exceeds {MAX_G2_OPERATOR_DIM}")
    comp = orthogonal_complement(alg_sub)
    if len(comp) == 0:
        from .opspace import hermitian_operator_basis

        basis = np.array([np.kron(a, b) for a in hermitian_operator_basis(d) for b in hermitian_operator_basis(d)])
        return OperatorSpan(basis, meta={"kind": "G2"})
    # operator basis on one copy; X runs over it
    units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
    eye = np.eye(d)
    rows = []
    for e in np.eye(big * big, dtype=complex).reshape(big * big, big, big):
        r = []
        for x in units:
            a = _partial_trace_pair(e @ np.kron(x.conj().T, eye), d, keep=2)
            b = _partial_trace_pair(e @ np.kron(eye, x.conj().T), d, keep=1)
            r.append(comp.reshape(len(comp), -1).conj() @ a.ravel())
            r.append(comp.reshape(len(comp), -1).conj() @ b.ravel())
        rows.append(np.concatenate(r))
    mat = np.array(rows).T
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > 1e-9 * max(s[0], 1.0)))
    kernel = vh[rank:].conj()
    kernel = orthonormalize_vectors(kernel, tol=1e-10)
    return OperatorSpan(kernel.reshape(-1, big, big), meta={"kind": "G2", "copy_dim": d})


def embed_pair(op: np.ndarray, d: int, n: int, i: int, j: int) -> np.ndarray:
    """Place a two-copy operator on copies ``i < j`` of ``n`` copies."""
    from .registry import embed

    return embed(op, [d] * n, [i, j])


def compute_Gn(alg_sub: AlgebraRep, n: int) -> AlgebraRep:
    """Lie closure of the two-copy G2 span placed on every pair among ``n`` copies."""
    if n < 2:
        raise ValueError("n must be at least 2")
    d = alg_sub.hilbert_dim
    if (d ** n) ** 2 > MAX_G2_OPERATOR_DIM:
        raise ValueError("operator space too large")
    g2 = compute_G2(alg_sub)
    gens = []
    for i in range(n):
        for j in range(i + 1, n):
            gens.extend(embed_pair(b, d, n, i, j) for b in g2.basis)
    return from_generators(gens, meta={"kind": "G_n", "copies": n})


# --------------------------------------------------- binary separable maps


def binary_separable_maps(alg: AlgebraRep, count: int, seed: int = 0, tol: float = 1e-10,
                          max_tries: int | None = None, min_weight: float = 1e-6) -> list[ExplicitMap]:
    """Two-operator quantum maps ``(A, B)`` with ``A, B`` in ``exp(alg)``.

    Writing ``A = U exp(H_A / 2)`` and ``B = V exp(H_B / 2)`` with ``H_A, H_B`` in Re(alg) and
    ``U, V`` in ``exp(i Re(alg))``, trace preservation reads ``exp(H_A) + exp(H_B) = I``.  This
    equation is solved by least squares from random starts and the unitary factors are
    drawn at random.  Solutions where ``exp(H_A)`` or ``exp(H_B)`` has norm below
    ``min_weight`` are discarded: they only approximate the equation by making one operator
    negligible.
    """
    rng = np.random.default_rng(seed)
    basis = alg.basis
    n = alg.dim
    d = alg.hilbert_dim
    out = []
    tries = 0
    max_tries = max_tries or 20 * count
    while len(out) < count and tries < max_tries:
        tries += 1

        def resid(z):
            ha = np.tensordot(z[:n], basis, axes=1)
            hb = np.tensordot(z[n:], basis, axes=1)
            e = expm(ha) + expm(hb) - np.eye(d)
            return np.concatenate([e.real.ravel(), e.imag.ravel()])

        z0 = rng.normal(scale=1.0, size=2 * n)
        res = least_squares(resid, z0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        if np.linalg.norm(res.fun) > tol:
            continue
        # a vanishing operator means a one-operator map, not a binary one
        if min(np.linalg.eigvalsh(hermitian_part(np.tensordot(z, basis, axes=1)))[-1]
               for z in (res.x[:n], res.x[n:])) < np.log(min_weight):
            continue
        ha = hermitian_part(np.tensordot(res.x[:n], basis, axes=1))
        hb = hermitian_part(np.tensordot(res.x[n:], basis, axes=1))
        u = expm(1j * np.tensordot(rng.normal(size=n), basis, axes=1))
        v = expm(1j * np.tensordot(rng.normal(size=n), basis, axes=1))
        a = u @ expm(ha / 2)
        b = v @ expm(hb / 2)
        out.append(ExplicitMap((a, b)))
    return out


def proportional_to_unitary_defect(c: np.ndarray) -> float:
    """``|C^dagger C - alpha I|`` with ``alpha = tr(C^dagger C)/d``, relative to ``|C|^2``."""
    c = np.asarray(c, dtype=complex)
    g = c.conj().T @ c
    alpha = np.real(np.trace(g)) / c.shape[0]
    return float(np.linalg.norm(g - alpha * np.eye(c.shape[0])) / max(np.linalg.norm(c) ** 2, 1e-300))


def scaled_unitary_distance(c: np.ndarray) -> float:
    """HS distance from ``C`` to the nearest ``s U`` with ``s >= 0`` and ``U`` unitary.

    With the polar form ``C = W |C|`` the optimum is ``s`` = mean singular value, so the
    distance is the spread of the singular values.
    """
    sv = np.linalg.svd(np.asarray(c, dtype=complex), compute_uv=False)
    return float(np.linalg.norm(sv - sv.mean()))


def restricted_images_agree(m: ExplicitMap, alg: AlgebraRep, rho1, rho2) -> float:
    """Distance between restrictions of images of two states (zero when liftable and restrictions agree)."""
    return float(np.linalg.norm(project(alg, m(as_density(rho1).matrix)) - project(alg, m(as_density(rho2).matrix))))
