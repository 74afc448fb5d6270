"""Finitely generated cones of states and measures relative to a projection between two cones.

Cones are V-represented: a finite generator list, a positive trace functional and
optionally an exact oracle for membership and extremality.  Without an oracle membership
is decided by nonnegative least squares and extremality by exclusion from the cone of the
remaining generators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .measures import evaluate, get_fn

CONE_TOL = 1e-9
LIFT_TOL = 1e-8


class ConeError(ValueError):
    """Invalid cone data or infeasible request."""


@dataclass(frozen=True)
class ConeOracle:
    """Exact membership and extremality tests for a cone."""

    contains: Callable[[np.ndarray], bool]
    is_extremal: Callable[[np.ndarray], bool]


@dataclass(frozen=True, eq=False)
class Cone:
    generators: np.ndarray
    trace: np.ndarray
    oracle: ConeOracle | None = None
    name: str = ""

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        t = np.asarray(self.trace, dtype=float).ravel()
        if g.shape[1] != t.size:
            raise ConeError("generators and trace functional have different dimensions")
        if np.any(g @ t <= 0):
            raise ConeError("trace must be positive on every generator")
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "trace", t)

    @property
    def ambient_dim(self) -> int:
        return self.trace.size

    def tr(self, x) -> float:
        return float(np.dot(self.trace, x))

    def spans_ambient(self, tol: float = 1e-10) -> bool:
        return np.linalg.matrix_rank(self.generators, tol=tol) == self.ambient_dim


def _nnls(gens: np.ndarray, x: np.ndarray):
    if len(gens) == 0:
        return np.zeros(0), float(np.linalg.norm(x))
    scale = np.linalg.norm(gens, axis=1)
    coef, res = nnls(gens.T / scale, x, maxiter=50 * max(len(gens), 10))
    return coef / scale, float(res)


def decomposition(cone: Cone, x, tol: float = CONE_TOL) -> np.ndarray | None:
    """Nonnegative generator weights reproducing ``x``, or None when none are found."""
    x = np.asarray(x, dtype=float)
    c, res = _nnls(cone.generators, x)
    return c if res <= tol * max(1.0, np.linalg.norm(x)) else None


def contains(cone: Cone, x, tol: float = CONE_TOL, exact: bool = True) -> bool:
    """Membership of ``x``; uses the oracle when present and ``exact`` is set."""
    x = np.asarray(x, dtype=float)
    if x.size != cone.ambient_dim:
        raise ConeError("vector dimension does not match the cone")
    if exact and cone.oracle is not None:
        return bool(cone.oracle.contains(x))
    return decomposition(cone, x, tol) is not None


def _parallel(gens: np.ndarray, x: np.ndarray, tol: float) -> np.ndarray:
    xn = x / np.linalg.norm(x)
    gn = gens / np.linalg.norm(gens, axis=1, keepdims=True)
    return np.linalg.norm(gn - xn, axis=1) <= tol ** 0.5


def is_extremal(cone: Cone, x, tol: float = CONE_TOL, exact: bool = True) -> bool:
    """Whether the nonzero ``x`` spans an extreme ray.

    Without an oracle: ``x`` is extremal when it lies in the cone and is not in the cone
    generated by the generators that are not parallel to it.
    """
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) == 0:
        return False
    if exact and cone.oracle is not None:
        return bool(cone.oracle.is_extremal(x))
    if not contains(cone, x, tol, exact=False):
        return False
    others = cone.generators[~_parallel(cone.generators, x, tol)]
    _, res = _nnls(others, x)
    return res > tol * 10 * max(1.0, np.linalg.norm(x))


def extreme_generator_mask(cone: Cone, tol: float = CONE_TOL) -> np.ndarray:
    """Boolean mask of generators spanning extreme rays (duplicates all marked)."""
    return np.array([is_extremal(cone, g, tol) for g in cone.generators])


@dataclass(frozen=True, eq=False)
class PiMap:
    """Linear map from the outer (D) space onto the inner (C) space."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.atleast_2d(np.asarray(self.matrix, dtype=float)))

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def nullspace(self, tol: float = 1e-10) -> np.ndarray:
        _, s, vh = np.linalg.svd(self.matrix, full_matrices=True)
        rank = int(np.sum(s > tol * max(s[0], 1.0))) if len(s) else 0
        return vh[rank:].T


@dataclass(frozen=True)
class PiReport:
    trace_defect: float
    unreached: tuple

    @property
    def valid(self) -> bool:
        return self.trace_defect <= 1e-10 and not self.unreached


def check_pi(pi: PiMap, D: Cone, C: Cone) -> PiReport:
    """Trace preservation on D generators and reachability of every C generator from pi(D)."""
    imgs = D.generators @ pi.matrix.T
    defect = float(np.max(np.abs(imgs @ C.trace - D.generators @ D.trace)))
    image_cone = Cone(imgs, C.trace)
    unreached = tuple(i for i, g in enumerate(C.generators) if not contains(image_cone, g, 1e-7, exact=False))
    return PiReport(defect, unreached)


def separable_cone(D: Cone, C: Cone, pi: PiMap, oracle: ConeOracle | None = None) -> Cone:
    """Cone of the D generators whose image under ``pi`` is extremal in C."""
    if pi.matrix.shape != (C.ambient_dim, D.ambient_dim):
        raise ConeError("pi has the wrong shape")
    keep = [g for g in D.generators if np.linalg.norm(pi(g)) > 0 and is_extremal(C, pi(g))]
    if not keep:
        raise ConeError("no generator of D maps to an extreme ray of C")
    return Cone(np.array(keep), D.trace, oracle=oracle, name=f"{D.name}_sep" if D.name else "sep")


# ------------------------------------------------------------------ measures


def _weights_from(c: np.ndarray, gens: np.ndarray, trace: np.ndarray) -> np.ndarray:
    w = c * (gens @ trace)
    return w / w.sum()


def cone_S(cone: Cone, x, fn="shannon", max_subsets: int = 20000, lp_samples: int = 300,
           seed: int = 0, tol: float = 1e-9) -> float:
    """Smallest ``fn`` of trace weights over decompositions of ``x`` into extreme generators.

    A concave ``fn`` attains its minimum over the polytope of decompositions at a vertex,
    i.e. at a decomposition over linearly independent generators.  Such supports are
    enumerated when there are few of them and sampled through LP vertices otherwise.
    """
    fn = get_fn(fn)
    x = np.asarray(x, dtype=float)
    mask = extreme_generator_mask(cone)
    gens = cone.generators[mask]
    # collapse duplicate rays
    uniq = []
    for g in gens:
        if not any(np.linalg.norm(g / np.linalg.norm(g) - u / np.linalg.norm(u)) < 1e-9 for u in uniq):
            uniq.append(g)
    gens = np.array(uniq)
    if decomposition(Cone(gens, cone.trace), x, tol) is None:
        raise ConeError("vector is not in the cone of extreme generators")
    k, n = gens.shape
    rank = np.linalg.matrix_rank(gens)
    best = np.inf
    total = sum(_ncr(k, s) for s in range(1, min(rank, k) + 1))
    scale = max(1.0, np.linalg.norm(x))
    if total <= max_subsets:
        for s in range(1, min(rank, k) + 1):
            for idx in itertools.combinations(range(k), s):
                sub = gens[list(idx)]
                c, *_ = np.linalg.lstsq(sub.T, x, rcond=None)
                if np.any(c < -tol) or np.linalg.norm(sub.T @ c - x) > tol * scale:
                    continue
                c = np.clip(c, 0, None)
                best = min(best, evaluate(fn, _weights_from(c, sub, cone.trace)))
            if best <= 1e-15:
                break
        return float(best)
    rng = np.random.default_rng(seed)
    for _ in range(lp_samples):
        res = linprog(rng.normal(size=k), A_eq=gens.T, b_eq=x, bounds=(0, None), method="highs")
        if res.status == 0:
            c = np.clip(res.x, 0, None)
            if c.sum() > 0:
                best = min(best, evaluate(fn, _weights_from(c, gens, cone.trace)))
    if not np.isfinite(best):
        raise ConeError("no decomposition found")
    return float(best)


def _ncr(n: int, r: int) -> int:
    from math import comb

    return comb(n, r)


@dataclass(frozen=True)
class RelativeValue:
    value: float
    weights: np.ndarray
    support: np.ndarray


def cone_S_relative_detail(D: Cone, C: Cone, pi: PiMap, x, fn="shannon", pure_values=None,
                           tol: float = 1e-9) -> RelativeValue:
    """Average of pure values ``S(pi(g))`` over the cheapest decomposition of ``x`` in D.

    Decompositions ``x = sum_g c_g g`` with ``c >= 0`` form a polytope and the objective
    ``sum_g c_g tr(g) S(pi(g)^) / tr(x)`` is linear in ``c``, so the infimum over the
    generator set is one linear program.  ``pure_values`` supplies ``S(pi(g)^)`` per D
    generator; by default it is computed with :func:`cone_S` in C.
    """
    fn = get_fn(fn)
    x = np.asarray(x, dtype=float)
    gens = D.generators
    if pure_values is None:
        pure_values = np.array([cone_S(C, pi(g) / C.tr(pi(g)), fn) for g in gens])
    pure_values = np.asarray(pure_values, dtype=float)
    tr_g = gens @ D.trace
    res = linprog(tr_g * pure_values, A_eq=gens.T, b_eq=x, bounds=(0, None), method="highs")
    if res.status != 0:
        c, r = _nnls(gens, x)
        if r > 1e-7 * max(1.0, np.linalg.norm(x)):
            raise ConeError("vector is not in the cone of D generators")
        res = linprog(tr_g * pure_values, A_eq=gens.T, b_eq=gens.T @ c, bounds=(0, None), method="highs")
        if res.status != 0:
            raise ConeError("decomposition linear program failed")
    c = np.clip(res.x, 0, None)
    w = c * tr_g / D.tr(x)
    support = np.nonzero(w > 1e-12)[0]
    return RelativeValue(float(np.dot(w, pure_values)), w, support)


def cone_S_relative(D: Cone, C: Cone, pi: PiMap, x, fn="shannon", pure_values=None) -> float:
    return cone_S_relative_detail(D, C, pi, x, fn, pure_values).value


# --------------------------------------------------------------- cone maps

FLAGS = ("positive", "trace_preserving", "extremality_preserving", "C_separable", "liftable")


@dataclass(frozen=True, eq=False)
class ConeMap:
    matrix: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.atleast_2d(np.asarray(self.matrix, dtype=float)))

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)


def _positive_on(m: ConeMap, cone: Cone, target: Cone) -> bool:
    return all(contains(target, m(g), 1e-8) for g in cone.generators)


def _extremality_on(m: ConeMap, cone: Cone, target: Cone) -> bool:
    for g in cone.generators:
        y = m(g)
        if np.linalg.norm(y) <= 1e-12 * max(1.0, np.linalg.norm(g)):
            continue
        if not is_extremal(target, y):
            return False
    return True


def check_map(m: ConeMap, D: Cone, C: Cone, pi: PiMap, which: Sequence[str] = FLAGS,
              Dsep: Cone | None = None) -> dict:
    """Verdict for each requested flag.

    ``positive``: generator images lie in D.  ``extremality_preserving``: images of
    generators are zero or extremal in D.  ``C_separable``: positive and extremality
    preserving on both D and D_sep.  ``liftable``: ``pi A`` vanishes on the nullspace of ``pi``.
    """
    out = {}
    if m.matrix.shape != (D.ambient_dim, D.ambient_dim):
        raise ConeError("map has the wrong shape")
    need_sep = "C_separable" in which
    if need_sep and Dsep is None:
        Dsep = separable_cone(D, C, pi)
    if "positive" in which or need_sep:
        out["positive"] = _positive_on(m, D, D)
    if "trace_preserving" in which:
        out["trace_preserving"] = bool(np.max(np.abs(D.trace @ m.matrix - D.trace)) <= 1e-10)
    if "extremality_preserving" in which or need_sep:
        out["extremality_preserving"] = _extremality_on(m, D, D)
    if need_sep:
        out["C_separable"] = bool(out["positive"] and out["extremality_preserving"]
                                  and _positive_on(m, Dsep, Dsep) and _extremality_on(m, Dsep, Dsep))
    if "liftable" in which:
        null = pi.nullspace()
        res = float(np.linalg.norm(pi.matrix @ m.matrix @ null)) if null.size else 0.0
        out["liftable"] = res <= LIFT_TOL
        out["lift_residual"] = res
    return {k: v for k, v in out.items() if k in which or k == "lift_residual"}


def compose_explicit(first: Sequence[ConeMap], branches: Sequence[Sequence[ConeMap]]) -> list[ConeMap]:
    """Conditional composition ``(B_kl A_k)`` of explicit cone maps."""
    if len(first) != len(branches):
        raise ConeError("one branch per component of the first map is required")
    return [ConeMap(b.matrix @ a.matrix) for a, br in zip(first, branches) for b in br]


# ------------------------------------------------------------ monotonicity


@dataclass(frozen=True)
class TrialReport:
    max_violation: float
    samples: int
    precondition_ok: bool
    precondition_failures: tuple
    violations: np.ndarray
    mixed_max_violation: float | None = None


def monotonicity_trial(maps: Sequence[ConeMap], D: Cone, C: Cone, pi: PiMap, fn="shannon",
                       samples: int = 500, seed: int = 0, pure_value=None, sampler=None,
                       Dsep: Cone | None = None, check_preconditions: bool = True) -> TrialReport:
    """Check ``S(x;C) >= sum_k p_k S(A_k(x)^;C)`` on sampled pure states ``x``.

    ``pure_value(y)`` gives ``S(y;C)`` for an extremal state ``y`` of D (defaults to
    :func:`cone_S` of ``pi(y)``); non-extremal images are evaluated with
    :func:`cone_S_relative`.  ``sampler(rng)`` draws pure states of D (defaults to random
    extremal generators).  Precondition failures are reported, not raised.
    """
    fn = get_fn(fn)
    rng = np.random.default_rng(seed)
    failures = []
    total = sum(m.matrix for m in maps)
    if np.max(np.abs(D.trace @ total - D.trace)) > 1e-9:
        failures.append(("sum", "trace_preserving"))
    if check_preconditions:
        if Dsep is None:
            Dsep = separable_cone(D, C, pi)
        for i, m in enumerate(maps):
            rep = check_map(m, D, C, pi, ("liftable", "C_separable"), Dsep=Dsep)
            for flag in ("liftable", "C_separable"):
                if not rep[flag]:
                    failures.append((i, flag))
    if pure_value is None:
        def pure_value(y):
            z = pi(y)
            return cone_S(C, z / C.tr(z), fn)
    if sampler is None:
        ext = D.generators[extreme_generator_mask(D)]

        def sampler(r):
            return ext[r.integers(len(ext))]

    def value(y):
        if is_extremal(D, y):
            return pure_value(y)
        return cone_S_relative(D, C, pi, y, fn)

    viol = np.empty(samples)
    for s in range(samples):
        x = sampler(rng)
        x = x / D.tr(x)
        before = pure_value(x)
        after = 0.0
        for m in maps:
            y = m(x)
            p = D.tr(y)
            if p <= 1e-14:
                continue
            after += p * value(y / p)
        viol[s] = after - before
    return TrialReport(float(max(viol.max(initial=0.0), 0.0)), samples, not failures, tuple(failures), viol)


# ------------------------------------------------------ Lie instantiation


@dataclass(frozen=True, eq=False)
class LieCones:
    """Cones for a pair of algebras ``h`` inside ``g`` acting on a bipartite space.

    D lives in the real coordinates of Re(g), C in those of Re(h), and ``pi`` is the
    orthogonal projection.  ``pure_value`` returns the pure-state measure of an extremal
    D vector.
    """

    g: object
    h: object
    D: Cone
    C: Cone
    Dsep: Cone
    pi: PiMap
    fn: object

    def to_vec(self, rho) -> np.ndarray:
        return np.real(self.g.coefficients(rho))

    def to_op(self, x) -> np.ndarray:
        return self.g.element(np.asarray(x, dtype=float))

    def pure_value(self, x) -> float:
        from .measures import s_pure

        w, v = np.linalg.eigh(self.to_op(x))
        return s_pure(self.h, v[:, -1], self.fn)

    def cone_map(self, channel) -> ConeMap:
        """Matrix of the linear map ``channel`` on Hermitian operators in D coordinates."""
        cols = [self.to_vec(channel(b)) for b in self.g.basis]
        return ConeMap(np.array(cols).T)

    def sample_pure(self, rng) -> np.ndarray:
        from .states import random_pure

        psi = random_pure(self.g.hilbert_dim, seed=int(rng.integers(2**31))).amplitudes
        return self.to_vec(np.outer(psi, psi.conj()))


def _psd(m: np.ndarray, tol: float) -> bool:
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return w[0] >= -tol * max(1.0, abs(w[-1]))


def _rank_one(m: np.ndarray, tol: float) -> bool:
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return _psd(m, tol) and w[-1] > tol and w[-2] <= tol * max(1.0, w[-1])


def lie_cones(dims=(2, 2), samples: int = 60, seed: int = 0, extra_states=(), fn="shannon",
              tol: float = 1e-8) -> LieCones:
    """Cone instance of a bipartite system with ``g`` the full algebra and ``h`` local operators.

    Generators of D are random pure states, random product states and any ``extra_states``
    (vectors or density matrices, whose eigenvectors are added).  Exact oracles use
    positivity (D), positivity of the marginals (C) and the partial transpose (D_sep, exact
    for 2x2 and 2x3).
    """
    from .opspace import partial_trace
    from .registry import bipartite_local, full_matrix
    from .states import product_state, random_pure

    na, nb = dims
    d = na * nb
    g, h = full_matrix(d), bipartite_local(na, nb)
    rng = np.random.default_rng(seed)
    vecs = [random_pure(d, seed=int(rng.integers(2**31))).amplitudes for _ in range(samples)]
    vecs += [product_state(random_pure(na, seed=int(rng.integers(2**31))),
                           random_pure(nb, seed=int(rng.integers(2**31)))).amplitudes
             for _ in range(samples)]
    for st in extra_states:
        st = np.asarray(st, dtype=complex)
        if st.ndim == 1:
            vecs.append(st / np.linalg.norm(st))
        else:
            w, v = np.linalg.eigh(st)
            vecs += [v[:, i] for i in range(d) if w[i] > 1e-12]

    def coords(alg, m):
        return np.real(alg.coefficients(m))

    gens_d = np.array([coords(g, np.outer(v, v.conj())) for v in vecs])
    trace_d = np.zeros(g.dim)
    trace_d[0] = np.sqrt(d)
    pi = PiMap(np.real(np.array([[np.vdot(hb, gb) for gb in g.basis] for hb in h.basis])))

    def op_d(x):
        return g.element(x)

    def marginals(y):
        mu = h.element(y)
        return partial_trace(mu, dims, "b"), partial_trace(mu, dims, "a")

    def pt(m):
        return m.reshape(na, nb, na, nb).transpose(0, 3, 2, 1).reshape(d, d)

    oracle_d = ConeOracle(lambda x: _psd(op_d(x), tol), lambda x: _rank_one(op_d(x), tol))
    oracle_c = ConeOracle(lambda y: all(_psd(m, tol) for m in marginals(y)),
                          lambda y: all(_rank_one(m, tol) for m in marginals(y)))

    def sep_contains(x):
        m = op_d(x)
        return _psd(m, tol) and _psd(pt(m), tol)

    def sep_extremal(x):
        m = op_d(x)
        return _rank_one(m, tol) and all(_rank_one(r, tol) for r in marginals(pi(x)))

    D = Cone(gens_d, trace_d, oracle_d, name="D")
    gens_c = np.array([pi(x) for x in gens_d if sep_extremal(x)])
    trace_c = np.zeros(h.dim)
    trace_c[0] = np.sqrt(d)
    C = Cone(gens_c, trace_c, oracle_c, name="C")
    Dsep = Cone(np.array([x for x in gens_d if sep_extremal(x)]), trace_d,
                ConeOracle(sep_contains, sep_extremal), name="D_sep")
    return LieCones(g, h, D, C, Dsep, pi, get_fn(fn))
