"""Schur-concave entanglement measures relative to an algebra.

Pure-state measures come from Schmidt spectra (bipartite local algebras) or from weight
distributions under supporting Cartan subalgebras.  Mixed states use the convex roof over
pure-state decompositions ``rho = sum_k |phi_k><phi_k|`` with ``phi_k = X v_k``, where
``rho = X X^dagger`` and the columns ``v_k`` form a co-isometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares, minimize

from .algebra import AlgebraRep, centralizer_of_state, project, supporting_cartan
from .opspace import DimensionError, hermitian_part
from .states import PureState, as_density, as_pure, schmidt

LN2 = np.log(2.0)


class MeasureError(ValueError):
    """Invalid input to a measure."""


@dataclass(frozen=True)
class SchurConcaveFn:
    """Named function of probability vectors.

    ``gradient``, when given, returns the partial derivatives with respect to each
    probability and enables gradient-based roof optimization.
    """

    name: str
    evaluator: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, p) -> float:
        return evaluate(self, p)

    @property
    def is_proper(self) -> bool:
        """True when the value at a point mass is zero."""
        return abs(self.evaluator(np.array([1.0, 0.0]))) < 1e-15


def _shannon(p):
    q = p[p > 0]
    return float(-np.sum(q * np.log2(q)))


def _shannon_grad(p):
    return -np.log2(np.clip(p, 1e-300, None)) - 1 / LN2


def _neg_purity(p):
    return float(-np.sum(p ** 2))


def _support(p, tol=1e-12):
    return float(np.sum(p > tol))


SHANNON = SchurConcaveFn("shannon", _shannon, _shannon_grad)
RENYI2_NEG_PURITY = SchurConcaveFn("renyi2_neg_purity", _neg_purity, lambda p: -2 * p)
SUPPORT_RANK = SchurConcaveFn("support_rank_limit", _support)

FUNCTIONS = {
    "shannon": SHANNON,
    "renyi2_neg_purity": RENYI2_NEG_PURITY,
    "renyi2": RENYI2_NEG_PURITY,
    "support_rank_limit": SUPPORT_RANK,
    "rank": SUPPORT_RANK,
}


def get_fn(fn) -> SchurConcaveFn:
    if isinstance(fn, SchurConcaveFn):
        return fn
    try:
        return FUNCTIONS[fn]
    except KeyError:
        raise MeasureError(f"unknown Schur-concave function {fn!r}") from None


def evaluate(fn, p) -> float:
    """Value of ``fn`` on a probability vector (small negative entries and drift are fixed up)."""
    fn = get_fn(fn)
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise MeasureError("not a probability vector")
    p = np.clip(p, 0, None)
    return float(fn.evaluator(p / p.sum()))


def _bipartite_dims(alg: AlgebraRep):
    if alg.meta.get("kind") == "bipartite_local":
        return tuple(alg.meta["dims"])
    return None


# ---------------------------------------------------------------- pure states


@dataclass(frozen=True)
class CartanMeasure:
    value: float
    per_seed: tuple
    distribution: np.ndarray

    @property
    def spread(self) -> float:
        return float(np.max(self.per_seed) - np.min(self.per_seed))


def s_cartan_detail(alg: AlgebraRep, psi, fn="shannon", seeds=(0, 1, 2, 3),
                    conj_restarts: int = 6) -> CartanMeasure:
    """Weight-distribution measure minimized over supporting Cartan subalgebras.

    For each seed a supporting Cartan subalgebra is built.  When the state's centralizer is
    larger than the Cartan subalgebra, every other supporting choice is a conjugate by
    ``exp(iX)`` with ``X`` in that centralizer, and the value is also minimized over ``X``.
    """
    fn = get_fn(fn)
    psi = as_pure(psi).amplitudes
    rho = np.outer(psi, psi.conj())
    values, dists = [], []
    for seed in seeds:
        cartan = supporting_cartan(alg, rho, seed=seed)
        p = cartan.weight_distribution(psi)
        best, best_p = evaluate(fn, np.clip(p, 0, None) / p.sum()), p
        if best > 1e-12:
            cent = centralizer_of_state(alg, rho)
            if len(cent) > cartan.rank:
                v, q = _conjugation_search(cartan.weight_projectors, cent, psi, fn, conj_restarts, seed)
                if v < best:
                    best, best_p = v, q
        values.append(best)
        dists.append(best_p)
    k = int(np.argmin(values))
    return CartanMeasure(value=float(values[k]), per_seed=tuple(values), distribution=dists[k])


def _conjugation_search(projectors, cent, psi, fn, restarts, seed):
    rng = np.random.default_rng(seed)

    def dist(theta):
        u = expm(1j * np.tensordot(theta, cent, axes=1))
        phi = u.conj().T @ psi
        p = np.real(np.einsum("i,kij,j->k", phi.conj(), projectors, phi))
        return np.clip(p, 0, None) / p.sum()

    def obj(theta):
        return fn.evaluator(dist(theta))

    best_v, best_p = np.inf, None
    for r in range(restarts):
        x0 = rng.normal(scale=np.pi, size=len(cent))
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000, "adaptive": True})
        res = minimize(obj, res.x, method="Powell", options={"xtol": 1e-10, "ftol": 1e-14})
        if res.fun < best_v:
            best_v, best_p = float(res.fun), dist(res.x)
        if best_v < 1e-12:
            break
    return best_v, best_p


def s_cartan(alg: AlgebraRep, psi, fn="shannon", seeds=(0, 1, 2, 3)) -> float:
    """``fn`` of the weight distribution of ``psi`` under a supporting Cartan subalgebra."""
    return s_cartan_detail(alg, psi, fn, seeds).value


def weight_entropy(psi, cartan_basis, fn="shannon", dim: int | None = None) -> float:
    """``fn`` of the weight distribution of ``psi`` under a fixed commuting family.

    Unlike :func:`s_cartan` the family is not adapted to the state, e.g. the spin cat
    ``(|+j> + |-j>)/sqrt(2)`` under ``{Jz}`` has weight entropy 1 bit.
    """
    from .algebra import weight_decomposition

    psi = as_pure(psi).amplitudes
    dec = weight_decomposition(list(cartan_basis), dim=dim or psi.size)
    return evaluate(fn, dec.weight_distribution(psi))


def s_pure(alg: AlgebraRep, psi, fn="shannon") -> float:
    """Pure-state measure: Schmidt spectrum for bipartite local algebras, Cartan weights otherwise."""
    fn = get_fn(fn)
    psi = as_pure(psi)
    if psi.dim != alg.hilbert_dim:
        raise DimensionError("state and algebra dimensions differ")
    dims = _bipartite_dims(alg)
    if dims is not None:
        return evaluate(fn, schmidt(psi, dims).coefficients)
    if alg.is_full:
        return evaluate(fn, np.array([1.0]))
    return s_cartan(alg, psi, fn)


# ---------------------------------------------------------------- convex roof


@dataclass(frozen=True)
class RoofOptions:
    """Optimizer settings shared by the roof-type measures.

    ``terms`` is the decomposition length (``rank**2`` when None).
    """

    restarts: int = 16
    terms: int | None = None
    seed: int = 0
    maxiter: int = 3000
    gtol: float = 1e-10


@dataclass(frozen=True)
class RoofResult:
    value: float
    decomposition: tuple
    iterations: int
    converged: bool
    restart_values: tuple = field(default=())

    def mixture(self) -> np.ndarray:
        return sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in self.decomposition)


def _factor(rho: np.ndarray, tol: float = 1e-12):
    w, e = np.linalg.eigh(rho)
    keep = w > tol * max(w[-1], 1.0)
    return e[:, keep] * np.sqrt(w[keep])


def _coisometry(y: np.ndarray):
    """``V = (Y Y^dagger)^{-1/2} Y`` with the eigen-data needed for its derivative."""
    m = y @ y.conj().T
    s, q = np.linalg.eigh(hermitian_part(m))
    s = np.clip(s, 1e-300, None)
    n = (q / np.sqrt(s)) @ q.conj().T
    return n @ y, n, s, q


def _coisometry_pullback(gv, y, n, s, q):
    """Gradient with respect to ``Y`` from a gradient with respect to ``V``."""
    w = gv @ y.conj().T
    si = s[:, None]
    sj = s[None, :]
    diff = si - sj
    same = np.abs(diff) <= 1e-12 * np.maximum(si, sj)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(same, -0.5 * np.maximum(si, sj) ** -1.5, (si ** -0.5 - sj ** -0.5) / diff)
    z = q @ (k * (q.conj().T @ w @ q)) @ q.conj().T
    return n @ gv + (z + z.conj().T) @ y


def _term_values_bipartite(phis, dims, fn: SchurConcaveFn, want_grad: bool):
    """Sum of ``n_k fn(spectrum of reduced state / n_k)`` with ``n_k = |phi_k|^2``."""
    na, nb = dims
    mats = phis.T.reshape(-1, na, nb)
    r = mats @ np.conj(np.swapaxes(mats, 1, 2))
    lam, u = np.linalg.eigh(hermitian_part(r))
    lam = np.clip(lam, 0, None)
    norms = lam.sum(axis=1)
    total = 0.0
    grads = np.zeros_like(phis) if want_grad else None
    for k in range(len(norms)):
        nk = norms[k]
        if nk <= 1e-300:
            continue
        p = lam[k] / nk
        sval = fn.evaluator(p)
        total += nk * sval
        if want_grad:
            sg = fn.gradient(p)
            diag = sval + sg - np.dot(sg, p)
            g = (u[k] * diag) @ u[k].conj().T
            grads[:, k] = (2 * g @ mats[k]).ravel()
    return total, grads


def _term_values_generic(phis, h: AlgebraRep, fn: SchurConcaveFn):
    total = 0.0
    for k in range(phis.shape[1]):
        nk = float(np.real(np.vdot(phis[:, k], phis[:, k])))
        if nk <= 1e-24:
            continue
        total += nk * s_pure(h, PureState.normalized(phis[:, k]), fn)
    return total


def _term_values_purity(phis, h: AlgebraRep, want_grad: bool):
    total = 0.0
    grads = np.zeros_like(phis) if want_grad else None
    for k in range(phis.shape[1]):
        f = phis[:, k]
        nk = float(np.real(np.vdot(f, f)))
        if nk <= 1e-300:
            continue
        pa = project(h, np.outer(f, f.conj()))
        pn = float(np.real(np.vdot(pa, pa)))
        total += pn / nk
        if want_grad:
            grads[:, k] = 4 * pa @ f / nk - 2 * pn * f / nk ** 2
    return total, grads


def _check_pair(g: AlgebraRep, h: AlgebraRep, rho: np.ndarray):
    if rho.shape[0] != g.hilbert_dim or h.hilbert_dim != g.hilbert_dim:
        raise DimensionError("state and algebra dimensions differ")
    if any(g.residual(b) > 1e-9 for b in h.basis):
        raise MeasureError("inner algebra is not contained in the outer algebra")
    if not g.is_full:
        raise NotImplementedError("roof measures are implemented for an outer algebra of all operators")


def _optimize_roof(x: np.ndarray, terms_fn, opts: RoofOptions, sign: float, use_grad: bool):
    """Minimize ``sign * terms_fn(X V)`` over co-isometries ``V``; returns the best point."""
    d, r = x.shape
    m = opts.terms or r * r
    m = max(m, r)
    rng = np.random.default_rng(opts.seed)

    def unpack(z):
        return (z[: r * m] + 1j * z[r * m:]).reshape(r, m)

    def obj(z):
        y = unpack(z)
        v, n, s, q = _coisometry(y)
        phis = x @ v
        if not use_grad:
            return sign * terms_fn(phis, False)[0]
        val, gphi = terms_fn(phis, True)
        gv = x.conj().T @ gphi
        gy = sign * _coisometry_pullback(gv, y, n, s, q)
        return sign * val, np.concatenate([gy.real.ravel(), gy.imag.ravel()])

    best = (np.inf, None)
    values, iters, conv = [], 0, False
    for k in range(max(opts.restarts, 1)):
        if k == 0:
            y0 = np.zeros((r, m), dtype=complex)
            y0[:, :r] = np.eye(r)
            y0 += 1e-3 * (rng.normal(size=(r, m)) + 1j * rng.normal(size=(r, m)))
        else:
            y0 = rng.normal(size=(r, m)) + 1j * rng.normal(size=(r, m))
        z0 = np.concatenate([y0.real.ravel(), y0.imag.ravel()])
        if use_grad:
            res = minimize(obj, z0, jac=True, method="L-BFGS-B",
                           options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": 1e-15, "maxcor": 30})
        else:
            res = minimize(obj, z0, method="Powell", options={"maxiter": opts.maxiter, "xtol": 1e-8, "ftol": 1e-12})
        f = float(res.fun)
        values.append(sign * f)
        iters += int(res.nit)
        if f < best[0]:
            best = (f, res.x)
            conv = bool(res.success)
    v = _coisometry(unpack(best[1]))[0]
    return sign * best[0], x @ v, iters, conv, tuple(values)


def _decomposition(phis: np.ndarray) -> tuple:
    out = []
    for k in range(phis.shape[1]):
        nk = float(np.real(np.vdot(phis[:, k], phis[:, k])))
        if nk > 1e-14:
            out.append((nk, PureState.normalized(phis[:, k])))
    total = sum(w for w, _ in out)
    return tuple((w / total, s) for w, s in out)


def s_roof(g: AlgebraRep, h: AlgebraRep, rho, fn="shannon", opts: RoofOptions | None = None) -> RoofResult:
    """Convex roof of the pure-state measure over decompositions of ``rho``.

    The returned value is the best decomposition found, hence an upper bound on the
    infimum.  Bipartite local algebras with a differentiable ``fn`` use an analytic gradient.
    """
    fn = get_fn(fn)
    opts = opts or RoofOptions()
    m = as_density(rho).matrix
    _check_pair(g, h, m)
    x = _factor(m)
    r = x.shape[1]
    if r == 1:
        psi = PureState.normalized(x[:, 0])
        return RoofResult(s_pure(h, psi, fn), ((1.0, psi),), 0, True, ())
    dims = _bipartite_dims(h)
    if h.is_full:
        val = evaluate(fn, np.array([1.0]))
        w, e = np.linalg.eigh(m)
        dec = tuple((float(wk), PureState.normalized(e[:, k])) for k, wk in enumerate(w) if wk > 1e-14)
        return RoofResult(val, dec, 0, True, ())
    if dims is not None and fn.gradient is not None:
        terms = lambda phis, grad: _term_values_bipartite(phis, dims, fn, grad)  # noqa: E731
        val, phis, it, conv, vals = _optimize_roof(x, terms, opts, 1.0, True)
    else:
        if opts.terms is None:
            opts = replace(opts, terms=r + 1, restarts=min(opts.restarts, 4))
        terms = lambda phis, grad: (_term_values_generic(phis, h, fn), None)  # noqa: E731
        val, phis, it, conv, vals = _optimize_roof(x, terms, opts, 1.0, False)
    return RoofResult(float(val), _decomposition(phis), it, conv, vals)


def purity_measure(g: AlgebraRep, h: AlgebraRep, rho, opts: RoofOptions | None = None) -> RoofResult:
    """Largest average h-purity over pure-state decompositions of ``rho``."""
    opts = opts or RoofOptions()
    m = as_density(rho).matrix
    _check_pair(g, h, m)
    x = _factor(m)
    if x.shape[1] == 1:
        psi = PureState.normalized(x[:, 0])
        val = _term_values_purity(x, h, False)[0]
        return RoofResult(float(val), ((1.0, psi),), 0, True, ())
    terms = lambda phis, grad: _term_values_purity(phis, h, grad)  # noqa: E731
    val, phis, it, conv, vals = _optimize_roof(x, terms, opts, -1.0, True)
    return RoofResult(float(val), _decomposition(phis), it, conv, vals)


# ------------------------------------------------------- coherent expansions


@dataclass(frozen=True)
class ExpansionOptions:
    restarts: int = 12
    seed: int = 0
    residual_tol: float = 1e-6
    max_terms: int | None = None
    extra_terms: int = 1


def _coherent_seed(alg: AlgebraRep, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h = alg.element(rng.normal(size=alg.dim))
    return np.linalg.eigh(hermitian_part(h))[1][:, 0]


def _orbit_states(alg: AlgebraRep, psi0: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    x = alg.traceless_basis
    cols = [expm(1j * np.tensordot(t, x, axes=1)) @ psi0 for t in thetas]
    return np.array(cols).T


def _fit(alg, psi0, psi, r, rng, restarts):
    """Best least-squares reconstruction of ``psi`` from ``r`` orbit states."""
    k = len(alg.traceless_basis)
    best = (np.inf, None)

    def resid(z):
        c = _orbit_states(alg, psi0, z.reshape(r, k))
        a, *_ = np.linalg.lstsq(c, psi, rcond=None)
        e = psi - c @ a
        return np.concatenate([e.real, e.imag])

    for _ in range(restarts):
        z0 = rng.normal(scale=np.pi, size=r * k)
        res = least_squares(resid, z0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400 * r * k)
        err = float(np.linalg.norm(res.fun))
        if err < best[0]:
            best = (err, res.x.reshape(r, k))
        if err < 1e-10:
            break
    return best


def h_rank(alg: AlgebraRep, psi, opts: ExpansionOptions | None = None) -> int:
    """Fewest coherent states whose span contains ``psi`` (residual at most ``residual_tol``)."""
    opts = opts or ExpansionOptions()
    psi = as_pure(psi).amplitudes
    rng = np.random.default_rng(opts.seed)
    psi0 = _coherent_seed(alg, opts.seed)
    cap = opts.max_terms or alg.hilbert_dim
    for r in range(1, cap + 1):
        err, _ = _fit(alg, psi0, psi, r, rng, opts.restarts)
        if err <= opts.residual_tol:
            return r
    raise RuntimeError(f"no coherent expansion with at most {cap} terms was found")


def s_amplitude(alg: AlgebraRep, psi, fn="shannon", opts: ExpansionOptions | None = None) -> float:
    """Smallest ``fn`` of renormalized squared amplitudes over coherent expansions found.

    Expansions with ``h_rank`` up to ``h_rank + extra_terms`` terms are searched; the value
    is an upper bound on the infimum.
    """
    fn = get_fn(fn)
    opts = opts or ExpansionOptions()
    psi = as_pure(psi).amplitudes
    rank = h_rank(alg, psi, opts)
    if rank == 1:
        return evaluate(fn, np.array([1.0]))
    rng = np.random.default_rng(opts.seed + 1)
    psi0 = _coherent_seed(alg, opts.seed)
    k = len(alg.traceless_basis)
    best = np.inf
    for r in range(rank, min(rank + opts.extra_terms, alg.hilbert_dim) + 1):
        def parts(z):
            c = _orbit_states(alg, psi0, z.reshape(r, k))
            a, *_ = np.linalg.lstsq(c, psi, rcond=None)
            e = float(np.linalg.norm(psi - c @ a))
            w = np.abs(a) ** 2
            return e, w / w.sum()

        def obj(z):
            e, p = parts(z)
            return fn.evaluator(p) + 1e4 * e ** 2

        for _ in range(opts.restarts):
            err, z = _fit(alg, psi0, psi, r, rng, 1)
            if err > 1e-3:
                continue
            res = minimize(obj, z.ravel(), method="Nelder-Mead",
                           options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12, "adaptive": True})
            for cand in (res.x, z.ravel()):
                e, p = parts(cand)
                if e <= opts.residual_tol * 10:
                    best = min(best, fn.evaluator(p))
    if not np.isfinite(best):
        raise RuntimeError("no accurate coherent expansion was found")
    return float(best)
