"""Coherent (generalized unentangled) pure states: purity maximization, decision, witnesses."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .algebra import (
    AlgebraRep,
    compress,
    h_purity,
    irreducible_components,
    project,
    supporting_cartan,
)
from .opspace import GAP_TOL, hermitian_part
from .states import PureState, as_pure

COHERENCE_TOL = 1e-6
DEFAULT_RESTARTS = 32
DEFAULT_MAX_ITER = 500
CONVERGENCE_TOL = 1e-12


class NotCoherent(ValueError):
    """The state is not a unique ground state of any element of the algebra."""


@dataclass(frozen=True)
class MaxPurity:
    value: float
    argmax: PureState
    converged: bool
    restarts: int


@dataclass(frozen=True)
class CoherenceReport:
    """Outcome of a coherence test.

    ``purity`` and ``max_purity`` refer to the irreducible component holding the state
    (the whole algebra when it acts irreducibly).  ``component_weights`` lists the
    probability the state assigns to each irreducible component.
    """

    is_coherent: bool
    purity: float
    max_purity: float
    witness: np.ndarray | None = None
    cartan_weight: np.ndarray | None = None
    component_weights: np.ndarray | None = None


_MAX_CACHE: dict = {}


def _top_vector(m: np.ndarray) -> np.ndarray:
    _, v = np.linalg.eigh(hermitian_part(m))
    return v[:, -1]


def _purity_of(alg: AlgebraRep, psi: np.ndarray) -> float:
    c = alg.coefficients(np.outer(psi, psi.conj()))
    return float(np.sum(np.abs(c) ** 2))


def purity_ascent(alg: AlgebraRep, psi0, max_iter: int = DEFAULT_MAX_ITER,
                  tol: float = CONVERGENCE_TOL) -> tuple[np.ndarray, list[float], bool]:
    """Fixed-point iteration ``psi <- top eigenvector of P_h(|psi><psi|)``.

    Purity is a convex function of the projector, so each step cannot decrease it.
    Returns the final vector, the purity history and a convergence flag.
    """
    psi = np.asarray(psi0, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    hist = [_purity_of(alg, psi)]
    for _ in range(max_iter):
        psi = _top_vector(project(alg, np.outer(psi, psi.conj())))
        hist.append(_purity_of(alg, psi))
        if abs(hist[-1] - hist[-2]) < tol:
            return psi, hist, True
    return psi, hist, False


def max_purity(alg: AlgebraRep, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
               max_iter: int = DEFAULT_MAX_ITER) -> MaxPurity:
    """Largest h-purity over pure states.

    The first start is the ground state of a generic algebra element (a lowest-weight
    vector for irreducible algebras); the remaining starts are random.  Results are cached.
    """
    key = (alg.fingerprint, restarts, seed, max_iter)
    if key in _MAX_CACHE:
        return _MAX_CACHE[key]
    rng = np.random.default_rng(seed)
    d = alg.hilbert_dim
    best_val, best_psi, all_conv = -np.inf, None, True
    for r in range(max(restarts, 1)):
        if r == 0:
            h = alg.element(rng.normal(size=alg.dim))
            start = np.linalg.eigh(hermitian_part(h))[1][:, 0]
        else:
            start = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi, hist, conv = purity_ascent(alg, start, max_iter=max_iter)
        all_conv &= conv
        if hist[-1] > best_val:
            best_val, best_psi = hist[-1], psi
    if not all_conv:
        warnings.warn("purity iteration hit the iteration cap on some restarts", RuntimeWarning)
    out = MaxPurity(value=float(best_val), argmax=PureState.normalized(best_psi),
                    converged=all_conv, restarts=restarts)
    _MAX_CACHE[key] = out
    return out


def is_coherent(alg: AlgebraRep, psi, tol: float = COHERENCE_TOL, restarts: int = DEFAULT_RESTARTS,
                seed: int = 0) -> CoherenceReport:
    """Decide whether ``psi`` is coherent for ``alg``.

    Reducible algebras are first split into irreducible invariant subspaces; a state
    spread over more than one of them is not coherent.  Within its component, the state is
    coherent when its purity is within ``tol`` of the maximum.
    """
    psi = as_pure(psi).amplitudes
    comps = irreducible_components(alg, seed=seed)
    if len(comps) == 1:
        sub, vec = alg, psi
        weights = np.array([1.0])
    else:
        weights = np.array([float(np.linalg.norm(v.conj().T @ psi) ** 2) for v in comps])
        k = int(np.argmax(weights))
        sub = compress(alg, comps[k])
        vec = comps[k].conj().T @ psi
        vec = vec / np.linalg.norm(vec)
        if 1 - weights[k] > tol:
            pur = h_purity(alg, psi)
            mp = max_purity(alg, restarts=restarts, seed=seed).value
            return CoherenceReport(False, pur, mp, component_weights=weights)
    pur = _purity_of(sub, vec)
    mp = max_purity(sub, restarts=restarts, seed=seed).value
    if pur < mp - tol:
        return CoherenceReport(False, pur, mp, component_weights=weights)
    witness = None
    weight = None
    if len(comps) == 1:
        try:
            witness = ground_state_witness(alg, psi)
        except NotCoherent:
            witness = None
        cartan = supporting_cartan(alg, np.outer(psi, psi.conj()), seed=seed)
        weight = cartan.weight_of(psi)
    return CoherenceReport(True, pur, mp, witness=witness, cartan_weight=weight, component_weights=weights)


def ground_state_witness(alg: AlgebraRep, psi, gap_tol: float = GAP_TOL) -> np.ndarray:
    """Element of Re(alg) whose unique ground state is ``psi``, scaled to unit spectral gap.

    The candidate is minus the traceless part of ``P_h(|psi><psi|)``, which lies in every
    supporting Cartan subalgebra of the state.
    """
    psi = as_pure(psi).amplitudes
    d = alg.hilbert_dim
    p = project(alg, np.outer(psi, psi.conj()))
    h = -hermitian_part(p - np.trace(p) / d * np.eye(d))
    if np.linalg.norm(h) < 1e-12:
        raise NotCoherent("projection has no traceless part")
    w, v = np.linalg.eigh(h)
    scale = max(np.max(np.abs(w)), 1e-300)
    if len(w) < 2 or (w[1] - w[0]) / scale <= gap_tol:
        raise NotCoherent("ground space of the candidate witness is degenerate")
    if abs(abs(np.vdot(v[:, 0], psi)) - 1) > 1e-8:
        raise NotCoherent("state is not the ground state of the candidate witness")
    return h / (w[1] - w[0])


def projector_limit(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-t (h - lambda_min))``, which tends to the ground-space projector as t grows."""
    h = hermitian_part(np.asarray(h, dtype=complex))
    lam = np.linalg.eigvalsh(h)[0]
    return expm(-t * (h - lam * np.eye(h.shape[0])))


def dispersion(alg: AlgebraRep, psi) -> float:
    """Invariant uncertainty ``sum_i <x_i^2> - sum_i <x_i>^2`` over the traceless basis."""
    psi = as_pure(psi).amplitudes
    x = alg.traceless_basis
    xpsi = np.einsum("nij,j->ni", x, psi)
    second = float(np.sum(np.abs(xpsi) ** 2))
    first = np.real(xpsi @ psi.conj())
    return second - float(np.sum(first ** 2))


def casimir(alg: AlgebraRep) -> np.ndarray:
    """``sum_i x_i^2`` over the traceless basis; a scalar for irreducible algebras."""
    x = alg.traceless_basis
    return np.einsum("nij,njk->ik", x, x)


def sector_mixing_gap(alg: AlgebraRep, psi, seed: int = 0) -> float:
    """``sum_k w_k purity(psi_k) - purity(psi)`` over the irreducible components of ``alg``.

    With ``psi = sum_k sqrt(w_k) psi_k`` split over invariant subspaces, the h-state of
    ``psi`` is the mixture of those of the ``psi_k``.  By strict convexity of purity the gap
    is nonnegative and vanishes only when all components induce the same h-state.
    """
    psi = as_pure(psi).amplitudes
    total, mixed = 0.0, 0.0
    for v in irreducible_components(alg, seed=seed):
        part = v @ (v.conj().T @ psi)
        w = float(np.linalg.norm(part) ** 2)
        if w > 1e-14:
            total += w * _purity_of(alg, part / np.sqrt(w))
    mixed = _purity_of(alg, psi)
    return total - mixed
