"""Density matrices, pure states, Schmidt decompositions and restriction to algebras."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .opspace import DimensionError, as_square, hermitian_defect, hermitian_part

STATE_TOL = 1e-9
NORM_TOL = 1e-10


class InvalidStateError(ValueError):
    """Raised for matrices or vectors that are not valid quantum states."""


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector of complex amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise InvalidStateError("amplitudes must be finite and nonempty")
        if abs(np.linalg.norm(a) - 1) > NORM_TOL:
            raise InvalidStateError(f"state norm {np.linalg.norm(a):.3e} differs from 1")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, vec) -> "PureState":
        v = np.asarray(vec, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise InvalidStateError("zero vector")
        return cls(v / n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))

    def projector(self) -> np.ndarray:
        a = self.amplitudes
        return np.outer(a, a.conj())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_square(self.matrix)
        if hermitian_defect(m) > STATE_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        m = hermitian_part(m)
        tr = np.real(np.trace(m))
        if abs(tr - 1) > STATE_TOL:
            raise InvalidStateError(f"trace {tr:.12g} differs from 1")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.matrix) > tol))


def as_density(state, tol: float = 1e-8) -> DensityMatrix:
    """Coerce a PureState, DensityMatrix, vector or matrix into a DensityMatrix.

    Matrices are validated with tolerance ``tol`` on positivity and trace.
    """
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        if abs(np.linalg.norm(arr) - 1) > tol:
            raise InvalidStateError("state vector is not normalized")
        return PureState.normalized(arr).density()
    m = as_square(arr)
    if hermitian_defect(m) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    m = hermitian_part(m)
    if abs(np.real(np.trace(m)) - 1) > tol:
        raise InvalidStateError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(m)[0] < -tol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return _density_unchecked(m)


def _density_unchecked(m: np.ndarray) -> DensityMatrix:
    obj = object.__new__(DensityMatrix)
    object.__setattr__(obj, "matrix", m)
    return obj


def as_pure(state) -> PureState:
    if isinstance(state, PureState):
        return state
    arr = np.asarray(state, dtype=complex)
    if arr.ndim != 1:
        raise InvalidStateError("expected a state vector")
    return PureState(arr)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``psi = sum_k sqrt(p_k) |a_k> (x) |b_k>`` with ``p`` descending."""

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients > 1e-12))


def schmidt(psi, dims: tuple[int, int]) -> SchmidtDecomposition:
    """Schmidt decomposition; amplitudes are indexed as ``a * Nb + b``.

    Returns squared Schmidt coefficients ``p`` (summing to one) with basis columns.
    """
    psi = as_pure(psi)
    na, nb = dims
    if na * nb != psi.dim:
        raise DimensionError(f"dims {dims} do not match state length {psi.dim}")
    u, s, vh = np.linalg.svd(psi.amplitudes.reshape(na, nb))
    k = min(na, nb)
    p = s[:k] ** 2
    return SchmidtDecomposition(coefficients=p, basis_a=u[:, :k], basis_b=vh[:k].T)


@dataclass(frozen=True, eq=False)
class AlgebraState:
    """Functional induced on an algebra, stored as the projected operator ``mu``."""

    algebra: object
    mu: np.ndarray

    def __post_init__(self):
        mu = as_square(self.mu)
        if self.algebra.residual(mu) > 1e-9 * max(1.0, np.linalg.norm(mu)):
            raise InvalidStateError("mu does not lie in the algebra")
        if hermitian_defect(mu) > STATE_TOL:
            raise InvalidStateError("mu is not Hermitian")
        if abs(np.real(np.trace(mu)) - 1) > STATE_TOL:
            raise InvalidStateError("mu does not have unit trace")

    def __call__(self, op) -> complex:
        """Value ``tr(mu^dagger op)`` of the functional on ``op``."""
        return complex(np.vdot(self.mu, np.asarray(op, dtype=complex)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mu, self.mu)))


def restrict(rho, alg) -> AlgebraState:
    """Restriction of ``rho`` to ``alg`` as an AlgebraState with ``mu = P_alg(rho)``."""
    from .algebra import project

    m = as_density(rho).matrix
    if m.shape[0] != alg.hilbert_dim:
        raise DimensionError(f"state of dimension {m.shape[0]} vs algebra on {alg.hilbert_dim}")
    return AlgebraState(algebra=alg, mu=hermitian_part(project(alg, m)))


def random_pure(dim: int, seed=None) -> PureState:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(v / np.linalg.norm(v))


def random_density(dim: int, rank: int | None = None, seed=None) -> DensityMatrix:
    """Random state ``G G^dagger / tr`` with ``G`` a complex Gaussian ``dim x rank`` matrix."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = hermitian_part(m / np.real(np.trace(m)))
    return DensityMatrix(m)


def basis_state(dim: int, index: int) -> PureState:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return PureState(v)


def bell_state() -> PureState:
    return PureState(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))


def product_state(*factors) -> PureState:
    v = np.ones(1, dtype=complex)
    for f in factors:
        v = np.kron(v, f.amplitudes if isinstance(f, PureState) else PureState.normalized(f).amplitudes)
    return PureState.normalized(v)


def mixture(weights, states) -> DensityMatrix:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise ValueError("weights must form a probability vector")
    m = sum(wk * as_density(s).matrix for wk, s in zip(w, states))
    return DensityMatrix(hermitian_part(m))


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(as_density(rho).matrix)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))
