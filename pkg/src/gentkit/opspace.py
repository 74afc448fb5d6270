"""Dense complex matrix utilities: Hilbert-Schmidt geometry, tensor structure, spectra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_RTOL = 1e-9
GAP_TOL = 1e-8

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """Raised when an operation needs a Hermitian matrix and gets something else."""


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tr(a^dagger b)``."""
    a = as_square(a)
    b = as_square(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def hermitian_defect(h: np.ndarray) -> float:
    """Relative size of the anti-Hermitian part."""
    scale = max(np.linalg.norm(h), 1.0)
    return float(np.linalg.norm(h - dagger(h)) / scale)


def is_hermitian(h, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_defect(as_square(h)) <= rtol


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def _require_hermitian(h) -> np.ndarray:
    h = as_square(h)
    if hermitian_defect(h) > HERMITIAN_RTOL:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return hermitian_part(h)


def orthonormalize(basis: Sequence, tol: float = 1e-10) -> list[np.ndarray]:
    """Modified Gram-Schmidt under the HS inner product, with one reorthogonalization pass.

    Elements whose residual norm falls below ``tol`` after projection are dropped, so the
    output spans the same space as the input.  Deterministic in the input order.
    """
    if len(basis) == 0:
        raise ValueError("orthonormalize needs at least one element")
    if tol <= 0:
        raise ValueError("tol must be positive")
    mats = [as_matrix(b) for b in basis]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise DimensionError("all elements must share one shape")
    kept = orthonormalize_vectors(np.array([m.ravel() for m in mats]), tol)
    return [v.reshape(shape) for v in kept]


def orthonormalize_vectors(vectors: np.ndarray, tol: float = 1e-10, start=None) -> np.ndarray:
    """Row-wise Gram-Schmidt on flattened vectors.

    If ``start`` (rows already orthonormal) is given, new rows are orthogonalized against it
    and only the new orthonormal rows are returned.
    """
    vectors = np.asarray(vectors, dtype=complex)
    width = vectors.shape[1]
    q = np.zeros((0, width), dtype=complex) if start is None else np.asarray(start, dtype=complex)
    new = []
    for v in vectors:
        scale = np.linalg.norm(v)
        if scale == 0:
            continue
        w = v.copy()
        for _ in range(2):
            if len(q):
                w = w - q.T @ (q.conj() @ w)
            if new:
                qn = np.array(new)
                w = w - qn.T @ (qn.conj() @ w)
        r = np.linalg.norm(w)
        if r < tol or r < tol * scale:
            continue
        new.append(w / r)
    if not new:
        return np.zeros((0, width), dtype=complex)
    return np.array(new)


def span_residual(x: np.ndarray, orthonormal: np.ndarray) -> float:
    """Norm of the component of ``x`` outside the span of orthonormal flattened rows."""
    v = np.asarray(x, dtype=complex).ravel()
    if len(orthonormal) == 0:
        return float(np.linalg.norm(v))
    return float(np.linalg.norm(v - orthonormal.T @ (orthonormal.conj() @ v)))


def partial_trace(m, dims: tuple[int, int], side: str) -> np.ndarray:
    """Trace out subsystem ``side`` ('a' or 'b') of an operator on ``H_a (x) H_b``."""
    m = as_square(m)
    na, nb = dims
    if m.shape[0] != na * nb:
        raise DimensionError(f"operator of size {m.shape[0]} does not match dims {dims}")
    t = m.reshape(na, nb, na, nb)
    if side == "a":
        return np.einsum("ijik->jk", t)
    if side == "b":
        return np.einsum("ijkj->ik", t)
    raise ValueError("side must be 'a' or 'b'")


def partial_trace_multi(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce an operator on a multipartite space to the subsystems listed in ``keep``."""
    m = as_square(m)
    dims = list(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    keep = sorted(keep)
    traced = [i for i in range(n) if i not in keep]
    for offset, i in enumerate(traced):
        ax = i - offset
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d, d)


def eig_hermitian(h) -> HermitianSpectrum:
    h = _require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return HermitianSpectrum(eigenvalues=w, eigenvectors=v)


def ground_space(h, gap_tol: float = GAP_TOL) -> np.ndarray:
    """Orthonormal columns spanning the eigenvectors within ``gap_tol`` of the minimum.

    The tolerance is applied after scaling ``h`` to unit spectral norm.
    """
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    spec = eig_hermitian(h)
    w = spec.eigenvalues
    scale = max(np.max(np.abs(w)), 1e-300)
    mask = (w - w[0]) / scale <= gap_tol
    return spec.eigenvectors[:, mask]


def spectral_gap(h) -> float:
    """Distance between the ground eigenvalue and the next distinct eigenvalue (0 if none)."""
    spec = eig_hermitian(h)
    w = spec.eigenvalues
    scale = max(np.max(np.abs(w)), 1e-300)
    above = w[(w - w[0]) / scale > GAP_TOL]
    return float(above[0] - w[0]) if len(above) else 0.0


def group_eigenvalues(w: np.ndarray, gap_tol: float = GAP_TOL) -> list[np.ndarray]:
    """Split ascending eigenvalues into index groups separated by more than ``gap_tol`` (relative)."""
    scale = max(np.max(np.abs(w)), 1.0)
    groups, current = [], [0]
    for i in range(1, len(w)):
        if (w[i] - w[i - 1]) / scale > gap_tol:
            groups.append(np.array(current))
            current = []
        current.append(i)
    groups.append(np.array(current))
    return groups


def null_space(a: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning the numerical kernel of ``a``."""
    a = np.atleast_2d(a)
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=a.dtype)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    scale = s[0] if len(s) and s[0] > 0 else 1.0
    rank = int(np.sum(s > rtol * max(scale, 1.0)))
    return vh[rank:].conj().T


def gell_mann(n: int) -> list[np.ndarray]:
    """Traceless Hermitian basis of n x n matrices, HS-normalized to 1."""
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            out.append(s)
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = -1j / np.sqrt(2)
            a[k, j] = 1j / np.sqrt(2)
            out.append(a)
    for l in range(1, n):
        d = np.zeros((n, n), dtype=complex)
        d[np.arange(l), np.arange(l)] = 1
        d[l, l] = -l
        out.append(d / np.linalg.norm(d))
    return out


def hermitian_operator_basis(n: int) -> list[np.ndarray]:
    """HS-orthonormal Hermitian basis of all n x n matrices, identity first."""
    return [np.eye(n, dtype=complex) / np.sqrt(n)] + gell_mann(n)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
