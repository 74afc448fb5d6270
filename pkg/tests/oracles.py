"""Independent reference implementations used only by the tests."""

import numpy as np

SY = np.array([[0, -1j], [1j, 0]])


def concurrence(rho):
    """Two-qubit concurrence from the spin-flipped state."""
    flip = np.kron(SY, SY)
    rt = flip @ rho.conj() @ flip
    ev = np.sqrt(np.clip(np.sort(np.real(np.linalg.eigvals(rho @ rt)))[::-1], 0, None))
    return max(0.0, ev[0] - ev[1] - ev[2] - ev[3])


def binary_entropy(x):
    if x <= 0 or x >= 1:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def entanglement_of_formation(rho):
    c = concurrence(rho)
    return binary_entropy((1 + np.sqrt(1 - c * c)) / 2)


def schmidt_probs(psi, na, nb):
    s = np.linalg.svd(np.asarray(psi).reshape(na, nb), compute_uv=False)
    return s ** 2


def shannon_bits(p):
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log2(p)))


def pauli_expectations(psi):
    """h_l purity of a two-qubit pure state from single-site Pauli expectations."""
    paulis = [np.array([[0, 1], [1, 0]]), SY, np.diag([1, -1])]
    eye = np.eye(2)
    rho = np.outer(psi, np.conj(psi))
    total = 0.25
    for p in paulis:
        for op in (np.kron(p, eye), np.kron(eye, p)):
            total += np.real(np.trace(rho @ op)) ** 2 / 4
    return total


def ppt(rho, tol=1e-10):
    t = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    return np.linalg.eigvalsh(t)[0] >= -tol
