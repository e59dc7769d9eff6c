"""Brute-force dense matrices used to cross-check the fast paths.

Nothing here calls into the selector or the state engine: operators are built
from explicit Kronecker products over 2x2 blocks and compared against the
production code in tests, the acceptance checks and ``qselector demo``.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def kron_operator(n: int, ops: Mapping[int, np.ndarray]) -> np.ndarray:
    """``O_1 x ... x O_n`` with identity on qubits missing from ``ops``."""
    out = np.array([[1]], dtype=complex)
    for q in range(1, n + 1):
        out = np.kron(out, ops.get(q, _I))
    return out


def current_operator_matrix(n: int, i_c, i_c0: float, cumulative) -> np.ndarray:
    """The current operator as a ``2**n`` square matrix, term by term."""
    F = [float(f) for f in cumulative]
    ic = [float(x) for x in i_c]
    dim = 2**n
    op = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        op += np.sin(np.pi * F[j]) * ic[j] * kron_operator(n, {j + 1: _X})
    C = sum(np.sin(2 * np.pi * F[j]) * ic[j] ** 2 for j in range(n)) / (4 * i_c0)
    op -= C * np.eye(dim)
    for i in range(n):
        for j in range(i + 1, n):
            b = np.sin(np.pi * (F[i] + F[j])) * ic[i] * ic[j] / (2 * i_c0)
            op -= b * kron_operator(n, {i + 1: _X, j + 1: _X})
    return op


def pm_product_ket(signs: str) -> np.ndarray:
    v = np.array([1], dtype=complex)
    for c in signs:
        v = np.kron(v, _PLUS if c == "+" else _MINUS)
    return v


def projector_from_signs(signs) -> np.ndarray:
    """``sum_s |s><s|`` over the given sign strings (e.g. ``{"+-", "-+"}``)."""
    signs = list(signs)
    if not signs:
        raise ValueError("need at least one sign string to infer the size")
    dim = 2 ** len(signs[0])
    P = np.zeros((dim, dim), dtype=complex)
    for s in signs:
        v = pm_product_ket(s)
        P += np.outer(v, v.conj())
    return P


def odd_pm_projector(n: int, i: int, j: int) -> np.ndarray:
    """Projector onto odd parity of qubits ``i, j`` in the |+->, basis: (1 - X_i X_j)/2."""
    return (np.eye(2**n) - kron_operator(n, {i: _X, j: _X})) / 2


def odd_comp_projector(n: int, i: int, j: int) -> np.ndarray:
    return (np.eye(2**n) - kron_operator(n, {i: _Z, j: _Z})) / 2


def hadamard_on(n: int, qubits) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return kron_operator(n, {q: h for q in qubits})


def cnot_matrix(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    U = np.zeros((dim, dim))
    for b in range(dim):
        bits = [(b >> (n - q)) & 1 for q in range(1, n + 1)]
        if bits[control - 1]:
            bits[target - 1] ^= 1
        out = int("".join(map(str, bits)), 2)
        U[out, b] = 1
    return U


def overlap_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return min(1.0, float(abs(np.vdot(a / np.linalg.norm(a), b / np.linalg.norm(b))) ** 2))
