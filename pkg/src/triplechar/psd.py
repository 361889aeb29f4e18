"""Positive semidefiniteness tests and a geometric bisection helper."""
from __future__ import annotations

from itertools import combinations

import numpy as np


def principal_minors(M: np.ndarray) -> dict[tuple, float]:
    """All principal minors, keyed by the retained index set."""
    M = np.asarray(M)
    n = M.shape[0]
    out = {}
    for k in range(1, n + 1):
        for idx in combinations(range(n), k):
            out[idx] = float(np.real(np.linalg.det(M[np.ix_(idx, idx)])))
    return out


def psd_margins(stack: np.ndarray, slack: float = 1e-12) -> np.ndarray:
    """Signed margins for an (n, k, k) stack of Hermitian matrices.

    A margin is nonnegative iff the matrix passes both tests: every order-j
    principal minor >= -slack * scale^j and the smallest eigenvalue
    >= -slack * scale, with scale the largest entry modulus. Margins are in
    eigenvalue units.
    """
    stack = np.asarray(stack)
    n, k, _ = stack.shape
    if n == 0:
        return np.zeros(0)
    scale = np.max(np.abs(stack), axis=(1, 2))
    safe = np.where(scale > 0, scale, 1.0)
    margin = np.linalg.eigvalsh(stack)[:, 0] + slack * scale
    for j in range(1, k + 1):
        for idx in combinations(range(k), j):
            sub = stack[:, idx, :][:, :, idx]
            minor = np.real(np.linalg.det(sub))
            bad = minor < -slack * safe ** j
            margin = np.where(bad, np.minimum(margin, minor / safe ** (j - 1)), margin)
    return np.where(scale > 0, margin, 0.0)


def psd_margin(M: np.ndarray, slack: float = 1e-12) -> float:
    return float(psd_margins(np.asarray(M)[None], slack)[0])


def is_psd(M: np.ndarray, slack: float = 1e-12) -> bool:
    return psd_margin(M, slack) >= 0.0


def min_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each Hermitian matrix in an (n, k, k) stack."""
    return np.linalg.eigvalsh(stack)[..., 0]


def largest_feasible(pred, lo: float = 1e-12, hi: float = 1.0, iterations: int = 60) -> float:
    """Largest value in [lo, hi] accepted by a monotone predicate.

    Bisects geometrically; returns hi when hi is feasible and 0.0 when even
    lo is rejected.
    """
    if pred(hi):
        return hi
    if not pred(lo):
        return 0.0
    a, b = lo, hi
    for _ in range(iterations):
        mid = np.sqrt(a * b)
        if pred(mid):
            a = mid
        else:
            b = mid
    return float(a)
