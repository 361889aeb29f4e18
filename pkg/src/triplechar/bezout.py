"""Bezout-form symmetrizer of a monic polynomial and its certificates."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._exact import bareiss_det, integer_scaled
from .errors import DimensionMismatch, NotHyperbolic, RootsNotSeparated
from .poly import MonicPolynomial, companion, discriminant, flip, is_hyperbolic, min_root_gap, roots


@dataclass(frozen=True)
class BezoutSymmetrizer:
    H: np.ndarray
    delta_sq: float
    source: MonicPolynomial

    @property
    def degree(self) -> int:
        return self.source.degree

    def det(self, exact: bool = False):
        """det H evaluated in rational arithmetic from the coefficients."""
        ints, D = integer_scaled(self.source.full)
        m = self.degree
        # the form is bilinear in (p, p'), so scaling p by D scales H by D^2
        val = Fraction(bareiss_det(_bezout_rows(ints)), D ** (2 * m))
        return val if exact else float(val)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.H)[0])


@dataclass(frozen=True)
class CFactor:
    C: np.ndarray
    sigma_table: np.ndarray  # [l, k] = elementary symmetric sum of degree l of the roots without root k
    roots: tuple


def bezout_form(p: MonicPolynomial) -> list[list]:
    """Coefficient matrix of (p(z)q(w) - p(w)q(z))/(z - w) with q = p'.

    Entry [i][j] multiplies z^i w^j. Arithmetic follows the coefficient type,
    so Fraction input yields an exact matrix.
    """
    return _bezout_rows(list(p.full))


def _bezout_rows(full):
    m = len(full) - 1
    c = full[::-1]  # ascending
    q = [k * c[k] for k in range(1, m + 1)] + [0]
    zero = c[0] * 0
    H = [[zero] * m for _ in range(m)]
    for k in range(m + 1):
        for l in range(k):
            B = c[k] * q[l] - c[l] * q[k]
            if B == 0:
                continue
            # the quotient of z^k w^l - z^l w^k spreads along an anti-diagonal
            for s in range(k - l):
                H[l + s][k - 1 - s] += B
    return H


def bezout_matrix(p: MonicPolynomial) -> BezoutSymmetrizer:
    H = np.array([[float(v) for v in row] for row in bezout_form(p)])
    H = (H + H.T) / 2.0  # pins symmetry regardless of summation order
    return BezoutSymmetrizer(H, float(discriminant(p)), p)


def _sigma_table(lam: np.ndarray) -> np.ndarray:
    m = len(lam)
    table = np.zeros((m, m))
    for k in range(m):
        others = np.delete(lam, k)
        poly = np.poly(others) if m > 1 else np.array([1.0])
        table[:, k] = poly * (-1.0) ** np.arange(m)
    return table


def c_factor(p: MonicPolynomial, tol: float = 1e-9) -> CFactor:
    """Factor C with H = C^T C, c_ij = (-1)^(i+j) sigma_{m-j, i}."""
    ok, _ = is_hyperbolic(p, tol)
    if not ok:
        raise NotHyperbolic(f"{p} has non-real roots")
    rs = roots(p, tol)
    gap = min_root_gap(rs)
    if gap <= tol:
        raise RootsNotSeparated(f"minimum root gap {gap:.3g} <= {tol:.3g}")
    lam = rs.real
    m = len(lam)
    sig = _sigma_table(lam)
    i = np.arange(m)[:, None]
    j = np.arange(m)[None, :]
    sign = (-1.0) ** (i + j)
    C = sign * sig[m - 1 - j, i]
    return CFactor(C, sig, rs.roots)


def symmetrizer_residual(H, A) -> float:
    H = np.asarray(H)
    A = np.asarray(A)
    if H.ndim != 2 or H.shape != A.shape or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"shapes {H.shape} and {A.shape} do not match")
    HA = H @ A
    num = np.max(np.abs(HA - HA.T)) if HA.size else 0.0
    den = max(1.0, np.max(np.abs(H)) * np.max(np.abs(A))) if HA.size else 1.0
    return float(num / den)


def flipped_symmetrizer(bs: BezoutSymmetrizer) -> np.ndarray:
    J = flip(bs.degree)
    return J @ bs.H @ J.T


def check_symmetrizer(p: MonicPolynomial) -> dict:
    """Residuals tying H to A_p, the flipped pair and the discriminant."""
    bs = bezout_matrix(p)
    cp = companion(p)
    det_h = bs.det(exact=True)
    disc = discriminant(p, exact=True)
    norm = float(np.max(np.abs(bs.H)))
    return {
        "H": bs.H.tolist(),
        "det_H": float(det_h),
        "delta_sq": float(disc),
        "det_minus_delta_sq": float(det_h - disc),
        "residual_A_p": symmetrizer_residual(bs.H, cp.A_p),
        "residual_A_tilde": symmetrizer_residual(flipped_symmetrizer(bs), cp.A_tilde),
        "min_eigenvalue": bs.min_eigenvalue(),
        "psd": bs.min_eigenvalue() >= -1e-9 * max(norm, 1e-300),
    }

