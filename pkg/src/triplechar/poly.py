"""Monic real polynomials: roots, hyperbolicity, discriminants, Nuij smoothing
and companion matrices.

A polynomial of degree m is stored by its non-leading coefficients in
descending order, ``coeffs = (a1, ..., am)`` for ``z^m + a1 z^(m-1) + ... + am``.
Coefficients may be floats, ints or :class:`fractions.Fraction`; the
smoothing and discriminant routines preserve exact types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from ._exact import as_fraction, bareiss_det, integer_scaled
from .errors import NonConvergence, NotHyperbolic

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MonicPolynomial:
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if len(coeffs) < 1:
            raise ValueError("a monic polynomial needs degree >= 1")
        for c in coeffs:
            if not isinstance(c, Real) or not math.isfinite(float(c)):
                raise ValueError(f"coefficient {c!r} is not a finite real")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_roots(cls, roots) -> "MonicPolynomial":
        full = [1]
        for r in roots:
            nxt = full + [0]
            for i in range(1, len(nxt)):
                nxt[i] = nxt[i] - r * full[i - 1]
            full = nxt
        return cls(tuple(full[1:]))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def full(self) -> tuple:
        """Coefficients including the leading 1, highest degree first."""
        return (1,) + self.coeffs

    def __call__(self, z):
        acc = 1
        for c in self.coeffs:
            acc = acc * z + c
        return acc

    def derivative(self, order: int = 1) -> list:
        """Coefficients (highest first, not monic) of the order-th derivative."""
        c = list(self.full)
        for _ in range(order):
            n = len(c) - 1
            c = [c[i] * (n - i) for i in range(n)]
        return c

    def exact(self) -> "MonicPolynomial":
        return MonicPolynomial(tuple(as_fraction(c) for c in self.coeffs))

    def __str__(self):
        m = self.degree
        terms = [f"z^{m}" if m > 1 else "z"]
        for i, c in enumerate(self.coeffs, start=1):
            if c == 0:
                continue
            power = m - i
            mag = abs(c)
            sign = "-" if c < 0 else "+"
            body = f"{float(mag):g}" if power == 0 or mag != 1 else ""
            if power > 0:
                var = "z" if power == 1 else f"z^{power}"
                body = f"{body}*{var}" if body else var
            terms.append(f"{sign} {body}")
        return " ".join(terms)


@dataclass(frozen=True)
class RootSet:
    roots: tuple
    residual: float

    def __len__(self):
        return len(self.roots)

    @property
    def real(self) -> np.ndarray:
        return np.array([z.real for z in self.roots])

    @property
    def max_imag(self) -> float:
        return max((abs(z.imag) for z in self.roots), default=0.0)


@dataclass(frozen=True)
class CompanionPair:
    A_p: np.ndarray
    A_tilde: np.ndarray
    J_flip: np.ndarray


def _eval_with_bound(full, z):
    """Horner value and the rounding scale sum |c_i||z|^i."""
    v = 0j
    s = 0.0
    az = abs(z)
    for c in full:
        v = v * z + c
        s = s * az + abs(c)
    return v, s


def _sort_key(z):
    return (z.real, z.imag)


def _quadratic(a1, a2):
    disc = a1 * a1 - 4.0 * a2
    scale = a1 * a1 + 4.0 * abs(a2)
    if abs(disc) <= 8.0 * _EPS * scale:
        r = (0.0 - a1) / 2.0
        return [complex(r), complex(r)]
    if disc > 0:
        r1 = -(a1 + math.copysign(math.sqrt(disc), a1)) / 2.0
        return [complex(r1), complex(a2 / r1)]
    re, im = -a1 / 2.0, math.sqrt(-disc) / 2.0
    return [complex(re, -im), complex(re, im)]


def _cubic(a1, a2, a3):
    shift = a1 / 3.0
    p = a2 - a1 * a1 / 3.0
    q = 2.0 * a1 ** 3 / 27.0 - a1 * a2 / 3.0 + a3
    ps = abs(a2) + a1 * a1 / 3.0
    qs = 2.0 * abs(a1) ** 3 / 27.0 + abs(a1 * a2) / 3.0 + abs(a3)
    k = 64.0 * _EPS
    if abs(p) <= k * ps and abs(q) <= k * qs:
        return [complex(0.0 - shift)] * 3
    D = -4.0 * p ** 3 - 27.0 * q * q
    Dtol = k * (12.0 * p * p * ps + 54.0 * abs(q) * qs)
    if abs(D) <= Dtol and p < 0:
        yd = -1.5 * q / p
        ys = 3.0 * q / p
        return [complex(yd - shift), complex(yd - shift), complex(ys - shift)]
    if D > 0:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 1.5 * q / p * math.sqrt(-3.0 / p)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        ys = [r * math.cos(theta - 2.0 * math.pi * j / 3.0) for j in range(3)]
        return [complex(y - shift) for y in ys]
    s = math.sqrt(max(-D / 108.0, 0.0))
    u = -math.copysign(np.cbrt(abs(q) / 2.0 + s), q)
    v = -p / (3.0 * u) if u != 0 else 0.0
    re = -(u + v) / 2.0 - shift
    im = math.sqrt(3.0) / 2.0 * abs(u - v)
    return [complex(u + v - shift), complex(re, -im), complex(re, im)]


def _polish(full, z, iterations=4):
    dfull = [c * (len(full) - 1 - i) for i, c in enumerate(full[:-1])]
    v, _ = _eval_with_bound(full, z)
    for _ in range(iterations):
        d, _ = _eval_with_bound(dfull, z)
        if d == 0:
            break
        cand = z - v / d
        vc, _ = _eval_with_bound(full, cand)
        if abs(vc) >= abs(v):
            break
        z, v = cand, vc
    return z


def _derivative_full(full, order):
    c = list(full)
    for _ in range(order):
        n = len(c) - 1
        c = [c[i] * (n - i) for i in range(n)]
    return c


def _refine_cluster(full, group, tol):
    """Try to replace a cluster of k eigenvalues by a k-fold real root."""
    k = len(group)
    mu = sum(group) / k
    r = mu.real
    dk1 = _derivative_full(full, k - 1)
    dk = _derivative_full(full, k)
    for _ in range(60):
        v, _ = _eval_with_bound(dk1, r)
        d, _ = _eval_with_bound(dk, r)
        if d == 0:
            break
        step = (v / d).real
        r -= step
        if abs(step) <= 4 * _EPS * max(1.0, abs(r)):
            break
    # a k-fold root perturbed by rounding spreads by about (eps s / |p^(k)/k!|)^(1/k);
    # wider clusters are distinct roots that merely sit close together
    ck = abs(_eval_with_bound(dk, r)[0]) / math.factorial(k)
    s0 = _eval_with_bound(full, r)[1]
    spread = max(abs(a - b) for a in group for b in group)
    if ck > 0 and spread > 10.0 * (1e2 * _EPS * s0 / ck) ** (1.0 / k):
        return None
    for j in range(k):
        v, s = _eval_with_bound(_derivative_full(full, j), r)
        if abs(v) > tol * max(s, 1.0) and abs(v) > 1e3 * _EPS * s:
            return None
    return [complex(r)] * k


def _split_and_refine(full, group, tol):
    if len(group) == 1:
        return group
    if max(abs(z.imag) for z in group) > 1e-3 * max(1.0, max(abs(z) for z in group)):
        return group
    refined = _refine_cluster(full, group, tol)
    if refined is not None:
        return refined
    if len(group) == 2:
        return group
    gaps = [abs(group[i + 1] - group[i]) for i in range(len(group) - 1)]
    cut = int(np.argmax(gaps)) + 1
    return _split_and_refine(full, group[:cut], tol) + _split_and_refine(full, group[cut:], tol)


def _companion_roots(full, tol):
    m = len(full) - 1
    A = np.zeros((m, m))
    A[0, :] = -np.asarray(full[1:], dtype=float)
    A[1:, :-1] = np.eye(m - 1)
    eig = sorted(np.linalg.eigvals(A), key=_sort_key)
    polished = [_polish(full, complex(z)) for z in eig]
    polished = sorted(polished, key=_sort_key)
    # single-linkage clusters, radius wide enough for an m-fold root's spread
    scale = max(1.0, max(abs(z) for z in polished))
    radius = 8.0 * _EPS ** (1.0 / m) * scale
    groups, cur = [], [polished[0]]
    for z in polished[1:]:
        if abs(z - cur[-1]) <= radius:
            cur.append(z)
        else:
            groups.append(cur)
            cur = [z]
    groups.append(cur)
    out = []
    for g in groups:
        out.extend(_split_and_refine(full, g, tol))
    return out


def roots(p: MonicPolynomial, tol: float = 1e-9) -> RootSet:
    """All m complex roots, sorted by real then imaginary part."""
    full = [float(c) for c in p.full]
    m = p.degree
    if m == 1:
        zs = [complex(-full[1])]
    elif m == 2:
        zs = _quadratic(full[1], full[2])
    elif m == 3:
        zs = _cubic(full[1], full[2], full[3])
    else:
        zs = _companion_roots(full, tol)
    if m in (2, 3):
        zs = [z if abs(z.imag) > 0 or zs.count(z) > 1 else _polish(full, z) for z in zs]
    zs = sorted(zs, key=_sort_key)
    coef_scale = max(1.0, max(abs(c) for c in full[1:]))
    resid = max(abs(_eval_with_bound(full, z)[0]) for z in zs) / coef_scale
    # relative to the natural evaluation scale at each root
    rel = max(
        abs(v) / max(s, 1.0)
        for v, s in (_eval_with_bound(full, z) for z in zs)
    )
    if not math.isfinite(resid) or rel > tol:
        raise NonConvergence(f"root residual {rel:.3g} exceeds tolerance {tol:.3g}")
    return RootSet(tuple(zs), float(min(resid, rel)))


def is_hyperbolic(p: MonicPolynomial, tol: float = 1e-9) -> tuple[bool, float]:
    rs = roots(p, tol)
    max_im = rs.max_imag
    bound = tol * (1.0 + max(abs(z.real) for z in rs.roots))
    return max_im <= bound, max_im


def difference_product(rs: RootSet, tol: float = 1e-9) -> float:
    """Product of (l_i - l_j) over i < j in the sorted root order."""
    lam = rs.real
    if rs.max_imag > tol * (1.0 + float(np.max(np.abs(lam)))):
        raise NotHyperbolic(f"roots have imaginary parts up to {rs.max_imag:.3g}")
    out = 1.0
    for i in range(len(lam)):
        for j in range(i + 1, len(lam)):
            out *= lam[i] - lam[j]
    return out


def min_root_gap(rs: RootSet) -> float:
    zs = rs.roots
    if len(zs) < 2:
        return math.inf
    return min(abs(zs[i] - zs[j]) for i in range(len(zs)) for j in range(i + 1, len(zs)))


def _sylvester(f, g):
    n, m = len(f) - 1, len(g) - 1
    size = n + m
    rows = []
    for i in range(m):
        rows.append([0] * i + list(f) + [0] * (size - n - 1 - i))
    for i in range(n):
        rows.append([0] * i + list(g) + [0] * (size - m - 1 - i))
    return rows


def discriminant(p: MonicPolynomial, exact: bool = False):
    """Discriminant, equal to the squared difference-product of the roots.

    Degrees up to 3 use closed forms in the coefficient type; higher degrees
    evaluate the resultant of p and p' in exact rational arithmetic, so the
    value is the correctly rounded discriminant of the stored coefficients.
    """
    m = p.degree
    c = p.exact().coeffs if exact else p.coeffs
    if m == 1:
        return Fraction(1) if exact else 1.0
    if m == 2:
        a1, a2 = c
        return a1 * a1 - 4 * a2
    if m == 3:
        a1, a2, a3 = c
        return 18 * a1 * a2 * a3 - 4 * a1 ** 3 * a3 + a1 * a1 * a2 * a2 - 4 * a2 ** 3 - 27 * a3 * a3
    ints, D = integer_scaled(p.full)
    dints = [v * (m - i) for i, v in enumerate(ints[:-1])]
    # Res(Dp, Dp') = D^(2m-1) Res(p, p')
    res = Fraction(bareiss_det(_sylvester(ints, dints)), D ** (2 * m - 1))
    val = res if (m * (m - 1) // 2) % 2 == 0 else -res
    return val if exact else float(val)


def _poly_rem(num, den):
    num = list(num)
    while len(num) >= len(den):
        factor = num[0] / den[0]
        for i in range(len(den)):
            num[i] -= factor * den[i]
        num.pop(0)
    while num and num[0] == 0:
        num.pop(0)
    return num


def _sign_changes(values):
    signs = [v for v in values if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def distinct_real_root_count(p: MonicPolynomial) -> int:
    """Number of distinct real roots, by an exact Sturm sequence."""
    fx = p.exact()
    seq = [[Fraction(v) for v in fx.full], [Fraction(v) for v in fx.derivative()]]
    while len(seq[-1]) > 1:
        r = _poly_rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-v for v in r])
    lead = [s[0] for s in seq]
    at_minus = [v * (-1) ** (len(s) - 1) for v, s in zip(lead, seq)]
    return _sign_changes(at_minus) - _sign_changes(lead)


def nuij_smooth(p: MonicPolynomial, eps) -> MonicPolynomial:
    """Expand (1 + eps d/dz)^(m-1) p."""
    c = list(p.full)
    m = p.degree
    for _ in range(m - 1):
        d = [c[i] * (m - i) for i in range(m)]
        c = [c[0]] + [c[i] + eps * d[i - 1] for i in range(1, m + 1)]
    return MonicPolynomial(tuple(c[1:]))


def flip(m: int) -> np.ndarray:
    return np.fliplr(np.eye(m))


def companion(p: MonicPolynomial) -> CompanionPair:
    m = p.degree
    a = np.asarray([float(c) for c in p.coeffs])
    A = np.zeros((m, m))
    A[:-1, 1:] = np.eye(m - 1)
    A[-1, :] = -a[::-1]
    At = np.zeros((m, m))
    At[0, :] = -a
    At[1:, :-1] = np.eye(m - 1)
    return CompanionPair(A, At, flip(m))
