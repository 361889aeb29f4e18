"""Cubic symbols with a triple characteristic.

The reduced principal symbol is

    (tau - phi<xi>)^3 + a<xi>(tau - phi<xi>)^2 - b<xi>^2(tau - phi<xi>) + c<xi>^3

with order-zero coefficients a, b, c, phi of (t, x, xi). This module holds
the explicit 3x3 symmetrizer S, its determinant, the positivity lemmas that
underpin the energy method, the discriminant conditions (E)/(H), the
structural conditions on (a, b, c), characteristic classification, and the
cutoff extension of locally defined symbols.

Symbol callables take ``(t, x, xi)`` with ``t`` a float or 1-D array and
``x``, ``xi`` 1-D arrays; they return values broadcastable to ``t``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import CutoffOverlapInvalid, EmptyFilteredSet
from .expr import Expression, bracket
from .psd import largest_feasible, psd_margins
from .report import ConditionReport, point_dict

EPS_BAR = 1.0 / 50.0
BISECT_LO, BISECT_HI, BISECT_ITERS = 1e-12, 1.0, 60
# finite-difference steps in (x, xi) by derivative order, relative to 1 + |z_i|
FD_STEPS = {1: 1e-5, 2: 1e-4, 3: 1e-3}
T_STEP = 1e-6


def _zero(t, x, xi):
    return np.zeros_like(np.asarray(t, dtype=float))


def _broadcast(v, t):
    return np.broadcast_to(np.asarray(v, dtype=float), np.shape(t)).astype(float)


@dataclass(frozen=True)
class CubicSymbol:
    a: Callable
    b: Callable
    c: Callable
    phi: Callable = _zero
    da_dt: Callable | None = None
    db_dt: Callable | None = None
    dc_dt: Callable | None = None
    dimension: int = 1
    name: str = ""

    @classmethod
    def constant(cls, a=0.0, b=0.0, c=0.0, phi=0.0, dimension=1, name=""):
        def const(v):
            return lambda t, x, xi: _broadcast(v, t)
        zero = const(0.0)
        return cls(const(a), const(b), const(c), const(phi), zero, zero, zero, dimension, name)

    @classmethod
    def from_expressions(cls, a, b, c, phi="0", dimension=1, da_dt=None, db_dt=None,
                         dc_dt=None, name=""):
        comp = lambda s: None if s is None else Expression(s, dimension)  # noqa: E731
        return cls(comp(a), comp(b), comp(c), comp(phi), comp(da_dt), comp(db_dt),
                   comp(dc_dt), dimension, name)

    def evaluate(self, t, x, xi):
        """(a, b, c, phi) broadcast to the shape of t."""
        with np.errstate(all="ignore"):
            return tuple(_broadcast(f(t, x, xi), t) for f in (self.a, self.b, self.c, self.phi))

    @property
    def derivative_method(self) -> str:
        if all(d is not None for d in (self.da_dt, self.db_dt, self.dc_dt)):
            return "analytic"
        return "finite-difference"

    def t_derivatives(self, t, x, xi):
        out = []
        for f, d in ((self.a, self.da_dt), (self.b, self.db_dt), (self.c, self.dc_dt)):
            if d is not None:
                with np.errstate(all="ignore"):
                    out.append(_broadcast(d(t, x, xi), t))
            else:
                out.append(t_derivative(f, t, x, xi))
        return tuple(out)

    def x_independent(self, t, xi, x_samples) -> bool:
        base = self.evaluate(t, x_samples[0], xi)
        for x in x_samples[1:]:
            other = self.evaluate(t, x, xi)
            for u, v in zip(base, other):
                if not np.allclose(u, v, rtol=1e-14, atol=1e-14):
                    return False
        return True


def t_derivative(f, t, x, xi):
    """Central difference in t, switching to a one-sided stencil near t = 0."""
    t = np.asarray(t, dtype=float)
    h = T_STEP * np.maximum(1.0, np.abs(t))
    with np.errstate(all="ignore"):
        f0 = _broadcast(f(t, x, xi), t)
        fp = _broadcast(f(t + h, x, xi), t)
        fm = _broadcast(f(t - h, x, xi), t)
        fpp = _broadcast(f(t + 2 * h, x, xi), t)
    central = (fp - fm) / (2 * h)
    forward = (-3 * f0 + 4 * fp - fpp) / (2 * h)
    return np.where(t - h < 0, forward, central)


@dataclass(frozen=True)
class QForm:
    q1: Callable
    q2: Callable
    q3: Callable


def from_q_form(q: QForm, phi: Callable) -> CubicSymbol:
    """Reduce tau^3 + q1 tau^2 + q2 tau + q3 around tau = phi<xi>."""

    def parts(t, x, xi):
        br = bracket(xi)
        return (_broadcast(q.q1(t, x, xi), t) / br, _broadcast(q.q2(t, x, xi), t) / br ** 2,
                _broadcast(q.q3(t, x, xi), t) / br ** 3, _broadcast(phi(t, x, xi), t))

    def a(t, x, xi):
        r1, _, _, f = parts(t, x, xi)
        return r1 + 3 * f

    def b(t, x, xi):
        r1, r2, _, f = parts(t, x, xi)
        return -(r2 + 2 * f * r1 + 3 * f * f)

    def c(t, x, xi):
        r1, r2, r3, f = parts(t, x, xi)
        return r3 + f * r2 + f * f * r1 + f ** 3

    dim = getattr(q.q1, "dimension", 1)
    return CubicSymbol(a, b, c, phi, dimension=dim)


def to_q_form(a, b, c, phi, br):
    """Coefficients (q1, q2, q3) of the expanded cubic in tau."""
    q1 = br * (a - 3 * phi)
    q2 = br ** 2 * (3 * phi ** 2 - 2 * a * phi - b)
    q3 = br ** 3 * (c - phi ** 3 + a * phi ** 2 + b * phi)
    return q1, q2, q3


def A_matrix(a, b, c):
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = -a
    out[..., 0, 1] = b
    out[..., 0, 2] = -c
    out[..., 1, 0] = 1.0
    out[..., 2, 1] = 1.0
    return out


def S_matrix(a, b, c):
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    s12 = 2 * a
    s23 = -a * b - 3 * c
    rows = [
        [np.full(a.shape, 3.0), s12, -b],
        [s12, 2 * (a * a + b), s23],
        [-b, s23, b * b - 2 * a * c],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2) / 3.0


def SA_matrix(a, b, c):
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    rows = [
        [-a, 2 * b, -3 * c],
        [2 * b, a * b - 3 * c, -2 * a * c],
        [-3 * c, -2 * a * c, b * c],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2) / 3.0


def dS_matrix(a, b, c, da, db, dc):
    """Derivative of S along a path with coefficient derivatives (da, db, dc)."""
    a, b, c, da, db, dc = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (a, b, c, da, db, dc)))
    s23 = -da * b - a * db - 3 * dc
    rows = [
        [np.zeros(a.shape), 2 * da, -db],
        [2 * da, 4 * a * da + 2 * db, s23],
        [-db, s23, 2 * b * db - 2 * da * c - 2 * a * dc],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2) / 3.0


def _two_sum(x, y):
    s = x + y
    v = s - x
    return s, (x - (s - v)) + (y - v)


def _two_prod(x, y):
    p = x * y
    xs, ys = 134217729.0 * x, 134217729.0 * y  # Dekker split, 2^27 + 1
    xh, yh = xs - (xs - x), ys - (ys - y)
    xl, yl = x - xh, y - yh
    return p, ((xh * yh - p) + xh * yl + xl * yh) + xl * yl


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    return _two_sum(p, e + (x[0] * y[1] + x[1] * y[0]))


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    return _two_sum(s, e + (x[1] + y[1]))


def cubic_delta(a, b, c):
    """27 det S = b^2 (a^2 + 4b) - c (4a^3 + 18ab + 27c), in double-double.

    The terms cancel near triple points, so plain float evaluation loses
    relative accuracy exactly where the sign matters."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    zero = np.zeros(np.broadcast(a, b, c).shape)
    A, B, C = (a + zero, zero), (b + zero, zero), (c + zero, zero)
    aa = _dd_mul(A, A)
    left = _dd_mul(_dd_mul(B, B), _dd_add(aa, (4 * B[0], zero)))
    k18, k27 = _dd_mul((18.0 + zero, zero), A), _dd_mul((27.0 + zero, zero), C)
    right = _dd_add(_dd_add(_dd_mul((4 * A[0], zero), aa), _dd_mul(k18, B)), k27)
    right = _dd_mul(C, right)
    out = (left[0] - right[0]) + (left[1] - right[1])
    return out if out.ndim else float(out)


def det_S(a, b, c):
    return cubic_delta(a, b, c) / 27.0


def cubic_discriminant(p, q, r):
    """Discriminant of tau^3 + p tau^2 + q tau + r."""
    return 18 * p * q * r - 4 * p ** 3 * r + p * p * q * q - 4 * q ** 3 - 27 * r * r


def lemma_floor(eps_bar: float = EPS_BAR) -> float:
    """Lower bound on det S / (b^2 (a^2 + b)) under the smallness conditions.

    Bounding |a^3 c| <= eps a^2 b^2, |abc| <= eps b^3 and c^2 <= eps^2 b^3 in
    27 det S = a^2 b^2 + 4 b^3 - 4a^3 c - 18abc - 27c^2 leaves
    min(1 - 4 eps, 4 - 18 eps - 27 eps^2) / 27.
    """
    e = eps_bar
    return min(1 - 4 * e, 4 - 18 * e - 27 * e * e) / 27.0


def stated_floor(eps_bar: float = EPS_BAR) -> float:
    """The sharper floor (1 - eps)/27, i.e. 0.98/27 at eps = 1/50.

    Random sampling of the admissible set finds ratios below it (down to
    about 0.92/27 as a^2/b grows), so reports record whether it is met
    rather than testing against it.
    """
    return (1 - eps_bar) / 27.0


# ---------------------------------------------------------------- grids


def axis(spec) -> np.ndarray:
    """Values from a list or from a {min, max, count, spacing} mapping."""
    if isinstance(spec, dict):
        lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["count"])
        if spec.get("spacing", "linear") == "log":
            if lo <= 0:
                raise ValueError("log spacing needs a positive lower end")
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)
    return np.asarray(list(np.atleast_1d(spec)), dtype=float)


@dataclass(frozen=True)
class SampleGrid:
    """Product sample of (t, x, xi). Points are ordered by x, then xi, then t."""

    t: np.ndarray
    x: tuple
    xi: tuple

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        xs = tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in self.x)
        xis = tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in self.xi)
        if t.size == 0 or not xs or not xis:
            raise ValueError("grid must be nonempty in t, x and xi")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) < 0):
            raise ValueError("t values must be finite and sorted ascending")
        dims = {v.size for v in xs} | {v.size for v in xis}
        if len(dims) != 1:
            raise ValueError("x and xi points must share one dimension")
        if not all(np.all(np.isfinite(v)) for v in xs + xis):
            raise ValueError("x and xi values must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "xi", xis)

    @classmethod
    def product(cls, t, x_axes, xi_axes) -> "SampleGrid":
        xs = [np.array(p) for p in itertools.product(*[axis(s) for s in x_axes])]
        xis = [np.array(p) for p in itertools.product(*[axis(s) for s in xi_axes])]
        return cls(axis(t), tuple(xs), tuple(xis))

    @property
    def dimension(self) -> int:
        return self.x[0].size

    def pairs(self):
        for x in self.x:
            for xi in self.xi:
                yield x, xi

    def __len__(self):
        return self.t.size * len(self.x) * len(self.xi)

    def point(self, flat_index: int) -> dict:
        nt = self.t.size
        pair, k = divmod(int(flat_index), nt)
        ix, ixi = divmod(pair, len(self.xi))
        return point_dict(self.t[k], self.x[ix], self.xi[ixi])


@dataclass
class _Samples:
    grid: SampleGrid
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    phi: np.ndarray
    br: np.ndarray
    da: np.ndarray | None = None
    db: np.ndarray | None = None
    dc: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _sample(grid: SampleGrid, sym: CubicSymbol, derivatives: bool = False) -> _Samples:
    cols = {k: [] for k in ("t", "a", "b", "c", "phi", "br", "da", "db", "dc")}
    for x, xi in grid.pairs():
        a, b, c, phi = sym.evaluate(grid.t, x, xi)
        for k, v in zip(("t", "a", "b", "c", "phi"), (grid.t, a, b, c, phi)):
            cols[k].append(v)
        cols["br"].append(np.full(grid.t.shape, bracket(xi)))
        if derivatives:
            da, db, dc = sym.t_derivatives(grid.t, x, xi)
            cols["da"].append(da)
            cols["db"].append(db)
            cols["dc"].append(dc)
    flat = {k: np.concatenate(v) if v else None for k, v in cols.items()}
    for k in ("a", "b", "c", "phi"):
        if not np.all(np.isfinite(flat[k])):
            bad = int(np.flatnonzero(~np.isfinite(flat[k]))[0])
            raise ValueError(f"symbol {k} is not finite at {grid.point(bad)}")
    return _Samples(grid, **flat)


def _smallness_mask(s: _Samples, eps_bar: float) -> np.ndarray:
    b = s.b
    with np.errstate(invalid="ignore"):
        return (b > 0) & (np.abs(s.a * s.c) <= eps_bar * b * b) & (
            np.abs(s.c) <= eps_bar * np.where(b > 0, b, 0.0) ** 1.5)


def _check_eps_bar(eps_bar):
    if not 0 < eps_bar <= 1 / 50:
        raise ValueError(f"eps_bar must lie in (0, 1/50], got {eps_bar}")


def _require(mask, what):
    if not np.any(mask):
        raise EmptyFilteredSet(f"no grid point satisfies {what}")
    return np.flatnonzero(mask)


def _worst(grid, idx, values):
    k = int(np.argmin(values))
    return grid.point(idx[k]), float(values[k])


# ---------------------------------------------------------------- lemmas


def check_lemma_setudo(grid: SampleGrid, sym: CubicSymbol, eps_bar: float = EPS_BAR,
                       floor: float | None = None) -> ConditionReport:
    """det S >= delta b^2 (a^2 + b) where |ac| <= eps b^2 and |c| <= eps b^(3/2).

    The margin is measured against ``floor`` (default :func:`lemma_floor`);
    the report also records whether the measured delta reaches
    :func:`stated_floor`.
    """
    _check_eps_bar(eps_bar)
    s = _sample(grid, sym)
    idx = _require(_smallness_mask(s, eps_bar), "|ac| <= eps b^2, |c| <= eps b^1.5, b > 0")
    a, b, c = s.a[idx], s.b[idx], s.c[idx]
    ref = b * b * (a * a + b)
    d = det_S(a, b, c)
    floor = lemma_floor(eps_bar) if floor is None else floor
    ratio = d / ref
    point, margin = _worst(grid, idx, d - floor * ref)
    delta = float(np.min(ratio))
    return ConditionReport(
        "det_S_lower_bound", margin,
        constants={"delta": delta, "delta_floor": floor, "delta_stated": stated_floor(eps_bar),
                   "stated_floor_met": bool(delta >= stated_floor(eps_bar)), "eps_bar": eps_bar},
        worst_point=point,
        details={"filtered_points": int(idx.size), "argmin_delta": grid.point(idx[np.argmin(ratio)])},
    )


def _bisect_stack(build, margins_at):
    def ok(e):
        return bool(np.all(margins_at(build(e)) >= 0))
    return largest_feasible(ok, BISECT_LO, BISECT_HI, BISECT_ITERS)


def check_positivity_tJ(grid: SampleGrid, sym: CubicSymbol, eps1: float,
                        eps_bar: float = EPS_BAR) -> ConditionReport:
    """3S - eps1 t diag(1, 1, b) >= 0 on the points meeting the smallness conditions."""
    s = _sample(grid, sym)
    idx = _require((s.t > 0) & _smallness_mask(s, eps_bar), "t > 0 and the smallness conditions")
    t, a, b, c = s.t[idx], s.a[idx], s.b[idx], s.c[idx]
    S3 = 3 * S_matrix(a, b, c)
    Jb = np.zeros_like(S3)
    Jb[:, 0, 0] = Jb[:, 1, 1] = 1.0
    Jb[:, 2, 2] = b

    def build(e):
        return S3 - e * t[:, None, None] * Jb

    m = psd_margins(build(eps1))
    point, margin = _worst(grid, idx, m)
    return ConditionReport(
        "S_dominates_tJ", margin,
        constants={"eps1": eps1, "eps1_max": _bisect_stack(build, psd_margins),
                   "delta1": float(np.min(b / t)), "eps_bar": eps_bar},
        worst_point=point,
        details={"filtered_points": int(idx.size)},
    )


def check_positivity_dtS(grid: SampleGrid, sym: CubicSymbol, eps: float,
                         eps_bar: float = EPS_BAR) -> ConditionReport:
    """3S - eps t dS/dt >= 0 pointwise."""
    s = _sample(grid, sym, derivatives=True)
    idx = _require((s.t > 0) & _smallness_mask(s, eps_bar), "t > 0 and the smallness conditions")
    t, a, b, c = s.t[idx], s.a[idx], s.b[idx], s.c[idx]
    S3 = 3 * S_matrix(a, b, c)
    dS = dS_matrix(a, b, c, s.da[idx], s.db[idx], s.dc[idx])

    def build(e):
        return S3 - e * t[:, None, None] * dS

    m = psd_margins(build(eps))
    point, margin = _worst(grid, idx, m)
    return ConditionReport(
        "S_dominates_t_dtS", margin,
        constants={"eps": eps, "eps_max": _bisect_stack(build, psd_margins),
                   "C_dtc": float(np.max(np.abs(s.dc[idx]) / b)), "eps_bar": eps_bar},
        worst_point=point,
        details={"filtered_points": int(idx.size), "derivatives": sym.derivative_method},
    )


def as_matrix_field(B) -> Callable:
    """Normalize a 3x3 matrix, a callable, or a 3x3 nested list of entries
    (numbers or callables) into f(t, x, xi) -> array (len(t), 3, 3) complex."""
    if callable(B):
        def field_fn(t, x, xi):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            v = np.asarray(B(t, x, xi), dtype=complex)
            return np.broadcast_to(v, (t.size, 3, 3)).copy()
        return field_fn
    rows = list(B)
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValueError("matrix fields must be 3x3")
    if not any(callable(e) for r in rows for e in r):
        const = np.asarray(rows, dtype=complex)
        return lambda t, x, xi: np.broadcast_to(
            const, (np.atleast_1d(t).size, 3, 3)).copy()

    def entries(t, x, xi):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, 3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                e = rows[i][j]
                out[:, i, j] = e(t, x, xi) if callable(e) else e
        return out
    return entries


def check_positivity_B(grid: SampleGrid, sym: CubicSymbol, B, T: float,
                       eps_bar: float = EPS_BAR) -> ConditionReport:
    """Largest eps with 3S - eps t^2 B* S B >= 0 for t in (0, T]."""
    Bf = as_matrix_field(B)
    s = _sample(grid, sym)
    idx = _require((s.t > 0) & (s.t <= T) & (s.b > 0), "0 < t <= T and b > 0")
    S = S_matrix(s.a[idx], s.b[idx], s.c[idx])
    Bv = np.concatenate([Bf(grid.t, x, xi) for x, xi in grid.pairs()])[idx]
    core = np.conj(np.swapaxes(Bv, 1, 2)) @ S @ Bv
    t2 = (s.t[idx] ** 2)[:, None, None]

    def build(e):
        return 3 * S - e * t2 * core

    eps = _bisect_stack(build, psd_margins)
    m = psd_margins(build(eps if eps > 0 else BISECT_LO))
    point, margin = _worst(grid, idx, m)
    if eps == 0.0:
        margin = min(margin, -np.finfo(float).tiny)
    return ConditionReport(
        "S_dominates_t2_BSB", margin,
        constants={"eps": eps, "T": T, "B_norm": float(np.max(np.abs(Bv)))},
        worst_point=point,
        details={"filtered_points": int(idx.size)},
    )


# ---------------------------------------------------------------- (E) / (H)


def discriminants(a, b, c, reduced: bool = True):
    """Normalized Delta = 27 det S and Delta_0 (a^2 + 3b, or 4(a^2 + 3b) if not reduced)."""
    d0 = a * a + 3 * b
    return cubic_delta(a, b, c), (d0 if reduced else 4.0 * d0)


def _condition(name, power_t, square_d0, grid, sym, delta, reduced, tol):
    s = _sample(grid, sym)
    if np.any(s.t < 0):
        raise ValueError("condition checks need t >= 0")
    D, D0 = discriminants(s.a, s.b, s.c, reduced)
    rhs_unit = s.t ** power_t * (D0 * D0 if square_d0 else D0)
    a, b, c = np.abs(s.a), np.abs(s.b), np.abs(s.c)
    # size of the terms that cancel inside Delta, for a rounding-aware margin
    scale = b * b * (a * a + 4 * b) + 4 * a ** 3 * c + 18 * a * b * c + 27 * c * c
    lhs_minus_rhs = D - delta * rhs_unit + tol * (scale + delta * np.abs(rhs_unit))
    idx = np.arange(len(lhs_minus_rhs))
    point, margin = _worst(grid, idx, lhs_minus_rhs)
    usable = rhs_unit > 0
    best = float(np.min(D[usable] / rhs_unit[usable])) if np.any(usable) else float("inf")
    return ConditionReport(
        name, margin,
        constants={"delta": delta, "delta_best": best,
                   "normalization": "reduced" if reduced else "full"},
        worst_point=point,
    )


def condition_E(grid: SampleGrid, sym: CubicSymbol, delta: float,
                reduced: bool = True, tol: float = 1e-12) -> ConditionReport:
    """Delta >= delta t Delta_0^2, up to a relative rounding tolerance."""
    return _condition("E", 1, True, grid, sym, delta, reduced, tol)


def condition_H(grid: SampleGrid, sym: CubicSymbol, delta: float,
                reduced: bool = True, tol: float = 1e-12) -> ConditionReport:
    """Delta >= delta t^2 Delta_0, up to a relative rounding tolerance."""
    return _condition("H", 2, False, grid, sym, delta, reduced, tol)


# ---------------------------------------------------------------- structural conditions


def _partial(f, t, z, n, multi, order):
    """Nested central differences of f(t, x, xi) over the variables in multi."""
    if not multi:
        x, xi = z[:n], z[n:]
        return _broadcast(f(t, x, xi), t)
    i, rest = multi[0], multi[1:]
    h = FD_STEPS[order] * (1.0 + abs(z[i]))
    zp, zm = z.copy(), z.copy()
    zp[i] += h
    zm[i] -= h
    return (_partial(f, t, zp, n, rest, order) - _partial(f, t, zm, n, rest, order)) / (2 * h)


def _scaled_derivatives(f, t, x, xi, order):
    """max over multi-indices of |<xi>^|alpha| d^alpha_xi d^beta_x f| as an array over t."""
    n = x.size
    z = np.concatenate([x, xi]).astype(float)
    br = bracket(xi)
    best = np.zeros(np.shape(t))
    for multi in itertools.combinations_with_replacement(range(2 * n), order):
        n_xi = sum(1 for i in multi if i >= n)
        with np.errstate(all="ignore"):
            v = np.abs(_partial(f, t, z, n, multi, order)) * br ** n_xi
        best = np.maximum(best, v)
    return best


def _o_clause(name, X, bound_base, power, c_max, floor):
    """|X| <= c_max * base^power + floor, pointwise."""
    base = np.where(bound_base > 0, bound_base, 0.0) ** power
    margin = c_max * base + floor - np.abs(X)
    over = np.abs(X) > floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(over, np.abs(X) / base, 0.0)
    const = float(np.max(ratios)) if ratios.size else 0.0
    return name, margin, const


def check_miki(grid: SampleGrid, sym: CubicSymbol, eps_bar: float = EPS_BAR,
               delta1_min: float = 1e-3, big_o_max: float = 1e4, abs_tol: float = 1e-15,
               smallness: bool = True) -> ConditionReport:
    """Clause-by-clause check of the structural conditions on (a, b, c).

    O-bounds X = O(b^s) pass where |X| <= big_o_max * b^s + abs_tol / h^k,
    with h the finite-difference step of the k-th derivative involved; the
    floor absorbs rounding in symbols that vanish identically. Set
    ``smallness=False`` to skip the two eps_bar clauses, which are only
    expected to hold after localization.
    """
    s = _sample(grid, sym, derivatives=True)
    d1, d2, d3 = [], [], []
    for x, xi in grid.pairs():
        d1.append(_scaled_derivatives(sym.c, grid.t, x, xi, 1))
        d2.append(_scaled_derivatives(sym.c, grid.t, x, xi, 2))
        ac = lambda t, x_, xi_: _broadcast(sym.a(t, x_, xi_), t) * _broadcast(sym.c(t, x_, xi_), t)  # noqa: E731
        d3.append(_scaled_derivatives(ac, grid.t, x, xi, 3))
    d1, d2, d3 = (np.concatenate(v) for v in (d1, d2, d3))
    floors = {k: abs_tol / FD_STEPS[k] ** k for k in FD_STEPS}
    t_floor = abs_tol / T_STEP
    b = s.b

    clauses = []
    clauses.append(("b>=delta1*t", b - delta1_min * s.t + abs_tol, None))
    if smallness:
        bpos = np.where(b > 0, b, 0.0)
        clauses.append(("|ac|<=eps_bar*b^2", eps_bar * b * b + abs_tol - np.abs(s.a * s.c), None))
        clauses.append(("|c|<=eps_bar*b^1.5", eps_bar * bpos ** 1.5 + abs_tol - np.abs(s.c), None))
    for name, X, power, fl in (
        ("c=O(b^2)", s.c, 2.0, abs_tol),
        ("D1c=O(b)", d1, 1.0, floors[1]),
        ("D2c=O(sqrt b)", d2, 0.5, floors[2]),
        ("D3(ac)=O(sqrt b)", d3, 0.5, floors[3]),
        ("dtc=O(b)", s.dc, 1.0, t_floor),
    ):
        n_, m_, const = _o_clause(name, X, b, power, big_o_max, fl)
        clauses.append((n_, m_, const))

    pos = s.t > 0
    delta1 = float(np.min(b[pos] / s.t[pos])) if np.any(pos) else float("inf")
    idx = np.arange(b.size)
    per_clause = {}
    margin, worst = np.inf, None
    for name, m, const in clauses:
        point, mm = _worst(grid, idx, m)
        per_clause[name] = {"holds": bool(mm >= 0), "margin": mm, "worst_point": point}
        if const is not None:
            per_clause[name]["C"] = const
        if mm < margin:
            margin, worst = mm, point
    constants = {"delta1": delta1, "delta1_min": delta1_min, "eps_bar": eps_bar,
                 "C_max": big_o_max}
    constants.update({f"C[{k}]": v["C"] for k, v in per_clause.items() if "C" in v})
    return ConditionReport("structural_conditions", float(margin), constants=constants,
                           worst_point=worst,
                           details={"clauses": per_clause, "derivatives": sym.derivative_method})


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class CharacteristicPoint:
    point: dict
    kind: str
    effective: bool
    Delta: float
    Delta0: float

    def to_dict(self):
        return {"point": self.point, "class": self.kind, "effective": self.effective,
                "Delta": self.Delta, "Delta0": self.Delta0}


def classify_characteristics(grid: SampleGrid, sym: CubicSymbol,
                             tol: float = 1e-12) -> list[CharacteristicPoint]:
    """Classify each grid point as simple, double, triple or nonhyperbolic.

    Uses the normalized Delta = 27 det S and Delta_0 = 4(a^2 + 3b) with an
    absolute tolerance. At triple points the characteristic is effectively
    hyperbolic when d_t b + (2/3) a d_t a > 0, the sign condition on the mixed
    t-tau derivative of the symbol; elsewhere ``effective`` is False.
    """
    if not np.any(grid.t == 0):
        raise ValueError("classification grid must include t = 0")
    s = _sample(grid, sym, derivatives=True)
    D, D0 = discriminants(s.a, s.b, s.c, reduced=False)
    out = []
    for i in range(D.size):
        if D[i] > tol:
            kind = "simple"
        elif D[i] < -tol:
            kind = "nonhyperbolic"
        elif abs(D0[i]) <= tol:
            kind = "triple"
        else:
            kind = "double"
        effective = bool(kind == "triple" and s.db[i] + 2.0 / 3.0 * s.a[i] * s.da[i] > 0)
        out.append(CharacteristicPoint(grid.point(i), kind, effective, float(D[i]), float(D0[i])))
    return out


# ---------------------------------------------------------------- extension


def extend_symbols(sym: CubicSymbol, chi: Callable, chi_tilde: Callable, M: float,
                   M_prime: float = 0.0, chi0: Callable | None = None,
                   grid: SampleGrid | None = None, delta1: float | None = None,
                   T: float | None = None) -> CubicSymbol:
    """Globalize a locally given symbol with a cutoff pair.

    a -> chi a, b -> chi^2 b + M chi_tilde (+ M' chi0), c -> chi^3 c, with
    chi, chi_tilde, chi0 functions of (t, x, xi) that do not depend on t.
    When ``grid`` is given the cutoffs are validated on it.
    """
    if delta1 is not None and T is not None and M < delta1 * T:
        raise ValueError(f"M = {M} must be at least delta1 * T = {delta1 * T}")
    if grid is not None:
        for x, xi in grid.pairs():
            u = _broadcast(chi(grid.t, x, xi), grid.t)
            v = _broadcast(chi_tilde(grid.t, x, xi), grid.t)
            if np.any((u < -1e-12) | (u > 1 + 1e-12) | (v < -1e-12) | (v > 1 + 1e-12)):
                raise CutoffOverlapInvalid(f"cutoff values leave [0, 1] near x={x}, xi={xi}")
            if np.min(u + v) < 1 - 1e-9:
                raise CutoffOverlapInvalid(
                    f"chi + chi_tilde = {np.min(u + v):.3g} < 1 near x={x}, xi={xi}")

    def cut(t, x, xi):
        return _broadcast(chi(t, x, xi), t)

    def a(t, x, xi):
        return cut(t, x, xi) * _broadcast(sym.a(t, x, xi), t)

    def b(t, x, xi):
        out = cut(t, x, xi) ** 2 * _broadcast(sym.b(t, x, xi), t)
        out = out + M * _broadcast(chi_tilde(t, x, xi), t)
        if chi0 is not None and M_prime:
            out = out + M_prime * _broadcast(chi0(t, x, xi), t)
        return out

    def c(t, x, xi):
        return cut(t, x, xi) ** 3 * _broadcast(sym.c(t, x, xi), t)

    def lift(d, power):
        if d is None:
            return None
        return lambda t, x, xi: cut(t, x, xi) ** power * _broadcast(d(t, x, xi), t)

    return replace(sym, a=a, b=b, c=c, da_dt=lift(sym.da_dt, 1), db_dt=lift(sym.db_dt, 2),
                   dc_dt=lift(sym.dc_dt, 3), name=(sym.name + "+extended").lstrip("+"))
