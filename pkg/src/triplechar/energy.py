"""Per-mode energy lab for the reduced first-order 3x3 system.

With x-independent coefficients every symbol acts on a Fourier mode by
multiplication, so for a fixed frequency xi the system becomes the ODE

    U' = i (phi<xi> I + <xi> A(t) + B(t)) U + i F(t)

with A the companion-type matrix of (a, b, c). The lab integrates it with a
fixed-step classical Runge-Kutta scheme (and a half-step companion run for
an error estimate), evaluates the weighted energy

    E(t) = t^-N e^-gamma t Re<S~ U, U>,   S~ = S + lam t^-1 <xi>^-2 I,

and checks the differential energy inequality and the integrated estimates
derived from it. Backward runs use the weight t^N e^(gamma t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .cubic import CubicSymbol, S_matrix, A_matrix, as_matrix_field, dS_matrix
from .errors import DimensionMismatch, StepSizeTooCoarse
from .expr import bracket
from .report import ConditionReport

ERR_BUDGET = 1e-6
KEIYAKU_SLACK = 1e-8


def dyadic_xi(count: int = 8, dimension: int = 1) -> list[np.ndarray]:
    """Frequencies 2^k e_1, k = 0..count-1."""
    out = []
    for k in range(count):
        v = np.zeros(dimension)
        v[0] = 2.0 ** k
        out.append(v)
    return out


def as_vector_field(F) -> Callable:
    """Normalize forcing data into f(t, x, xi) -> array (len(t), 3) complex.

    Accepts None (no forcing), a callable returning shape (3,) or (len(t), 3),
    or a length-3 list of numbers/callables.
    """
    if F is None:
        return lambda t, x, xi: np.zeros((np.atleast_1d(t).size, 3), dtype=complex)
    if callable(F):
        def fn(t, x, xi):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.broadcast_to(np.asarray(F(t, x, xi), dtype=complex), (t.size, 3)).copy()
        return fn
    entries = list(F)
    if len(entries) != 3:
        raise DimensionMismatch("forcing must have three components")

    def comp(t, x, xi):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, 3), dtype=complex)
        for j, e in enumerate(entries):
            out[:, j] = e(t, x, xi) if callable(e) else e
        return out
    return comp


@dataclass(frozen=True)
class ModeSystem:
    xi: np.ndarray
    sym: CubicSymbol
    B: Any = None
    F: Any = None

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if xi.size != self.sym.dimension:
            raise DimensionMismatch(
                f"frequency has dimension {xi.size}, symbol has {self.sym.dimension}")
        if not np.any(xi):
            raise ValueError("frequency must be nonzero")
        object.__setattr__(self, "xi", xi)
        probe_t = np.array([0.25, 0.5, 1.0])
        xs = [np.zeros(xi.size), np.full(xi.size, 0.7)]
        if not self.sym.x_independent(probe_t, xi, xs):
            raise ValueError("energy runs need x-independent symbols")
        object.__setattr__(self, "_B", None if self.B is None else as_matrix_field(self.B))
        object.__setattr__(self, "_F", as_vector_field(self.F))

    @property
    def br(self) -> float:
        return bracket(self.xi)

    @property
    def x0(self) -> np.ndarray:
        return np.zeros(self.xi.size)

    def coefficients(self, t):
        return self.sym.evaluate(np.atleast_1d(np.asarray(t, dtype=float)), self.x0, self.xi)

    def lower_order(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self._B is None:
            return np.zeros((t.size, 3, 3), dtype=complex)
        return self._B(t, self.x0, self.xi)

    def generator(self, t) -> np.ndarray:
        """phi<xi> I + <xi> A + B, shape (len(t), 3, 3)."""
        a, b, c, phi = self.coefficients(t)
        br = self.br
        M = br * A_matrix(a, b, c).astype(complex)
        M += (phi * br)[:, None, None] * np.eye(3)
        return M + self.lower_order(t)

    def forcing(self, t) -> np.ndarray:
        return self._F(np.atleast_1d(np.asarray(t, dtype=float)), self.x0, self.xi)


@dataclass(frozen=True)
class EnergyRunConfig:
    N: float = 8.0
    gamma: float = 1.0
    lam: float = 1.0
    eps1: float = 0.1
    t_start: float = 1e-3
    t_end: float = 1.0
    steps: int = 4096
    direction: str = "forward"
    state: tuple = (1.0, 0.0, 0.0)
    spacing: str = "log"

    def __post_init__(self):
        if not 0 < self.t_start < self.t_end:
            raise ValueError("need 0 < t_start < t_end")
        if self.steps < 16:
            raise ValueError("steps must be at least 16")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing must be 'log' or 'linear'")
        if self.N < 0 or self.gamma < 0 or self.lam < 0 or self.eps1 <= 0:
            raise ValueError("need N, gamma, lam >= 0 and eps1 > 0")
        state = tuple(complex(v) for v in self.state)
        if len(state) != 3:
            raise DimensionMismatch("state must have three components")
        object.__setattr__(self, "state", state)

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "forward" else -1.0

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        return t ** (-self.sign * self.N) * np.exp(-self.sign * self.gamma * t)

    def with_(self, **kw) -> "EnergyRunConfig":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass
class EnergyTrace:
    t: np.ndarray
    U: np.ndarray
    F: np.ndarray
    err_est: np.ndarray
    xi: np.ndarray
    direction: str
    spacing: str
    E: np.ndarray = None
    Q: np.ndarray = None
    components: np.ndarray = None  # |U1|^2, |U2|^2, b|U3|^2
    cancel_resid: np.ndarray = None
    keiyaku_resid: np.ndarray = None
    n_star: np.ndarray = None  # per-node threshold estimates (nan at the ends)
    positivity_margin: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def err_max(self) -> float:
        return float(np.max(self.err_est)) if self.err_est.size else 0.0

    @property
    def state_norm(self) -> np.ndarray:
        return np.linalg.norm(self.U, axis=1)

    def csv_rows(self):
        for k in range(self.t.size):
            u = self.U[k]
            yield [self.t[k], u[0].real, u[0].imag, u[1].real, u[1].imag, u[2].real, u[2].imag,
                   self.E[k], self.cancel_resid[k], self.keiyaku_resid[k], self.err_est[k]]


CSV_HEADER = ["t", "reU1", "imU1", "reU2", "imU2", "reU3", "imU3", "E", "cancel_resid",
              "keiyaku_resid", "err_est"]


# ---------------------------------------------------------------- integration


def _march_grid(cfg: EnergyRunConfig, refine: int = 1):
    if cfg.spacing == "log":
        s0, s1 = math.log(cfg.t_start), math.log(cfg.t_end)
    else:
        s0, s1 = cfg.t_start, cfg.t_end
    n = math.ceil(cfg.steps * (s1 - s0))
    n = (n + n % 2) * refine  # even, so Simpson's rule applies on any run
    s = np.linspace(s0, s1, n + 1)
    if cfg.direction == "backward":
        s = s[::-1]
    return s


def _to_t(s, spacing):
    return np.exp(s) if spacing == "log" else s


def _propagators(ms: ModeSystem, s: np.ndarray, spacing: str):
    """Per-step affine maps U -> P U + q of one classical RK4 step."""
    h = np.diff(s)
    sm = s[:-1] + h / 2
    t_nodes, t_mid = _to_t(s, spacing), _to_t(sm, spacing)
    jac_nodes = t_nodes if spacing == "log" else np.ones_like(t_nodes)
    jac_mid = t_mid if spacing == "log" else np.ones_like(t_mid)
    L_nodes = 1j * jac_nodes[:, None, None] * ms.generator(t_nodes)
    L_mid = 1j * jac_mid[:, None, None] * ms.generator(t_mid)
    g_nodes = 1j * jac_nodes[:, None] * ms.forcing(t_nodes)
    g_mid = 1j * jac_mid[:, None] * ms.forcing(t_mid)
    L1, L2, L3 = L_nodes[:-1], L_mid, L_nodes[1:]
    g1, g2, g3 = g_nodes[:-1], g_mid, g_nodes[1:]
    hh = h[:, None, None]
    eye = np.eye(3)
    K1 = L1
    K2 = L2 @ (eye + hh / 2 * K1)
    K3 = L2 @ (eye + hh / 2 * K2)
    K4 = L3 @ (eye + hh * K3)
    P = eye + hh / 6 * (K1 + 2 * K2 + 2 * K3 + K4)
    hv = h[:, None]
    k1 = g1
    k2 = np.einsum("nij,nj->ni", L2, hv / 2 * k1) + g2
    k3 = np.einsum("nij,nj->ni", L2, hv / 2 * k2) + g2
    k4 = np.einsum("nij,nj->ni", L3, hv * k3) + g3
    q = hv / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return P, q, t_nodes


def _march(P, q, U0):
    """States of the recurrence U_{k+1} = P_k U_k + q_k.

    Steps are grouped into about sqrt(n) blocks. Compositions inside the
    blocks are formed vectorized across blocks, so only the short chain of
    block boundaries is walked sequentially.
    """
    n = P.shape[0]
    size = max(1, math.isqrt(n))
    nb = -(-n // size)
    pad = nb * size - n
    if pad:
        P = np.concatenate([P, np.broadcast_to(np.eye(3), (pad, 3, 3))])
        q = np.concatenate([q, np.zeros((pad, 3), dtype=q.dtype)])
    P = P.reshape(nb, size, 3, 3)
    q = q.reshape(nb, size, 3)
    C = np.empty_like(P)
    d = np.empty_like(q)
    C[:, 0], d[:, 0] = P[:, 0], q[:, 0]
    for j in range(1, size):
        C[:, j] = P[:, j] @ C[:, j - 1]
        d[:, j] = np.einsum("bij,bj->bi", P[:, j], d[:, j - 1]) + q[:, j]
    starts = np.empty((nb, 3), dtype=complex)
    u = np.asarray(U0, dtype=complex)
    for blk in range(nb):
        starts[blk] = u
        u = C[blk, -1] @ u + d[blk, -1]
    U = np.einsum("bjik,bk->bji", C, starts) + d
    return np.concatenate([np.asarray(U0, dtype=complex)[None], U.reshape(-1, 3)[:n]])


def integrate_mode(ms: ModeSystem, cfg: EnergyRunConfig, check_error: bool = True) -> EnergyTrace:
    """Fixed-step RK4 from t_start to t_end (or back), with a half-step run."""
    s = _march_grid(cfg)
    P, q, t = _propagators(ms, s, cfg.spacing)
    U = _march(P, q, cfg.state)
    s2 = _march_grid(cfg, refine=2)
    P2, q2, _ = _propagators(ms, s2, cfg.spacing)
    U2 = _march(P2, q2, cfg.state)[::2]
    err = np.linalg.norm(U - U2, axis=1)
    t[0] = cfg.t_start if cfg.direction == "forward" else cfg.t_end
    t[-1] = cfg.t_end if cfg.direction == "forward" else cfg.t_start
    trace = EnergyTrace(t=t, U=U, F=ms.forcing(t), err_est=err, xi=ms.xi,
                        direction=cfg.direction, spacing=cfg.spacing)
    scale = float(np.max(np.linalg.norm(U, axis=1)))
    if check_error and trace.err_max > ERR_BUDGET * scale:
        raise StepSizeTooCoarse(
            f"step-halving error {trace.err_max:.3g} exceeds {ERR_BUDGET:g} x max|U| = {scale:.3g} "
            f"at xi = {ms.xi.tolist()}; increase steps", trace.err_max, scale)
    annotate(trace, cfg, ms.sym)
    return trace


# ---------------------------------------------------------------- energy and residuals


def _S_tilde(trace, cfg, sym):
    a, b, c, _ = sym.evaluate(trace.t, np.zeros(trace.xi.size), trace.xi)
    S = S_matrix(a, b, c)
    lam_term = cfg.lam / (trace.t * bracket(trace.xi) ** 2)
    return S + lam_term[:, None, None] * np.eye(3), (a, b, c)


def _form(M, U, V=None):
    V = U if V is None else V
    return np.einsum("ni,nij,nj->n", np.conj(V), M, U)


def energy_form(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol) -> np.ndarray:
    """Unweighted Re<S~ U, U>."""
    St, _ = _S_tilde(trace, cfg, sym)
    return np.real(_form(St, trace.U))


def weighted_energy(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol) -> np.ndarray:
    return cfg.weight(trace.t) * energy_form(trace, cfg, sym)


def cancellation_residuals(trace: EnergyTrace, sym: CubicSymbol, B=None) -> np.ndarray:
    """|Im<S(phi<xi> I + <xi> A [+ B]) U, U>| / max(1, |U|^2) per node."""
    x0 = np.zeros(trace.xi.size)
    a, b, c, phi = sym.evaluate(trace.t, x0, trace.xi)
    br = bracket(trace.xi)
    S = S_matrix(a, b, c)
    K = br * (phi[:, None, None] * S + S @ A_matrix(a, b, c))
    K = K.astype(complex)
    if B is not None:
        K = K + S @ as_matrix_field(B)(trace.t, x0, trace.xi)
    # Im<KU,U> is the form of the skew-Hermitian part; evaluating it directly
    # keeps the cancellation of the symmetric part exact
    Kh = (K - np.conj(np.swapaxes(K, 1, 2))) / 2j
    val = np.real(_form(Kh, trace.U))
    return np.abs(val) / np.maximum(1.0, np.sum(np.abs(trace.U) ** 2, axis=1))


def cancellation_check(trace: EnergyTrace, sym: CubicSymbol, B=None) -> float:
    r = cancellation_residuals(trace, sym, B)
    return float(np.max(r)) if r.size else 0.0


def _march_derivative(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Fourth-order central difference dy/ds on interior nodes, nan at the ends."""
    out = np.full(y.shape, np.nan)
    if y.size >= 5:
        h = (s[-1] - s[0]) / (s.size - 1)
        out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return out


def _march_coordinate(trace):
    return np.log(trace.t) if trace.spacing == "log" else trace.t


def _keiyaku_terms(trace, cfg, sym):
    """Q, dQ along the march direction, and the forcing term t<S~F,F>."""
    St, _ = _S_tilde(trace, cfg, sym)
    Q = np.real(_form(St, trace.U))
    s = _march_coordinate(trace)
    dQ_ds = _march_derivative(Q, s)
    jac = trace.t if trace.spacing == "log" else np.ones_like(trace.t)
    dQ = cfg.sign * dQ_ds / jac
    Fterm = trace.t * np.real(_form(St, trace.F))
    return Q, dQ, Fterm


def n_star_profile(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol) -> np.ndarray:
    """Per-node smallest N* for which the differential inequality holds.

    The inequality for E = w Q reads, after dividing by the weight,
    Q' <= (gamma + N*/t) Q + t<S~F,F>, so node k needs
    N* >= t (Q' - gamma Q - t<S~F,F>) / Q. N itself cancels.
    """
    Q, dQ, Fterm = _keiyaku_terms(trace, cfg, sym)
    t = trace.t
    with np.errstate(divide="ignore", invalid="ignore"):
        ns = t * (dQ - cfg.gamma * Q - Fterm) / Q
    tiny = np.finfo(float).tiny
    return np.where(Q > tiny, ns, np.nan)


def annotate(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol, n_star=None):
    """Fill energy, residual and positivity columns of a trace."""
    w = cfg.weight(trace.t)
    St, (a, b, c) = _S_tilde(trace, cfg, sym)
    Q = np.real(_form(St, trace.U))
    trace.Q = Q
    trace.E = w * Q
    absU2 = np.abs(trace.U) ** 2
    trace.components = np.stack([absU2[:, 0], absU2[:, 1], b * absU2[:, 2]], axis=1)
    trace.cancel_resid = cancellation_residuals(trace, sym)
    trace.n_star = n_star_profile(trace, cfg, sym)
    _, dQ, Fterm = _keiyaku_terms(trace, cfg, sym)
    ns = np.nanmax(trace.n_star) if np.any(np.isfinite(trace.n_star)) else -np.inf
    ns = ns if n_star is None else n_star
    ns = ns if math.isfinite(ns) else 0.0  # an unconstrained trace (Q = 0) has no threshold
    trace.keiyaku_resid = w * (dQ - (cfg.gamma + ns / trace.t) * Q - Fterm)
    # Lemma-level floor: <S U, U> >= (eps1/3) t (|U1|^2 + |U2|^2 + b|U3|^2)
    SU = np.real(_form(S_matrix(a, b, c), trace.U))
    trace.positivity_margin = SU - cfg.eps1 / 3 * trace.t * trace.components.sum(axis=1)
    return trace


def energy_floor(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol) -> ConditionReport:
    """E >= w (delta2 t^2 + (lam/2) t^-1 <xi>^-2) |U|^2 with delta2 measured on the trace."""
    St, _ = _S_tilde(trace, cfg, sym)
    half = cfg.lam / (2 * trace.t * bracket(trace.xi) ** 2)
    lam_min = np.linalg.eigvalsh(St - half[:, None, None] * np.eye(3))[:, 0]
    delta2 = float(np.min(lam_min / trace.t ** 2))
    norm2 = np.sum(np.abs(trace.U) ** 2, axis=1)
    w = cfg.weight(trace.t)
    E = w * np.real(_form(St, trace.U))
    bound = w * (delta2 * trace.t ** 2 + half) * norm2
    gap = E - bound
    tol = 1e-12 * np.maximum(np.abs(E), np.abs(bound))
    k = int(np.argmin(gap + tol))
    return ConditionReport("energy_floor", float(np.min(gap + tol)), constants={"delta2": delta2},
                           worst_point={"t": float(trace.t[k]), "xi": trace.xi.tolist()})


# ---------------------------------------------------------------- inequality checks


def verify_keiyaku(trace: EnergyTrace, cfg: EnergyRunConfig, sym: CubicSymbol,
                   N_star_guess: float | None = None, N_list=None,
                   gamma_list=None) -> ConditionReport:
    """Check the differential energy inequality along a trace.

    With N* = N_star_guess (or the measured threshold when None) the
    inequality must hold at every interior node up to a relative slack, and
    the weight must dominate it: N > N*. The margin is in units of N.
    """
    Q, dQ, Fterm = _keiyaku_terms(trace, cfg, sym)
    t = trace.t
    prof = n_star_profile(trace, cfg, sym)
    finite = np.isfinite(prof)
    measured = float(np.max(prof[finite])) if np.any(finite) else -math.inf
    used = measured if N_star_guess is None else float(N_star_guess)
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = KEIYAKU_SLACK * t * (np.abs(dQ) + (cfg.gamma + abs(used) / t) * Q
                                     + np.abs(Fterm)) / Q
    node_margin = np.where(finite, used - prof + slack, np.inf)
    margin = min(cfg.N - used, float(np.min(node_margin)) if node_margin.size else math.inf)
    if cfg.N - used <= float(np.min(node_margin)) and np.any(finite):
        k = int(np.nanargmax(prof))
    elif np.any(finite):
        k = int(np.argmin(node_margin))
    else:
        k = 0
    constants = {"N": cfg.N, "gamma": cfg.gamma, "lam": cfg.lam, "N_star_measured": measured,
                 "N_star_used": used}
    if N_list is not None:
        ok = [n for n in sorted(N_list) if n > measured]
        constants["N_min"] = ok[0] if ok else None
    if gamma_list is not None:
        ok = []
        for g in sorted(gamma_list):
            pg = n_star_profile(trace, cfg.with_(gamma=g), sym)
            pf = pg[np.isfinite(pg)]
            if cfg.N > (np.max(pf) if pf.size else -math.inf):
                ok.append(g)
        constants["gamma_min"] = ok[0] if ok else None
    return ConditionReport("energy_inequality", float(margin), constants=constants,
                           worst_point={"t": float(t[k]), "xi": trace.xi.tolist(), "step": k})


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum((y[1:] + y[:-1]) / 2 * np.diff(x))
    return out


def _estimate(traces, cfg, backward: bool, n_star=None):
    if not traces:
        return ConditionReport("estimate", math.inf, constants={"C_over_c": 0.0})
    t = traces[0].t
    for tr in traces[1:]:
        if tr.t.shape != t.shape or not np.allclose(tr.t, t, rtol=0, atol=0):
            raise ValueError("traces must share one time grid")
    nU = sum(np.sum(np.abs(tr.U) ** 2, axis=1) for tr in traces)
    nF = sum(np.sum(np.abs(tr.F) ** 2, axis=1) for tr in traces)
    if backward:
        # march from t_end down; integrate over [t, T0]
        w_pt = t ** (cfg.N + 2) * np.exp(cfg.gamma * t)
        w_int = t ** (cfg.N + 1) * np.exp(cfg.gamma * t)
        x = -t
        data = cfg.t_end ** (cfg.N + 1) * math.exp(cfg.gamma * cfg.t_end) * nU[0]
    else:
        w_pt = t ** (-cfg.N + 2) * np.exp(-cfg.gamma * t)
        w_int = t ** (-cfg.N + 1) * np.exp(-cfg.gamma * t)
        x = t
        data = cfg.t_start ** (-cfg.N - 1) * math.exp(-cfg.gamma * cfg.t_start) * nU[0]
    lhs = w_pt * nU + _cumtrapz(w_int * nU, x)
    rhs = data + _cumtrapz(w_int * nF, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    k = int(np.argmax(ratio))
    c_over = float(ratio[k])
    if n_star is None:
        prof = [tr.n_star for tr in traces if tr.n_star is not None]
        vals = np.concatenate(prof) if prof else np.array([])
        vals = vals[np.isfinite(vals)]
        n_star = float(np.max(vals)) if vals.size else -math.inf
    margin = min(cfg.N - n_star, math.inf if math.isfinite(c_over) else -math.inf)
    name = "estimate_backward" if backward else "estimate_forward"
    return ConditionReport(name, float(margin),
                           constants={"C_over_c": c_over, "N": cfg.N, "gamma": cfg.gamma,
                                      "N_star_measured": n_star},
                           worst_point={"t": float(t[k])})


def verify_estimate_forward(traces, cfg: EnergyRunConfig, n_star: float | None = None):
    """Integrated forward estimate summed over the modes.

    Reports the smallest C/c with
    t^(2-N) e^(-gamma t)|U(t)|^2 + int t^(1-N) e^(-gamma t)|U|^2
        <= C/c (eps^(-N-1) e^(-gamma eps)|U(eps)|^2 + int t^(1-N) e^(-gamma t)|f|^2).
    The estimate is derived from the energy inequality with N > N*, so it
    holds when the ratio is finite and N exceeds the measured threshold.
    """
    return _estimate(traces, cfg, backward=False, n_star=n_star)


def verify_estimate_backward(traces, cfg: EnergyRunConfig, n_star: float | None = None):
    """Backward analogue with weights t^(N+2) e^(gamma t) and integrals over [t, T0]."""
    if cfg.direction != "backward":
        raise ValueError("backward estimate needs a backward configuration")
    return _estimate(traces, cfg, backward=True, n_star=n_star)


def duality_drift(forward: EnergyTrace, backward: EnergyTrace, sym: CubicSymbol) -> float:
    """Relative defect of d/dt <S U, V> = <(dS/dt) U, V> over the run.

    For unforced runs without lower-order terms, S A symmetric makes the
    pairing change only through dS/dt. Uses Simpson's rule on the march grid.
    """
    t = forward.t
    V = backward.U[::-1]
    if not np.allclose(backward.t[::-1], t, rtol=1e-14, atol=0):
        raise ValueError("forward and backward traces must share nodes")
    x0 = np.zeros(forward.xi.size)
    a, b, c, _ = sym.evaluate(t, x0, forward.xi)
    da, db, dc = sym.t_derivatives(t, x0, forward.xi)
    P = _form(S_matrix(a, b, c).astype(complex), forward.U, V)
    dP = _form(dS_matrix(a, b, c, da, db, dc).astype(complex), forward.U, V)
    s = _march_coordinate(forward)
    jac = t if forward.spacing == "log" else np.ones_like(t)
    integrand = dP * jac
    n = s.size - 1
    if n % 2:
        raise ValueError("duality check needs an even number of steps")
    h = (s[-1] - s[0]) / n
    integral = h / 3 * (integrand[0] + integrand[-1] + 4 * integrand[1:-1:2].sum()
                        + 2 * integrand[2:-1:2].sum())
    scale = max(float(np.max(np.abs(P))), np.finfo(float).tiny)
    return float(abs(P[-1] - P[0] - integral) / scale)


# ---------------------------------------------------------------- models and scans


@dataclass(frozen=True)
class EnergyModel:
    name: str
    sym: CubicSymbol
    state: tuple = (1.0, 0.0, 0.0)
    B: Any = None
    F: Any = None
    xi_list: tuple = ()

    def modes(self) -> list[ModeSystem]:
        xs = self.xi_list or tuple(dyadic_xi(8, self.sym.dimension))
        return [ModeSystem(np.asarray(x, dtype=float), self.sym, self.B, self.F) for x in xs]


def canonical_model(state=(1.0, 1.0, 1.0), xi_list=()) -> EnergyModel:
    """a = 0, b = t, c = 0, phi = 0, no lower-order terms or forcing."""
    sym = CubicSymbol.from_expressions("0", "t", "0", "0", da_dt="0", db_dt="1", dc_dt="0",
                                       name="canonical")
    return EnergyModel("canonical", sym, tuple(state), xi_list=tuple(xi_list))


def example_model(b1: float = 0.1, b2: float = 1.0, state=(1.0, 0.0, 0.0),
                  xi_list=()) -> EnergyModel:
    """tau^3 - (t + alpha)<xi>^2 tau - (t^2 b2 + t b1 + b0)<xi>^3 reduced at phi = -b1,
    with alpha = 3 b1^2 and b0 = b1 alpha - b1^3, i.e. a = -3 b1, b = t, c = -b2 t^2."""
    from .cubic import QForm, from_q_form
    alpha = 3 * b1 * b1
    b0 = b1 * alpha - b1 ** 3
    q = QForm(lambda t, x, xi: np.zeros_like(np.asarray(t, dtype=float)),
              lambda t, x, xi: -(t + alpha) * bracket(xi) ** 2,
              lambda t, x, xi: -(t * t * b2 + t * b1 + b0) * bracket(xi) ** 3)
    sym = from_q_form(q, lambda t, x, xi: np.full(np.shape(t), -b1, dtype=float))
    from dataclasses import replace
    sym = replace(sym, name="example")
    return EnergyModel("example", sym, tuple(state), xi_list=tuple(xi_list))


def integrate_model(model: EnergyModel, cfg: EnergyRunConfig) -> list[EnergyTrace]:
    return [integrate_mode(ms, cfg) for ms in model.modes()]


def measured_n_star(traces, cfg: EnergyRunConfig, sym: CubicSymbol) -> float:
    vals = [n_star_profile(tr, cfg, sym) for tr in traces]
    vals = np.concatenate(vals) if vals else np.array([])
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals)) if vals.size else -math.inf


@dataclass
class ScanTable:
    model: str
    rows: list  # dicts with N, gamma, lam, keiyaku, estimate, pass, N_star, C_over_c
    monotonicity_violations: int = 0

    @property
    def feasible(self) -> list:
        return [r for r in self.rows if r["pass"]]

    def to_dict(self):
        return {"model": self.model, "rows": self.rows,
                "monotonicity_violations": self.monotonicity_violations,
                "feasible_cells": len(self.feasible), "cells": len(self.rows)}


def parameter_scan(model: EnergyModel, cfg: EnergyRunConfig, N_list, gamma_list, lambda_list,
                   traces=None) -> ScanTable:
    """Pass/fail of the energy inequality and the integrated estimate on a grid
    of (N, gamma, lambda). The state does not depend on these parameters, so
    one set of traces serves the whole table."""
    N_list, gamma_list, lambda_list = list(N_list), list(gamma_list), list(lambda_list)
    if not (N_list and gamma_list and lambda_list):
        return ScanTable(model.name, [])
    if traces is None:
        traces = integrate_model(model, cfg)
    rows = []
    for lam in lambda_list:
        for g in gamma_list:
            c_g = cfg.with_(gamma=g, lam=lam)
            ns = measured_n_star(traces, c_g, model.sym)
            for N in N_list:
                c = c_g.with_(N=N)
                est = _estimate(traces, c, backward=cfg.direction == "backward", n_star=ns)
                kei = N > ns
                rows.append({"N": N, "gamma": g, "lam": lam, "N_star": ns,
                             "keiyaku": bool(kei), "estimate": est.holds,
                             "C_over_c": est.constants["C_over_c"],
                             "pass": bool(kei and est.holds)})
    violations = 0
    for r in rows:
        if not r["pass"]:
            continue
        for o in rows:
            if o["lam"] == r["lam"] and o["N"] >= r["N"] and o["gamma"] >= r["gamma"] \
                    and not o["pass"]:
                violations += 1
    return ScanTable(model.name, rows, violations)
