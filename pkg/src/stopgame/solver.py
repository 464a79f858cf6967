"""High-level solvers: single-player optimal stopping and two-player games.

Single player: V(x) = W**(F(x)) psi(x) where W = (G/psi) o F^{-1} and **
is the (boundary-anchored) least concave majorant.  Two players: the
scaled value is the taut string between wg = G/psi and wh = H/psi with
pinned/far-field ends, mapped back the same way.  Free boundaries are
sharpened by local grid refinement around contact transitions, so the
reported thresholds are far more accurate than the base grid step.

Also here: closed forms for the perpetual put and the cancellable
(penalty) put used by the CLI and the test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from . import barrier, envelope
from .diffusion import DiffusionSpec, FundamentalSolutions, fundamental_solutions
from .envelope import FLAT, least_concave_majorant
from .errors import (AssumptionUnverified, ConfigurationError, NoFiniteValue,
                     NumericalError, OrderingViolated)
from .scale import (UNIFORM_X, UNIFORM_Y, USE_PHI, USE_PSI, ScaleTransform,
                    build_scale)
from .transform import (TransformedObstacle, check_assumptions,
                        transform_payoff)

NASH_SADDLE = "NashSaddle"
STACKELBERG_ONLY = "StackelbergOnly"
NO_NASH = "NoNash"
DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SolveOptions:
    n: int = 4097
    spacing: str = UNIFORM_Y
    direction: str = USE_PSI
    x_range: Optional[Tuple[float, float]] = None
    tol_eq: Optional[float] = None
    refine_rounds: int = 14
    refine_points: int = 33
    cross_check: bool = False
    override_assumptions: bool = False
    w0: Optional[float] = None
    l_a_override: Optional[float] = None
    l_b_override: Optional[float] = None


@dataclass(frozen=True)
class StoppingSolution:
    V: Callable
    C: List[Tuple[float, float]]
    D: List[Tuple[float, float]]
    a_star: Optional[float]       # interior D-edges (None when at the boundary)
    b_star: Optional[float]
    x_grid: np.ndarray
    y_grid: np.ndarray
    w_values: np.ndarray          # scaled payoff on the grid
    v_scaled: np.ndarray          # envelope on the grid
    contact: np.ndarray
    direction: str
    assumptions: object
    dual_gap: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GameSolution:
    V: Callable
    D_plus: List[Tuple[float, float]]
    D_minus: List[Tuple[float, float]]
    tau_thresholds: List[Tuple[float, float]]
    sigma_thresholds: List[Tuple[float, float]]
    equilibrium: str
    x_grid: np.ndarray
    y_grid: np.ndarray
    wg: np.ndarray
    wh: np.ndarray
    v_scaled: np.ndarray
    contact_lower: np.ndarray
    contact_upper: np.ndarray
    direction: str
    assumptions: object
    smooth_fit: Optional[list] = None
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# closed forms (perpetual put family on GBM with drift == rate)
# --------------------------------------------------------------------------

def put_threshold(K: float, r: float, sigma: float) -> float:
    """Optimal exercise threshold of the perpetual put."""
    return K / (1.0 + sigma * sigma / (2.0 * r))


def put_value(x, K: float, r: float, sigma: float):
    """Perpetual put value function (closed form)."""
    x = np.asarray(x, float)
    beta = 2.0 * r / (sigma * sigma)
    xs = put_threshold(K, r, sigma)
    coef = (sigma * sigma / (2.0 * r)) * (K / (1.0 + sigma * sigma / (2.0 * r))) ** (1.0 + beta)
    v = np.where(x < xs, K - x, coef * x ** (-beta))
    return v if v.ndim else float(v)


def penalty_cap(K: float, r: float, sigma: float) -> float:
    """Largest cancellation penalty for which cancelling is worthwhile.

    For penalties at or above this cap the inf-player never cancels and
    the game value equals the perpetual put value.
    """
    s2r = sigma * sigma / (2.0 * r)
    return s2r * K / (1.0 + s2r) ** (1.0 + 2.0 * r / (sigma * sigma))


def cancellable_put_residual(x: float, K: float, r: float, sigma: float,
                             delta: float) -> float:
    """Residual of the threshold equation of the cancellable put.

    (1 + 2r/sigma^2)(1 + delta/K)(x/K) = 2r/sigma^2 + (x/K)^(1+2r/sigma^2).
    Derived from tangency of the scaled value at the cancellation point;
    at delta = penalty_cap the root equals put_threshold.
    """
    beta = 2.0 * r / (sigma * sigma)
    u = x / K
    return (1.0 + beta) * (1.0 + delta / K) * u - beta - u ** (1.0 + beta)


def cancellable_put_threshold(K: float, r: float, sigma: float,
                              delta: float) -> float:
    """Exercise threshold of the cancellable put for delta in (0, cap)."""
    lo = put_threshold(K, r, sigma)
    f = lambda x: cancellable_put_residual(x, K, r, sigma, delta)
    return float(brentq(f, lo * (1.0 - 1e-12), K, xtol=1e-14 * K, rtol=8.9e-16))


def cancellable_put_value(x, K: float, r: float, sigma: float, delta: float):
    """Three-branch closed form of the cancellable (penalty) put value."""
    dstar = penalty_cap(K, r, sigma)
    if delta >= dstar:
        return put_value(x, K, r, sigma)
    x = np.asarray(x, float)
    beta = 2.0 * r / (sigma * sigma)
    alpha = 1.0 / (1.0 + beta)
    xs = cancellable_put_threshold(K, r, sigma, delta)
    den = xs ** (-1.0 / alpha) - K ** (-1.0 / alpha)
    mid = (delta * (x / K) * (xs ** (-1.0 / alpha) - x ** (-1.0 / alpha)) / den
           + (K - xs) * (x / xs) * (x ** (-1.0 / alpha) - K ** (-1.0 / alpha)) / den)
    v = np.where(x < xs, K - x,
                 np.where(x <= K, mid, delta * (x / K) ** ((alpha - 1.0) / alpha)))
    return v if v.ndim else float(v)


# --------------------------------------------------------------------------
# shared plumbing
# --------------------------------------------------------------------------

def _default_x_range(spec: DiffusionSpec, payoff) -> Tuple[float, float]:
    a, b = spec.interval
    consts = getattr(payoff, "constants", None) or {}
    scale = max([abs(v) for v in consts.values() if isinstance(v, (int, float)) and v]
                or [1.0])
    if math.isfinite(a) and math.isfinite(b):
        return (a, b)
    if a == 0.0 and not math.isfinite(b):          # typical GBM setup
        return (1e-4 * scale, 30.0 * scale)
    # two-sided unbounded (Brownian-type): width from the decay rate of psi
    mu, D = spec.coefficients()
    d0 = D(0.0)
    lam = (abs(mu(0.0)) + math.sqrt(mu(0.0) ** 2 + 4.0 * d0 * spec.rate)) / (2.0 * d0)
    half = 40.0 / lam + scale
    lo = a if math.isfinite(a) else -half
    hi = b if math.isfinite(b) else half
    return (lo, hi)


def _x_of_y(fund: FundamentalSolutions, direction: str, yvals, x_lo, x_hi):
    sval = (lambda x: fund.F(x)) if direction == USE_PSI else (lambda x: fund.F_tilde(x))
    out = []
    for yv in np.atleast_1d(yvals):
        out.append(brentq(lambda x: sval(x) - yv, x_lo, x_hi,
                          xtol=1e-15 * (x_hi - x_lo), rtol=8.9e-16))
    return np.asarray(out, float)


def _insert_refinement(fund, direction, x_grid, y_grid, transitions, per):
    """Insert `per` points (uniform in y) inside each transition segment."""
    new_x = []
    for j in transitions:
        y_lo, y_hi = y_grid[j], y_grid[j + 1]
        ys = np.linspace(y_lo, y_hi, per + 2)[1:-1]
        new_x.append(_x_of_y(fund, direction, ys, x_grid[j], x_grid[j + 1]))
    if not new_x:
        return x_grid, False
    xg = np.unique(np.concatenate([x_grid] + new_x))
    return xg, True


def _transitions(mask) -> List[int]:
    """Segment indices around contact changes (including both neighbors,
    since the true free boundary may sit in an adjacent segment)."""
    m = np.asarray(mask, bool)
    out = set()
    for j in np.nonzero(m[1:] != m[:-1])[0]:
        for k in (int(j) - 1, int(j), int(j) + 1):
            if 0 <= k < len(m) - 1:
                out.add(k)
    return sorted(out)


def _runs(mask) -> List[Tuple[int, int]]:
    m = np.asarray(mask, bool)
    if not m.any():
        return []
    d = np.diff(m.astype(int))
    starts = list(np.nonzero(d == 1)[0] + 1)
    ends = list(np.nonzero(d == -1)[0])
    if m[0]:
        starts = [0] + starts
    if m[-1]:
        ends = ends + [len(m) - 1]
    return list(zip(starts, ends))


def _intervals_from_mask(x_grid, mask) -> List[Tuple[float, float]]:
    return [(float(x_grid[i]), float(x_grid[j])) for i, j in _runs(mask)]


def _polish_edge(fund, direction, payoff_fn, x_grid, y_grid, idx, i_other, P):
    """Refine a free-boundary location beyond the grid resolution.

    On the continuation side of a contact edge the envelope is affine and
    passes through the support point P = (yP, vP); the true boundary is the
    point where the line from P is tangent to the continuous scaled payoff
    w(y) = payoff(x(y)) / den(x(y)).  Solves the tangency condition with a
    finite-difference slope; the bracket stays between the run's other end
    (i_other) and P, so it cannot latch onto a different tangency.  Returns
    the polished x (grid value on failure)."""
    n = len(y_grid)
    y0 = float(y_grid[idx])
    x_lo, x_hi = float(x_grid[0]), float(x_grid[-1])
    sval = fund.F if direction == USE_PSI else fund.F_tilde
    den = fund.psi if direction == USE_PSI else fund.phi
    yP, vP = P
    y_in = float(y_grid[i_other])
    loc = abs(float(y_grid[min(idx + 2, n - 1)] - y_grid[max(idx - 2, 0)]))

    def x_of(yv):
        return brentq(lambda t: float(sval(t)) - yv, x_lo, x_hi, rtol=8.9e-16)

    def w(yv):
        x = x_of(yv)
        return float(np.asarray(payoff_fn(x), float) /
                     np.asarray(den(x), float))

    def fd_step(yv):
        return 6e-6 * max(abs(yv), loc, 1e-300)

    def T(yv):
        h = fd_step(yv)
        dw = (w(yv + h) - w(yv - h)) / (2.0 * h)
        return (w(yv) - vP) - dw * (yv - yP)

    # stay inside the grid's y-range (w needs the x-inversion to bracket)
    g_lo = float(y_grid[0]) + 2.0 * fd_step(float(y_grid[0]))
    g_hi = float(y_grid[-1]) - 2.0 * fd_step(float(y_grid[-1]))
    if yP > y0:
        lo_lim = max(g_lo, min(y_in, y0))
        hi_lim = min(g_hi, yP - 2.0 * fd_step(yP))
    else:
        lo_lim = max(g_lo, yP + 2.0 * fd_step(yP))
        hi_lim = min(g_hi, max(y_in, y0))
    width = max(8.0 * fd_step(y0), 2.0 * loc)
    try:
        for _ in range(60):
            a = max(y0 - width, lo_lim)
            b = min(y0 + width, hi_lim)
            if b > a:
                Ta, Tb = T(a), T(b)
                if Ta == 0.0:
                    return float(x_of(a))
                if Tb == 0.0:
                    return float(x_of(b))
                if Ta * Tb < 0.0:
                    ys = brentq(T, a, b, xtol=1e-14 * max(abs(y0), 1e-300),
                                rtol=8.9e-16)
                    return float(x_of(ys))
            if a <= lo_lim and b >= hi_lim:
                break
            width *= 4.0
    except Exception:
        pass
    return float(x_grid[idx])


def _polished_intervals(fund, direction, payoff_fn, x_grid, y_grid,
                        mask, support, values) -> List[Tuple[float, float]]:
    """Contact intervals with interior edges refined by `_polish_edge`.

    `support` marks grid points known to lie on the envelope (contact of any
    kind); the end points always qualify, since the envelope's boundary
    segment passes through them."""
    npts = len(x_grid)
    sup = np.asarray(support, bool).copy()
    sup[0] = sup[-1] = True
    out = []
    for i0, i1 in _runs(mask):
        lo, hi = float(x_grid[i0]), float(x_grid[i1])
        if i0 > 0:
            j = int(np.nonzero(sup[:i0])[0][-1])
            if i0 - j >= 3:
                lo = _polish_edge(fund, direction, payoff_fn, x_grid, y_grid,
                                  i0, i1, (float(y_grid[j]), float(values[j])))
        if i1 < npts - 1:
            j = i1 + 1 + int(np.nonzero(sup[i1 + 1:])[0][0])
            if j - i1 >= 3:
                hi = _polish_edge(fund, direction, payoff_fn, x_grid, y_grid,
                                  i1, i0, (float(y_grid[j]), float(values[j])))
        if lo > hi:
            lo, hi = float(x_grid[i0]), float(x_grid[i1])
        out.append((lo, hi))
    return out


def _complement_intervals(x_grid, D) -> List[Tuple[float, float]]:
    out = []
    prev = float(x_grid[0])
    for lo, hi in D:
        if lo > prev:
            out.append((prev, lo))
        prev = max(prev, hi)
    if prev < float(x_grid[-1]):
        out.append((prev, float(x_grid[-1])))
    return out


# --------------------------------------------------------------------------
# single player
# --------------------------------------------------------------------------

def _envelope_pass(st: ScaleTransform, tob: TransformedObstacle):
    """Anchored least concave majorant of the scaled payoff; returns
    (env values on the real grid, contact mask, extended (y, env) arrays
    for interpolation)."""
    y = st.y_grid
    w = tob.wg
    origin_lim = tob.origin_limit
    far_lim = tob.far_limit
    if not math.isfinite(origin_lim) or not math.isfinite(far_lim):
        raise NoFiniteValue("payoff growth at a natural boundary admits no "
                            "finite value (estimated limit is infinite)")
    span = y[-1] - y[0]
    if st.direction == USE_PSI:
        # origin (y=0) on the left, unbounded on the right
        yy = np.concatenate([[0.0], y])
        ff = np.concatenate([[origin_lim], w])
        w_rng = float(np.max(np.abs(w))) or 1.0
        if far_lim <= 1e-12 * w_rng:
            res = least_concave_majorant(yy, ff, right_anchor=FLAT)
            ye, ve = yy, res.values
        else:
            yv = y[-1] + 1e9 * span
            yy2 = np.concatenate([yy, [yv]])
            ff2 = np.concatenate([ff, [far_lim * yv]])
            res = least_concave_majorant(yy2, ff2)
            ye, ve = yy2, res.values
        env = ve[1:len(y) + 1]
    else:
        # origin (y=0) on the right, unbounded on the left (y -> -inf)
        yy = np.concatenate([y, [0.0]])
        ff = np.concatenate([w, [origin_lim]])
        w_rng = float(np.max(np.abs(w))) or 1.0
        if far_lim <= 1e-12 * w_rng:
            res = least_concave_majorant(yy, ff, left_anchor=FLAT)
            ye, ve = yy, res.values
        else:
            yv = y[0] - 1e9 * span
            yy2 = np.concatenate([[yv], yy])
            ff2 = np.concatenate([[far_lim * abs(yv)], ff])
            res = least_concave_majorant(yy2, ff2)
            ye, ve = yy2, res.values
        env = ve[:len(y)] if ye is yy else ve[1:len(y) + 1]
    # contact points are hull vertices, so env == w there up to rounding;
    # a tight tolerance keeps the mask edge close to the true free boundary
    tol_eq = 1e-11 * (float(np.max(w) - np.min(w)) or 1.0)
    contact = (env - w) <= tol_eq
    return env, contact, ye, ve


def _check_stopping_assumptions(tob, options):
    rep = check_assumptions(tob)
    l_a = options.l_a_override if options.l_a_override is not None else tob.l_a
    l_b = options.l_b_override if options.l_b_override is not None else tob.l_b
    if not math.isfinite(l_a) or not math.isfinite(l_b):
        raise NoFiniteValue("boundary growth limit is infinite: l_a=%g l_b=%g"
                            % (tob.l_a, tob.l_b))
    wg_scale = max(float(np.max(np.abs(tob.wg))), 1.0)
    ok = (l_a <= 1e-6 * wg_scale) and (l_b <= 1e-6 * wg_scale)
    if not ok and not options.override_assumptions:
        raise AssumptionUnverified(
            "boundary growth limits not negligible (l_a=%g, l_b=%g); rerun "
            "with override_assumptions=True to proceed" % (l_a, l_b))
    return rep


def solve_stopping(spec: DiffusionSpec, payoff,
                   options: SolveOptions = SolveOptions()) -> StoppingSolution:
    """Value, regions and thresholds of the discounted stopping problem."""
    if getattr(payoff, "H", None) is not None:
        raise ConfigurationError("payoff has an upper obstacle H; use solve_game")
    fund = fundamental_solutions(spec)
    x_range = options.x_range or _default_x_range(spec, payoff)
    sol = _solve_stopping_dir(fund, payoff, options, x_range, options.direction)
    if options.cross_check:
        other = USE_PHI if options.direction == USE_PSI else USE_PSI
        alt = _solve_stopping_dir(fund, payoff, options, x_range, other)
        xs = np.exp(np.linspace(math.log(x_range[0] * 1.5),
                                math.log(x_range[1] / 1.5), 21)) \
            if x_range[0] > 0 else np.linspace(x_range[0], x_range[1], 23)[1:-1]
        v1 = np.asarray(sol.V(xs), float)
        v2 = np.asarray(alt.V(xs), float)
        scale = float(np.max(np.abs(v1))) or 1.0
        gap = float(np.max(np.abs(v1 - v2))) / scale
        if gap > 1e-3:
            raise NumericalError("dual-route solutions disagree (rel %g)" % gap)
        sol = replace(sol, dual_gap=gap)
    return sol


def _solve_stopping_dir(fund, payoff, options, x_range, direction,
                        x_fixed=None) -> StoppingSolution:
    n = options.n
    if x_fixed is not None:
        x_grid = np.asarray(x_fixed, float)
        st = _make_st(fund, x_grid, direction)
    else:
        st = build_scale(fund, n, spacing=options.spacing, direction=direction,
                         x_range=x_range)
        x_grid = st.x_grid
    tob = transform_payoff(st, payoff)
    rep = _check_stopping_assumptions(tob, options)

    env = contact = ye = ve = None
    for _ in range(max(options.refine_rounds, 1)):
        env, contact, ye, ve = _envelope_pass(st, tob)
        trans = _transitions(contact)
        # stop when every transition segment is already extremely narrow
        y = st.y_grid
        span = y[-1] - y[0]
        trans = [j for j in trans if (y[j + 1] - y[j]) > 1e-13 * span]
        if not trans:
            break
        x_grid, changed = _insert_refinement(fund, direction, x_grid, y,
                                             trans, options.refine_points)
        if not changed:
            break
        st = _make_st(fund, x_grid, direction)
        tob = transform_payoff(st, payoff)

    y_grid = st.y_grid
    D = _polished_intervals(fund, direction, payoff.G, x_grid, y_grid,
                            contact, contact, env)
    C = _complement_intervals(x_grid, D)
    a_star = b_star = None
    # interior stopping edges (free boundaries)
    for lo, hi in D:
        if lo > x_grid[0] * (1 + 1e-12) and lo > x_grid[0]:
            a_star = lo if a_star is None else min(a_star, lo)
        if hi < x_grid[-1] and hi > x_grid[0]:
            b_star = hi if b_star is None else max(b_star, hi)
    V = _make_value(payoff.G, None, fund, direction, ye, ve)
    return StoppingSolution(V=V, C=C, D=D, a_star=a_star, b_star=b_star,
                            x_grid=x_grid, y_grid=y_grid, w_values=tob.wg,
                            v_scaled=env, contact=contact, direction=direction,
                            assumptions=rep)


def _make_st(fund, x_grid, direction):
    sval = fund.F if direction == USE_PSI else fund.F_tilde
    y_grid = np.asarray(sval(x_grid), float)
    return ScaleTransform(fund, x_grid, y_grid, direction)


def _make_value(G, H, fund, direction, y_ext, v_ext):
    sval = fund.F if direction == USE_PSI else fund.F_tilde
    den = fund.psi if direction == USE_PSI else fund.phi

    def V(x):
        x = np.asarray(x, float)
        y = np.asarray(sval(x), float)
        chord = np.interp(y, y_ext, v_ext) * np.asarray(den(x), float)
        out = np.maximum(np.asarray(G(x), float), chord)
        if H is not None:
            out = np.minimum(out, np.asarray(H(x), float))
        return out if out.ndim else float(out)

    return V


def solve_stopping_absorbed(spec: DiffusionSpec, payoff, alpha: float,
                            beta: float,
                            options: SolveOptions = SolveOptions()) -> StoppingSolution:
    """Stopping problem for the diffusion absorbed at [alpha, beta]."""
    a, b = spec.interval
    if not (a < alpha <= beta < b):
        raise ConfigurationError("need a < alpha <= beta < b")
    fund = fundamental_solutions(spec)
    if alpha == beta:
        g0 = float(np.asarray(payoff.G(alpha), float))
        V = lambda x: g0 + 0.0 * np.asarray(x, float)
        rep = None
        return StoppingSolution(V=V, C=[], D=[(alpha, beta)], a_star=None,
                                b_star=None, x_grid=np.array([alpha]),
                                y_grid=np.array([fund.F(alpha)]),
                                w_values=np.array([g0]), v_scaled=np.array([g0]),
                                contact=np.array([True]), direction=options.direction,
                                assumptions=rep)
    direction = options.direction
    n = options.n
    st = build_scale(fund, n, spacing=options.spacing, direction=direction,
                     x_range=(alpha, beta))
    x_grid = st.x_grid
    env = contact = None
    for _ in range(max(options.refine_rounds, 1)):
        tob = transform_payoff(st, payoff)
        y = st.y_grid
        res = least_concave_majorant(y, tob.wg)
        env = res.values
        tol_eq = 1e-11 * (float(np.max(tob.wg) - np.min(tob.wg)) or 1.0)
        contact = (env - tob.wg) <= tol_eq
        span = y[-1] - y[0]
        trans = [j for j in _transitions(contact) if (y[j + 1] - y[j]) > 1e-13 * span]
        if not trans:
            break
        x_grid, changed = _insert_refinement(fund, direction, x_grid, y, trans,
                                             options.refine_points)
        if not changed:
            break
        st = _make_st(fund, x_grid, direction)
    y_grid = st.y_grid
    D = _intervals_from_mask(x_grid, contact)
    C = _intervals_from_mask(x_grid, ~contact)
    a_star = min((hi for lo, hi in D if lo <= x_grid[0] * (1 + 1e-15)), default=None)
    b_star = None
    interior = [lo for lo, hi in D if lo > x_grid[0]]
    if interior:
        b_star = min(interior)
    V = _make_value(payoff.G, None, fund, direction, y_grid, env)
    rep = check_assumptions(transform_payoff(st, payoff))
    return StoppingSolution(V=V, C=C, D=D, a_star=a_star, b_star=b_star,
                            x_grid=x_grid, y_grid=y_grid,
                            w_values=transform_payoff(st, payoff).wg,
                            v_scaled=env, contact=contact, direction=direction,
                            assumptions=rep)


# --------------------------------------------------------------------------
# two players
# --------------------------------------------------------------------------

def solve_game(spec: DiffusionSpec, payoff,
               options: SolveOptions = SolveOptions()) -> GameSolution:
    """Value, regions, thresholds and equilibrium type of the stopping game."""
    if getattr(payoff, "H", None) is None:
        raise ConfigurationError("game requires an upper obstacle H")
    fund = fundamental_solutions(spec)
    x_range = options.x_range or _default_x_range(spec, payoff)
    direction = options.direction
    st = build_scale(fund, options.n, spacing=options.spacing,
                     direction=direction, x_range=x_range)
    x_grid = st.x_grid

    te = tob = None
    for _ in range(max(options.refine_rounds, 1)):
        tob = transform_payoff(st, payoff)
        tol_eq = options.tol_eq
        if tol_eq is None:
            tol_eq = 1e-11 * (float(np.max(tob.wh) - np.min(tob.wg)) or 1.0)
        te = barrier.taut_string(tob, w0=options.w0, tol_eq=tol_eq)
        y = st.y_grid
        span = y[-1] - y[0]
        trans = set(_transitions(te.contact_lower)) | set(_transitions(te.contact_upper))
        trans = sorted(j for j in trans if (y[j + 1] - y[j]) > 1e-13 * span)
        if not trans:
            break
        x_grid, changed = _insert_refinement(fund, direction, x_grid, y, trans,
                                             options.refine_points)
        if not changed:
            break
        st = _make_st(fund, x_grid, direction)

    y_grid = st.y_grid
    rep = check_assumptions(tob)
    support = te.contact_lower | te.contact_upper
    D_plus = _polished_intervals(fund, direction, payoff.G, x_grid, y_grid,
                                 te.contact_lower, support, te.values)
    D_minus = _polished_intervals(fund, direction, payoff.H, x_grid, y_grid,
                                  te.contact_upper & ~te.contact_lower,
                                  support, te.values)
    equilibrium = _classify(tob, rep, te, options)

    V = _make_value(payoff.G, payoff.H, fund, direction,
                    y_grid, te.values)
    sol = GameSolution(
        V=V, D_plus=D_plus, D_minus=D_minus,
        tau_thresholds=D_plus, sigma_thresholds=D_minus,
        equilibrium=equilibrium, x_grid=x_grid, y_grid=y_grid,
        wg=tob.wg, wh=tob.wh, v_scaled=te.values,
        contact_lower=te.contact_lower, contact_upper=te.contact_upper,
        direction=direction, assumptions=rep)
    return sol


def _classify(tob, rep, te, options):
    l_a = options.l_a_override if options.l_a_override is not None else tob.l_a
    l_b = options.l_b_override if options.l_b_override is not None else tob.l_b
    wg_scale = max(float(np.max(np.abs(tob.wg))), 1.0)
    la0 = l_a <= 1e-6 * wg_scale
    lb0 = l_b <= 1e-6 * wg_scale
    n = len(tob.wg)
    if not (la0 and lb0):
        # nonzero growth at a boundary: Nash iff the sup-player's contact
        # reaches that boundary; otherwise only a maximizing sequence exists.
        # The end point itself is excluded: a pinned end always touches.
        for end_slice, bad in ((slice(1, 4), not la0), (slice(n - 4, n - 1), not lb0)):
            if bad and not bool(np.any(te.contact_lower[end_slice])):
                return NO_NASH
        return NASH_SADDLE
    if not bool(np.any(te.contact_upper & ~te.contact_lower)):
        return DEGENERATE
    if tob.origin_gap_limit > tob.tol_gap and options.w0 is not None:
        return STACKELBERG_ONLY
    return NASH_SADDLE


def threshold_pair(intervals: Sequence[Tuple[float, float]], x0: float,
                   lo_default=-math.inf, hi_default=math.inf) -> Tuple[float, float]:
    """Nearest stopping-region edges around x0 as a threshold pair."""
    lo, hi = lo_default, hi_default
    for a, b in intervals:
        if a <= x0 <= b:
            return (x0, x0)
        if b < x0:
            lo = max(lo, b)
        if a > x0:
            hi = min(hi, a)
    return (lo, hi)


# --------------------------------------------------------------------------
# smooth fit diagnostics
# --------------------------------------------------------------------------

def smooth_fit_grid(y, f, v, contact, tol_rel=1e-7) -> list:
    """Discrete smooth-fit containment at contact-region edges on a grid.

    At each edge between contact and non-contact, the slope of v on the
    non-contact side must lie between the one-sided slopes of the
    obstacle f at the edge (interval containment for kinked obstacles).
    """
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    v = np.asarray(v, float)
    m = np.asarray(contact, bool)
    n = len(y)
    scale = (float(np.max(np.abs(f))) or 1.0) / (float(y[-1] - y[0]) or 1.0)
    tol = tol_rel * max(scale, 1.0) * (float(y[-1] - y[0]) or 1.0)
    out = []
    for i, j in _runs(m):
        for edge, side in ((i, -1), (j, +1)):
            k = edge + side
            if k < 0 or k >= n:
                continue  # contact reaches the grid end: no free boundary
            cont_slope = (v[k] - v[edge]) / (y[k] - y[edge])
            slopes = []
            if edge - 1 >= 0:
                slopes.append((f[edge] - f[edge - 1]) / (y[edge] - y[edge - 1]))
            if edge + 1 < n:
                slopes.append((f[edge + 1] - f[edge]) / (y[edge + 1] - y[edge]))
            lo, hi = min(slopes), max(slopes)
            contained = (lo - tol * scale <= cont_slope <= hi + tol * scale)
            out.append({"index": int(edge), "side": side,
                        "continuation_slope": float(cont_slope),
                        "payoff_slope_interval": (float(lo), float(hi)),
                        "contained": bool(contained)})
    return out


def smooth_fit_report(sol, payoff) -> list:
    """Smooth-fit containment at each free boundary, in scale coordinates.

    For each interior stopping edge x*: the derivative d/dF of the scaled
    value from the continuation side must lie in the interval of one-sided
    derivatives d/dF of the scaled payoff at x*.
    """
    if isinstance(sol, GameSolution):
        checks = [(sol.D_plus, sol.wg, sol.contact_lower),
                  (sol.D_minus, sol.wh, sol.contact_upper)]
    else:
        checks = [(sol.D, sol.w_values, sol.contact)]
    out = []
    for _, f, mask in checks:
        out.extend(smooth_fit_grid(sol.y_grid, f, sol.v_scaled, mask))
    return out
