"""Payoff rescaling into natural scale.

Under UsePsiScale the obstacle pair is wg = G/psi and wh = H/psi as
functions of y = F(x); under UsePhiScale it is G/phi, H/phi against
y = F~(x).  The boundary growth limits

    l_a = limsup_{x -> a} G^+(x)/psi(x),   l_b = limsup_{x -> b} G^+(x)/phi(x)

govern existence (both must vanish for the standard theory) and the
Nash classification of games.  The gap limits of (H - G) with the same
normalizations decide whether the obstacles are "stuck together" at the
boundaries, i.e. whether the discounted payoffs of the two players
coincide in the limit along the diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GrowthViolation, ObstacleOrderViolation
from .scale import USE_PSI, ScaleTransform


@dataclass(frozen=True)
class TransformedObstacle:
    st: ScaleTransform
    wg: np.ndarray
    wh: Optional[np.ndarray]
    l_a: float                  # limsup G+/psi at a (may be +inf)
    l_b: float                  # limsup G+/phi at b (may be +inf)
    w0: float                   # value convention at the natural-scale origin
    gap_a: float                # lim (H-G)+/psi at a (0 when H absent)
    gap_b: float                # lim (H-G)+/phi at b
    gap_ends: tuple             # raw (wh-wg) at the two grid ends
    tol_gap: float
    far_gap_sublinear: bool = False   # raw gap grows sublinearly in y at the far end

    @property
    def origin_index(self) -> int:
        return 0 if self.st.direction == USE_PSI else len(self.wg) - 1

    @property
    def origin_limit(self) -> float:
        """Boundary growth limit of G at the scale-origin end."""
        return self.l_a if self.st.direction == USE_PSI else self.l_b

    @property
    def far_limit(self) -> float:
        """Boundary growth limit of G at the unbounded (far) end."""
        return self.l_b if self.st.direction == USE_PSI else self.l_a

    @property
    def far_gap_limit(self) -> float:
        return self.gap_b if self.st.direction == USE_PSI else self.gap_a

    @property
    def origin_gap_limit(self) -> float:
        return self.gap_a if self.st.direction == USE_PSI else self.gap_b


@dataclass(frozen=True)
class AssumptionReport:
    g_le_h: bool
    stuck_together: bool
    l_a_zero: bool
    l_b_zero: bool
    l_a: float
    l_b: float
    gap_a: float
    gap_b: float
    gap_ends: tuple
    tol_gap: float

    @property
    def all_ok(self) -> bool:
        return self.g_le_h and self.stuck_together and self.l_a_zero and self.l_b_zero


def _boundary_samples(bnd: float, x0: float) -> np.ndarray:
    """Points marching geometrically from x0 toward the boundary bnd.

    Geometric spacing makes slow power-law decay or growth visible, which
    adjacent grid points (whose spacing depends on refinement history)
    cannot resolve."""
    ks = np.arange(25, dtype=float)
    if math.isfinite(bnd):
        return bnd + (x0 - bnd) * 2.0 ** (-ks)
    step = max(abs(x0), 1.0)
    sign = 1.0 if bnd > 0 else -1.0
    return x0 + sign * step * (2.0 ** ks - 1.0)


def _limit_at(x_tail: np.ndarray, num, den) -> float:
    """Limit of num+/den along x_tail (ordered toward the boundary).

    Plateauing samples give the plateau; increments that fail to decay
    (log-type or faster divergence) give +inf."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        v = np.maximum(np.asarray(num(x_tail), float), 0.0) \
            / np.asarray(den(x_tail), float)
    v = v[np.isfinite(v)]
    if len(v) < 3:
        return math.inf
    scale = float(np.max(np.abs(v))) or 1.0
    if scale <= 1e-300:
        return 0.0
    d1 = v[-1] - v[-2]
    d2 = v[-2] - v[-3]
    if d1 > 0 and d1 >= 0.9 * d2 and d1 > 1e-8 * scale:
        return math.inf
    return float(max(v[-1], 0.0))


def transform_payoff(st: ScaleTransform, payoff, w0: float = 0.0,
                     tol_gap: Optional[float] = None) -> TransformedObstacle:
    """Build the rescaled obstacle pair on the y-grid of ``st``."""
    x = st.x_grid
    den = np.asarray(st.denominator(x), float)
    gvals = np.asarray(payoff.G(x), float)
    wg = gvals / den
    h = getattr(payoff, "H", None)
    wh = None
    if h is not None:
        hvals = np.asarray(h(x), float)
        if np.any(hvals < gvals - 1e-12 * (np.max(np.abs(gvals)) or 1.0)):
            raise ObstacleOrderViolation("H < G somewhere on the grid")
        wh = hvals / den

    fund = st.fund
    a_bnd, b_bnd = fund.interval
    left_tail = _boundary_samples(a_bnd, float(x[0]))
    right_tail = _boundary_samples(b_bnd, float(x[-1]))
    l_a = _limit_at(left_tail, payoff.G, fund.psi)
    l_b = _limit_at(right_tail, payoff.G, fund.phi)
    far_sublinear = False
    if h is not None:
        gap = lambda t: np.asarray(h(t), float) - np.asarray(payoff.G(t), float)
        gap_a = _limit_at(left_tail, gap, fund.psi)
        gap_b = _limit_at(right_tail, gap, fund.phi)
        gap_ends = (float(wh[0] - wg[0]), float(wh[-1] - wg[-1]))
        if tol_gap is None:
            tol_gap = 1e-3 * (float(np.max(wh) - np.min(wg)) or 1.0)
        # sublinearity of the raw gap in y at the far (unbounded) end:
        # gap(y)/|y| decreasing toward the boundary means the obstacles are
        # asymptotically parallel and a far-field pin is admissible
        yg = st.y_grid
        raw_gap = wh - wg
        # sample gap/|y| at geometrically spaced |y| (|y_far| / 2^k), so a
        # power-law gap ~ |y|^p with p < 1 shows a clear decay toward the
        # boundary that a handful of adjacent grid points cannot reveal
        if st.direction == USE_PSI:
            far = len(yg) - 1
            targets = yg[far] / 2.0 ** np.arange(6)
            idx = np.clip(np.searchsorted(yg, targets), 0, far)
        else:
            far = 0
            targets = yg[far] / 2.0 ** np.arange(6)   # negative, rising to 0
            idx = np.clip(np.searchsorted(yg, targets), 0, len(yg) - 1)
        idx = idx[np.abs(yg[idx]) > 0]
        s = raw_gap[idx] / np.abs(yg[idx])
        # s[0] is closest to the boundary
        if len(s) >= 3:
            tiny = 1e-12 * (abs(float(s[-1])) or 1.0)
            far_sublinear = bool(np.all(np.diff(s) >= -tiny)
                                 and s[0] < 0.7 * s[-1])
    else:
        gap_a = gap_b = 0.0
        gap_ends = (0.0, 0.0)
        if tol_gap is None:
            tol_gap = 1e-3 * (float(np.max(wg) - np.min(wg)) or 1.0)

    return TransformedObstacle(st, wg, wh, l_a, l_b, w0,
                               gap_a, gap_b, gap_ends, float(tol_gap),
                               far_gap_sublinear=far_sublinear)


def check_assumptions(tob: TransformedObstacle, tol_limit: float = 1e-6) -> AssumptionReport:
    """Diagnostic report on the standing assumptions (no exceptions raised)."""
    g_le_h = True
    if tob.wh is not None:
        rng = float(np.max(tob.wh) - np.min(tob.wg)) or 1.0
        g_le_h = bool(np.all(tob.wh >= tob.wg - 1e-12 * rng))
    wg_scale = max(float(np.max(np.abs(tob.wg))), 1.0)
    stuck = (tob.gap_a <= tob.tol_gap) and (tob.gap_b <= tob.tol_gap)
    return AssumptionReport(
        g_le_h=g_le_h,
        stuck_together=bool(stuck),
        l_a_zero=bool(tob.l_a <= tol_limit * wg_scale),
        l_b_zero=bool(tob.l_b <= tol_limit * wg_scale),
        l_a=tob.l_a, l_b=tob.l_b, gap_a=tob.gap_a, gap_b=tob.gap_b,
        gap_ends=tob.gap_ends, tol_gap=tob.tol_gap)


def require_growth(tob: TransformedObstacle, tol: float = 1e-6):
    """Raise GrowthViolation when a boundary growth limit is not ~0."""
    if not math.isfinite(tob.l_a) or tob.l_a > tol * max(1.0, float(np.max(np.abs(tob.wg)))):
        raise GrowthViolation("l_a = %g is not negligible" % tob.l_a)
    if not math.isfinite(tob.l_b) or tob.l_b > tol * max(1.0, float(np.max(np.abs(tob.wg)))):
        raise GrowthViolation("l_b = %g is not negligible" % tob.l_b)
