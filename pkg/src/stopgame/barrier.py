"""Two-obstacle kernel: barrier-constrained biconjugates as a taut string.

The game value in natural scale is the "shortest path" v between the
rescaled obstacles wg <= v <= wh with pinned ends: affine where strictly
between the obstacles, concave at lower contacts, convex at upper
contacts.  The taut string is the computational definition; a
double-obstacle fixpoint iteration and four literal sup/inf formulas
(via line probes and spike-variation levels) serve as independent
oracles.

End handling on truncated grids: an end where the corridor pinches
(wh - wg <= tol_gap) is pinned to the midpoint.  An end that represents
an unbounded natural boundary where the gap grows *sublinearly* in the
scale coordinate is emulated with a far-field virtual point: the string
is pinned to a flat extension of wg at a coordinate FAR_FACTOR grid
widths away, which converges to the "pulled to infinity" configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EndsNotAnchored, GridTooLarge, NoConvergence
from .scale import USE_PSI

SUPSUP = "SupSup"
INFINF = "InfInf"
INFSUP = "InfSup"
SUPINF = "SupInf"

FAR_FACTOR = 1e9

PIN = "pin"
FAR = "far"


@dataclass(frozen=True)
class GridObstacle:
    """A bare corridor (test/oracle input) without diffusion context."""

    y: np.ndarray
    wg: np.ndarray
    wh: np.ndarray
    tol_gap: Optional[float] = None

    @staticmethod
    def make(y, wg, wh, tol_gap=None):
        return GridObstacle(np.asarray(y, float), np.asarray(wg, float),
                            np.asarray(wh, float), tol_gap)


@dataclass(frozen=True)
class TautEnvelope:
    values: np.ndarray
    eps_star: np.ndarray        # values - wg  (spike variation of the lower obstacle)
    delta_star: np.ndarray      # wh - values  (spike variation of the upper obstacle)
    contact_lower: np.ndarray   # bool
    contact_upper: np.ndarray   # bool
    tol_eq: float
    knots: Tuple[Tuple[int, float], ...]  # (index, value) support points of the string


@dataclass(frozen=True)
class LineProbe:
    l_G: float
    r_G: float
    l_H: float
    r_H: float
    L: float
    R: float


def _corridor(tob):
    """Extract (y, wg, wh, tol_gap) from a TransformedObstacle or GridObstacle."""
    if hasattr(tob, "st"):
        y = np.asarray(tob.st.y_grid, float)
    else:
        y = np.asarray(tob.y, float)
    wg = np.asarray(tob.wg, float)
    wh = np.asarray(tob.wh, float)
    tol_gap = getattr(tob, "tol_gap", None)
    if tol_gap is None:
        tol_gap = 1e-3 * (float(np.max(wh) - np.min(wg)) or 1.0)
    return y, wg, wh, float(tol_gap)


def _end_policies(tob, y, wg, wh, tol_gap, w0=None):
    """Decide pin/far-field treatment for the two grid ends."""
    policies = []
    n = len(y)
    origin_index = getattr(tob, "origin_index", 0)
    far_sublinear = getattr(tob, "far_gap_sublinear", False)
    for end, idx in (("left", 0), ("right", n - 1)):
        gap = wh[idx] - wg[idx]
        if gap <= tol_gap:
            pin = 0.5 * (wg[idx] + wh[idx])
            if w0 is not None and idx == origin_index:
                pin = min(max(w0, wg[idx]), wh[idx])
            policies.append((PIN, pin))
        elif idx != origin_index and far_sublinear:
            policies.append((FAR, None))
        elif w0 is not None and idx == origin_index:
            policies.append((PIN, min(max(w0, wg[idx]), wh[idx])))
        else:
            raise EndsNotAnchored(
                "obstacle gap %g at the %s end exceeds tol_gap=%g and no "
                "admissible far-field/override applies; the problem needs the "
                "Nash classification path" % (gap, end, tol_gap))
    return policies


def _taut_core(y, lo, hi):
    """Taut string through the corridor [lo, hi] with pinched ends.

    Greedy scan with restart at each forced contact; returns the support
    knots (index, value).  Requires lo[0]==hi[0] and lo[-1]==hi[-1].
    """
    n = len(y)
    knots = [(0, float(lo[0]))]
    ai, av = 0, float(lo[0])
    while ai < n - 1:
        smin, smax = -math.inf, math.inf
        jmin = jmax = ai + 1
        contact = None
        i = ai + 1
        while i < n:
            dy = y[i] - y[ai]
            shi = (hi[i] - av) / dy
            slo = (lo[i] - av) / dy
            if shi < smin:
                contact = ("lo", jmin)
                break
            if slo > smax:
                contact = ("hi", jmax)
                break
            if shi < smax:
                smax, jmax = shi, i
            if slo > smin:
                smin, jmin = slo, i
            i += 1
        if contact is None:
            knots.append((n - 1, float(lo[n - 1])))
            break
        side, j = contact
        av = float(lo[j]) if side == "lo" else float(hi[j])
        ai = j
        knots.append((j, av))
    return knots


def taut_string_grid(y, wg, wh, left=(PIN, None), right=(PIN, None),
                     tol_eq: Optional[float] = None) -> TautEnvelope:
    """Taut string on explicit arrays with explicit end policies.

    Each policy is ("pin", value) -- value None meaning the corridor
    midpoint -- or ("far", None) for the far-field emulation of an
    unbounded natural boundary.
    """
    y = np.asarray(y, float)
    wg = np.asarray(wg, float)
    wh = np.asarray(wh, float)
    n = len(y)
    span = y[-1] - y[0]
    ys, lo, hi = [y], [wg.copy()], [wh.copy()]

    def pin_value(policy, idx):
        v = policy[1]
        if v is None:
            v = 0.5 * (wg[idx] + wh[idx])
        return min(max(v, wg[idx]), wh[idx])

    offset = 0
    if left[0] == PIN:
        lo[0][0] = hi[0][0] = pin_value(left, 0)
    else:  # far-field on the left
        yv = y[0] - FAR_FACTOR * span
        ys.insert(0, np.array([yv]))
        lo.insert(0, np.array([wg[0]]))
        hi.insert(0, np.array([wg[0]]))
        offset = 1
    if right[0] == PIN:
        lo[-1][-1] = hi[-1][-1] = pin_value(right, n - 1)
    else:
        yv = y[-1] + FAR_FACTOR * span
        ys.append(np.array([yv]))
        lo.append(np.array([wg[-1]]))
        hi.append(np.array([wg[-1]]))
    yy = np.concatenate(ys)
    ll = np.concatenate(lo)
    hh = np.concatenate(hi)

    knots = _taut_core(yy, ll, hh)
    ky = np.array([yy[i] for i, _ in knots])
    kv = np.array([v for _, v in knots])
    v = np.interp(y, ky, kv)
    # clip rounding noise into the corridor
    v = np.minimum(np.maximum(v, wg), wh)

    rng = float(np.max(wh[np.isfinite(wh)]) - np.min(wg)) or 1.0
    if tol_eq is None:
        tol_eq = 1e-9 * rng
    eps = v - wg
    dlt = wh - v
    real_knots = tuple((i - offset, val) for i, val in knots
                       if 0 <= i - offset < n)
    return TautEnvelope(v, eps, dlt, eps <= tol_eq, dlt <= tol_eq,
                        float(tol_eq), real_knots)


def taut_string(tob, w0: Optional[float] = None,
                tol_eq: Optional[float] = None) -> TautEnvelope:
    """Taut string for a TransformedObstacle (or bare GridObstacle)."""
    y, wg, wh, tol_gap = _corridor(tob)
    left, right = _end_policies(tob, y, wg, wh, tol_gap, w0=w0)
    return taut_string_grid(y, wg, wh, left, right, tol_eq=tol_eq)


def double_obstacle_fixpoint(tob, tol: float = 1e-12, max_iter: int = 2_000_000,
                             tol_eq: Optional[float] = None) -> TautEnvelope:
    """Oracle: discrete double-obstacle problem by median (Gauss-Seidel red/black)
    iteration v_i <- median(wg_i, (v_{i-1}+v_{i+1})/2, wh_i) with pinned ends.
    """
    y, wg, wh, tol_gap = _corridor(tob)
    n = len(y)
    if wh[0] - wg[0] > tol_gap or wh[-1] - wg[-1] > tol_gap:
        raise EndsNotAnchored("fixpoint oracle requires anchored (pinched) ends")
    v = 0.5 * (wg + wh)
    rng = float(np.max(wh) - np.min(wg)) or 1.0
    tol_abs = tol * rng
    # nonuniform grid: harmonic average respecting spacings keeps the fixpoint
    # the piecewise-linear taut string; with dl = y_i - y_{i-1}, dr = y_{i+1} - y_i
    # the affine interpolation is (dr*v_{i-1} + dl*v_{i+1}) / (dl + dr)
    dl = np.diff(y)[:-1]
    dr = np.diff(y)[1:]
    den = dl + dr
    idx = np.arange(1, n - 1)
    red = idx[(idx % 2) == 1]
    black = idx[(idx % 2) == 0]
    for it in range(max_iter):
        old = v.copy()
        for group in (red, black):
            mid = (dr[group - 1] * v[group - 1] + dl[group - 1] * v[group + 1]) / den[group - 1]
            v[group] = np.minimum(np.maximum(mid, wg[group]), wh[group])
        change = float(np.max(np.abs(v - old))) if n > 2 else 0.0
        if change <= tol_abs:
            break
    else:
        raise NoConvergence(max_iter)
    if tol_eq is None:
        tol_eq = 1e-9 * rng
    eps = v - wg
    dlt = wh - v
    return TautEnvelope(v, eps, dlt, eps <= tol_eq, dlt <= tol_eq, float(tol_eq), ())


# --------------------------------------------------------------------------
# line probes and spike-variation machinery (oracles / diagnostics)
# --------------------------------------------------------------------------

def _nearest_crossing(y, f, line, ix, side, tol=0.0):
    """Nearest root of f - line on one side of index ix (piecewise linear).

    side=-1: largest root <= y[ix]; side=+1: smallest root >= y[ix].
    A root at ix itself (within tol) counts on both sides.  Returns +-inf
    when no root exists on that side.
    """
    d = f - line
    if abs(d[ix]) <= tol:
        return float(y[ix])
    if side < 0:
        seg = d[ix::-1]
        ys = y[ix::-1]
    else:
        seg = d[ix:]
        ys = y[ix:]
    if len(seg) < 2:
        return -math.inf if side < 0 else math.inf
    hit = (seg[:-1] * seg[1:] < 0.0) | (seg[1:] == 0.0)
    idx = np.nonzero(hit)[0]
    if len(idx) == 0:
        return -math.inf if side < 0 else math.inf
    k = int(idx[0])
    dp, dj = seg[k], seg[k + 1]
    if dj == 0.0:
        return float(ys[k + 1])
    t = dp / (dp - dj)
    return float(ys[k] + t * (ys[k + 1] - ys[k]))


def _corridor_exit(y, wg, wh, line, ix, side):
    """Exit point of the line from the region {wg <= line <= wh} on one side."""
    below = line - wg      # < 0 means outside (under the lower obstacle)
    above = wh - line      # < 0 means outside (over the upper obstacle)
    if side < 0:
        bel, abv, ys = below[ix::-1], above[ix::-1], y[ix::-1]
    else:
        bel, abv, ys = below[ix:], above[ix:], y[ix:]
    out = (bel < 0.0) | (abv < 0.0)
    idx = np.nonzero(out[1:])[0]
    if len(idx) == 0:
        return -math.inf if side < 0 else math.inf
    k = int(idx[0])           # exit within segment (k, k+1) of the slice
    cands = []
    for d in (bel, abv):
        dp, dj = d[k], d[k + 1]
        if dj < 0.0 <= dp:
            t = dp / (dp - dj)
            cands.append(ys[k] + t * (ys[k + 1] - ys[k]))
        elif dj < 0.0 and dp < 0.0:
            cands.append(ys[k])
    if side < 0:
        return float(max(cands))
    return float(min(cands))


def line_probe(tob, x_index: int, c: float, p: float) -> LineProbe:
    """Intercepts of the line y -> p + c (y - y_x) with wg, wh around x."""
    y, wg, wh, _ = _corridor(tob)
    line = p + c * (y - y[x_index])
    return LineProbe(
        l_G=_nearest_crossing(y, wg, line, x_index, -1),
        r_G=_nearest_crossing(y, wg, line, x_index, +1),
        l_H=_nearest_crossing(y, wh, line, x_index, -1),
        r_H=_nearest_crossing(y, wh, line, x_index, +1),
        L=_corridor_exit(y, wg, wh, line, x_index, -1),
        R=_corridor_exit(y, wg, wh, line, x_index, +1),
    )


def _interp(y, f, pos):
    return float(np.interp(pos, y, f))


def _dominates_on(y, f, line_p, line_c, y_x, lo_pos, hi_pos, tol, sense):
    """Check line >= f (sense=+1) or line <= f (sense=-1) on [lo_pos, hi_pos]."""
    lo_pos = max(lo_pos, y[0])
    hi_pos = min(hi_pos, y[-1])
    if hi_pos < lo_pos:
        return True
    inside = (y > lo_pos) & (y < hi_pos)
    pts = np.concatenate([y[inside], [lo_pos, hi_pos]])
    fv = np.interp(pts, y, f)
    line_v = line_p + line_c * (pts - y_x)
    if sense > 0:
        return bool(np.all(line_v >= fv - tol))
    return bool(np.all(line_v <= fv + tol))


def _membership_delta(y, wg, wh, ix, c, delta, tol):
    """c in the delta-subdifferential of wh in the presence of wg at ix?"""
    p = wh[ix] - delta
    line = p + c * (y - y[ix])
    l = _nearest_crossing(y, wg, line, ix, -1, tol)
    r = _nearest_crossing(y, wg, line, ix, +1, tol)
    lo = l if math.isfinite(l) else y[0]
    hi = r if math.isfinite(r) else y[-1]
    return _dominates_on(y, wh, p, c, y[ix], lo, hi, tol, sense=-1)


def _membership_eps(y, wg, wh, ix, c, eps, tol):
    """c in the eps-superdifferential of wg in the presence of wh at ix?"""
    p = wg[ix] + eps
    line = p + c * (y - y[ix])
    l = _nearest_crossing(y, wh, line, ix, -1, tol)
    r = _nearest_crossing(y, wh, line, ix, +1, tol)
    lo = l if math.isfinite(l) else y[0]
    hi = r if math.isfinite(r) else y[-1]
    return _dominates_on(y, wg, p, c, y[ix], lo, hi, tol, sense=+1)


def _spike_level(y, wg, wh, ix, c, tol, kind):
    """delta_c*(x) (kind='delta') or eps_c*(x) (kind='eps') on the grid.

    Candidate spike sizes are levels at which the shifted line passes
    through an obstacle vertex (membership changes only there); membership
    is monotone beyond the critical level, so bisection over the sorted
    candidates finds the infimum.  May exceed the local gap; +inf when no
    level works at all.
    """
    rel = y - y[ix]
    if kind == "delta":
        base = wh[ix]
        cands = np.concatenate([[0.0],
                                base + c * rel - wg,
                                base + c * rel - wh])
        member = lambda d: _membership_delta(y, wg, wh, ix, c, d, tol)
    else:
        base = wg[ix]
        cands = np.concatenate([[0.0],
                                wg - (base + c * rel),
                                wh - (base + c * rel)])
        member = lambda e: _membership_eps(y, wg, wh, ix, c, e, tol)
    cands = np.unique(np.clip(cands, 0.0, None))
    # Evaluate membership a hair above each candidate: the critical level is
    # itself borderline (the line passes exactly through a vertex) and the
    # float outcome there is noise; the upward nudge is harmless because
    # membership is monotone increasing in the spike size.
    if member(float(cands[0]) + tol):
        return float(cands[0])
    if not member(float(cands[-1]) + tol):
        return math.inf
    lo, hi = 0, len(cands) - 1    # cands[lo] fails, cands[hi] passes
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if member(float(cands[mid]) + tol):
            hi = mid
        else:
            lo = mid
    return float(cands[hi])


def modified_differentials(te, tob, x_index: int, tol: Optional[float] = None):
    """Slope intervals (sub_GH, super_HG) of the modified differentials at x.

    sub_GH  = boundary-modified subdifferential of wh in the presence of wg,
    super_HG = boundary-modified superdifferential of wg in the presence of wh.
    Each is an interval (lo, hi) or None when empty.
    """
    y, wg, wh, _ = _corridor(tob)
    if tol is None:
        tol = (te.tol_eq if te is not None
               else 1e-9 * (float(np.max(wh) - np.min(wg)) or 1.0))
    n = len(y)
    rel = y - y[x_index]
    cands = []
    for f in (wg, wh):
        mask = rel != 0.0
        cands.append((f[mask] - wg[x_index]) / rel[mask])
        cands.append((f[mask] - wh[x_index]) / rel[mask])
    cands = np.unique(np.concatenate(cands + [np.array([0.0])]))
    mids = 0.5 * (cands[1:] + cands[:-1])
    all_c = np.unique(np.concatenate([cands, mids]))

    sub = [c for c in all_c if _membership_delta(y, wg, wh, x_index, float(c), 0.0, tol)]
    sup = [c for c in all_c if _membership_eps(y, wg, wh, x_index, float(c), 0.0, tol)]
    sub_iv = (float(min(sub)), float(max(sub))) if sub else None
    sup_iv = (float(min(sup)), float(max(sup))) if sup else None
    return sub_iv, sup_iv


def _secant_slopes_both(y, wg, wh):
    pts_y = np.concatenate([y, y])
    pts_f = np.concatenate([wg, wh])
    iu, ju = np.triu_indices(len(pts_y), k=1)
    dy = pts_y[ju] - pts_y[iu]
    ok = dy != 0.0
    return np.unique((pts_f[ju][ok] - pts_f[iu][ok]) / dy[ok])


def _sup_between(y, f, lo_pos, hi_pos):
    """max of piecewise-linear f over [lo_pos, hi_pos] (clipped to the grid)."""
    lo_pos = max(lo_pos, y[0])
    hi_pos = min(hi_pos, y[-1])
    inside = (y >= lo_pos) & (y <= hi_pos)
    best = -math.inf
    if np.any(inside):
        best = float(np.max(f[inside]))
    best = max(best, _interp(y, f, lo_pos), _interp(y, f, hi_pos))
    return best


def _inf_between(y, f, lo_pos, hi_pos):
    return -_sup_between(y, -f, lo_pos, hi_pos)


def supinf_bruteforce(tob, side: str) -> np.ndarray:
    """Literal evaluation of the four extremal barrier-biconjugate formulas.

    SupSup/InfInf evaluate the line objective over the hat admissible
    neighborhoods (nearest same-obstacle intercept intervals at the critical
    spike level); at a finite intercept the objective equals the spiked
    level exactly, which is what makes these evaluations exact.  SupInf and
    InfSup implement the dual interpretation: sup of the levels reachable by
    lines that hit wg before wh (sup_c of wh - delta_c*), respectively inf
    of the levels of lines that hit wh before wg (inf_c of wg + eps_c*).
    Cost-controlled oracle: O(n^3)-ish, grids capped at 257 points.
    """
    y, wg, wh, _ = _corridor(tob)
    n = len(y)
    if n > 257:
        raise GridTooLarge("brute-force oracle limited to n <= 257 (got %d)" % n)
    tol = 1e-11 * (float(np.max(wh) - np.min(wg)) or 1.0)
    slopes = _secant_slopes_both(y, wg, wh)
    out = np.full(n, -math.inf if side in (SUPSUP, SUPINF) else math.inf)

    for ix in range(n):
        rel = y - y[ix]
        for c in slopes:
            c = float(c)
            if side in (SUPSUP, SUPINF):
                # delta-side: line through (x, wh(x) - delta_c*) minorizes wh
                # up to its nearest wg-intercepts
                dstar = _spike_level(y, wg, wh, ix, c, tol, "delta")
                if not math.isfinite(dstar):
                    continue
                p = wh[ix] - dstar
                if side == SUPSUP:
                    line = p + c * rel
                    l = _nearest_crossing(y, wg, line, ix, -1, tol)
                    r = _nearest_crossing(y, wg, line, ix, +1, tol)
                    lo = l if math.isfinite(l) else y[0]
                    hi = r if math.isfinite(r) else y[-1]
                    val = _sup_between(y, wg - c * rel, lo, hi)
                    out[ix] = max(out[ix], val)
                else:
                    # sup A1: highest level whose line hits wg before wh
                    out[ix] = max(out[ix], p)
            else:
                # eps-side: line through (x, wg(x) + eps_c*) dominates wg
                # up to its nearest wh-intercepts
                estar = _spike_level(y, wg, wh, ix, c, tol, "eps")
                if not math.isfinite(estar):
                    continue
                p = wg[ix] + estar
                if side == INFINF:
                    line = p + c * rel
                    l = _nearest_crossing(y, wh, line, ix, -1, tol)
                    r = _nearest_crossing(y, wh, line, ix, +1, tol)
                    lo = l if math.isfinite(l) else y[0]
                    hi = r if math.isfinite(r) else y[-1]
                    val = _inf_between(y, wh - c * rel, lo, hi)
                    out[ix] = min(out[ix], val)
                else:
                    # inf A2: lowest level whose line hits wh before wg
                    out[ix] = min(out[ix], p)
    return out
