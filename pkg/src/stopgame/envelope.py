"""Single-obstacle convex-analysis kernel on a grid.

Least concave majorant (upper concave hull), concave conjugate and
biconjugate, superdifferentials, and coincidence sets.  The majorant of
the rescaled payoff W = (G/psi) o F^{-1} is the value function of the
single-player stopping problem in natural scale.

Anchor semantics: ``left_anchor``/``right_anchor`` pin the envelope end
value (the grid is expected to carry the anchor coordinate, e.g. the
scale origin y=0 is prepended by the caller).  A right (left) end at a
natural boundary with vanishing payoff growth is handled with
``"flat"`` instead of a pin: the envelope is additionally constrained
to nonnegative (nonpositive) end slope, which emulates the unbounded
tail on a truncated grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import AnchorBelowF

FLAT = "flat"

Anchor = Union[None, float, str]  # None (free), value (pin), or "flat"


@dataclass(frozen=True)
class EnvelopeResult:
    values: np.ndarray          # envelope on the grid
    contact: np.ndarray         # bool: envelope touches f (within tol_eq)
    segments: List[Tuple[int, int]]  # maximal non-contact index runs [i, j]
    eps_profile: np.ndarray     # envelope - f >= 0
    tol_eq: float


def _upper_hull_values(y: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Least concave majorant of the points (y_i, f_i), O(n) monotone chain."""
    n = len(y)
    stack = [0]
    for i in range(1, n):
        while len(stack) >= 2:
            j, k = stack[-2], stack[-1]
            # pop k if it lies strictly below chord j -> i; collinear points
            # stay on the hull so concave inputs are reproduced verbatim
            if (y[k] - y[j]) * (f[i] - f[k]) > (y[i] - y[k]) * (f[k] - f[j]):
                stack.pop()
            else:
                break
        stack.append(i)
    hy = y[np.array(stack)]
    hf = f[np.array(stack)]
    return np.interp(y, hy, hf)


def _check_anchor(y, f, anchor, end: str, tol: float):
    """Flag an anchor sitting strictly below where f is heading at that end."""
    if end == "left":
        y0, y1, y2, f1, f2 = y[0], y[1], y[2], f[1], f[2]
    else:
        y0, y1, y2, f1, f2 = y[-1], y[-2], y[-3], f[-2], f[-3]
    slope = (f1 - f2) / (y1 - y2)
    extrapolated = f1 + slope * (y0 - y1)
    if anchor < min(f1, extrapolated) - tol:
        raise AnchorBelowF(
            "%s anchor %g lies below the obstacle limit (~%g); "
            "the problem has no finite value with this boundary convention"
            % (end, anchor, min(f1, extrapolated)))


def least_concave_majorant(y, f, left_anchor: Anchor = None,
                           right_anchor: Anchor = None,
                           tol_eq: Optional[float] = None) -> EnvelopeResult:
    """Pointwise-smallest concave sequence >= f honoring the anchors."""
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    if y.ndim != 1 or len(y) < 2 or np.any(np.diff(y) <= 0):
        raise ValueError("y must be strictly increasing, length >= 2")
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite")
    rng = float(np.max(f) - np.min(f)) or 1.0
    if tol_eq is None:
        tol_eq = 1e-9 * rng

    g = f.copy()
    if isinstance(left_anchor, (int, float)):
        _check_anchor(y, f, float(left_anchor), "left", 1e-6 * rng)
        g[0] = float(left_anchor)
    if isinstance(right_anchor, (int, float)):
        _check_anchor(y, f, float(right_anchor), "right", 1e-6 * rng)
        g[-1] = float(right_anchor)

    env = _upper_hull_values(y, g)

    if right_anchor == FLAT:
        m = int(np.argmax(env))
        env = env.copy()
        env[m:] = env[m]
    if left_anchor == FLAT:
        m = int(np.argmax(env))
        env = env.copy()
        env[:m + 1] = env[m]

    # snap to the obstacle where the interpolated hull agrees within a few
    # ulps: the envelope is only determined to fp rounding, and snapping
    # makes the operator exactly idempotent on already-concave inputs
    snap = 8.0 * np.finfo(float).eps * max(float(np.max(np.abs(g))), 1e-300)
    mask = np.abs(env - g) <= snap
    env[mask] = g[mask]

    eps = env - f
    contact = eps <= tol_eq
    return EnvelopeResult(env, contact, _runs(~contact), eps, tol_eq)


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal index runs [i, j] (inclusive) where mask is true."""
    runs = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def concave_conjugate(y, f, c: float) -> float:
    """f_*(c) = min_i (c y_i - f_i)."""
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    return float(np.min(c * y - f))


def biconjugate_from_conjugate(y, f, c_grid) -> np.ndarray:
    """Oracle f** by double enumeration: f**(y_i) = min_c (c y_i - f_*(c))."""
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    c = np.asarray(c_grid, float)
    fstar = np.min(c[:, None] * y[None, :] - f[None, :], axis=1)
    return np.min(c[:, None] * y[None, :] - fstar[:, None], axis=0)


def secant_slopes(y, f) -> np.ndarray:
    """All pairwise secant slopes of the points (y_i, f_i)."""
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    iu, ju = np.triu_indices(len(y), k=1)
    return (f[ju] - f[iu]) / (y[ju] - y[iu])


def superdifferential_at(y, f, i: int) -> Optional[Tuple[float, float]]:
    """Slopes c with f_j - f_i <= c (y_j - y_i) for all j, or None if empty."""
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    lo, hi = -np.inf, np.inf
    if i + 1 < len(y):
        lo = float(np.max((f[i + 1:] - f[i]) / (y[i + 1:] - y[i])))
    if i > 0:
        hi = float(np.min((f[:i] - f[i]) / (y[:i] - y[i])))
    if lo > hi:
        return None
    return (lo, hi)


def sup_tangent_construction(y, f) -> np.ndarray:
    """Envelope via tangent maximization: for each x, the largest level p

    such that the line of slope c through (y_x, p) still crosses f on
    both sides, maximized over candidate (secant) slopes c.  Test oracle
    for least_concave_majorant.
    """
    y = np.asarray(y, float)
    f = np.asarray(f, float)
    n = len(y)
    slopes = np.unique(secant_slopes(y, f))
    out = f.copy()
    for c in slopes:
        shifted = f - c * y  # line through (y_i, p): p >= f_j - c(y_j - y_i)
        left_max = np.maximum.accumulate(shifted)
        right_max = np.maximum.accumulate(shifted[::-1])[::-1]
        p = np.minimum(left_max, right_max) + c * y
        out = np.maximum(out, p)
    return out
