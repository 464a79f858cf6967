"""Scale transforms and the natural-scale grid.

All envelope computations run on a grid of y = F(x) (or y = F~(x))
values.  F = phi/psi is strictly increasing with F(a+) = 0 at a natural
left boundary; F~ = -psi/phi = -1/F is strictly increasing with
F~(b-) = 0 at a natural right boundary.  The "origin" of the natural
scale (the end where the scale coordinate tends to 0) is therefore the
left end under UsePsiScale and the right end under UsePhiScale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from .diffusion import FundamentalSolutions
from .errors import NonMonotoneScale, OutOfRange

USE_PSI = "UsePsiScale"
USE_PHI = "UsePhiScale"
UNIFORM_X = "UniformX"
UNIFORM_Y = "UniformY"


@dataclass(frozen=True)
class ScaleTransform:
    """Discrete scale grid: y_i = F(x_i) (UsePsiScale) or F~(x_i) (UsePhiScale)."""

    fund: FundamentalSolutions
    x_grid: np.ndarray
    y_grid: np.ndarray
    direction: str

    @property
    def origin_side(self) -> str:
        """Grid end at which the scale coordinate tends to 0."""
        return "left" if self.direction == USE_PSI else "right"

    def denominator(self, x):
        """psi (UsePsiScale) or phi (UsePhiScale) -- the rescaling divisor."""
        if self.direction == USE_PSI:
            return self.fund.psi(x)
        return self.fund.phi(x)

    def scale_value(self, x):
        if self.direction == USE_PSI:
            return self.fund.F(x)
        return self.fund.F_tilde(x)


def build_scale(fund: FundamentalSolutions, n: int, spacing: str = UNIFORM_Y,
                direction: str = USE_PSI,
                x_range: Tuple[float, float] | None = None) -> ScaleTransform:
    """Build an n-point grid over x_range (default: the truncated interval)."""
    if n < 3:
        raise NonMonotoneScale("grid needs n >= 3")
    lo, hi = x_range if x_range is not None else fund.interval
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise OutOfRange("grid range must be finite with lo < hi")

    def sval(x):
        return fund.F(x) if direction == USE_PSI else fund.F_tilde(x)

    if spacing == UNIFORM_X:
        x = np.linspace(lo, hi, n)
        y = np.asarray(sval(x), float)
    elif spacing == UNIFORM_Y:
        y_lo, y_hi = float(sval(lo)), float(sval(hi))
        y = np.linspace(y_lo, y_hi, n)
        # vectorized bisection: F is strictly increasing on the interval
        a = np.full(n - 2, float(lo))
        b = np.full(n - 2, float(hi))
        tgt = y[1:-1]
        for _ in range(80):
            mid = 0.5 * (a + b)
            below = np.asarray(sval(mid), float) < tgt
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        x = np.concatenate([[lo], 0.5 * (a + b), [hi]])
        # keep y consistent with the actual x placements
        y = np.asarray(sval(x), float)
    else:
        raise OutOfRange("unknown spacing %r" % spacing)

    if not np.all(np.isfinite(y)) or np.any(np.diff(y) <= 0):
        raise NonMonotoneScale("scale grid not strictly increasing")
    return ScaleTransform(fund, x, y, direction)


def to_natural(st: ScaleTransform, x: float) -> float:
    """y = F(x) (or F~(x)); x must be within the grid's x-range."""
    lo, hi = float(st.x_grid[0]), float(st.x_grid[-1])
    if not (lo <= x <= hi):
        raise OutOfRange("x=%g outside [%g, %g]" % (x, lo, hi))
    return float(st.scale_value(x))


def from_natural(st: ScaleTransform, y: float) -> float:
    """Inverse scale map by monotone root finding (not interpolation)."""
    y_lo, y_hi = float(st.y_grid[0]), float(st.y_grid[-1])
    if not (y_lo <= y <= y_hi):
        raise OutOfRange("y=%g outside [%g, %g]" % (y, y_lo, y_hi))
    lo, hi = float(st.x_grid[0]), float(st.x_grid[-1])
    if y == y_lo:
        return lo
    if y == y_hi:
        return hi
    xtol = max(1e-12 * (hi - lo), 1e-300)
    return float(brentq(lambda t: float(st.scale_value(t)) - y, lo, hi, xtol=xtol))
