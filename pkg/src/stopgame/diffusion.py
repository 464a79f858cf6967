"""Regular one-dimensional diffusions and the fundamental solutions phi, psi.

phi is the strictly increasing and psi the strictly decreasing positive
solution of the generator equation

    mu(x) f'(x) + D(x) f''(x) = r f(x),      D = sigma^2 / 2.

Closed forms are used for the two catalog diffusions (arithmetic and
geometric Brownian motion); arbitrary coefficients go through a numeric
ODE route; externally computed solutions can be supplied as tables.
All Laplace transforms of exit/passage times are ratios of phi, psi and
the scale function F = phi/psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import (
    DegenerateSystem,
    IntegrationFailure,
    OrderingViolated,
    TabulationInvalid,
    UnsupportedParameters,
)

BM = "bm"
GBM = "gbm"
TABULATED = "tabulated"

CLOSED_FORM = "ClosedForm"
NUMERIC_ODE = "NumericODE"
TABULATED_SOURCE = "Tabulated"

NATURAL = "natural"
ABSORBING = "absorbing"


@dataclass(frozen=True)
class DiffusionSpec:
    """Problem data for a one-dimensional diffusion with discounting.

    kind: "bm" (arithmetic BM, fields drift/sigma), "gbm" (geometric BM,
    drift must equal rate for the closed form), or "tabulated"
    (externally supplied phi/psi values on a grid).
    """

    kind: str
    rate: float
    drift: float = 0.0
    sigma: float = 1.0
    interval: Tuple[float, float] = (-math.inf, math.inf)
    boundaries: Tuple[str, str] = (NATURAL, NATURAL)
    tab_grid: Optional[Sequence[float]] = None
    tab_phi: Optional[Sequence[float]] = None
    tab_psi: Optional[Sequence[float]] = None

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise UnsupportedParameters("interval must satisfy a < b")
        if not self.rate > 0:
            raise UnsupportedParameters("discount rate must be positive")
        if self.kind in (BM, GBM) and not self.sigma > 0:
            raise UnsupportedParameters("sigma must be positive")
        if self.kind == GBM:
            if (a, b) == (-math.inf, math.inf):
                object.__setattr__(self, "interval", (0.0, math.inf))
            if self.drift == 0.0:
                # closed form needs drift == rate (risk-neutral setup); make
                # it the default rather than requiring the redundant field
                object.__setattr__(self, "drift", self.rate)
            elif a < 0:
                raise UnsupportedParameters("geometric BM lives on (0, inf)")

    def coefficients(self) -> Tuple[Callable, Callable]:
        """Drift mu(x) and diffusion D(x) = sigma(x)^2/2 of the generator."""
        if self.kind == BM:
            mu, sig = self.drift, self.sigma
            return (lambda x: mu * np.ones_like(np.asarray(x, float)),
                    lambda x: 0.5 * sig ** 2 * np.ones_like(np.asarray(x, float)))
        if self.kind == GBM:
            mu, sig = self.drift, self.sigma
            return (lambda x: mu * np.asarray(x, float),
                    lambda x: 0.5 * sig ** 2 * np.asarray(x, float) ** 2)
        raise UnsupportedParameters("no generator coefficients for kind %r" % self.kind)


@dataclass(frozen=True)
class FundamentalSolutions:
    """Increasing (phi) and decreasing (psi) positive solutions of Lf = rf.

    dphi/dpsi are derivatives, used for the Wronskian diagnostic and the
    smooth-fit report.  wronskian_samples holds
    (phi' psi - psi' phi)/s' at sample points, where s' is the scale
    density exp(-int mu/D); the sequence is constant for exact solutions.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    source: str
    rate: float
    interval: Tuple[float, float]
    wronskian_samples: Tuple[float, ...] = field(default=())

    def F(self, x):
        """Scale function F = phi/psi (strictly increasing)."""
        return self.phi(x) / self.psi(x)

    def F_tilde(self, x):
        """Companion scale F~ = -psi/phi = -1/F (strictly increasing)."""
        return -self.psi(x) / self.phi(x)


def _wronskian_samples(phi, psi, dphi, dpsi, sprime, xs):
    xs = np.asarray(xs, float)
    w = (dphi(xs) * psi(xs) - dpsi(xs) * phi(xs)) / sprime(xs)
    return tuple(float(v) for v in w)


def _default_sample_points(interval, kind):
    a, b = interval
    if kind == GBM or (a == 0 and b == math.inf):
        lo = a if np.isfinite(a) and a > 0 else 1e-2
        hi = b if np.isfinite(b) else 1e2
        return np.geomspace(lo * 1.0001, hi * 0.9999, 17)
    lo = a if np.isfinite(a) else -5.0
    hi = b if np.isfinite(b) else 5.0
    return np.linspace(lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo), 17)


def fundamental_solutions(spec: DiffusionSpec) -> FundamentalSolutions:
    """Fundamental solutions for a catalog or tabulated diffusion."""
    if spec.kind == BM:
        mu, sig, r = spec.drift, spec.sigma, spec.rate
        d = 0.5 * sig ** 2
        disc = math.sqrt(mu * mu + 4.0 * d * r)
        lam_p = (-mu + disc) / (2.0 * d)   # > 0, increasing solution
        lam_m = (-mu - disc) / (2.0 * d)   # < 0, decreasing solution
        phi = lambda x: np.exp(lam_p * np.asarray(x, float))
        psi = lambda x: np.exp(lam_m * np.asarray(x, float))
        dphi = lambda x: lam_p * np.exp(lam_p * np.asarray(x, float))
        dpsi = lambda x: lam_m * np.exp(lam_m * np.asarray(x, float))
        sprime = lambda x: np.exp(-(mu / d) * np.asarray(x, float))
        xs = _default_sample_points(spec.interval, BM)
        return FundamentalSolutions(
            phi, psi, dphi, dpsi, CLOSED_FORM, r, spec.interval,
            _wronskian_samples(phi, psi, dphi, dpsi, sprime, xs))

    if spec.kind == GBM:
        r = spec.rate
        if not math.isclose(spec.drift, r, rel_tol=1e-12, abs_tol=0.0):
            raise UnsupportedParameters(
                "geometric BM closed form requires drift == rate "
                "(got drift=%g, rate=%g); use the numeric route otherwise"
                % (spec.drift, r))
        beta = 2.0 * r / spec.sigma ** 2
        phi = lambda x: np.asarray(x, float) + 0.0
        psi = lambda x: np.asarray(x, float) ** (-beta)
        dphi = lambda x: np.ones_like(np.asarray(x, float))
        dpsi = lambda x: -beta * np.asarray(x, float) ** (-beta - 1.0)
        sprime = lambda x: np.asarray(x, float) ** (-beta)
        xs = _default_sample_points(spec.interval, GBM)
        return FundamentalSolutions(
            phi, psi, dphi, dpsi, CLOSED_FORM, r, spec.interval,
            _wronskian_samples(phi, psi, dphi, dpsi, sprime, xs))

    if spec.kind == TABULATED:
        g = np.asarray(spec.tab_grid, float)
        pv = np.asarray(spec.tab_phi, float)
        sv = np.asarray(spec.tab_psi, float)
        if g.ndim != 1 or len(g) < 3 or np.any(np.diff(g) <= 0):
            raise TabulationInvalid("grid must be strictly increasing, length >= 3")
        if np.any(pv <= 0) or np.any(np.diff(pv) <= 0):
            raise TabulationInvalid("phi_values must be positive and strictly increasing")
        if np.any(sv <= 0) or np.any(np.diff(sv) >= 0):
            raise TabulationInvalid("psi_values must be positive and strictly decreasing")
        phi_i = PchipInterpolator(g, pv)
        psi_i = PchipInterpolator(g, sv)
        dphi_i = phi_i.derivative()
        dpsi_i = psi_i.derivative()
        return FundamentalSolutions(
            lambda x: phi_i(np.asarray(x, float)),
            lambda x: psi_i(np.asarray(x, float)),
            lambda x: dphi_i(np.asarray(x, float)),
            lambda x: dpsi_i(np.asarray(x, float)),
            TABULATED_SOURCE, spec.rate, (float(g[0]), float(g[-1])))

    raise UnsupportedParameters("unknown diffusion kind %r" % spec.kind)


def fundamental_solutions_numeric(mu, D, rate: float, interval, anchor: float,
                                  truncation: float) -> FundamentalSolutions:
    """Numeric phi, psi for arbitrary continuous coefficients.

    Integrates Lf = rf as a first-order system from each truncated
    endpoint (the increasing solution vanishes at a+eta, the decreasing
    one at b-eta) and normalizes phi(anchor) = psi(anchor) = 1.

    The vanishing initial condition contaminates the solution by a
    multiple of the opposite fundamental solution, with relative error
    of order F(a+eta)/F(x); keep eta small relative to the region of
    interest.
    """
    a, b = interval
    if not (np.isfinite(a) and np.isfinite(b)):
        raise UnsupportedParameters(
            "numeric route needs a finite (already truncated) interval")
    lo, hi = a + truncation, b - truncation
    if not lo < anchor < hi:
        raise UnsupportedParameters("anchor must lie inside the truncated interval")

    probe = np.linspace(lo, hi, 257)
    dvals = np.asarray(D(probe), float)
    if not np.all(np.isfinite(dvals)) or np.any(dvals <= 0):
        raise DegenerateSystem("diffusion coefficient D must be positive on the interval")

    def rhs(x, y):
        return [y[1], (rate * y[0] - mu(x) * y[1]) / D(x)]

    def shoot(x0, x1, f0, df0):
        sol = solve_ivp(rhs, (x0, x1), [f0, df0], dense_output=True,
                        rtol=1e-12, atol=1e-300, method="DOP853")
        if not sol.success:
            raise IntegrationFailure("ODE integration failed: %s" % sol.message)
        return sol

    width = hi - lo
    sol_phi = shoot(lo, hi, 0.0, 1.0 / width)    # increasing, vanishes at lo
    sol_psi = shoot(hi, lo, 0.0, -1.0 / width)   # decreasing, vanishes at hi

    phi_anchor = sol_phi.sol(anchor)[0]
    psi_anchor = sol_psi.sol(anchor)[0]
    if phi_anchor <= 0 or psi_anchor <= 0 or not np.isfinite(phi_anchor + psi_anchor):
        raise DegenerateSystem("fundamental solutions not positive at the anchor")

    # linear-dependence guard: end-point value matrix of the normalized pair
    m = np.array([[sol_phi.sol(lo)[0] / phi_anchor, sol_psi.sol(lo)[0] / psi_anchor],
                  [sol_phi.sol(hi)[0] / phi_anchor, sol_psi.sol(hi)[0] / psi_anchor]])
    if not np.all(np.isfinite(m)) or np.linalg.cond(m) > 1e12:
        raise DegenerateSystem("fundamental solutions numerically dependent")

    def phi(x):
        return np.asarray(sol_phi.sol(np.asarray(x, float))[0]) / phi_anchor

    def psi(x):
        return np.asarray(sol_psi.sol(np.asarray(x, float))[0]) / psi_anchor

    def dphi(x):
        return np.asarray(sol_phi.sol(np.asarray(x, float))[1]) / phi_anchor

    def dpsi(x):
        return np.asarray(sol_psi.sol(np.asarray(x, float))[1]) / psi_anchor

    # scale density s'(x) = exp(-int_anchor^x mu/D) via cumulative trapezoid
    ratio = np.asarray(mu(probe), float) / dvals
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (ratio[1:] + ratio[:-1]) * np.diff(probe))])
    c0 = np.interp(anchor, probe, cum)

    def sprime(x):
        return np.exp(-(np.interp(np.asarray(x, float), probe, cum) - c0))

    xs = np.linspace(lo + 0.05 * width, hi - 0.05 * width, 17)
    wsamp = _wronskian_samples(phi, psi, dphi, dpsi, sprime, xs)
    return FundamentalSolutions(phi, psi, dphi, dpsi, NUMERIC_ODE, rate,
                                (lo, hi), wsamp)


def exit_laplace(fund: FundamentalSolutions, x: float, y: float, z: float):
    """Laplace transforms of the exit times from (y, z) starting at x.

    Returns (p_lower, p_upper) with
        p_lower = E_x[e^{-r T_y}; T_y < T_z]
                = (psi(x)/psi(y)) (F(z)-F(x))/(F(z)-F(y)),
        p_upper = E_x[e^{-r T_z}; T_z < T_y]
                = (psi(x)/psi(z)) (F(x)-F(y))/(F(z)-F(y)).

    Single-barrier passage times are the degenerate cases y = -inf
    (p_upper = phi(x)/phi(z)) and z = +inf (p_lower = psi(x)/psi(y)).
    """
    if not (y <= x <= z):
        raise OrderingViolated("need y <= x <= z, got y=%g x=%g z=%g" % (y, x, z))
    lower_open = not np.isfinite(y)
    upper_open = not np.isfinite(z)
    if lower_open and upper_open:
        return 0.0, 0.0
    if upper_open:
        return float(fund.psi(x) / fund.psi(y)), 0.0
    if lower_open:
        return 0.0, float(fund.phi(x) / fund.phi(z))
    if y == z:
        return 1.0, 0.0
    fx, fy, fz = fund.F(x), fund.F(y), fund.F(z)
    p_lower = float(fund.psi(x) / fund.psi(y) * (fz - fx) / (fz - fy))
    p_upper = float(fund.psi(x) / fund.psi(z) * (fx - fy) / (fz - fy))
    return min(max(p_lower, 0.0), 1.0), min(max(p_upper, 0.0), 1.0)
