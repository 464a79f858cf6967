"""Solver-level tests: closed forms, classification, thresholds, smooth fit."""

import math

import numpy as np
import pytest

from stopgame import (BM, DEGENERATE, NASH_SADDLE, NO_NASH, DiffusionSpec,
                      PayoffSpec, SolveOptions, cancellable_put_residual,
                      cancellable_put_threshold, cancellable_put_value,
                      penalty_cap, put_threshold, put_value, smooth_fit_report,
                      solve_game, solve_stopping, solve_stopping_absorbed,
                      threshold_pair)
from stopgame.solver import smooth_fit_grid

K, R, SIG = 100.0, 0.05, 0.3
BETA = 2 * R / SIG ** 2                      # 10/9
XSTAR = K / (1.0 + SIG ** 2 / (2 * R))       # 1000/19


def test_put_closed_forms():
    assert put_threshold(K, R, SIG) == pytest.approx(1000.0 / 19.0, rel=1e-15)
    # value at the strike [DERIVED from the closed form]
    assert put_value(K, K, R, SIG) == pytest.approx(23.2146791256481, rel=1e-12)
    assert put_value(XSTAR / 2, K, R, SIG) == K - XSTAR / 2
    # the cap is the put value at the strike
    assert penalty_cap(K, R, SIG) == put_value(K, K, R, SIG)


def test_cancellable_put_root():
    delta = 0.5 * penalty_cap(K, R, SIG)
    xk = cancellable_put_threshold(K, R, SIG, delta)
    # [DERIVED] root of (1+beta)(1+delta/K) u = beta + u^(1+beta), u = x*/x_put
    assert xk == pytest.approx(63.34641247273159, rel=1e-10)
    assert abs(cancellable_put_residual(xk, K, R, SIG, delta)) <= 1e-10


def test_solve_stopping_put(gbm_spec, put_payoff):
    sol = solve_stopping(gbm_spec, put_payoff)
    assert abs(sol.b_star - XSTAR) <= 1e-6
    x = np.linspace(XSTAR, 3 * K, 50)
    ref = put_value(x, K, R, SIG)
    assert np.max(np.abs(sol.V(x) - ref) / ref) <= 1e-6
    # below the boundary the value is the payoff
    assert sol.V(30.0) == pytest.approx(70.0, abs=1e-9)
    assert sol.direction is not None
    assert len(sol.D) >= 1 and sol.D[0][0] <= 30.0 <= sol.D[0][1]


def test_solve_game_cancellable(gbm_spec):
    delta = 0.5 * penalty_cap(K, R, SIG)
    pay = PayoffSpec.from_sources("max(K - x, 0)", "max(K - x, 0) + d",
                                  constants={"K": K, "d": delta})
    sol = solve_game(gbm_spec, pay)
    assert sol.equilibrium == NASH_SADDLE
    xk = cancellable_put_threshold(K, R, SIG, delta)
    assert sol.D_plus[0][1] == pytest.approx(xk, rel=1e-6)
    # inf-player stops at the strike
    assert sol.D_minus[0][0] == pytest.approx(K, rel=1e-6)
    x = np.linspace(20.0, 250.0, 50)
    ref = cancellable_put_value(x, K, R, SIG, delta)
    assert np.max(np.abs(sol.V(x) - ref) / np.maximum(ref, 1e-9)) <= 1e-6


def test_solve_game_degenerate(gbm_spec, put_payoff):
    delta = 2.0 * penalty_cap(K, R, SIG)
    pay = PayoffSpec.from_sources("max(K - x, 0)", "max(K - x, 0) + d",
                                  constants={"K": K, "d": delta})
    # n must resolve the payoff peak near x*; uniform-y spacing on GBM
    # pushes points toward large x, so 1025 points are too few here
    sol = solve_game(gbm_spec, pay, SolveOptions(n=2049))
    assert sol.equilibrium == DEGENERATE
    x = np.linspace(XSTAR, 3 * K, 25)
    ref = put_value(x, K, R, SIG)
    assert np.max(np.abs(sol.V(x) - ref) / ref) <= 1e-8


def _bm_game(g_source, **opt):
    spec = DiffusionSpec(kind=BM, rate=0.5, drift=0.0, sigma=1.0)
    pay = PayoffSpec.from_sources(g_source,
                                  h_source="(" + g_source + ") + 10*exp(-x)")
    return solve_game(spec, pay, SolveOptions(x_range=(-3.0, 3.0), w0=1.0,
                                              n=1025, **opt))


def test_nash_failure_detection():
    # wg(y) = 1/(1+y): limit 1 at the boundary is never attained by contact
    sol = _bm_game("exp(-x) / (1 + exp(2*x))")
    assert sol.equilibrium == NO_NASH
    # wg flat at 1 near y = 0: contact reaches the boundary, Nash restored
    sol = _bm_game("exp(-x) * max(min(1, 1.2 - 0.2*exp(2*x)), 0)")
    assert sol.equilibrium == NASH_SADDLE


def test_threshold_pair():
    assert threshold_pair([], 1.0) == (-math.inf, math.inf)
    assert threshold_pair([(0.0, 2.0)], 1.0) == (1.0, 1.0)
    assert threshold_pair([(0.0, 1.0), (5.0, 6.0)], 3.0) == (1.0, 5.0)
    assert threshold_pair([(5.0, 6.0)], 3.0) == (-math.inf, 5.0)


def test_solve_stopping_absorbed_point(gbm_spec, put_payoff):
    sol = solve_stopping_absorbed(gbm_spec, put_payoff, 60.0, 60.0)
    assert sol.V(123.0) == pytest.approx(40.0)


def test_smooth_fit_put(gbm_spec, put_payoff):
    sol = solve_stopping(gbm_spec, put_payoff)
    report = smooth_fit_report(sol, put_payoff)
    assert report and all(e["contained"] for e in report)
    # finite-difference derivative from the continuation side ~ G' = -1
    h = 1e-5 * XSTAR
    slope = (sol.V(XSTAR + 2 * h) - sol.V(XSTAR + h)) / h
    assert abs(slope + 1.0) <= 1e-3


def test_smooth_fit_grid_detects_kink():
    # value with a corner above the obstacle edge is flagged as not contained
    y = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    f = np.array([0.0, 1.0, 0.0, -1.0, -2.0])
    v = np.array([0.5, 1.0, 2.5, 0.8, 0.7])   # kink at the contact edge i=1
    contact = np.array([False, True, False, False, False])
    out = smooth_fit_grid(y, f, v, contact)
    assert any(not e["contained"] for e in out)
