"""Rescaled obstacles, boundary growth limits, assumption checks."""

import math

import numpy as np
import pytest

from stopgame import (BM, GBM, DiffusionSpec, PayoffSpec, build_scale,
                      check_assumptions, fundamental_solutions,
                      transform_payoff)
from stopgame.errors import GrowthViolation, ObstacleOrderViolation
from stopgame.transform import require_growth


def _gbm_st(n=257, x_range=(5.0, 300.0)):
    fund = fundamental_solutions(DiffusionSpec(
        kind=GBM, rate=0.05, drift=0.05, sigma=0.3, interval=(0.0, math.inf)))
    return build_scale(fund, n, x_range=x_range)


def test_put_rescaling():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("max(K - x, 0)", constants={"K": 100.0})
    tob = transform_payoff(st, pay)
    beta = 2 * 0.05 / 0.09
    x = st.x_grid
    want = np.maximum(100.0 - x, 0.0) * x ** beta
    assert np.allclose(tob.wg, want, rtol=1e-12, atol=1e-12)
    assert tob.wh is None


def test_put_growth_limits_vanish():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("max(K - x, 0)", constants={"K": 100.0})
    tob = transform_payoff(st, pay)
    # (K-x)^+ x^beta -> 0 at 0 (power-law decay along the sampled tail,
    # so "zero" is relative to the obstacle scale); (K-x)^+/x = 0 past K
    assert tob.l_a <= 1e-6 * np.max(tob.wg)
    assert tob.l_b == 0.0
    rep = check_assumptions(tob)
    assert rep.l_a_zero and rep.l_b_zero and rep.g_le_h
    require_growth(tob)  # must not raise


def test_linear_growth_detected():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("x ^ 2")
    tob = transform_payoff(st, pay)
    # x^2/phi = x diverges at +inf
    assert tob.l_b == math.inf
    with pytest.raises(GrowthViolation):
        require_growth(tob)


def test_bm_nonzero_left_limit():
    spec = DiffusionSpec(kind=BM, rate=0.5, drift=0.0, sigma=1.0)
    st = build_scale(fundamental_solutions(spec), 257, x_range=(-3.0, 3.0))
    pay = PayoffSpec.from_sources("exp(-x) / (1 + exp(2*x))")
    tob = transform_payoff(st, pay)
    # G/psi = 1/(1+e^{2x}) -> 1 at -inf
    assert abs(tob.l_a - 1.0) <= 1e-9
    assert np.allclose(tob.wg, 1.0 / (1.0 + st.y_grid), rtol=1e-12)


def test_obstacle_order_violation():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("max(K - x, 0)", "max(K - x, 0) - 1",
                                  constants={"K": 100.0})
    with pytest.raises(ObstacleOrderViolation):
        transform_payoff(st, pay)


def test_penalty_gap_sublinear():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("max(K - x, 0)", "max(K - x, 0) + d",
                                  constants={"K": 100.0, "d": 10.0})
    tob = transform_payoff(st, pay)
    # constant penalty: gap/psi = d x^beta ~ y^{beta/(1+beta)}, sublinear in y
    assert tob.far_gap_sublinear
    assert np.allclose(tob.wh - tob.wg, 10.0 * st.x_grid ** (2 * 0.05 / 0.09),
                       rtol=1e-12)
    # gap/psi -> 0 at the origin end, so the corridor pinches there
    assert tob.gap_a <= 1e-6 * np.max(tob.wh)


def test_linear_gap_not_sublinear():
    st = _gbm_st()
    pay = PayoffSpec.from_sources("max(K - x, 0)",
                                  "max(K - x, 0) + x ^ 2.9",
                                  constants={"K": 100.0})
    tob = transform_payoff(st, pay)
    # gap/psi = x^{2.9+beta} ~ y^{1.85...}: superlinear in y = x^{1+beta}
    assert not tob.far_gap_sublinear
