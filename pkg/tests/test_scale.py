"""Scale-grid construction and natural/scale coordinate round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopgame import (BM, GBM, UNIFORM_X, UNIFORM_Y, USE_PHI, USE_PSI,
                      DiffusionSpec, build_scale, from_natural,
                      fundamental_solutions, to_natural)
from stopgame.errors import OutOfRange


def _gbm_fund():
    return fundamental_solutions(DiffusionSpec(
        kind=GBM, rate=0.05, drift=0.05, sigma=0.3, interval=(0.0, math.inf)))


@pytest.mark.parametrize("spacing", [UNIFORM_X, UNIFORM_Y])
@pytest.mark.parametrize("direction", [USE_PSI, USE_PHI])
def test_grid_monotone(spacing, direction):
    st_ = build_scale(_gbm_fund(), 257, spacing=spacing, direction=direction,
                      x_range=(10.0, 300.0))
    assert np.all(np.diff(st_.x_grid) > 0)
    assert np.all(np.diff(st_.y_grid) > 0)
    assert st_.x_grid[0] == 10.0 and st_.x_grid[-1] == 300.0


def test_uniform_y_spacing():
    st_ = build_scale(_gbm_fund(), 129, spacing=UNIFORM_Y, x_range=(10.0, 300.0))
    d = np.diff(st_.y_grid)
    assert np.max(np.abs(d - d.mean())) <= 1e-6 * d.mean()


def test_gbm_scale_is_power_law():
    fund = _gbm_fund()
    st_ = build_scale(fund, 65, x_range=(10.0, 300.0))
    beta = 2 * 0.05 / 0.09
    assert np.allclose(st_.y_grid, st_.x_grid ** (1 + beta), rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(10.5, 299.5))
def test_round_trip(x):
    st_ = build_scale(_gbm_fund(), 129, x_range=(10.0, 300.0))
    y = to_natural(st_, x)
    assert abs(from_natural(st_, y) - x) <= 1e-9 * x


def test_use_phi_direction_bm():
    spec = DiffusionSpec(kind=BM, rate=0.5, drift=0.0, sigma=1.0)
    fund = fundamental_solutions(spec)
    st_ = build_scale(fund, 65, direction=USE_PHI, x_range=(-2.0, 2.0))
    # F~ = -psi/phi = -e^{-2x}, increasing and negative
    assert np.all(st_.y_grid < 0)
    assert np.allclose(st_.y_grid, -np.exp(-2 * st_.x_grid), rtol=1e-12)
    assert st_.origin_side == "right"


def test_bad_ranges():
    fund = _gbm_fund()
    with pytest.raises(Exception):
        build_scale(fund, 2, x_range=(10.0, 300.0))
    with pytest.raises(OutOfRange):
        build_scale(fund, 65, x_range=(300.0, 10.0))
    with pytest.raises(OutOfRange):
        build_scale(fund, 65)  # unbounded interval needs an explicit range
