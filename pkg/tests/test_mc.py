"""Monte Carlo engine: determinism, statistics of the in-kernel RNG,
standard-error scaling, budget guard, and a coarse value cross-check."""

import math

import numpy as np
import pytest

from stopgame import (GBM, DiffusionSpec, McConfig, PayoffSpec,
                      default_horizon, put_value, simulate_R)
from stopgame.errors import BudgetExceeded

SPEC = DiffusionSpec(kind=GBM, rate=0.05, drift=0.05, sigma=0.3,
                     interval=(0.0, math.inf))
PUT = PayoffSpec.from_sources("max(K - x, 0)", constants={"K": 100.0})
NO_SIGMA = (-math.inf, math.inf)


def _cfg(**kw):
    base = dict(paths=2000, dt=0.01, horizon=40.0, seed=7)
    base.update(kw)
    return McConfig(**base)


def test_default_horizon():
    # horizon chosen so the residual discount e^{-r T} = 1e-4
    assert default_horizon(SPEC) == pytest.approx(math.log(1e4) / 0.05)


def test_determinism():
    a = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA, _cfg())
    b = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA, _cfg())
    assert a.mean == b.mean and a.std_error == b.std_error
    c = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA, _cfg(seed=8))
    assert c.mean != a.mean


def test_path_count_invariance():
    # per-path keyed streams: the first 1000 paths of a 2000-path run are
    # the same paths as a 1000-path run, so estimates move only by sampling
    a = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                   _cfg(paths=1000))
    b = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                   _cfg(paths=2000))
    assert abs(a.mean - b.mean) <= 4 * (a.std_error + b.std_error)


def test_immediate_stop_degeneracies():
    est = simulate_R(SPEC, PUT, 40.0, (52.63, math.inf), NO_SIGMA, _cfg())
    assert est.mean == 60.0 and est.std_error == 0.0
    pay2 = PayoffSpec.from_sources("max(K - x, 0)", "max(K - x, 0) + 5",
                                   constants={"K": 100.0})
    est = simulate_R(SPEC, pay2, 120.0, (50.0, math.inf), (-math.inf, 110.0),
                     _cfg())
    assert est.mean == pytest.approx(float(pay2.H(120.0)))


def test_coarse_put_value():
    # loose agreement check; the tight version is acceptance criterion 5
    cfg = _cfg(paths=20000, dt=0.005, horizon=default_horizon(SPEC))
    est = simulate_R(SPEC, PUT, 100.0, (put_threshold_x(), math.inf),
                     NO_SIGMA, cfg)
    ref = put_value(100.0, 100.0, 0.05, 0.3)
    assert abs(est.mean - ref) <= 3 * est.std_error + 0.01 * ref


def put_threshold_x():
    from stopgame import put_threshold
    return put_threshold(100.0, 0.05, 0.3)


def test_se_scaling():
    small = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                       _cfg(paths=1000))
    large = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                       _cfg(paths=16000))
    ratio = small.std_error / large.std_error
    assert 2.5 <= ratio <= 6.5          # ideal sqrt(16) = 4


def test_antithetic_deterministic_and_sane():
    plain = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                       _cfg(antithetic=False))
    anti = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                      _cfg(antithetic=True))
    again = simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA,
                       _cfg(antithetic=True))
    assert anti.mean == again.mean
    assert abs(anti.mean - plain.mean) <= 4 * (anti.std_error + plain.std_error)


def test_budget_guard(monkeypatch):
    monkeypatch.setenv("STOPGAME_BUDGET", "1000")
    with pytest.raises(BudgetExceeded):
        simulate_R(SPEC, PUT, 100.0, (52.63, math.inf), NO_SIGMA, _cfg())


def test_ziggurat_moments():
    # the in-kernel normal sampler: check moments and tails directly
    from stopgame.mc import (_ZIG_F, _ZIG_K, _ZIG_R, _ZIG_W, _zig_normal)
    s = np.array([99, 12345, 6789, 424242], dtype=np.uint64)
    n = 200_000
    draws = np.empty(n)
    for i in range(n):
        draws[i] = _zig_normal(s, _ZIG_K, _ZIG_W, _ZIG_F, _ZIG_R)
    se = 1.0 / math.sqrt(n)
    assert abs(draws.mean()) <= 4 * se
    assert abs(draws.std() - 1.0) <= 4 * se
    # tail mass beyond 2 sigma ~ 4.55%
    frac = np.mean(np.abs(draws) > 2.0)
    assert abs(frac - 0.0455) <= 5 * math.sqrt(0.0455 * 0.9545 / n)
