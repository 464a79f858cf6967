"""Least concave majorant: oracles, anchors, and exact lattice properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from stopgame import (FLAT, biconjugate_from_conjugate, least_concave_majorant,
                      sup_tangent_construction)
from stopgame.envelope import secant_slopes, superdifferential_at
from stopgame.errors import AnchorBelowF

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def _instance(draw_n, seed):
    rng = np.random.default_rng(seed)
    n = draw_n
    y = np.cumsum(rng.uniform(0.1, 2.0, n))
    f = rng.normal(0.0, 1.0, n)
    return y, f


def test_hand_instance():
    # [DERIVED] hull of (0,0),(1,2),(2,1),(3,3),(4,0): vertices 0,1,3,4
    y = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    f = np.array([0.0, 2.0, 1.0, 3.0, 0.0])
    res = least_concave_majorant(y, f)
    assert np.array_equal(res.values, [0.0, 2.0, 2.5, 3.0, 0.0])
    assert np.array_equal(res.contact, [True, True, False, True, True])


@settings(max_examples=200, deadline=None)
@given(f=hnp.arrays(np.float64, st.integers(2, 40), elements=finite),
       seed=st.integers(0, 2**31))
def test_majorant_concave_idempotent_monotone(f, seed):
    rng = np.random.default_rng(seed)
    y = np.cumsum(rng.uniform(0.1, 2.0, len(f)))
    env = least_concave_majorant(y, f).values
    # majorant
    assert np.all(env >= f)
    # concavity: every interior point at or above the chord of its neighbors
    if len(f) > 2:
        chord = (env[:-2] * np.diff(y)[1:] + env[2:] * np.diff(y)[:-1]) / (
            y[2:] - y[:-2])
        assert np.all(env[1:-1] >= chord - 1e-9 * (np.max(np.abs(env)) + 1.0))
    # exact idempotence
    assert np.array_equal(least_concave_majorant(y, env).values, env)
    # exact monotonicity
    g = f - np.abs(f) * 0.1 - 0.5
    assert np.all(least_concave_majorant(y, g).values <= env)


@pytest.mark.parametrize("seed", range(25))
def test_oracle_equivalence(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 65))
    y = np.cumsum(rng.uniform(0.1, 2.0, n))
    f = rng.normal(0.0, 1.0, n)
    lcm = least_concave_majorant(y, f).values
    cs = np.unique(np.concatenate([secant_slopes(y, f), [0.0]]))
    assert np.max(np.abs(lcm - biconjugate_from_conjugate(y, f, cs))) <= 1e-9
    assert np.max(np.abs(lcm - sup_tangent_construction(y, f))) <= 1e-9


def test_superdifferential_matches_contact():
    rng = np.random.default_rng(3)
    y = np.cumsum(rng.uniform(0.1, 2.0, 40))
    f = rng.normal(0.0, 1.0, 40)
    res = least_concave_majorant(y, f)
    for i in range(40):
        assert (superdifferential_at(y, f, i) is not None) == bool(res.contact[i])


def test_anchors():
    y = np.array([0.0, 1.0, 2.0])
    f = np.array([0.0, 1.0, 0.0])
    res = least_concave_majorant(y, f, left_anchor=2.0)
    assert res.values[0] == 2.0
    with pytest.raises(AnchorBelowF):
        least_concave_majorant(y, f, left_anchor=-5.0)


def test_flat_right_anchor():
    # FLAT pins the envelope at its running maximum past the peak
    y = np.array([0.0, 1.0, 2.0, 3.0])
    f = np.array([0.0, 2.0, 1.0, 0.0])
    res = least_concave_majorant(y, f, right_anchor=FLAT)
    assert np.array_equal(res.values, [0.0, 2.0, 2.0, 2.0])


def test_bad_input():
    with pytest.raises(ValueError):
        least_concave_majorant([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        least_concave_majorant([0.0, 1.0], [np.nan, 0.0])
