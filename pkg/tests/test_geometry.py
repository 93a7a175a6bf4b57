import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grushin.geometry import (Dims, Point, ball_volume, ball_volume_arr, dilate, distance,
                              eqvb_integral, rho_hat, verify_geometry, weight)

coord = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False).filter(
    lambda v: v == 0 or abs(v) > 1e-50)


def test_distance_examples():
    assert distance(Point((0.0,), (0.0,)), Point((0.0,), (1.0,))) == pytest.approx(1.0)
    assert distance(Point((1.0,), (0.0,)), Point((1.0,), (1.0,))) == pytest.approx(2 ** -0.5)
    with pytest.raises(ValueError):
        distance(Point((1.0,), (0.0,)), Point((1.0, 2.0), (0.0,)))


def test_volume_examples():
    assert ball_volume(Point((0.0,), (0.0,)), 2.0) == pytest.approx(4 * math.sqrt(2))
    assert ball_volume(Point((9.0,), (0.0,)), 1.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        ball_volume(Point((0.0,), (0.0,)), 0.0)


def test_weight_examples():
    y = Point((0.25,), (0.0,))
    assert weight(2.0, Point((3.0,), (0.0,)), y) == pytest.approx(6.0)
    assert weight(5.0, Point((0.0,), (1.0,)), y) == 0.0
    assert weight(5.0, Point((2.0,), (1.0,)), Point((0.0,), (0.0,))) == pytest.approx(10.0)


def test_dims_validation():
    assert Dims(1, 1).q == 2.5
    with pytest.raises(ValueError):
        Dims(0, 1)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_distance_symmetric_nonnegative(a, b, c, d):
    x, y = Point((a,), (b,)), Point((c,), (d,))
    assert distance(x, y) == pytest.approx(distance(y, x), rel=1e-12, abs=1e-12)
    assert distance(x, y) >= 0
    assert distance(x, x) == 0


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, st.floats(min_value=1e-3, max_value=1e3))
def test_distance_homogeneous(a, b, c, d, t):
    base = rho_hat([a], [b], [c], [d])
    dx, dxx = dilate(t, [a], [b])
    dy, dyy = dilate(t, [c], [d])
    assert rho_hat(dx, dxx, dy, dyy) == pytest.approx(t * base, rel=1e-10, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0, max_value=1e3), st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=1.0, max_value=1e3))
def test_volume_doubling_property(xn, r, lam):
    dims = Dims(1, 1)
    assert ball_volume_arr(xn, lam * r, dims) <= lam ** dims.q * ball_volume_arr(xn, r, dims) \
        * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0, max_value=1e3), st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=1e-3, max_value=1e3))
def test_volume_homogeneous(xn, r, t):
    dims = Dims(1, 2)
    lhs = ball_volume_arr(t * xn, t * r, dims)
    assert lhs == pytest.approx(t ** dims.q * ball_volume_arr(xn, r, dims), rel=1e-12)


def test_eqvb_finite():
    val, tail = eqvb_integral(Dims(1, 1), 1.0, 1.0, 0.2, 1.1)
    assert math.isfinite(val) and math.isfinite(tail) and val > 0


def test_eqvb_homogeneity():
    # the integral at (R, |y'|) rescales to (1, R |y'|) by the dilations
    dims = Dims(1, 1)
    beta = dims.q / 2 - 0.2 + 0.6
    v1, _ = eqvb_integral(dims, 4.0, 0.25, 0.2, beta)
    v2, _ = eqvb_integral(dims, 1.0, 1.0, 0.2, beta)
    assert v1 * 4.0 ** dims.q == pytest.approx(v2, rel=1e-6)


def test_verify_geometry_small():
    rep = verify_geometry(Dims(1, 1), {"pair_samples": 5000, "doubling_samples": 2000,
                                       "y_grid": [0.0, 0.1, 1.0, 10.0]})
    assert rep.passed
    assert rep.get("dilation_c").value == pytest.approx(1.0, abs=1e-9)


def test_verify_geometry_hypotheses():
    with pytest.raises(ValueError, match="gamma"):
        verify_geometry(Dims(1, 1), {"gamma": 0.3})
    with pytest.raises(ValueError, match="beta"):
        verify_geometry(Dims(1, 1), {"beta": 0.5})
