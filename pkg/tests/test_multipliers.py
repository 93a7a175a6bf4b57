import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from grushin.geometry import Dims, Point
from grushin.kernels import BochnerRiesz, BumpDilated, ContractError, Tabulated
from grushin.multipliers import (cor44_decay, eta, imaginary_power_growth, prop41_43_check,
                                 riesz_l1_profile, sobolev_norm, localized_sup_norm)


def gauss(x):
    return np.exp(-x * x / 2)


def test_sobolev_gaussian():
    assert sobolev_norm(gauss, (-20, 20), 0).value == pytest.approx(math.pi ** 0.25, rel=1e-8)
    s1 = sobolev_norm(gauss, (-20, 20), 1).value
    assert s1 == pytest.approx(math.sqrt(1.5 * math.sqrt(math.pi)), rel=1e-6)
    assert sobolev_norm(gauss, (-20, 20), 2).value > s1


def test_sobolev_order_zero_is_l2():
    x = np.linspace(0.4, 2.1, 4097)
    f = eta(x)
    l2 = math.sqrt(integrate.quad(lambda t: eta(np.array([t]))[0] ** 2, 0.5, 2, limit=200)[0])
    assert sobolev_norm(f, (0.4, 2.1), 0).value == pytest.approx(l2, rel=1e-8)


def test_sobolev_sup_based():
    # at order 0 the sup-based norm is the grid maximum, refined to 1e-4
    assert sobolev_norm(gauss, (-20, 20), 0, "sup_based").value == pytest.approx(1.0, rel=1e-4)
    assert sobolev_norm(gauss, (-20, 20), 2, "sup_based").value > 1.0


def test_sobolev_support_leak():
    with pytest.raises(ContractError):
        sobolev_norm(lambda x: np.exp(-x * x / 50), (-5, 5), 1)


def test_sobolev_arguments():
    with pytest.raises(ValueError):
        sobolev_norm(gauss, (-20, 20), -1)
    with pytest.raises(ValueError):
        sobolev_norm(gauss, (-20, 20), 1, kind="h1")
    with pytest.raises(ValueError):
        sobolev_norm(gauss, (-20, 20), 1, pad=2)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0, max_value=3), st.floats(min_value=0, max_value=3),
       st.floats(min_value=0.3, max_value=3))
def test_sobolev_monotone_in_order(s1, s2, width):
    f = lambda x: np.exp(-x * x / (2 * width * width))
    lo, hi = sorted((s1, s2))
    a = sobolev_norm(f, (-40 * width, 40 * width), lo).value
    b = sobolev_norm(f, (-40 * width, 40 * width), hi).value
    assert a <= b * (1 + 1e-9)


def test_eta_support():
    lam = np.array([0.49, 0.5, 1.25, 2.0, 2.01])
    v = eta(lam)
    assert v[0] == v[1] == v[3] == v[4] == 0 and v[2] > 0


def _eta_constants():
    # ||eta H_t||_{W^1}^2 = t^2 ||eta / lam||^2 + ||eta||^2 + ||eta'||^2 exactly
    a = integrate.quad(lambda l: (eta(np.array([l]))[0] / l) ** 2, 0.5, 2, limit=200)[0]
    x = np.linspace(0.5, 2.0, 400001)
    e = eta(x)
    b = integrate.trapezoid(e ** 2, x) + integrate.trapezoid(np.gradient(e, x) ** 2, x)
    return a, b


def test_imaginary_power_norm_closed_form():
    a, b = _eta_constants()
    rep = imaginary_power_growth(1.0, [4, 8, 16, 32, 64])
    for t in (4, 8, 16, 32, 64):
        assert rep.value(f"norm[t={t}]") == pytest.approx(math.sqrt(t * t * a + b), rel=1e-4)


def test_imaginary_power_slope_value():
    # pre-asymptotic slope on t in [4, 64] for s = 1 (from the closed form t^2 A + B)
    a, b = _eta_constants()
    t = np.array([4, 8, 16, 32, 64.0])
    want = np.polyfit(np.log(t), 0.5 * np.log(t * t * a + b), 1)[0]
    rep = imaginary_power_growth(1.0, list(t))
    assert rep.value("slope") == pytest.approx(want, abs=1e-4)
    assert rep.value("slope") == pytest.approx(0.92834, abs=1e-4)


def test_imaginary_power_slope_large_t():
    rep = imaginary_power_growth(1.0, [64, 128, 256, 512, 1024])
    assert abs(rep.value("slope") - 1.0) <= 0.05
    assert rep.passed


def test_imaginary_power_slope_ratio():
    s1 = imaginary_power_growth(1.0, [4, 8, 16, 32, 64]).value("slope")
    s2 = imaginary_power_growth(2.0, [4, 8, 16, 32, 64]).value("slope")
    assert 1.7 <= s2 / s1 <= 2.0


def test_imaginary_power_t_zero():
    base = sobolev_norm(eta, (0.45, 2.05), 1).value
    with_one = sobolev_norm(lambda l: eta(l) * np.exp(0j * np.log(np.maximum(l, 1e-300))),
                            (0.45, 2.05), 1).value
    assert with_one == pytest.approx(base, rel=1e-12)


def test_imaginary_power_span_required():
    with pytest.raises(ValueError):
        imaginary_power_growth(1.0, [4, 8])


def test_localized_sup_grid_doubling():
    a, b = localized_sup_norm(BumpDilated(1.0), 1.0)
    assert abs(a - b) <= 0.01 * b


def test_riesz_uniform_kappa_one():
    rep = riesz_l1_profile(1.0, [0.5, 1, 2, 4], Point((1.0,), (0.0,)), Dims(1, 1))
    assert rep.value("max_over_min") <= 1.5


def test_riesz_kappa_zero_single_radius():
    rep = riesz_l1_profile(0.0, [1.0], Point((1.0,), (0.0,)), Dims(1, 1))
    assert rep.value("l1[R=1.0]") >= 1.0
    assert rep.get("l1[R=1.0]").params["lower_estimate"]


def test_riesz_monotone_in_kappa():
    y = Point((1.0,), (0.0,))
    vals = [riesz_l1_profile(k, [1.0], y, Dims(1, 1)).get("l1[R=1.0]").params["box"]
            for k in (0.0, 1.0, 2.0)]
    assert vals[0] >= vals[1] >= vals[2]


def test_kernel_tail_decay_exponent():
    y = Point((0.5,), (0.0,))
    rep = cor44_decay(BumpDilated(1.0), 1.0, [0.0, 2.0, 4.0, 8.0, 12.0], 1.0, y, Dims(1, 1),
                      cut=16.0)
    assert math.isfinite(rep.value("tail[r=0.0]"))
    assert rep.get("exponent_at_least_alpha").pass_flag


def test_kernel_tail_decay_zero_and_support():
    y = Point((0.5,), (0.0,))
    zero = Tabulated([1.0, 4.0], [0.0, 0.0])
    rep = cor44_decay(zero, 1.0, [0.5, 1.0], 1.0, y, Dims(1, 1))
    assert rep.value("tail[r=0.5]") == 0 and rep.value("tail[r=1.0]") == 0
    with pytest.raises(ContractError):
        cor44_decay(BochnerRiesz(1.0, 1.0), 1.0, [1.0], 1.0, y, Dims(1, 1))


def test_weighted_sobolev_ratio_and_stability():
    y = Point((0.5,), (0.0,))
    r1 = prop41_43_check(BumpDilated(1.0), 1.0, 1.0, 2.0, 0.0, y, Dims(1, 1)).value("ratio")
    r2 = prop41_43_check(BumpDilated(4.0), 2.0, 1.0, 2.0, 0.0, y, Dims(1, 1)).value("ratio")
    assert math.isfinite(r1) and r1 > 0
    assert abs(r1 / r2 - 1) <= 0.3


def test_weighted_sobolev_hypotheses():
    y = Point((0.5,), (0.0,))
    with pytest.raises(ContractError, match="beta > alpha"):
        prop41_43_check(BumpDilated(1.0), 1.0, 1.0, 0.5, 0.0, y, Dims(1, 1), which="4.1")
    with pytest.raises(ContractError, match="gamma"):
        prop41_43_check(BumpDilated(1.0), 1.0, 1.0, 2.0, 0.3, y, Dims(1, 1))
