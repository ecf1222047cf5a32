import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sixvertex_airy.errors import BadRadii, Inconsistent, MTooSmall, OutOfRange
from sixvertex_airy.params import (
    RadiiSearch,
    contraction_factor,
    find_good_radii,
    make_radii,
    near_unit_radii,
    param_convert,
    scaled_inputs,
    scaling_constants,
    time_of_slope,
)

unit = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_convert_from_a_t():
    p = param_convert(a=0.1, t=0.1)
    assert p.b1 == pytest.approx(0.1 * 0.99 / 0.999, rel=1e-15)
    assert p.b2 == pytest.approx(0.99 / 0.999, rel=1e-15)
    back = param_convert(b1=p.b1, b2=p.b2)
    assert back.a == pytest.approx(0.1, rel=1e-14)
    assert back.t == pytest.approx(0.1, rel=1e-14)


def test_small_a_limit():
    p = param_convert(a=1e-9, t=0.37)
    assert p.b1 == pytest.approx(0.37, rel=1e-12)
    assert p.b2 == pytest.approx(1.0, rel=1e-12)


def test_convert_from_weights():
    p = param_convert(b1=0.2, b2=0.5)
    assert p.t == pytest.approx(0.4, rel=1e-15)
    assert p.a**2 == pytest.approx(0.625, rel=1e-15)


@pytest.mark.parametrize("kw", [dict(a=0.0, t=0.5), dict(a=0.5, t=1.0), dict(b1=-0.1, b2=0.5), dict(a=0.5), dict(a=0.1, t=0.1, b1=0.1)])
def test_convert_rejects_bad_input(kw):
    with pytest.raises(OutOfRange):
        param_convert(**kw)


def test_convert_rejects_unordered_weights():
    with pytest.raises(Inconsistent):
        param_convert(b1=0.5, b2=0.5)


@given(unit, unit)
def test_round_trip(a, t):
    p = param_convert(a=a, t=t)
    assert 0 < p.b1 < p.b2 < 1
    q = param_convert(b1=p.b1, b2=p.b2)
    assert q.t == pytest.approx(t, rel=1e-14)
    # a^2 = (1 - b2)/(1 - b1) loses digits when 1 - b2 is tiny
    assert q.a == pytest.approx(a, rel=1e-13 + 1e-15 / (1 - p.b2))


@given(unit, unit)
def test_weights_round_trip(x, y):
    b1, b2 = sorted((x, y))
    if not b1 < b2:
        return
    p = param_convert(b1=b1, b2=b2)
    assert 0 < p.a < 1 and 0 < p.t < 1
    q = param_convert(a=p.a, t=p.t)
    assert q.b1 == pytest.approx(b1, rel=1e-12)
    assert q.b2 == pytest.approx(b2, rel=1e-12)


def test_good_radii_small_parameters():
    p = param_convert(a=1e-3, t=1e-3)
    r = find_good_radii(p, 0.5)
    assert r is not None and r.rho <= 0.5
    # template family (R^3, R, 1/R, 1/R^3)
    R = r.r2
    assert r.r1 == pytest.approx(R**3) and r.r3 == pytest.approx(1 / R) and r.r4 == pytest.approx(R**-3)


@pytest.mark.parametrize("a,t,target", [(1e-3, 1e-3, 0.5), (5e-4, 1e-3, 0.5), (1e-4, 1e-4, 0.5), (0.01, 0.01, 0.99)])
def test_good_radii_postconditions(a, t, target):
    p = param_convert(a=a, t=t)
    r = find_good_radii(p, target)
    assert r is not None and r.rho <= target
    assert a < r.r4 < r.r3 < r.r2 < r.r1 < 1 / a
    assert r.r4 > t * r.r1
    assert r.rho == pytest.approx(contraction_factor(r.r1, r.r2, r.r3, r.r4, t), rel=1e-12)
    assert r.rho < 1


def test_contraction_factor_independent_evaluation():
    r1, r2, r3, r4, t = 30.0, 3.0, 0.3, 0.03, 1e-3

    def poch(z):
        return np.prod([1 - z * t**n for n in range(60)])

    x, y = r2 / r1, r4 / r3
    expected = max(math.sqrt(x) / (1 - x), math.sqrt(y) / (1 - y)) * poch(-r3 / r1) * poch(-r4 / r2) / (poch(r4 / r1) * poch(r3 / r2))
    assert contraction_factor(r1, r2, r3, r4, t) == pytest.approx(expected, rel=1e-13)


def test_no_good_radii_near_one():
    p = param_convert(a=0.9, t=0.9)
    assert find_good_radii(p, 0.5, RadiiSearch(template_points=2000, grid_per_axis=22)) is None


def test_search_is_deterministic():
    p = param_convert(a=0.01, t=0.02)
    assert find_good_radii(p, 0.5) == find_good_radii(p, 0.5)


def test_target_rho_range():
    with pytest.raises(OutOfRange):
        find_good_radii(param_convert(a=0.1, t=0.1), 1.5)


def test_make_radii_rejects_bad_nesting():
    p = param_convert(a=0.1, t=0.1)
    with pytest.raises(BadRadii):
        make_radii(p, 2.0, 3.0, 0.5, 0.3)
    with pytest.raises(BadRadii):
        make_radii(p, 9.0, 3.0, 0.5, 0.3)  # r4 <= t r1


def test_near_unit_radii_admissible():
    p = param_convert(a=0.1, t=0.1)
    r = near_unit_radii(p, 0.9)
    assert p.a < r.r4 < r.r3 < r.r2 < r.r1 < 1 / p.a and r.r4 > p.t * r.r1


def test_scaling_constants_half():
    sigma, f1, f1p, f1pp = scaling_constants(0.5)
    assert sigma == pytest.approx(0.419974, abs=1e-6)
    assert (f1, f1p, f1pp) == pytest.approx((2 / 3, 1 / 3, -1 / 3), rel=1e-15)


def test_time_of_slope():
    assert time_of_slope(0.5, 1.0) == pytest.approx(2 ** (-2 / 3), rel=1e-15)


def test_scaled_columns():
    inp = scaled_inputs(param_convert(a=0.5, t=0.5), 100, 1.0, -1.0, 0.0, 0.0)
    assert inp.n1 == 121
    assert inp.n2 == math.floor(100 - 100 ** (2 / 3))


def test_scaled_inputs_preconditions():
    p = param_convert(a=0.5, t=0.5)
    with pytest.raises(OutOfRange):
        scaled_inputs(p, 100, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(MTooSmall):
        scaled_inputs(p, 1, 1.0, -2.0, 0.0, 0.0)


def test_u_in_log_space_at_huge_M():
    inp = scaled_inputs(param_convert(a=0.5, t=0.01), 10**9, 1.0, -1.0, 0.0, 0.0)
    # |u| = t^{~6.7e8} underflows, the log form does not
    assert inp.u1.value == 0 and math.isfinite(inp.u1.log_abs) and inp.u1.log_abs < -1e9


@given(unit, unit, st.integers(10, 10**6), st.floats(0.01, 3), st.floats(-3, 3), st.floats(-5, 5))
def test_u_always_negative(a, t, M, gap, s2, x):
    try:
        inp = scaled_inputs(param_convert(a=a, t=t), M, s2 + gap, s2, x, x)
    except MTooSmall:
        return
    for u in (inp.u1, inp.u2):
        assert u.sign == -1 and u.phase == 0.0
        assert u.value.real <= 0 and u.value.imag == 0


def test_centering_uses_increasing_column_term():
    p = param_convert(a=0.5, t=0.5)
    inp = scaled_inputs(p, 1000, 1.0, -1.0, 0.0, 0.0)
    sigma, f1, f1p, f1pp = scaling_constants(0.5)
    expected = 1000 * f1 + f1p * (inp.n1 - 1000) + 0.5 * f1pp * 1000 ** (1 / 3)
    assert inp.center(1) == pytest.approx(expected, rel=1e-15)
    assert inp.u1.log_abs == pytest.approx(math.log(0.5) * expected, rel=1e-14)
