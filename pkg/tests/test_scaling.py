import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sixvertex_airy.errors import BadContours, BranchCut, OutOfRange
from sixvertex_airy.params import param_convert, scaled_inputs
from sixvertex_airy.scaling import (
    DescentContours,
    convergence_experiment,
    descent_holds,
    mid_descent_holds,
    slope_conditions,
    steepest_derivatives,
    steepest_functions,
    taylor_constants,
)
from sixvertex_airy.sixvertex import exact_joint_height_law, sample_top_exits


def test_zero_at_origin():
    assert steepest_functions(0.3, 0.0) == (0, 0)


def test_odd_function():
    rng = np.random.default_rng(8)
    z = rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-math.pi, math.pi, 1000)
    for a in (0.05, 0.3, 0.7):
        s_plus, _ = steepest_functions(a, z)
        s_minus, _ = steepest_functions(a, -z)
        assert np.max(np.abs(s_plus + s_minus)) < 1e-13


@pytest.mark.parametrize("a", [0.05, 0.3, 0.6])
def test_cubic_coefficient(a):
    h = 1e-3
    f = lambda x: steepest_functions(a, x)[0].real  # noqa: E731
    third = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)
    c3, _ = taylor_constants(a)
    assert third == pytest.approx(2 * a * (1 - a) / (1 + a) ** 3, rel=1e-5)
    assert third / 6 == pytest.approx(c3, rel=1e-5)
    # S has no linear or quadratic term
    assert abs(steepest_derivatives(a, 0.0)[0]) < 1e-15


@pytest.mark.parametrize("a", [0.05, 0.3, 0.6])
def test_quadratic_coefficient(a):
    k = 1e-4
    f = lambda x: steepest_functions(a, x)[1].real  # noqa: E731
    second = (f(k) - 2 * f(0.0) + f(-k)) / k**2
    _, c2 = taylor_constants(a)
    assert second / 2 == pytest.approx(c2, abs=1e-6)
    assert abs(steepest_derivatives(a, 0.0)[1]) < 1e-15


@given(st.floats(0.01, 0.95), st.complex_numbers(max_magnitude=2.0))
def test_derivatives_match_difference_quotients(a, z):
    if abs(z.real) > 1.5:
        return
    h = 1e-6
    s1, r1 = steepest_functions(a, z + h)
    s0, r0 = steepest_functions(a, z - h)
    ds, dr = steepest_derivatives(a, z)
    assert abs((s1 - s0) / (2 * h) - ds) < 1e-6
    assert abs((r1 - r0) / (2 * h) - dr) < 1e-6


def test_branch_cut():
    # 1 + a e^{z} = 0 needs e^{z} = -1/a
    with pytest.raises(BranchCut):
        steepest_functions(0.5, complex(math.log(2.0) + 0.5, math.pi))
    with pytest.raises(OutOfRange):
        steepest_functions(1.5, 0.0)


@pytest.mark.parametrize("a,t", [(0.05, 0.05), (0.2, 0.2), (0.5, 0.9)])
def test_chosen_slope_meets_every_condition(a, t):
    c = DescentContours.choose(a, t)
    assert all(slope_conditions(a, t, c.A).values())
    assert math.atan(1 / c.A) > math.pi / 3 and c.A * math.pi < -math.log(t) / 20


def test_mid_contour_descent():
    for a in (0.05, 0.2, 0.5):
        assert mid_descent_holds(a)


def test_steep_slope_rejected():
    assert not descent_holds(0.2, 0.9)
    with pytest.raises(BadContours):
        DescentContours(0.2, 0.2, 0.9)


def test_contour_shapes():
    c = DescentContours.choose(0.05, 0.05)
    y = np.linspace(-math.pi, math.pi, 11)
    assert np.allclose(c.gamma_Z(y).real, c.A * np.abs(y))
    assert np.allclose(c.gamma_W(y), -np.conj(c.gamma_Z(y)))
    assert np.allclose(c.gamma_mid(y).real, 0)


def test_outer_contour_for_large_M():
    c = DescentContours.choose(0.05, 0.05)
    M = math.ceil((c.A * math.pi) ** -3) + 1
    segs = c.gamma_Z_M(M)
    assert len(segs) == 3
    assert segs[0][1] == segs[1][0] and segs[1][1] == segs[2][0]
    assert segs[1][0].real == pytest.approx(M ** (-1 / 3))
    with pytest.raises(BadContours):
        c.gamma_Z_M(1)


def test_report_is_reproducible():
    p = param_convert(a=0.05, t=0.05)
    kwargs = dict(M_list=[40], samples=300, seed=9, bootstrap=20)
    r1 = convergence_experiment(p, **kwargs)
    r2 = convergence_experiment(p, **kwargs)
    assert r1.to_csv() == r2.to_csv()
    assert r1.to_json_text() == r2.to_json_text()
    r3 = convergence_experiment(p, M_list=[40], samples=300, seed=10, bootstrap=20)
    assert r3.to_csv() != r1.to_csv()


def test_report_contents():
    p = param_convert(a=0.05, t=0.05)
    rep = convergence_experiment(p, M_list=[40, 80], samples=400, seed=2, bootstrap=50)
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert len(rows) == 2 * 25
    assert set(rows[0]) == {"M", "n1", "n2", "x1", "x2", "empirical_cdf", "airy_cdf", "abs_diff"}
    for r in rows:
        assert 0 <= float(r["empirical_cdf"]) <= 1
        assert float(r["abs_diff"]) == pytest.approx(abs(float(r["empirical_cdf"]) - float(r["airy_cdf"])), abs=1e-15)
    for row, disc in zip(rep.rows, rep.discrepancies()):
        assert row.band_low <= disc + 1e-12 or row.band_low <= row.band_high
        assert row.band_low <= row.band_high
    doc = json.loads(rep.to_json_text())
    assert [r["M"] for r in doc["rows"]] == [40, 80]


def test_centering_at_moderate_M():
    p = param_convert(a=0.05, t=0.05)
    rep = convergence_experiment(p, M_list=[200], samples=2000, seed=4, bootstrap=0)
    row = rep.rows[0]
    # the rescaled mean sits near the GUE edge mean -1.77, with a finite-M drift
    assert -3.0 < row.mean_X < 0.0
    assert -3.0 < row.mean_Y < 0.0


def test_sampler_mean_matches_exact_law_at_small_M():
    p = param_convert(a=0.05, t=0.05)
    M = 10
    inp = scaled_inputs(p, M, 1.0, -1.0, 0.0, 0.0)
    law = exact_joint_height_law(p, M, inp.n1, inp.n2)
    probs = law.marginal_n1()
    vals = np.arange(probs.size)
    mean = float(probs @ vals)
    sd = math.sqrt(float(probs @ (vals - mean) ** 2))
    draws = sample_top_exits(p, M, [inp.n1], 20000, seed=6)[:, 0]
    assert abs(draws.mean() - mean) < 5 * sd / math.sqrt(len(draws))


def test_experiment_guards():
    p = param_convert(a=0.05, t=0.05)
    with pytest.raises(OutOfRange):
        convergence_experiment(p, [40], 0)
    with pytest.raises(OutOfRange):
        convergence_experiment(p, [40], 10, level=1.0)
