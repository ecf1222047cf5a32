import math

import numpy as np
import pytest
from scipy import integrate, special

from sixvertex_airy.airy import (
    AiryQuadConfig,
    K_term,
    airy_ai,
    airy_ai_mirrored,
    airy_ai_series,
    check_abscissas,
    contour_term_table,
    default_abscissas,
    extended_kernel,
    fde_partial_sums,
    fredholm_two_point_cdf,
    one_point_cdf,
    series_two_point_cdf,
)
from sixvertex_airy.errors import BadAbscissas, OutOfRange


def ai(x):
    return special.airy(x)[0]


def kernel_oracle(tau, xi, tau2, xi2):
    d = tau - tau2
    if d >= 0:
        f = lambda lam: math.exp(-lam * d) * ai(xi + lam) * ai(xi2 + lam)  # noqa: E731
        return integrate.quad(f, 0, 40, limit=400, epsabs=1e-13)[0]
    f = lambda lam: math.exp(-lam * d) * ai(xi + lam) * ai(xi2 + lam)  # noqa: E731
    return -integrate.quad(f, -80, 0, limit=2000, epsabs=1e-12)[0]


def test_ai_at_zero():
    assert airy_ai(0.0) == pytest.approx(airy_ai_series(0.0), abs=1e-13)
    assert airy_ai(0.0) == pytest.approx(0.355028053887817, abs=1e-13)


@pytest.mark.parametrize("x", [-35.0, -10.0, -3.3, -1.0, 0.4, 2.0, 7.5, 20.0, 40.0])
def test_ai_matches_library(x):
    assert abs(airy_ai(x) - ai(x)) < 1e-10


def test_ai_vectorised():
    xs = np.linspace(-5, 5, 21)
    assert np.max(np.abs(airy_ai(xs) - ai(xs))) < 1e-10


@pytest.mark.parametrize("x", [-2.0, 0.0, 2.0])
def test_ai_solves_airy_equation(x):
    h = 1e-3
    second = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h**2
    assert abs(second - x * airy_ai(x)) < 1e-6


@pytest.mark.parametrize("x", [-6.0, -1.5, 0.0, 1.0, 9.0])
def test_mirrored_line_agrees(x):
    assert abs(airy_ai(x) - airy_ai_mirrored(x)) < 1e-10


def test_ai_range():
    with pytest.raises(OutOfRange):
        airy_ai(41.0)


def test_series_oracle_small_argument():
    for x in (-4.0, -1.0, 1.0, 4.0):
        assert abs(airy_ai_series(x) - ai(x)) < 1e-12


def test_equal_time_kernel_is_airy_kernel():
    for xi, xi2 in [(0.0, 0.0), (-1.0, 0.5), (1.5, 2.0)]:
        if xi == xi2:
            a, ap = special.airy(xi)[:2]
            expect = ap * ap - xi * a * a
        else:
            a1, a1p = special.airy(xi)[:2]
            a2, a2p = special.airy(xi2)[:2]
            expect = (a1 * a2p - a1p * a2) / (xi - xi2)
        assert abs(extended_kernel(0.3, xi, 0.3, xi2) - expect) < 1e-10


def test_equal_time_kernel_symmetric():
    assert abs(extended_kernel(0.7, -0.4, 0.7, 1.1) - extended_kernel(0.7, 1.1, 0.7, -0.4)) < 1e-12


@pytest.mark.parametrize("args", [(0.5, 0.0, 0.0, 0.0), (1.0, -1.0, 0.2, 0.5), (0.0, 0.0, 0.5, 0.0), (0.0, 1.0, 1.0, -0.5)])
def test_extended_kernel_matches_quadrature(args):
    assert abs(extended_kernel(*args) - kernel_oracle(*args)) < 1e-8


def test_kernel_refinement_stable():
    base = extended_kernel(0.5, 0.0, 0.0, 0.0)
    finer = extended_kernel(0.5, 0.0, 0.0, 0.0, AiryQuadConfig(lambda_cutoff=24.0, lambda_nodes=192))
    assert abs(base - finer) < 1e-8


def test_equal_times_collapse_to_one_point():
    for x1, x2 in [(0.0, 0.5), (-1.0, -2.0)]:
        assert abs(fredholm_two_point_cdf(0.4, 0.4, x1, x2) - one_point_cdf(min(x1, x2))) < 1e-10


def test_cdf_monotone_and_bounded():
    xs = [-4.0, -2.0, -1.0, 0.0, 1.0, 3.0]
    grid = np.array([[fredholm_two_point_cdf(0.5, 0.0, a, b) for b in xs] for a in xs])
    assert grid.min() >= -1e-12 and grid.max() <= 1 + 1e-12
    assert np.all(np.diff(grid, axis=0) >= -1e-12)
    assert np.all(np.diff(grid, axis=1) >= -1e-12)


def test_cdf_tends_to_one():
    assert fredholm_two_point_cdf(0.5, 0.0, 6.0, 6.0) > 1 - 1e-4


def test_one_point_marginal_stationary():
    vals = [one_point_cdf(-1.0, tau=tau) for tau in (0.0, 0.5, 1.0)]
    assert max(vals) - min(vals) < 1e-8


def test_one_point_mean_matches_gue_edge():
    # mean of the GUE Tracy-Widom law, about -1.7711
    xs = np.linspace(-8.0, 5.0, 261)
    F = np.array([one_point_cdf(x) for x in xs])
    mean = xs[-1] - np.trapezoid(F, xs)
    assert abs(mean - (-1.7711)) < 2e-3


def test_window_doubling_stable():
    base = fredholm_two_point_cdf(0.5, 0.0, 0.0, 0.0)
    wide = fredholm_two_point_cdf(0.5, 0.0, 0.0, 0.0, AiryQuadConfig(xi_window=20.0, nystrom_nodes=96))
    assert abs(base - wide) < 1e-10


def test_series_expansion_agrees_with_nystrom():
    sums = fde_partial_sums(0.5, 0.0, 0.0, 0.0, nmax=6)
    assert abs(sums[-1] - fredholm_two_point_cdf(0.5, 0.0, 0.0, 0.0)) < 1e-5


def test_zero_term_convention():
    assert K_term(0, 0, 0.0, 0.0, 0.5, 0.0).value == 1


def test_abscissa_invariance():
    base = K_term(1, 1, 0.0, 0.0, 0.5, 0.0)
    moved = K_term(1, 1, 0.0, 0.0, 0.5, 0.0, AiryQuadConfig(c1=1.2, c2=-0.15, c3=0.15, c4=-0.9))
    assert abs(base.value - moved.value) < 1e-9


def test_abscissa_constraints():
    assert default_abscissas(0.5, 0.0) == (1.0, -0.5 / 3, 0.5 / 3, -1.0)
    with pytest.raises(BadAbscissas):
        check_abscissas((1.0, -0.3, 0.3, -1.0), 0.5, 0.0)
    with pytest.raises(BadAbscissas):
        K_term(1, 0, 0.0, 0.0, 0.5, 0.0, AiryQuadConfig(c1=-1.0))


def test_truncation_at_zero():
    assert series_two_point_cdf(0.0, 0.0, 0.5, 0.0, Ncap=0).value == 1


def test_series_matches_fredholm():
    s = series_two_point_cdf(0.0, 0.0, 0.5, 0.0, Ncap=4)
    assert abs(s.value - fredholm_two_point_cdf(0.5, 0.0, 0.0, 0.0)) < 1e-4
    assert math.isfinite(s.tail_est) and s.tail_est < 1e-4


def test_large_separation_decouples():
    s = series_two_point_cdf(0.0, 0.0, 4.0, 0.0, Ncap=4)
    assert abs(s.value.real - one_point_cdf(0.0) ** 2) < 5e-3


def test_term_decay():
    table = contour_term_table(0.0, 0.0, 0.5, 0.0, ncap=2)[0]
    terms = {(n1, n2): abs(table[n1, n2]) for n1 in range(3) for n2 in range(3)}
    assert abs(table[1, 1] - K_term(1, 1, 0.0, 0.0, 0.5, 0.0).value) < 1e-12
    C = max((terms[k] * (sum(k) ** (sum(k) / 2))) ** (1 / sum(k)) for k in terms if sum(k))
    for k, v in terms.items():
        n = sum(k)
        if n:
            assert v <= C**n * n ** (-n / 2) * (1 + 1e-12)
    assert terms[2, 2] < terms[1, 1] < 1
