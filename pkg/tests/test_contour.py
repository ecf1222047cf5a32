import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import sixvertex_airy.contour as contour
from sixvertex_airy.contour import (
    CircleGrid,
    ExpansionConfig,
    SeriesInputs,
    cauchy_det,
    cauchy_det_alpha_bound,
    cauchy_det_hadamard_bound,
    expansion_residual,
    fit_term_majorant,
    joint_t_laplace_series,
    joint_term_IM,
    majorant_tail,
    moment_series,
    nested_residual,
    one_point_series,
    term_table,
    verify_residue_identities,
)
from sixvertex_airy.errors import BadContours, BadRadii, NotGood, OutOfRange, Singular
from sixvertex_airy.params import make_radii, near_unit_radii, param_convert
from sixvertex_airy.partitions import partition_count
from sixvertex_airy.qseries import t_pochhammer
from sixvertex_airy.sixvertex import exact_joint_height_law, law_observable

P = param_convert(a=0.1, t=0.1)


def cofactor_det(z, w):
    m = 1.0 / (np.asarray(z)[:, None] - np.asarray(w)[None, :])
    if len(z) == 1:
        return m[0, 0]
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def test_cauchy_det_single():
    assert cauchy_det([2.0], [1.0]) == pytest.approx(1.0)


def test_cauchy_det_two_by_two():
    rng = np.random.default_rng(4)
    for _ in range(50):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert abs(cauchy_det(z, w) - cofactor_det(z, w)) < 1e-13 * max(1, abs(cofactor_det(z, w)))


def test_cauchy_det_singular():
    with pytest.raises(Singular):
        cauchy_det([1.0, 2.0], [2.0, 3.0])
    assert cauchy_det([1.0, 1.0], [2.0, 3.0]) == 0


@given(st.integers(1, 6), st.floats(0.05, 0.9), st.floats(0.5, 3.0), st.integers(0, 2**32 - 1))
def test_cauchy_det_bounds(N, ratio, R, seed):
    rng = np.random.default_rng(seed)
    r = ratio * R
    z = R * np.exp(2j * np.pi * rng.random(N))
    w = r * np.exp(2j * np.pi * rng.random(N))
    val = abs(cauchy_det(z, w))
    assert val <= cauchy_det_hadamard_bound(N, r, R) * (1 + 1e-9)
    alpha = rng.uniform(math.sqrt(ratio), 1.0)
    if alpha > math.sqrt(ratio):
        assert val <= cauchy_det_alpha_bound(N, r, R, alpha) * (1 + 1e-9)


def test_alpha_bound_range():
    with pytest.raises(OutOfRange):
        cauchy_det_alpha_bound(2, 0.5, 2.0, 0.4)
    # z = R, w = r attains the N = 1 bound at alpha = 1
    assert abs(cauchy_det([2.0], [0.5])) == pytest.approx(cauchy_det_alpha_bound(1, 0.5, 2.0, 1.0))


def test_circle_grid():
    g = CircleGrid(2.0, 8)
    assert g.integrate(lambda z: 1 / z) == pytest.approx(1.0)
    assert abs(g.integrate(lambda z: z**3)) < 1e-14
    assert g.halved().n == 4 and set(np.round(g.halved().nodes, 12)) <= set(np.round(g.nodes, 12))
    with pytest.raises(OutOfRange):
        CircleGrid(1.0, 12)
    with pytest.raises(BadRadii):
        CircleGrid(0.0, 8)


def test_one_point_leading_term():
    assert one_point_series(P, [P.a], [P.a], u1=-0.5, N1_max=0).value == 1


@pytest.mark.parametrize("M,N,u", [(1, 1, -0.5), (2, 2, -0.5), (2, 3, -0.1 + 0.2j), (3, 2, -2.0)])
def test_one_point_matches_transfer_matrix(M, N, u):
    law = exact_joint_height_law(P, M, N, N)
    r = one_point_series(P, [P.a] * N, [P.a] * M, u1=u, grid=64)
    assert abs(r.value - law_observable(law, P.t, u, 0)) < 1e-8
    assert r.err_est < 1e-10


def test_one_point_inhomogeneous_specialisation():
    # x = (a, a) and y = (a, a / 2): compare against the same series with swapped y order
    r1 = one_point_series(P, [P.a, P.a], [P.a, P.a / 2], u1=-0.5, grid=64)
    r2 = one_point_series(P, [P.a, P.a], [P.a / 2, P.a], u1=-0.5, grid=64)
    assert abs(r1.value - r2.value) < 1e-12


def test_one_point_bad_radii():
    with pytest.raises(BadRadii):
        one_point_series(P, [P.a], [P.a], radii=(1.0, 2.0))


def test_moment_first_single_vertex():
    r = moment_series(P, 1, 1, 1, M=1, u1=0.0)
    assert r.value == pytest.approx(P.b2 + (1 - P.b2) / P.t, rel=1e-10)


def test_moment_with_u_matches_transfer_matrix():
    law = exact_joint_height_law(P, 2, 2, 1)
    r = moment_series(P, 2, 1, 2, u1=-0.3, M=2, grid=32)
    assert abs(r.value - law_observable(law, P.t, -0.3, 0, k1=0, k2=2)) < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3])
def test_moment_label_count(monkeypatch, k):
    seen = []
    original = contour.partitions_of

    def spy(n):
        out = original(n)
        seen.append(len(out))
        return out

    monkeypatch.setattr(contour, "partitions_of", spy)
    moment_series(P, k, 1, 1, M=1, grid=8, u1=0.0)
    assert seen and all(s == partition_count(k) for s in seen)


def test_moment_bad_radii():
    with pytest.raises(BadRadii):
        moment_series(P, 1, 1, 1, M=1, radii=(2.0, 1.0, 0.15))


def test_zero_term_convention():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    assert joint_term_IM(0, 0, inp, near_unit_radii(P, 0.9)).value == 1


def test_u2_zero_reduces_to_one_point():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, 0.0)
    r = joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.9), grid=32, Ncap=3)
    terms = {tuple(map(int, k.split(","))): complex(*v) for k, v in r.info["terms"].items()}
    assert all(v == 0 for (n1, n2), v in terms.items() if n2 >= 1)
    o = one_point_series(P, [P.a] * 2, [P.a] * 2, u1=-0.5, grid=64)
    assert abs(r.value - o.value) < 1e-6


def test_term_methods_agree():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    radii = near_unit_radii(P, 0.9)
    exact = joint_term_IM(1, 1, inp, radii, grid=16, method="exact")
    direct = joint_term_IM(1, 1, inp, radii, grid=16, method="direct")
    assert abs(exact.value - direct.value) < 1e-12
    fine = joint_term_IM(1, 1, inp, radii, grid=64)
    lat = joint_term_IM(1, 1, inp, radii, method="lattice")
    assert abs(lat.value - fine.value) < 5 * lat.err_est + fine.err_est


def test_term_symmetric_under_relabelling():
    # the direct tensor sum visits every ordering of same-group nodes
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    radii = near_unit_radii(P, 0.9)
    a = joint_term_IM(2, 0, inp, radii, grid=16, method="direct").value
    b = joint_term_IM(2, 0, inp, radii, grid=16, method="exact").value
    assert abs(a - b) < 1e-12


def test_grid_halving_certificate():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    radii = near_unit_radii(P, 0.9)
    coarse = joint_term_IM(1, 1, inp, radii, grid=32)
    fine = joint_term_IM(1, 1, inp, radii, grid=64)
    assert abs(coarse.value - fine.value) <= coarse.err_est


def test_radii_invariance():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    r1 = joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.9), grid=32, Ncap=2)
    r2 = joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.95), grid=32, Ncap=2)
    assert abs(r1.value - r2.value) <= r1.err_est + r2.err_est


@pytest.mark.slow
def test_joint_series_single_vertex():
    inp = SeriesInputs.homogeneous(P, 1, 1, 1, -0.5, -0.25)
    r = joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.97), grid=32, Ncap=4)
    t = P.t
    two_term = P.b2 / (t_pochhammer(-0.5, t) * t_pochhammer(-0.25, t)) + (1 - P.b2) / (
        t_pochhammer(-0.5 / t, t) * t_pochhammer(-0.25 / t, t)
    )
    assert abs(r.value - two_term) < 1e-8


def test_tail_certificate_dominates_last_terms():
    inp = SeriesInputs.homogeneous(P, 2, 2, 1, -0.5, -0.25)
    terms, _ = term_table(inp, near_unit_radii(P, 0.9), grid=16, Ncap=3)
    C, q = fit_term_majorant(terms)
    for (n1, n2), v in terms.items():
        assert abs(v) <= C ** (n1 + n2) * q ** (n1 * n1 + n2 * n2) * (1 + 1e-12)
    assert majorant_tail(C, q, 3) < majorant_tail(C, q, 2)


def test_require_good():
    inp = SeriesInputs.homogeneous(P, 1, 1, 1, -0.5, -0.25)
    with pytest.raises(NotGood):
        joint_t_laplace_series(inp, grid=8, Ncap=1, require_good=True)
    with pytest.raises(NotGood):
        joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.9), grid=8, Ncap=1, require_good=True)


def test_series_rejects_radii_that_miss_the_specialisations():
    inp = SeriesInputs.homogeneous(P, 1, 1, 1, -0.5, -0.25)
    with pytest.raises(BadRadii):
        make_radii(P, 20.0, 3.0, 1.0, 2.1)
    with pytest.raises(OutOfRange):
        joint_t_laplace_series(inp, radii=near_unit_radii(P, 0.9), Ncap=-1)


def test_nested_identity_trivial():
    assert nested_residual(1) < 1e-13


def test_nested_identity_second_order():
    assert nested_residual(2) < 1e-10


def test_nested_identity_needs_nested_circles():
    with pytest.raises(BadContours):
        nested_residual(2, q=2.0, radii=(3.0, 2.0))


def test_expansion_identity_minimal():
    assert expansion_residual(ExpansionConfig(t=0.3, u=-0.2 + 0.1j)) < 1e-10


def test_expansion_identity_with_specialisations():
    cfg = ExpansionConfig(t=0.4, u=-0.05, a=0.8j, z=0.8j, xs=(0.1,), ys=(0.2,), zs=(2.0,), ws=(3.0,))
    assert expansion_residual(cfg) < 1e-10


def test_expansion_identity_guards():
    with pytest.raises(OutOfRange):
        expansion_residual(ExpansionConfig(t=0.3, u=-0.5, xs=(0.1,)))
    with pytest.raises(BadContours):
        expansion_residual(ExpansionConfig(radius=2.0))


def test_verify_pair():
    nested, expansion = verify_residue_identities()
    assert nested < 1e-10 and expansion < 1e-10
