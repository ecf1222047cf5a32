"""The ten end-to-end acceptance checks, each returning a pass/fail record."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import stats

from .airy import fredholm_two_point_cdf, K_term, one_point_cdf, series_two_point_cdf
from .contour import (
    SeriesInputs,
    cauchy_det,
    cauchy_det_alpha_bound,
    cauchy_det_hadamard_bound,
    joint_t_laplace_series,
    joint_term_IM,
    moment_series,
    nested_residual,
    one_point_series,
    expansion_residual,
    scaled_radii,
)
from .hlp import truncated_joint_law
from .params import near_unit_radii, param_convert, scaled_inputs, time_of_slope
from .qseries import cross_term_gamma_form, cross_term_product_form, t_pochhammer
from .scaling import (
    DescentContours,
    convergence_experiment,
    descent_holds,
    mid_descent_holds,
    steepest_functions,
    taylor_constants,
)
from .sixvertex import exact_joint_height_law, exact_joint_height_law_weights, law_observable, sample_top_exits_weights


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget_seconds: float
    measured: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.title} ({self.seconds:.1f} s) {self.measured.get('summary', '')}".rstrip()

    def to_json(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "seconds": self.seconds,
            "budget_seconds": self.budget_seconds,
            "measured": self.measured,
        }


def _timed(number: int, title: str, budget: float, body: Callable[[], tuple[bool, dict]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, measured = body()
    seconds = time.perf_counter() - t0
    return CriterionResult(number, title, bool(ok and seconds <= budget), seconds, budget, measured)


def one_point_identity() -> CriterionResult:
    def body():
        p = param_convert(a=0.1, t=0.1)
        worst = 0.0
        for M, N in ((1, 1), (2, 2)):
            law = exact_joint_height_law(p, M, N, N)
            for u in (-0.5, -0.1 + 0.2j):
                r = one_point_series(p, [p.a] * N, [p.a] * M, u1=u, grid=64)
                worst = max(worst, abs(r.value - law_observable(law, p.t, u, 0)))
        return worst <= 1e-8, {"max_abs_error": worst, "summary": f"max error {worst:.2e} <= 1e-8"}

    return _timed(1, "one-point t-Laplace series vs transfer matrix", 10.0, body)


def moment_identity() -> CriterionResult:
    def body():
        p = param_convert(a=0.1, t=0.1)
        law = exact_joint_height_law(p, 2, 2, 1)
        worst = 0.0
        for k in (1, 2):
            for u in (0.0, -0.3):
                r = moment_series(p, k, 1, 2, u1=u, M=2, grid=32)
                worst = max(worst, abs(r.value - law_observable(law, p.t, u, 0, k1=0, k2=k)))
        return worst <= 1e-8, {"max_abs_error": worst, "summary": f"max error {worst:.2e} <= 1e-8"}

    return _timed(2, "moment series vs transfer matrix", 30.0, body)


def joint_t_laplace_identity() -> CriterionResult:
    def body():
        p = param_convert(a=0.1, t=0.1)
        inp = SeriesInputs.homogeneous(p, 2, 2, 1, -0.5, -0.25)
        r = joint_t_laplace_series(inp, radii=near_unit_radii(p, 0.9), grid=32, Ncap=4)
        exact = law_observable(exact_joint_height_law(p, 2, 2, 1), p.t, -0.5, -0.25)
        err = abs(r.value - exact)
        ok = err <= 1e-6 and r.tail_est <= 1e-8
        return ok, {
            "value": [r.value.real, r.value.imag],
            "exact": [exact.real, exact.imag],
            "abs_error": err,
            "err_est": r.err_est,
            "tail_est": r.tail_est,
            "summary": f"error {err:.2e} <= 1e-6, tail_est {r.tail_est:.2e} <= 1e-8",
        }

    return _timed(3, "joint t-Laplace series vs transfer matrix", 300.0, body)


def residue_identities() -> CriterionResult:
    def body():
        nested = max(nested_residual(1), nested_residual(2))
        expansion = expansion_residual()
        ok = nested <= 1e-10 and expansion <= 1e-10
        return ok, {
            "nested": nested,
            "expansion": expansion,
            "summary": f"nested {nested:.2e}, expansion {expansion:.2e} <= 1e-10",
        }

    return _timed(4, "residue identities", 10.0, body)


def hall_littlewood_equality() -> CriterionResult:
    def body():
        worst = 0.0
        ok = True
        for a, t in ((0.1, 0.1), (0.3, 0.4)):
            p = param_convert(a=a, t=t)
            for N in (1, 2):
                for M in (1, 2):
                    for n2 in range(1, N + 1):
                        hl, tail = truncated_joint_law(a, t, N, M, N, n2)
                        tv = hl.tv_distance(exact_joint_height_law(p, M, N, n2))
                        worst = max(worst, tv)
                        ok = ok and tv <= max(1e-8, tail)
        return ok, {"max_tv": worst, "summary": f"max TV {worst:.2e}"}

    return _timed(5, "Hall-Littlewood law equals six-vertex law", 60.0, body)


def airy_series_identity() -> CriterionResult:
    def body():
        s = series_two_point_cdf(0.0, 0.0, 0.5, 0.0, Ncap=4)
        f = fredholm_two_point_cdf(0.5, 0.0, 0.0, 0.0)
        diff = abs(s.value - f)
        return diff <= 1e-4, {"series": s.value.real, "fredholm": f, "abs_diff": diff, "summary": f"|series - Fredholm| {diff:.2e} <= 1e-4"}

    return _timed(6, "contour series vs Fredholm determinant", 120.0, body)


def term_convergence() -> CriterionResult:
    def body():
        a = t = 0.05
        s1, s2, x1, x2 = 1.0, -1.0, 0.5, 0.5
        p = param_convert(a=a, t=t)
        K = K_term(1, 1, x1, x2, time_of_slope(a, s1), time_of_slope(a, s2)).value
        gaps = []
        for M in (40, 80, 160, 320):
            inp = scaled_inputs(p, M, s1, s2, x1, x2)
            gaps.append(abs(joint_term_IM(1, 1, inp, scaled_radii(inp), grid=256).value - K))
        monotone = all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))
        ok = monotone and gaps[-1] < 5e-3
        return ok, {"K": [K.real, K.imag], "gaps": gaps, "summary": "gaps " + ", ".join(f"{g:.2e}" for g in gaps)}

    return _timed(7, "prelimit term I_M(1,1) approaches K(1,1)", 600.0, body)


def airy_stationarity() -> CriterionResult:
    def body():
        vals = [one_point_cdf(0.0, tau=tau) for tau in (0.0, 0.5, 1.0)]
        spread = max(vals) - min(vals)
        return spread <= 1e-8, {"values": vals, "spread": spread, "summary": f"spread {spread:.2e} <= 1e-8"}

    return _timed(8, "one-point Airy marginal independent of time", 60.0, body)


def _pochhammer_identity(rng) -> float:
    worst = 0.0
    for _ in range(200):
        t = rng.uniform(0.05, 0.9)
        z = complex(*rng.normal(size=2))
        lhs = t_pochhammer(z, t)
        rhs = (1 - z) * t_pochhammer(z * t, t)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def _cauchy_bounds(rng, draws: int = 1000) -> int:
    violations = 0
    for _ in range(draws):
        N = int(rng.integers(1, 7))
        R = rng.uniform(0.5, 3.0)
        r = R * rng.uniform(0.05, 0.95)
        z = R * np.exp(2j * np.pi * rng.random(N))
        w = r * np.exp(2j * np.pi * rng.random(N))
        value = abs(cauchy_det(z, w))
        alpha = rng.uniform(math.sqrt(r / R), 1.0)
        if value > cauchy_det_hadamard_bound(N, r, R) * (1 + 1e-9):
            violations += 1
        if value > cauchy_det_alpha_bound(N, r, R, alpha) * (1 + 1e-9):
            violations += 1
    return violations


def sampler_chi_square(M: int, n1: int, n2: int, b1: float, b2: float, count: int, seed: int) -> float:
    """p-value of Pearson's test of sampled (lambda'(n2), lambda'(n1)) against the exact law.

    Cells with expected count below 5 are pooled into one cell.
    """
    law = exact_joint_height_law_weights(b1, b2, M, n1, n2)
    exits = sample_top_exits_weights(b1, b2, M, [n2, n1], count, seed=seed)
    observed = np.zeros_like(law.pmf)
    np.add.at(observed, (exits[:, 0], exits[:, 1]), 1)
    expected = law.pmf * count
    big = expected >= 5
    obs = list(observed[big]) + [observed[~big].sum()]
    exp = list(expected[big]) + [expected[~big].sum()]
    if exp[-1] < 5:
        extra_obs, extra_exp = obs.pop(), exp.pop()
        obs[-1] += extra_obs
        exp[-1] += extra_exp
    return float(stats.chisquare(obs, exp).pvalue)


def _taylor_errors(a: float) -> tuple[float, float]:
    c3, c2 = taylor_constants(a)
    h = 1e-3
    S = lambda z: steepest_functions(a, z)[0].real
    third = (S(2 * h) - 2 * S(h) + 2 * S(-h) - S(-2 * h)) / (2 * h**3)
    k = 1e-4
    R = lambda z: steepest_functions(a, z)[1].real
    second = (R(k) - 2 * R(0.0) + R(-k)) / (k * k)
    return abs(third - 6 * c3) / (6 * c3), abs(second / 2 - c2)


def _cross_term(rng) -> float:
    worst = 0.0
    for _ in range(100):
        t = rng.uniform(0.1, 0.6)
        w = rng.uniform(1.0, 1.3) * np.exp(2j * np.pi * rng.random(1))
        zh = rng.uniform(0.5, 0.9) * np.exp(2j * np.pi * rng.random(1))
        lam, mu = rng.integers(1, 5, 1), rng.integers(1, 5, 1)
        worst = max(worst, abs(cross_term_product_form(w, zh, lam, mu, t) - cross_term_gamma_form(w, zh, lam, mu, t)))
    return worst


def invariant_suites() -> CriterionResult:
    def body():
        rng = np.random.default_rng(20261015)
        poch = _pochhammer_identity(rng)
        cauchy = _cauchy_bounds(rng)
        pvals = []
        for M, n1, n2 in ((1, 1, 1), (2, 3, 1), (3, 3, 2), (4, 4, 2)):
            p = param_convert(a=0.4, t=0.3)
            pvals.append(sampler_chi_square(M, n1, n2, p.b1, p.b2, 20000, seed=M))
        descent = True
        for a in (0.05, 0.2):
            A = DescentContours.choose(a, a).A
            descent = descent and descent_holds(a, A, 1000) and mid_descent_holds(a, 1000)
        taylor = [_taylor_errors(a) for a in (0.05, 0.2, 0.5)]
        s3 = max(e[0] for e in taylor)
        r2 = max(e[1] for e in taylor)
        cross = _cross_term(rng)
        checks = {
            "pochhammer": poch <= 1e-12,
            "cauchy_bounds": cauchy == 0,
            "sampler_chi_square": min(pvals) > 1e-4,
            "descent": descent,
            "taylor_S": s3 <= 1e-5,
            "taylor_R": r2 <= 1e-6,
            "cross_term": cross <= 1e-12,
        }
        failed = [k for k, v in checks.items() if not v]
        measured = {
            "pochhammer_rel_error": poch,
            "cauchy_violations": cauchy,
            "chi_square_pvalues": pvals,
            "taylor_S_rel_error": s3,
            "taylor_R_abs_error": r2,
            "cross_term_residual": cross,
            "checks": checks,
            "summary": "all invariants hold" if not failed else "failed: " + ", ".join(failed),
        }
        return not failed, measured

    return _timed(9, "invariant suites", 120.0, body)


def convergence_trend(samples: int = 10_000, seed: int = 1, threads: int = 1) -> CriterionResult:
    def body():
        p = param_convert(a=0.05, t=0.05)
        report = convergence_experiment(p, [40, 80, 160, 320], samples, s1=1.0, s2=-1.0, seed=seed, threads=threads)
        d = report.discrepancies()
        return d[-1] < d[0], {"discrepancies": d, "summary": "sup discrepancy " + ", ".join(f"{v:.3f}" for v in d)}

    return _timed(10, "Monte Carlo convergence trend", 1800.0, body)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: one_point_identity,
    2: moment_identity,
    3: joint_t_laplace_identity,
    4: residue_identities,
    5: hall_littlewood_equality,
    6: airy_series_identity,
    7: term_convergence,
    8: airy_stationarity,
    9: invariant_suites,
    10: convergence_trend,
}


def run_acceptance(only: Optional[Iterable[int]] = None, echo: Optional[Callable[[str], None]] = None) -> list[CriterionResult]:
    """Run the selected criteria in order; ``echo`` receives one line per criterion."""
    numbers = sorted(set(only)) if only is not None else sorted(CRITERIA)
    results = []
    for n in numbers:
        if n not in CRITERIA:
            raise KeyError(f"no acceptance criterion {n}")
        res = CRITERIA[n]()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
