"""Steepest-descent diagnostics and the Monte Carlo convergence experiment.

S_a(z) = log(1 + a e^z) - log(1 + a e^{-z}) - 2 a z / (1 + a)
R_a(z) = log(1 + a e^{-z}) - log(1 + a) + a z / (1 + a)
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .airy import DEFAULT_AIRY, AiryQuadConfig, fredholm_two_point_cdf
from .errors import BadContours, BranchCut, OutOfRange
from .params import ModelParams, scaled_inputs
from .sixvertex import sample_top_exits


def _check_a(a: float) -> None:
    if not 0.0 < a < 1.0:
        raise OutOfRange(f"a = {a} must lie in (0, 1)")


def _log_one_plus(x: np.ndarray) -> np.ndarray:
    # principal log of 1 + x; the cut is 1 + x in (-inf, 0]
    y = 1.0 + x
    # rounding leaves points meant to lie on the cut a few ulps off it
    if np.any((y.real <= 0) & (np.abs(y.imag) <= 1e-14 * np.abs(y))):
        raise BranchCut("1 + a e^{+-z} lies on the cut (-inf, 0]")
    return np.log(y)


def steepest_functions(a: float, z):
    """(S_a(z), R_a(z)) with principal logarithms; broadcasts over arrays."""
    _check_a(a)
    z = np.asarray(z, dtype=complex)
    lp = _log_one_plus(a * np.exp(z))
    lm = _log_one_plus(a * np.exp(-z))
    s = lp - lm - 2.0 * a * z / (1.0 + a)
    r = lm - math.log1p(a) + a * z / (1.0 + a)
    if z.ndim == 0:
        return complex(s), complex(r)
    return s, r


def steepest_derivatives(a: float, z):
    """(S_a'(z), R_a'(z))."""
    _check_a(a)
    z = np.asarray(z, dtype=complex)
    ep = a * np.exp(z)
    em = a * np.exp(-z)
    ds = ep / (1.0 + ep) + em / (1.0 + em) - 2.0 * a / (1.0 + a)
    dr = -em / (1.0 + em) + a / (1.0 + a)
    return ds, dr


def taylor_constants(a: float) -> tuple[float, float]:
    """Leading coefficients: S_a(z) ~ c3 z^3 and R_a(z) ~ c2 z^2 near 0."""
    _check_a(a)
    return a * (1.0 - a) / (3.0 * (1.0 + a) ** 3), a / (2.0 * (1.0 + a) ** 2)


def ray_slopes(a: float, A: float, samples: int = 1000) -> dict[str, np.ndarray]:
    """d/dy Re S_a along z = +-A y + i eps y and d/dy Re R_a along z = i eps y, y in [0, pi]."""
    y = np.linspace(0.0, math.pi, samples)
    out = {}
    for eps in (1, -1):
        for sign, name in ((1, "Z"), (-1, "W")):
            direction = sign * A + 1j * eps
            ds, _ = steepest_derivatives(a, direction * y)
            out[f"S_{name}{'+' if eps > 0 else '-'}"] = (ds * direction).real
        _, dr = steepest_derivatives(a, 1j * eps * y)
        out[f"R{'+' if eps > 0 else '-'}"] = (dr * 1j * eps).real
    return out


def descent_holds(a: float, A: float, samples: int = 1000, slack: float = 1e-14) -> bool:
    """Sampled sign conditions: Re S_a falls along gamma_Z rays, rises along gamma_W rays."""
    slopes = ray_slopes(a, A, samples)
    z_ok = all(np.all(slopes[k] <= slack) for k in ("S_Z+", "S_Z-"))
    w_ok = all(np.all(slopes[k] >= -slack) for k in ("S_W+", "S_W-"))
    return bool(z_ok and w_ok)


def mid_descent_holds(a: float, samples: int = 1000, slack: float = 1e-14) -> bool:
    """Sampled check that Re R_a(i y) is nonincreasing in |y| on [0, pi]."""
    slopes = ray_slopes(a, 0.0, samples)
    return bool(np.all(slopes["R+"] <= slack) and np.all(slopes["R-"] <= slack))


def slope_conditions(a: float, t: float, A: float, samples: int = 1000) -> dict[str, bool]:
    """Each checkable condition on the slope A, by name."""
    return {
        "steep": math.atan(1.0 / A) > math.pi / 3.0,
        "inside_t_annulus": A * math.pi < -math.log(t) / 20.0,
        "analytic_strip": A * math.pi < math.log(1.0 / a),
        "monotone": descent_holds(a, A, samples),
    }


@dataclass(frozen=True)
class DescentContours:
    """Descent contours gamma_W, gamma_mid, gamma_Z for the slope A, y in [-pi, pi]."""

    a: float
    t: float
    A: float

    def __post_init__(self) -> None:
        _check_a(self.a)
        if not 0.0 < self.t < 1.0:
            raise OutOfRange(f"t = {self.t} must lie in (0, 1)")
        if not self.A > 0:
            raise BadContours("A must be positive")
        failed = [k for k, ok in slope_conditions(self.a, self.t, self.A).items() if not ok]
        if failed:
            raise BadContours(f"A = {self.A} fails: {', '.join(failed)}")

    @classmethod
    def choose(cls, a: float, t: float, start: float = 1.0, halvings: int = 60) -> "DescentContours":
        """Largest A on the grid start / 2^k that passes every condition."""
        _check_a(a)
        A = start
        for _ in range(halvings):
            if all(slope_conditions(a, t, A).values()):
                return cls(a, t, A)
            A /= 2.0
        raise BadContours("no admissible slope found on the halving grid")

    def gamma_W(self, y):
        y = np.asarray(y, dtype=float)
        return -self.A * np.abs(y) + 1j * y

    def gamma_mid(self, y):
        return 1j * np.asarray(y, dtype=float)

    def gamma_Z(self, y):
        y = np.asarray(y, dtype=float)
        return self.A * np.abs(y) + 1j * y

    def gamma_Z_M(self, M: int) -> list[tuple[complex, complex]]:
        """The three segments of the M-dependent outer contour, bottom to top."""
        eps = M ** (-1.0 / 3.0)
        if eps > self.A * math.pi:
            raise BadContours(f"M = {M} too small: need M^(-1/3) <= A pi")
        top = complex(self.A * math.pi, math.pi)
        low = complex(eps, -math.pi * eps / self.A)
        high = complex(eps, math.pi * eps / self.A)
        return [(top.conjugate(), low), (low, high), (high, top)]

    def to_json(self) -> dict:
        return {"a": self.a, "t": self.t, "A": self.A}


# ---------------------------------------------------------------- convergence experiment


@lru_cache(maxsize=4096)
def _airy_reference(tau1: float, tau2: float, x1: float, x2: float, cfg: AiryQuadConfig) -> float:
    return fredholm_two_point_cdf(tau1, tau2, x1, x2, cfg)


def _joint_cdf(X: np.ndarray, Y: np.ndarray, g1: np.ndarray, g2: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted empirical P(X <= g1[i], Y <= g2[j]); weights has shape (B, n)."""
    below1 = (X[None, :] <= g1[:, None]).astype(float)
    below2 = (Y[None, :] <= g2[:, None]).astype(float)
    # (B, n) x (i, n) x (j, n) -> (B, i, j)
    return np.einsum("bn,in,jn->bij", weights, below1, below2) / weights.sum(axis=1)[:, None, None]


@dataclass(frozen=True)
class ConvergenceRow:
    M: int
    n1: int
    n2: int
    samples: int
    discrepancy: float
    band_low: float
    band_high: float
    mean_X: float
    mean_Y: float
    empirical: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConvergenceReport:
    params: ModelParams
    s1: float
    s2: float
    tau1: float
    tau2: float
    seed: int
    x1_grid: tuple[float, ...]
    x2_grid: tuple[float, ...]
    reference: np.ndarray
    rows: tuple[ConvergenceRow, ...]
    bootstrap: int

    def discrepancies(self) -> list[float]:
        return [r.discrepancy for r in self.rows]

    def to_csv(self) -> str:
        """One row per (M, x1, x2) grid point, RFC 4180."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["M", "n1", "n2", "x1", "x2", "empirical_cdf", "airy_cdf", "abs_diff"])
        for r in self.rows:
            for i, x1 in enumerate(self.x1_grid):
                for j, x2 in enumerate(self.x2_grid):
                    e, g = float(r.empirical[i, j]), float(self.reference[i, j])
                    w.writerow([r.M, r.n1, r.n2, repr(x1), repr(x2), repr(e), repr(g), repr(abs(e - g))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "s1": self.s1,
            "s2": self.s2,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "x1_grid": list(self.x1_grid),
            "x2_grid": list(self.x2_grid),
            "rows": [
                {
                    "M": r.M, "n1": r.n1, "n2": r.n2, "samples": r.samples,
                    "sup_discrepancy": r.discrepancy,
                    "band": [r.band_low, r.band_high],
                    "mean_X": r.mean_X, "mean_Y": r.mean_Y,
                }
                for r in self.rows
            ],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


DEFAULT_X_GRID = (-3.0, -2.0, -1.0, 0.0, 1.0)


def convergence_experiment(
    params: ModelParams,
    M_list: Sequence[int],
    samples: int,
    s1: float = 1.0,
    s2: float = -1.0,
    seed: int = 0,
    x1_grid: Optional[Sequence[float]] = None,
    x2_grid: Optional[Sequence[float]] = None,
    bootstrap: int = 200,
    level: float = 0.95,
    threads: int = 1,
    cfg: AiryQuadConfig = DEFAULT_AIRY,
) -> ConvergenceReport:
    """Empirical joint CDF of the rescaled top-exit counts against the two-point Airy CDF.

    For each M the columns n1, n2 and the rescaling come from the scaled
    inputs.  The sup-grid discrepancy carries a percentile bootstrap band from
    ``bootstrap`` multinomial reweightings.  Everything is a function of
    ``seed``.
    """
    if samples < 1:
        raise OutOfRange("samples must be at least 1")
    if bootstrap < 0:
        raise OutOfRange("bootstrap must be nonnegative")
    if not 0.0 < level < 1.0:
        raise OutOfRange("level must lie in (0, 1)")
    g1 = np.array(x1_grid if x1_grid is not None else DEFAULT_X_GRID, dtype=float)
    g2 = np.array(x2_grid if x2_grid is not None else DEFAULT_X_GRID, dtype=float)
    if g1.size == 0 or g2.size == 0:
        raise OutOfRange("grids must be nonempty")
    rows = []
    reference = None
    tau1 = tau2 = 0.0
    for M in M_list:
        inp = scaled_inputs(params, int(M), s1, s2, 0.0, 0.0)
        tau1, tau2 = inp.tau1, inp.tau2
        if reference is None:
            reference = np.array(
                [[_airy_reference(tau1, tau2, float(x1), float(x2), cfg) for x2 in g2] for x1 in g1]
            )
        exits = sample_top_exits(params, int(M), [inp.n1, inp.n2], samples, seed=seed, threads=threads)
        X = inp.rescale(exits[:, 0], 1)
        Y = inp.rescale(exits[:, 1], 2)
        emp = _joint_cdf(X, Y, g1, g2, np.ones((1, samples)))[0]
        disc = float(np.max(np.abs(emp - reference)))
        low = high = disc
        if bootstrap:
            rng = np.random.Generator(np.random.Philox(key=np.array([seed, int(M)], dtype=np.uint64)))
            weights = rng.multinomial(samples, np.full(samples, 1.0 / samples), size=bootstrap).astype(float)
            boot = _joint_cdf(X, Y, g1, g2, weights)
            sups = np.max(np.abs(boot - reference[None]), axis=(1, 2))
            low, high = (float(v) for v in np.quantile(sups, [(1 - level) / 2, (1 + level) / 2]))
        rows.append(
            ConvergenceRow(
                M=int(M), n1=inp.n1, n2=inp.n2, samples=samples, discrepancy=disc,
                band_low=low, band_high=high, mean_X=float(X.mean()), mean_Y=float(Y.mean()), empirical=emp,
            )
        )
    if reference is None:
        raise OutOfRange("M_list must be nonempty")
    return ConvergenceReport(
        params=params, s1=s1, s2=s2, tau1=tau1, tau2=tau2, seed=seed,
        x1_grid=tuple(float(v) for v in g1), x2_grid=tuple(float(v) for v in g2),
        reference=reference, rows=tuple(rows), bootstrap=bootstrap,
    )
