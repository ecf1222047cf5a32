"""Model parameters, the good-radii search and the scaled inputs.

The six-vertex weights (b1, b2) and the Hall-Littlewood parameters (a, t) are
two coordinates on the same family:

    b1 = t (1 - a^2) / (1 - a^2 t),   b2 = (1 - a^2) / (1 - a^2 t),
    t  = b1 / b2,                      a^2 = (1 - b2) / (1 - b1).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import BadRadii, Inconsistent, MTooSmall, OutOfRange
from .qseries import LogU, t_pochhammer


@dataclass(frozen=True)
class ModelParams:
    a: float
    t: float
    b1: float
    b2: float

    def to_json(self) -> dict:
        return asdict(self)


def _open_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise OutOfRange(f"{name} = {value} must lie in (0, 1)")
    return value


def param_convert(
    a: Optional[float] = None,
    t: Optional[float] = None,
    b1: Optional[float] = None,
    b2: Optional[float] = None,
) -> ModelParams:
    """Build a fully populated :class:`ModelParams` from (a, t) or (b1, b2)."""
    if a is not None and t is not None and b1 is None and b2 is None:
        a = _open_unit("a", a)
        t = _open_unit("t", t)
        a2 = a * a
        den = 1.0 - a2 * t
        return ModelParams(a=a, t=t, b1=t * (1.0 - a2) / den, b2=(1.0 - a2) / den)
    if b1 is not None and b2 is not None and a is None and t is None:
        b1 = _open_unit("b1", b1)
        b2 = _open_unit("b2", b2)
        if b1 >= b2:
            raise Inconsistent(f"need b1 < b2, got b1 = {b1}, b2 = {b2}")
        return ModelParams(a=math.sqrt((1.0 - b2) / (1.0 - b1)), t=b1 / b2, b1=b1, b2=b2)
    raise OutOfRange("supply exactly one of the pairs (a, t) or (b1, b2)")


@dataclass(frozen=True)
class RadiiConfig:
    """Four nested contour radii and the contraction factor they certify."""

    r1: float
    r2: float
    r3: float
    r4: float
    rho: float

    @property
    def radii(self) -> tuple[float, float, float, float]:
        return (self.r1, self.r2, self.r3, self.r4)

    def to_json(self) -> dict:
        return asdict(self)


def contraction_factor(r1: float, r2: float, r3: float, r4: float, t: float) -> float:
    """Left side of the goodness condition for radii r1 > r2 > r3 > r4."""
    x, y = r2 / r1, r4 / r3
    geom = max(math.sqrt(x) / (1.0 - x), math.sqrt(y) / (1.0 - y))
    num = t_pochhammer(-r3 / r1, t) * t_pochhammer(-r4 / r2, t)
    den = t_pochhammer(r4 / r1, t) * t_pochhammer(r3 / r2, t)
    return geom * num / den


def radii_admissible(params: ModelParams, r1: float, r2: float, r3: float, r4: float) -> bool:
    """Nesting conditions a < r4 < r3 < r2 < r1 < 1/a and r4 > t r1."""
    a, t = params.a, params.t
    return a < r4 < r3 < r2 < r1 < 1.0 / a and r4 > t * r1


def make_radii(params: ModelParams, r1: float, r2: float, r3: float, r4: float) -> RadiiConfig:
    """Validate nesting and attach the contraction factor (which may exceed 1)."""
    if not radii_admissible(params, r1, r2, r3, r4):
        raise BadRadii(f"radii {(r1, r2, r3, r4)} violate the nesting conditions")
    return RadiiConfig(r1, r2, r3, r4, contraction_factor(r1, r2, r3, r4, params.t))


@dataclass(frozen=True)
class RadiiSearch:
    template_points: int = 2000
    grid_per_axis: int = 22


def _template_candidates(params: ModelParams, npts: int):
    a, t = params.a, params.t
    # (R^3, R, 1/R, 1/R^3) needs R^3 < 1/a and R^6 < 1/t
    log_rmax = min(-math.log(a) / 3.0, -math.log(t) / 6.0)
    for k in range(1, npts + 1):
        big_r = math.exp(log_rmax * k / (npts + 1))
        yield (big_r**3, big_r, 1.0 / big_r, big_r**-3)


def _grid_candidates(params: ModelParams, per_axis: int):
    a, t = params.a, params.t
    log_floor = math.log(max(t, a * a))
    steps = [log_floor * k / (per_axis + 1) for k in range(1, per_axis + 1)]
    for l2 in steps:
        for l3 in steps:
            for l4 in steps:
                total = l2 + l3 + l4
                if total <= log_floor:
                    continue
                r1 = math.exp(-total / 2.0)
                r2 = r1 * math.exp(l2)
                r3 = r2 * math.exp(l3)
                yield (r1, r2, r3, r3 * math.exp(l4))


def _best(params: ModelParams, candidates, target_rho: float) -> Optional[RadiiConfig]:
    best = None
    for r in candidates:
        if not radii_admissible(params, *r):
            continue
        rho = contraction_factor(*r, params.t)
        if rho > target_rho:
            continue
        key = (rho, r[0])
        if best is None or key < best[0]:
            best = (key, r)
    if best is None:
        return None
    (rho, _), r = best
    return RadiiConfig(*r, rho)


def find_good_radii(
    params: ModelParams, target_rho: float = 0.5, budget: RadiiSearch = RadiiSearch()
) -> Optional[RadiiConfig]:
    """Search the template family first, then a log-spaced grid of radius ratios.

    Returns ``None`` when nothing with rho <= target_rho is found.
    """
    if not 0.0 < target_rho < 1.0:
        raise OutOfRange("target_rho must lie in (0, 1)")
    found = _best(params, _template_candidates(params, budget.template_points), target_rho)
    if found is not None:
        return found
    return _best(params, _grid_candidates(params, budget.grid_per_axis), target_rho)


def near_unit_radii(params: ModelParams, spread: float = 0.5) -> RadiiConfig:
    """Admissible (not necessarily good) radii (e^{3d}, e^{d}, e^{-d}, e^{-3d}).

    ``spread`` is the fraction of the largest allowed d that is used.
    """
    a, t = params.a, params.t
    d_max = min(-math.log(a) / 3.0, -math.log(t) / 6.0)
    d = spread * d_max
    return make_radii(params, math.exp(3 * d), math.exp(d), math.exp(-d), math.exp(-3 * d))


def scaling_constants(a: float) -> tuple[float, float, float, float]:
    """(sigma_a, f1, f1', f1'') of the KPZ centring and scaling."""
    sigma = a ** (1.0 / 3.0) * (1.0 - a) ** (1.0 / 3.0) / (1.0 + a)
    return sigma, 2.0 * a / (1.0 + a), a / (1.0 + a), -a / (2.0 * (1.0 - a * a))


def time_of_slope(a: float, s: float) -> float:
    """Airy-process time tau attached to the column offset s."""
    return s * a ** (1.0 / 3.0) / (2.0 * (1.0 - a) ** (2.0 / 3.0))


def column_of_slope(M: int, s: float) -> int:
    value = M + s * M ** (2.0 / 3.0)
    # guard against M^{2/3} landing a hair below an exact integer
    return math.floor(value + 1e-12 * max(1.0, abs(value)))


@dataclass(frozen=True)
class ScaledInputs:
    params: ModelParams
    M: int
    s1: float
    s2: float
    x1: float
    x2: float
    n1: int
    n2: int
    u1: LogU
    u2: LogU
    sigma_a: float
    f1: float
    f1p: float
    f1pp: float
    tau1: float
    tau2: float

    @property
    def N(self) -> int:
        return self.n1

    def center(self, which: int) -> float:
        """f1 M + f1'(n - M) + f1''/2 s^2 M^{1/3} for column n1 (1) or n2 (2)."""
        n, s = (self.n1, self.s1) if which == 1 else (self.n2, self.s2)
        return self.f1 * self.M + self.f1p * (n - self.M) + 0.5 * self.f1pp * s * s * self.M ** (1.0 / 3.0)

    def rescale(self, lam, which: int):
        """Map top-exit counts at column n1 (1) or n2 (2) to the fluctuation scale."""
        lam = np.asarray(lam, dtype=float)
        return (lam - self.center(which)) / (self.sigma_a * self.M ** (1.0 / 3.0))

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("u1", "u2", "params")}
        out["params"] = self.params.to_json()
        out["u1"] = self.u1.to_json()
        out["u2"] = self.u2.to_json()
        return out


def scaled_inputs(params: ModelParams, M: int, s1: float, s2: float, x1: float, x2: float) -> ScaledInputs:
    if not s1 > s2:
        raise OutOfRange("need s1 > s2")
    if M < 1 or M + s2 * M ** (2.0 / 3.0) < 1:
        raise MTooSmall(f"M = {M} too small for s2 = {s2}")
    sigma, f1, f1p, f1pp = scaling_constants(params.a)
    n1, n2 = column_of_slope(M, s1), column_of_slope(M, s2)
    logt = math.log(params.t)
    m13 = M ** (1.0 / 3.0)

    def logu(x: float, n: int, s: float) -> LogU:
        # the top-exit count grows with the column, so the linear term is f1' (n - M)
        return LogU(logt * (M * f1 + m13 * sigma * x + f1p * (n - M) + 0.5 * f1pp * s * s * m13), 0.0)

    return ScaledInputs(
        params=params, M=M, s1=s1, s2=s2, x1=x1, x2=x2, n1=n1, n2=n2,
        u1=logu(x1, n1, s1), u2=logu(x2, n2, s2),
        sigma_a=sigma, f1=f1, f1p=f1p, f1pp=f1pp,
        tau1=time_of_slope(params.a, s1), tau2=time_of_slope(params.a, s2),
    )
