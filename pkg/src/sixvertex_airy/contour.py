"""Circle-contour quadrature for the prelimit series of the Hall-Littlewood process.

All multiple integrals are trapezoidal sums on equispaced circle nodes.  The
sums over Cauchy determinants are never formed point by point: for one group
of variables

    (1/N!) sum det[1/(z_i - w_j)] prod W(z_i, w_i) = e_N(G),   G = W^T C,

where e_N is the N-th elementary symmetric function of the eigenvalues of G.
Joint terms couple the two groups through products of Pochhammer ratios that
factor into row and column modulations of the other group's matrix, so a
joint term is a sum over configurations of the smaller group of e_N of a
modulated matrix.  When the number of configurations exceeds a budget the
conditioned group is evaluated on a thinned subgrid.  A randomly shifted
rank-1 lattice rule and a brute-force tensor sum are available as
independent checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from ._backend import kernels
from .errors import BadContours, BadRadii, BudgetExceeded, Nonconvergence, NotGood, OutOfRange, Singular
from .params import ModelParams, RadiiConfig, ScaledInputs, find_good_radii, make_radii, near_unit_radii
from .partitions import Partition, partitions_of
from .qseries import DEFAULT_TOL, LogU, QTol, as_logu, spiral_S, t_factorial, t_pochhammer
from .result import QuadResult

_CHUNK_ENTRIES = 1 << 21


# ---------------------------------------------------------------------------
# grids and Cauchy determinants


@dataclass(frozen=True)
class CircleGrid:
    """n equispaced nodes r e^{2 pi i j / n}; weights fold in dz / (2 pi i)."""

    radius: float
    n: int = 64

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise BadRadii("radius must be positive")
        if self.n < 1 or self.n & (self.n - 1):
            raise OutOfRange("node count must be a power of two")

    @property
    def nodes(self) -> np.ndarray:
        return self.radius * np.exp(2j * np.pi * np.arange(self.n) / self.n)

    @property
    def weights(self) -> np.ndarray:
        return self.nodes / self.n

    def halved(self) -> "CircleGrid":
        """Every other node; the halved grid is a subset of this one."""
        return CircleGrid(self.radius, self.n // 2)

    def integrate(self, f) -> complex:
        return complex(np.sum(f(self.nodes) * self.weights))


def _node_count(grid: Union[int, CircleGrid, None], default: int = 64) -> int:
    if grid is None:
        n = default
    elif isinstance(grid, CircleGrid):
        n = grid.n
    else:
        n = int(grid)
    if n < 2 or n & (n - 1):
        raise OutOfRange("node count must be a power of two and at least 2")
    return n


def cauchy_det(z: Sequence[complex], w: Sequence[complex]) -> complex:
    """det[1/(z_i - w_j)] = prod_{i<j} (z_i - z_j)(w_j - w_i) / prod_{i,j} (z_i - w_j)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.shape != w.shape or z.ndim != 1:
        raise OutOfRange("z and w must be 1-D of equal length")
    diff = z[:, None] - w[None, :]
    if np.any(diff == 0):
        raise Singular("some z_i equals some w_j")
    iu = np.triu_indices(len(z), 1)
    dz = (z[:, None] - z[None, :])[iu]
    dw = (w[None, :] - w[:, None])[iu]
    if np.any(dz == 0) or np.any(dw == 0):
        return 0j
    log_val = np.sum(np.log(dz)) + np.sum(np.log(dw)) - np.sum(np.log(diff))
    return complex(np.exp(log_val))


def cauchy_det_hadamard_bound(N: int, r: float, R: float) -> float:
    """R^{-N} N^N (r/R)^{N(N-1)/2} / (1 - r/R)^{N^2} for |z_i| = R > |w_j|, |w_j| <= r."""
    if not 0 < r < R:
        raise OutOfRange("need 0 < r < R")
    x = r / R
    return math.exp(-N * math.log(R) + N * math.log(N) + N * (N - 1) / 2 * math.log(x) - N * N * math.log1p(-x))


def cauchy_det_alpha_bound(N: int, r: float, R: float, alpha: float) -> float:
    """N^{N/2} / (R alpha - r / alpha)^N ((R alpha + r / alpha) / (r + R))^{N^2} for |w_j| = r < R = |z_i|.

    Valid for sqrt(r/R) < alpha <= 1, where both the gap R alpha - r/alpha is
    positive and |alpha z - w/alpha| / |z - w| peaks at opposite arguments.
    """
    if not 0 < r < R:
        raise OutOfRange("need 0 < r < R")
    if not math.sqrt(r / R) < alpha <= 1:
        raise OutOfRange("need sqrt(r / R) < alpha <= 1")
    gap = R * alpha - r / alpha
    return math.exp(0.5 * N * math.log(N) - N * math.log(gap) + N * N * math.log((R * alpha + r / alpha) / (r + R)))


# ---------------------------------------------------------------------------
# inputs


@dataclass(frozen=True)
class SeriesInputs:
    """Specialisations and observables for the prelimit series.

    Group 1 (z, w) carries u1 and the first n1 of the x's; group 2 (zhat,
    what) carries u2 and the first n2.  The series equals
    E[1 / ((u1 t^{-L1}; t)(u2 t^{-L2}; t))] with L_i the length of lam(n_i).
    """

    t: float
    X: tuple[float, ...]
    Y: tuple[float, ...]
    n1: int
    n2: int
    u1: LogU
    u2: LogU

    def __post_init__(self) -> None:
        if not 0.0 < self.t < 1.0:
            raise OutOfRange("t must lie in (0, 1)")
        if not 1 <= self.n2 <= self.n1 <= len(self.X):
            raise OutOfRange("need 1 <= n2 <= n1 <= len(X)")
        if len(self.Y) < 1:
            raise OutOfRange("need at least one y")

    @property
    def M(self) -> int:
        return len(self.Y)

    @property
    def max_spec(self) -> float:
        return max(max(abs(v) for v in self.X), max(abs(v) for v in self.Y))

    @classmethod
    def homogeneous(cls, params: ModelParams, M: int, n1: int, n2: int, u1, u2=0.0) -> "SeriesInputs":
        return cls(params.t, (params.a,) * n1, (params.a,) * M, n1, n2, as_logu(u1), as_logu(u2))

    @classmethod
    def from_scaled(cls, inputs: ScaledInputs) -> "SeriesInputs":
        p = inputs.params
        return cls(p.t, (p.a,) * inputs.n1, (p.a,) * inputs.M, inputs.n1, inputs.n2, inputs.u1, inputs.u2)


def _as_series_inputs(inputs) -> SeriesInputs:
    if isinstance(inputs, SeriesInputs):
        return inputs
    if isinstance(inputs, ScaledInputs):
        return SeriesInputs.from_scaled(inputs)
    raise OutOfRange("inputs must be SeriesInputs or ScaledInputs")


def _counts(values: Sequence[float]) -> list[tuple[complex, int]]:
    uniq: dict = {}
    for v in values:
        uniq[complex(v)] = uniq.get(complex(v), 0) + 1
    return list(uniq.items())


def _log_y_part(v: np.ndarray, ys) -> np.ndarray:
    """sum_j log(1 - y_j v)."""
    out = np.zeros(np.shape(v), dtype=complex)
    for y, c in ys:
        out = out + c * np.log(1.0 - y * v)
    return out


def _log_x_part(v: np.ndarray, xs) -> np.ndarray:
    """sum_j log(1 - x_j / v)."""
    out = np.zeros(np.shape(v), dtype=complex)
    for x, c in xs:
        out = out + c * np.log(1.0 - x / v)
    return out


def _group_log_and_reduced(z, w, u: LogU, t: float, xs, ys, tol: QTol):
    """log-magnitude part and bounded part of S(w,z)/((-log t) w) prod T(z, w) at broadcast points."""
    lp, red = spiral_S(w, z, u, t, tol=tol, split=True)
    logT = _log_y_part(z, ys) - _log_y_part(w, ys) + _log_x_part(w, xs) - _log_x_part(z, xs)
    return lp + logT - np.log(w) - math.log(-math.log(t)), red


# ---------------------------------------------------------------------------
# factor tables


@dataclass
class _Group:
    z: np.ndarray
    w: np.ndarray
    W: np.ndarray  # normalised weights including dz dw / (2 pi i)^2
    C: np.ndarray  # 1 / (z_k - w_l)
    log_scale: float
    zero: bool

    def halved(self) -> "_Group":
        return _Group(self.z[::2], self.w[::2], 4.0 * self.W[::2, ::2], self.C[::2, ::2], self.log_scale, self.zero)


def _make_group(r_z: float, r_w: float, n: int, u: LogU, t: float, xs, ys, tol: QTol) -> _Group:
    theta = np.exp(2j * np.pi * np.arange(n) / n)
    z, w = r_z * theta, r_w * theta
    C = 1.0 / (z[:, None] - w[None, :])
    if u.is_zero:
        return _Group(z, w, np.zeros((n, n), dtype=complex), C, 0.0, True)
    L, red = _group_log_and_reduced(z[:, None], w[None, :], u, t, xs, ys, tol)
    L = L + np.log(z[:, None] / n) + np.log(w[None, :] / n)
    scale = float(np.max(L.real))
    W = np.exp(L - scale) * red
    return _Group(z, w, W, C, scale, False)


@dataclass
class _Cross:
    Pz: np.ndarray  # (zhat_p / z_k; t)
    Pw: np.ndarray  # (what_q / w_l; t)
    Pwz: np.ndarray  # (what_q / z_k; t)
    Pzw: np.ndarray  # (zhat_p / w_l; t)

    def halved(self) -> "_Cross":
        return _Cross(self.Pz[::2, ::2], self.Pw[::2, ::2], self.Pwz[::2, ::2], self.Pzw[::2, ::2])


def _make_cross(g1: _Group, g2: _Group, t: float, tol: QTol) -> _Cross:
    def P(a, b):
        return t_pochhammer(a[:, None] / b[None, :], t, tol)

    return _Cross(P(g2.z, g1.z), P(g2.w, g1.w), P(g2.w, g1.z), P(g2.z, g1.w))


# ---------------------------------------------------------------------------
# elementary symmetric functions of modulated matrices


def _newton(p: list[np.ndarray], J: int) -> list[np.ndarray]:
    """e_0..e_J from power sums p_1..p_J."""
    e = [np.ones_like(p[0])]
    for j in range(1, J + 1):
        acc = np.zeros_like(p[0])
        for i in range(1, j + 1):
            acc = acc + (-1) ** (i - 1) * e[j - i] * p[i - 1]
        e.append(acc / j)
    return e


def _modulated_esym(W: np.ndarray, C: np.ndarray, alpha: np.ndarray, beta: np.ndarray, J: int) -> list[np.ndarray]:
    """e_0..e_J of G_b = D(beta_b) W^T D(alpha_b) C for a batch b."""
    if J == 0:
        return [np.ones(alpha.shape[0], dtype=complex)]
    if J == 1:
        E = W * C
        return [np.ones(alpha.shape[0], dtype=complex), np.sum((alpha @ E) * beta, axis=1)]
    G = beta[:, :, None] * np.matmul(W.T[None, :, :], alpha[:, :, None] * C[None, :, :])
    powers = [None, G]
    for j in range(2, (J + 1) // 2 + 1):
        powers.append(np.matmul(powers[-1], G))
    p = []
    for j in range(1, J + 1):
        a_ = (j + 1) // 2
        b_ = j - a_
        if b_ == 0:
            p.append(np.trace(powers[a_], axis1=1, axis2=2))
        else:
            p.append(np.einsum("bij,bji->b", powers[a_], powers[b_]))
    return _newton(p, J)


def _esym_from_eigs(eigs: np.ndarray, jmax: int) -> np.ndarray:
    """e_0..e_jmax along the last axis of eigs."""
    shape = eigs.shape[:-1]
    e = np.zeros(shape + (jmax + 1,), dtype=complex)
    e[..., 0] = 1.0
    for k in range(eigs.shape[-1]):
        lam = eigs[..., k]
        for j in range(jmax, 0, -1):
            e[..., j] = e[..., j] + lam * e[..., j - 1]
    return e


def _free_spectrum(g: _Group) -> np.ndarray:
    return np.linalg.eigvals(g.W.T @ g.C)


# ---------------------------------------------------------------------------
# conditioned passes


class _Modulation:
    """Row and column modulations of the free group induced by a conditioned element."""

    def __init__(self, cross: _Cross, conditioned: int):
        self.cond = conditioned
        c = cross
        if conditioned == 2:
            # element (p, q) of group 2 modulates group 1 rows k and columns l
            self.row_num, self.row_den = c.Pz, c.Pwz  # [p, k], [q, k]
            self.col_num, self.col_den = c.Pw, c.Pzw  # [q, l], [p, l]
        else:
            # element (k, l) of group 1 modulates group 2 rows p and columns q
            self.row_num, self.row_den = c.Pz.T.copy(), c.Pzw.T.copy()  # [k, p], [l, p]
            self.col_num, self.col_den = c.Pw.T.copy(), c.Pwz.T.copy()  # [l, q], [k, q]

    def __call__(self, i: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.cond == 2:
            return self.row_num[i] / self.row_den[j], self.col_num[j] / self.col_den[i]
        return self.row_num[i] / self.row_den[j], self.col_num[j] / self.col_den[i]


def _combinations(E: int, m: int) -> np.ndarray:
    """All m-subsets of range(E) as rows of an array."""
    if m == 1:
        return np.arange(E)[:, None]
    if m == 2:
        return np.stack(np.triu_indices(E, 1), axis=1)
    count = math.comb(E, m)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(E), m)), dtype=np.int64, count=count * m)
    return flat.reshape(count, m)


def _conditioned_pass(cond: _Group, free: _Group, mod: _Modulation, m: int, J: int) -> np.ndarray:
    """sum over m-element configurations of the conditioned group of
    weight * e_N(modulated free matrix), N = 0..J (scales not applied).

    Configurations are unordered sets of distinct (row, column) node pairs,
    which absorbs the 1/m! of the series; repeated pairs give a zero
    determinant and are skipped.
    """
    n = cond.W.shape[0]
    nf = free.W.shape[0]
    out = np.zeros(J + 1, dtype=complex)
    flat = np.arange(n * n)
    I, Jc = flat // n, flat % n
    row_all, col_all = mod(I, Jc)
    combos = _combinations(n * n, m)
    chunk = max(1, _CHUNK_ENTRIES // (nf * nf if J > 1 else nf))
    for lo in range(0, len(combos), chunk):
        f = combos[lo : lo + chunk]
        ri, ci = I[f], Jc[f]
        weight = np.prod(cond.W[ri, ci], axis=1)
        if m == 1:
            weight = weight * cond.C[ri[:, 0], ci[:, 0]]
        else:
            weight = weight * np.linalg.det(cond.C[ri[:, :, None], ci[:, None, :]])
        alpha = np.prod(row_all[f], axis=1)
        beta = np.prod(col_all[f], axis=1)
        e = _modulated_esym(free.W, free.C, alpha, beta, J)
        for N in range(J + 1):
            out[N] += np.sum(weight * e[N])
    return out


# ---------------------------------------------------------------------------
# lattice rule for terms with three or more variables in both groups


@lru_cache(maxsize=None)
def korobov_generator(npts: int, dim: int, candidates: int = 48) -> tuple[int, ...]:
    """Korobov lattice generator (1, g, g^2, ...) mod npts minimising the P_2 criterion."""
    rng = np.random.default_rng(12345)
    k = np.arange(npts)[:, None]
    best = None
    pool = sorted({int(x) | 1 for x in rng.integers(3, npts, size=candidates)})
    for g in pool:
        gen = [pow(g, j, npts) for j in range(dim)]
        x = (k * np.array(gen)[None, :] % npts) / npts
        b2 = x * x - x + 1.0 / 6.0
        crit = float(np.mean(np.prod(1.0 + 2.0 * math.pi**2 * b2, axis=1)) - 1.0)
        if best is None or crit < best[0]:
            best = (crit, tuple(gen))
    return best[1]


def _pointwise_term(inp: SeriesInputs, radii: RadiiConfig, N1: int, N2: int, theta: np.ndarray, tol: QTol) -> np.ndarray:
    """Integrand of I(N1, N2) at angles theta of shape (P, 2 N1 + 2 N2), per unit angle volume."""
    t = inp.t
    ph = np.exp(2j * np.pi * theta)
    z = radii.r1 * ph[:, :N1]
    w = radii.r2 * ph[:, N1 : 2 * N1]
    zh = radii.r3 * ph[:, 2 * N1 : 2 * N1 + N2]
    wh = radii.r4 * ph[:, 2 * N1 + N2 :]
    ys = _counts(inp.Y)
    L1, red1 = _group_log_and_reduced(z, w, inp.u1, t, _counts(inp.X[: inp.n1]), ys, tol)
    L2, red2 = _group_log_and_reduced(zh, wh, inp.u2, t, _counts(inp.X[: inp.n2]), ys, tol)
    logs = np.sum(L1 + np.log(z) + np.log(w), axis=1) + np.sum(L2 + np.log(zh) + np.log(wh), axis=1)
    val = np.exp(logs) * np.prod(red1, axis=1) * np.prod(red2, axis=1)
    val = val * np.linalg.det(1.0 / (z[:, :, None] - w[:, None, :]))
    val = val * np.linalg.det(1.0 / (zh[:, :, None] - wh[:, None, :]))
    cross = (
        t_pochhammer(zh[:, None, :] / z[:, :, None], t, tol)
        * t_pochhammer(wh[:, None, :] / w[:, :, None], t, tol)
        / t_pochhammer(wh[:, None, :] / z[:, :, None], t, tol)
        / t_pochhammer(zh[:, None, :] / w[:, :, None], t, tol)
    )
    val = val * np.prod(cross.reshape(len(theta), -1), axis=1)
    return val / (math.factorial(N1) * math.factorial(N2))


def _lattice_term(inp, radii, N1, N2, npts: int, shifts: int, seed: int, tol: QTol) -> tuple[complex, float]:
    dim = 2 * (N1 + N2)
    gen = np.array(korobov_generator(npts, dim))
    rng = np.random.default_rng(seed)
    base = (np.arange(npts)[:, None] * gen[None, :] % npts) / npts
    estimates = []
    chunk = 4096
    for _ in range(shifts):
        shift = rng.random(dim)
        pts = (base + shift) % 1.0
        total = 0j
        for lo in range(0, npts, chunk):
            total += np.sum(_pointwise_term(inp, radii, N1, N2, pts[lo : lo + chunk], tol))
        estimates.append(total / npts)
    est = np.array(estimates)
    mean = complex(est.mean())
    spread = float(np.std(est, ddof=1) / math.sqrt(shifts)) if shifts > 1 else abs(mean)
    return mean, 2.0 * spread


# ---------------------------------------------------------------------------
# joint terms


def _check_series_radii(inp: SeriesInputs, radii: RadiiConfig) -> None:
    r = radii.radii
    a = inp.max_spec
    if not (1.0 / a > r[0] > r[1] > r[2] > r[3] > a and r[3] / r[0] > inp.t):
        raise BadRadii(f"radii {r} violate a^-1 > r1 > r2 > r3 > r4 > a, r4/r1 > t")


def scaled_radii(inputs: ScaledInputs, width: float = 1.1, gaps: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> RadiiConfig:
    """Radii around the unit circle at spacing delta = width M^{-1/3} for the scaled terms.

    The circles are e^{delta (g2/2 + g1)}, e^{delta g2/2}, e^{-delta g2/2},
    e^{-delta (g2/2 + g3)} with gaps (g1, g2, g3).
    """
    delta = width * inputs.M ** (-1.0 / 3.0)
    g1, g2, g3 = gaps
    r2 = math.exp(delta * g2 / 2)
    r3 = 1.0 / r2
    return make_radii(inputs.params, r2 * math.exp(delta * g1), r2, r3, r3 * math.exp(-delta * g3))


def _default_radii(inp: SeriesInputs) -> RadiiConfig:
    params = _params_of(inp)
    good = find_good_radii(params)
    return good if good is not None else near_unit_radii(params, 0.9)


def _params_of(inp: SeriesInputs) -> ModelParams:
    from .params import param_convert

    a = min(max(inp.max_spec, 1e-12), 1 - 1e-12)
    return param_convert(a=a, t=inp.t)


@dataclass(frozen=True)
class LatticeConfig:
    points: int = 1 << 13
    shifts: int = 3
    seed: int = 2024


class _Tables:
    def __init__(self, inp: SeriesInputs, radii: RadiiConfig, n: int, tol: QTol):
        ys = _counts(inp.Y)
        self.g1 = _make_group(radii.r1, radii.r2, n, inp.u1, inp.t, _counts(inp.X[: inp.n1]), ys, tol)
        self.g2 = _make_group(radii.r3, radii.r4, n, inp.u2, inp.t, _counts(inp.X[: inp.n2]), ys, tol)
        self.cross = _make_cross(self.g1, self.g2, inp.t, tol)

    @classmethod
    def from_parts(cls, g1, g2, cross):
        obj = cls.__new__(cls)
        obj.g1, obj.g2, obj.cross = g1, g2, cross
        return obj

    def halved(self) -> "_Tables":
        return _Tables.from_parts(self.g1.halved(), self.g2.halved(), self.cross.halved())

    def thinned(self, group: int, step: int) -> "_Tables":
        """Keep every step-th node of one group only."""
        if step == 1:
            return self
        c = self.cross
        if group == 1:
            g = self.g1
            g1 = _Group(g.z[::step], g.w[::step], step * step * g.W[::step, ::step], g.C[::step, ::step], g.log_scale, g.zero)
            cross = _Cross(c.Pz[:, ::step], c.Pw[:, ::step], c.Pwz[:, ::step], c.Pzw[:, ::step])
            return _Tables.from_parts(g1, self.g2, cross)
        g = self.g2
        g2 = _Group(g.z[::step], g.w[::step], step * step * g.W[::step, ::step], g.C[::step, ::step], g.log_scale, g.zero)
        cross = _Cross(c.Pz[::step], c.Pw[::step], c.Pwz[::step], c.Pzw[::step])
        return _Tables.from_parts(self.g1, g2, cross)


def _scaled(value: complex, log_scale: float) -> complex:
    if value == 0:
        return 0j
    return complex(value * math.exp(log_scale)) if log_scale < 700 else complex(np.exp(np.log(value) + log_scale))


@dataclass(frozen=True)
class PassBudget:
    """Largest number of conditioned configurations per pass.

    When the full grid exceeds it, the conditioned group is thinned to every
    2nd, 4th, ... node while the free group keeps the full grid.
    """

    max_configs: int = 600_000


def _thinning_step(n: int, m: int, budget: PassBudget) -> int:
    step = 1
    while n // step > 2 and math.comb((n // step) ** 2, m) > budget.max_configs:
        step *= 2
    return step


def _exact_terms(tab: _Tables, wanted: set, budget: PassBudget = PassBudget(), coarser: bool = False) -> dict:
    """Wanted terms via spectra (one group empty) and conditioned passes.

    The smaller group is conditioned on.  With ``coarser`` the conditioned
    group is thinned one level further than the budget requires, which
    gives the comparison value for the error estimate.
    """
    g1, g2 = tab.g1, tab.g2
    n = g1.W.shape[0]
    out: dict = {}
    if (0, 0) in wanted:
        out[(0, 0)] = 1 + 0j
    col0 = [N for (N, M) in wanted if M == 0 and N > 0]
    row0 = [M for (N, M) in wanted if N == 0 and M > 0]
    if col0:
        e = None if g1.zero else _esym_from_eigs(_free_spectrum(g1), max(col0))
        for N in col0:
            out[(N, 0)] = 0j if g1.zero else _scaled(e[N], N * g1.log_scale)
    if row0:
        e = None if g2.zero else _esym_from_eigs(_free_spectrum(g2), max(row0))
        for M in row0:
            out[(0, M)] = 0j if g2.zero else _scaled(e[M], M * g2.log_scale)
    top = max((min(k) for k in wanted), default=0)
    for m in range(1, top + 1):
        step = _thinning_step(n, m, budget) * (2 if coarser else 1)
        # condition on group 2 (N2 = m) when N1 >= m, else on group 1 (N1 = m)
        for cond, need in ((2, [N for (N, M) in wanted if M == m and N >= m]), (1, [M for (N, M) in wanted if N == m and M > m])):
            if not need:
                continue
            if g1.zero or g2.zero:
                vals = np.zeros(max(need) + 1, dtype=complex)
            else:
                thin = tab.thinned(cond, step)
                c_grp, f_grp = (thin.g2, thin.g1) if cond == 2 else (thin.g1, thin.g2)
                vals = _conditioned_pass(c_grp, f_grp, _Modulation(thin.cross, cond), m, max(need))
            for N in need:
                key = (N, m) if cond == 2 else (m, N)
                out[key] = _scaled(vals[N], N * (g1 if cond == 2 else g2).log_scale + m * (g2 if cond == 2 else g1).log_scale)
    return out


def _direct_term(tab: _Tables, N1: int, N2: int) -> complex:
    """Brute-force tensor sum over every node tuple (small grids only)."""
    g1, g2, c = tab.g1, tab.g2, tab.cross
    n = g1.W.shape[0]
    if n ** (2 * (N1 + N2)) > 1 << 24:
        raise BudgetExceeded("direct tensor sum exceeds 2^24 grid points")
    # halved and thinned tables are strided views; the kernels need C order
    tables = [np.ascontiguousarray(m) for m in (g1.W, g1.C, g2.W, g2.C, c.Pz, c.Pw, c.Pwz, c.Pzw)]
    val = kernels.direct_term_sum(*tables, int(N1), int(N2))
    val /= math.factorial(N1) * math.factorial(N2)
    return _scaled(val, N1 * g1.log_scale + N2 * g2.log_scale)


def joint_term_IM(
    N1: int,
    N2: int,
    inputs,
    radii: Optional[RadiiConfig] = None,
    grid: Union[int, CircleGrid, None] = 64,
    method: str = "auto",
    lattice: LatticeConfig = LatticeConfig(),
    tol: QTol = DEFAULT_TOL,
    budget: PassBudget = PassBudget(),
) -> QuadResult:
    """The (N1, N2) term of the joint series, with I(0, 0) = 1.

    ``method`` is "exact" (spectra and conditioned passes, the default),
    "lattice" (shifted rank-1 lattice rule) or "direct" (full tensor sum).
    err_est compares with the halved grid (or, when the conditioned group is
    thinned, with one further thinning), or is twice the lattice standard
    error.
    """
    if N1 < 0 or N2 < 0:
        raise OutOfRange("N1, N2 must be nonnegative")
    inp = _as_series_inputs(inputs)
    radii = radii if radii is not None else _default_radii(inp)
    _check_series_radii(inp, radii)
    n = _node_count(grid)
    if (N1, N2) == (0, 0):
        return QuadResult(1 + 0j, info={"method": "convention"})
    if method == "auto":
        method = "exact"
    if method == "lattice":
        val, err = _lattice_term(inp, radii, N1, N2, lattice.points, lattice.shifts, lattice.seed, tol)
        return QuadResult(val, err, info={"method": "lattice", "points": lattice.points, "shifts": lattice.shifts})
    tab = _Tables(inp, radii, n, tol)
    if method == "exact":
        full = _exact_terms(tab, {(N1, N2)}, budget)[(N1, N2)]
        half = _coarse_comparison(tab, {(N1, N2)}, budget)[(N1, N2)]
    elif method == "direct":
        full = _direct_term(tab, N1, N2)
        half = _direct_term(tab.halved(), N1, N2)
    else:
        raise OutOfRange(f"unknown method {method!r}")
    return QuadResult(full, abs(full - half), info={"method": method, "nodes": n, "radii": radii.to_json()})


def _coarse_comparison(tab: _Tables, wanted: set, budget: PassBudget) -> dict:
    """Values on the halved grid for unthinned passes, one more thinning otherwise."""
    n = tab.g1.W.shape[0]
    plain = {k for k in wanted if min(k) == 0 or _thinning_step(n, min(k), budget) == 1}
    out = _exact_terms(tab.halved(), plain, budget) if plain else {}
    rest = wanted - plain
    if rest:
        out.update(_exact_terms(tab, rest, budget, coarser=True))
    return out


def term_table(
    inputs,
    radii: Optional[RadiiConfig] = None,
    grid: Union[int, CircleGrid, None] = 32,
    Ncap: int = 4,
    tol: QTol = DEFAULT_TOL,
    budget: PassBudget = PassBudget(),
) -> tuple[dict, dict]:
    """(terms, errors) for every (N1, N2) with N1, N2 <= Ncap."""
    inp = _as_series_inputs(inputs)
    radii = radii if radii is not None else _default_radii(inp)
    _check_series_radii(inp, radii)
    n = _node_count(grid)
    box = {(i, j) for i in range(Ncap + 1) for j in range(Ncap + 1)}
    tab = _Tables(inp, radii, n, tol)
    full = _exact_terms(tab, box, budget)
    coarse = _coarse_comparison(tab, box, budget)
    errs = {k: abs(full[k] - coarse[k]) for k in box}
    return full, errs


def fit_term_majorant(terms: dict, q: Optional[float] = None) -> tuple[float, float]:
    """(C, q) with |I(N1, N2)| <= C^{N1+N2} q^{N1^2+N2^2} on every supplied term.

    With q given only C is fitted.  Otherwise log|I| is fitted by least
    squares in (N1 + N2, N1^2 + N2^2) and C is then raised to dominate.
    """
    data = [(k[0] + k[1], k[0] ** 2 + k[1] ** 2, math.log(abs(v))) for k, v in terms.items() if sum(k) > 0 and abs(v) > 0]
    if not data:
        return 0.0, 0.5 if q is None else q
    if q is None:
        A = np.array([[d[0], d[1]] for d in data], dtype=float)
        b = np.array([d[2] for d in data])
        if np.linalg.matrix_rank(A) < 2:
            raise Nonconvergence("not enough terms to fit a decay rate")
        (log_c, log_q), *_ = np.linalg.lstsq(A, b, rcond=None)
        if log_q >= 0:
            raise Nonconvergence("fitted terms do not decay")
    else:
        if not 0 < q < 1:
            raise OutOfRange("q must lie in (0, 1)")
        log_q = math.log(q)
    log_c = max((d[2] - d[1] * log_q) / d[0] for d in data)
    return math.exp(log_c), math.exp(log_q)


def majorant_tail(C: float, q: float, Ncap: int, nmax: int = 200) -> float:
    """sum of C^{N1+N2} q^{N1^2+N2^2} over N1 > Ncap or N2 > Ncap."""
    if C == 0:
        return 0.0
    lc, lq = math.log(C), math.log(q)
    one = [math.exp(N * lc + N * N * lq) for N in range(nmax + 1)]
    inside = sum(one[: Ncap + 1])
    total = sum(one)
    return max(0.0, total * total - inside * inside)


def joint_t_laplace_series(
    inputs,
    radii: Optional[RadiiConfig] = None,
    grid: Union[int, CircleGrid, None] = 32,
    Ncap: int = 4,
    tol: QTol = DEFAULT_TOL,
    require_good: bool = False,
    budget: PassBudget = PassBudget(),
) -> QuadResult:
    """sum over N1, N2 <= Ncap of I(N1, N2).

    tail_est bounds the omitted terms by a fitted majorant
    C^{N1+N2} q^{N1^2+N2^2}; q = (1 + rho)/2 when the radii certify rho < 1,
    otherwise q is fitted too.  With ``require_good`` a parameter pair
    without certified radii raises NotGood.
    """
    inp = _as_series_inputs(inputs)
    if Ncap < 0:
        raise OutOfRange("Ncap must be nonnegative")
    if radii is None:
        params = _params_of(inp)
        good = find_good_radii(params)
        if good is None and require_good:
            raise NotGood(f"no radii with rho < 1 found for a = {params.a}, t = {params.t}")
        radii = good if good is not None else near_unit_radii(params, 0.9)
    elif require_good and radii.rho >= 1:
        raise NotGood(f"radii have rho = {radii.rho} >= 1")
    _check_series_radii(inp, radii)
    terms, errs = term_table(inp, radii, grid, Ncap, tol, budget)
    value = sum(terms.values())
    err = float(sum(errs.values()))
    if Ncap >= 2:
        q = (1 + radii.rho) / 2 if radii.rho < 1 else None
        C, q = fit_term_majorant(terms, q)
        tail = majorant_tail(C, q, Ncap)
    else:
        C, q, tail = float("nan"), float("nan"), float("inf")
    if not math.isfinite(tail):
        tail = 1e300
    info = {
        "radii": radii.to_json(),
        "nodes": _node_count(grid),
        "Ncap": Ncap,
        "majorant": {"C": C, "q": q},
        "terms": {f"{k[0]},{k[1]}": [v.real, v.imag] for k, v in sorted(terms.items())},
    }
    return QuadResult(complex(value), err, tail, info)


# ---------------------------------------------------------------------------
# one-point and moment series


def _two_radii(radii, t: float) -> tuple[float, float]:
    if radii is None:
        g = -math.log(t) / 2
        return math.exp(g / 2), math.exp(-g / 2)
    if isinstance(radii, RadiiConfig):
        return radii.r1, radii.r2
    r1, r2 = radii
    return float(r1), float(r2)


def one_point_series(
    params: ModelParams,
    X: Sequence[float],
    Y: Sequence[float],
    radii=None,
    u1: Union[LogU, complex, float] = -0.5,
    grid: Union[int, CircleGrid, None] = 64,
    N1_max: int = 8,
    tol: QTol = DEFAULT_TOL,
) -> QuadResult:
    """1 + sum_{N1 <= N1_max} B(N1)/N1!, the t-Laplace transform of the length of lam(N), N = len(X).

    ``radii`` is (r1, r2) or a RadiiConfig (its r1, r2 are used).
    """
    t = params.t
    r1, r2 = _two_radii(radii, t)
    a = max(max(abs(v) for v in X), max(abs(v) for v in Y))
    if not (1.0 / a > r2 > 0 and r1 > a and 1 > r2 / r1 > t):
        raise BadRadii(f"radii ({r1}, {r2}) violate a^-1 > r2, r1 > a, 1 > r2/r1 > t")
    if N1_max < 0:
        raise OutOfRange("N1_max must be nonnegative")
    n = _node_count(grid)
    uu = as_logu(u1)
    if uu.is_zero or N1_max == 0:
        return QuadResult(1 + 0j, info={"nodes": n, "radii": [r1, r2]})

    def evaluate(nn):
        g = _make_group(r1, r2, nn, uu, t, _counts(X), _counts(Y), tol)
        eigs = np.sort_complex(_free_spectrum(g))
        e = _esym_from_eigs(eigs * math.exp(g.log_scale), nn)
        return complex(np.sum(e[: N1_max + 1])), float(np.sum(np.abs(e[N1_max + 1 :])))

    full, tail = evaluate(n)
    half, _ = evaluate(n // 2)
    return QuadResult(full, abs(full - half), tail, {"nodes": n, "radii": [r1, r2]})


def _three_radii(radii, t: float, a: float) -> tuple[float, float, float]:
    if radii is None:
        g = min(-math.log(t) / 3, -0.9 * math.log(a))
        return math.exp(g), 1.0, math.exp(-g)
    if isinstance(radii, RadiiConfig):
        return radii.r1, radii.r2, radii.r3
    r1, r2, r3 = radii
    return float(r1), float(r2), float(r3)


def moment_coefficient(lam: Partition, t: float) -> float:
    """(t^{-1} - 1)^k k_t! / prod m_i(lam)!."""
    k = lam.size
    den = 1
    for m in lam.multiplicities().values():
        den *= math.factorial(m)
    return (1.0 / t - 1.0) ** k * t_factorial(k, t) / den


def moment_series(
    params: ModelParams,
    k: int,
    n: int,
    N_total: int,
    radii=None,
    u1: Union[LogU, complex, float] = 0.0,
    grid: Union[int, CircleGrid, None] = 32,
    N1_max: int = 8,
    M: Optional[int] = None,
    X: Optional[Sequence[float]] = None,
    Y: Optional[Sequence[float]] = None,
    tol: QTol = DEFAULT_TOL,
) -> QuadResult:
    """E[t^{-k L(n)} / (u1 t^{-L(N)}; t)] as a sum over lambda |- k and N1 <= N1_max.

    Homogeneous specialisations x = y = a unless X (length N_total) and Y
    (length M) are given.
    """
    t = params.t
    if k < 1:
        raise OutOfRange("k must be at least 1")
    if not 1 <= n <= N_total:
        raise OutOfRange("need 1 <= n <= N_total")
    X = tuple(X) if X is not None else (params.a,) * N_total
    if Y is None:
        if M is None:
            raise OutOfRange("supply M or Y")
        Y = (params.a,) * M
    Y = tuple(Y)
    if len(X) != N_total:
        raise OutOfRange("X must have N_total entries")
    a = max(max(abs(v) for v in X), max(abs(v) for v in Y))
    r1, r2, r3 = _three_radii(radii, t, a)
    if not (1.0 / a > r1 > r2 > r3 > a and r3 / r1 > t):
        raise BadRadii(f"radii ({r1}, {r2}, {r3}) violate a^-1 > r1 > r2 > r3 > a, r3/r1 > t")
    nn = _node_count(grid)
    uu = as_logu(u1)
    xs_all, xs_n, ys = _counts(X), _counts(X[:n]), _counts(Y)

    def evaluate(m: int) -> tuple[complex, float]:
        g = None if uu.is_zero else _make_group(r1, r2, m, uu, t, xs_all, ys, tol)
        theta = np.exp(2j * np.pi * np.arange(m) / m)
        zh = r3 * theta
        total, tail = 0j, 0.0
        for lam in partitions_of(k):
            ell = lam.length
            parts = np.array(lam.parts)
            idx = np.array(list(itertools.product(range(m), repeat=ell)))
            Zh = zh[idx]  # (B, ell)
            tl = t ** parts[None, :]
            # det[1/(zh_j t^{-lam_i} - zh_i)]
            mat = 1.0 / (Zh[:, None, :] / tl[:, :, None] - Zh[:, :, None])
            fac = np.linalg.det(mat)
            fac = fac * np.exp(np.sum(_log_y_part(Zh, ys) - _log_y_part(Zh * tl, ys), axis=1))
            fac = fac * np.exp(np.sum(_log_x_part(Zh * tl, xs_n) - _log_x_part(Zh, xs_n), axis=1))
            fac = fac * np.prod(Zh / m, axis=1)
            coeff = moment_coefficient(lam, t)
            if g is None or N1_max == 0:
                total += coeff * np.sum(fac)
                continue
            alpha = np.prod(
                t_pochhammer(Zh[:, :, None] / g.z[None, None, :], t, tol)
                / t_pochhammer(Zh[:, :, None] * tl[:, :, None] / g.z[None, None, :], t, tol),
                axis=1,
            )
            beta = np.prod(
                t_pochhammer(Zh[:, :, None] * tl[:, :, None] / g.w[None, None, :], t, tol)
                / t_pochhammer(Zh[:, :, None] / g.w[None, None, :], t, tol),
                axis=1,
            )
            G = beta[:, :, None] * np.matmul(g.W.T[None], alpha[:, :, None] * g.C[None])
            eigs = np.linalg.eigvals(G) * math.exp(g.log_scale)
            e = _esym_from_eigs(eigs, m)
            total += coeff * np.sum(fac * np.sum(e[:, : N1_max + 1], axis=1))
            tail += abs(coeff) * float(np.sum(np.abs(fac)[:, None] * np.abs(e[:, N1_max + 1 :])))
        return complex(total), tail

    full, tail = evaluate(nn)
    half, _ = evaluate(nn // 2)
    return QuadResult(full, abs(full - half), tail, {"nodes": nn, "radii": [r1, r2, r3]})


# ---------------------------------------------------------------------------
# residue identities


def nested_residual(k: int, q: float = 2.0, f=None, radii: Optional[Sequence[float]] = None, nodes: int = 128) -> float:
    """|left - right| of the nested-contour residue expansion for F = prod f(z_i), k <= 2.

    Defaults: f = 1 for k = 1 and f(z) = 1 / (1 - z/5) for k = 2, with circles
    of radius 3 and 1.
    """
    if k not in (1, 2):
        raise OutOfRange("k must be 1 or 2")
    if not q > 1:
        raise OutOfRange("q must exceed 1")
    if f is None:
        f = (lambda z: np.ones_like(z)) if k == 1 else (lambda z: 1.0 / (1.0 - z / 5.0))
    radii = tuple(radii) if radii is not None else ((1.0,) if k == 1 else (3.0, 1.0))
    if len(radii) != k or any(radii[i] <= q * radii[i + 1] for i in range(k - 1)):
        raise BadContours("each circle must contain q times the next one")
    theta = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    last = radii[-1] * theta
    dw = last / nodes  # dw / (2 pi i)

    def coeff(lam: Partition) -> float:
        den = 1
        for m in lam.multiplicities().values():
            den *= math.factorial(m)
        return (1 - q) ** k * (-1) ** k * q ** (-k * (k - 1) / 2) * t_factorial(k, q) / den

    if k == 1:
        left = np.mean(f(radii[0] * theta))
        right = coeff(Partition((1,))) * np.sum(f(last) / (last * q - last) * dw)
        return float(abs(left - right))
    z1 = radii[0] * theta[:, None]
    z2 = radii[1] * theta[None, :]
    left = np.mean((z1 - z2) / (z1 - q * z2) * f(z1) * f(z2))
    right = coeff(Partition((2,))) * np.sum(f(last) * f(last * q) / (last * q * q - last) * dw)
    w1, w2 = last[:, None], last[None, :]
    det = 1.0 / ((w1 * q - w1) * (w2 * q - w2)) - 1.0 / ((w1 * q - w2) * (w2 * q - w1))
    right += coeff(Partition((1, 1))) * np.sum(f(w1) * f(w2) * det * dw[:, None] * dw[None, :])
    return float(abs(left - right))


@dataclass(frozen=True)
class ExpansionConfig:
    """Parameters of the t-power-series / spiral-integral identity."""

    t: float = 0.3
    u: complex = -0.2 + 0.1j
    a: complex = 1.0
    z: complex = 1.0
    xs: tuple = ()
    ys: tuple = ()
    zs: tuple = ()
    ws: tuple = ()
    radius: Optional[float] = None


def expansion_residual(cfg: ExpansionConfig = ExpansionConfig(), nodes: int = 256, tol: QTol = DEFAULT_TOL) -> float:
    """|H(u) - contour integral| where H(u) = sum_{c>=1} u^c g(z t^c)/(a - z t^c)."""
    t, u, a, z = cfg.t, complex(cfg.u), complex(cfg.a), complex(cfg.z)
    n = len(cfg.xs)
    if not 0 < t < 1:
        raise OutOfRange("t must lie in (0, 1)")
    if not (0 < abs(a) == abs(z) <= 1):
        raise BadContours("need 0 < |a| = |z| <= 1")
    if abs(u) >= t**n:
        raise OutOfRange("need |u| < t^n")
    r = cfg.radius if cfg.radius is not None else math.sqrt(t) * abs(z)
    if not t * abs(z) < r < abs(z):
        raise BadContours("circle radius must lie in (t|z|, |z|)")

    def g(v):
        out = np.ones_like(v, dtype=complex)
        for y in cfg.ys:
            out = out / (1 - v * y)
        for x in cfg.xs:
            out = out * (1 - x / v)
        for zi, wi in zip(cfg.zs, cfg.ws):
            out = out * t_pochhammer(v / wi, t, tol) / t_pochhammer(v / zi, t, tol)
        return out

    series = 0j
    c = 1
    while True:
        v = np.array([z * t**c])
        term = u**c / (a - v[0]) * g(v)[0]
        series += term
        if abs(term) < 1e-17 and c > 5:
            break
        c += 1
        if c > tol.max_terms:
            raise Nonconvergence("expansion series did not converge")
    w = r * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    S = spiral_S(w, np.full(nodes, z), u, t, tol)
    integrand = S / (w * (a - w) * (-math.log(t))) * g(w)
    contour = np.sum(integrand * w / nodes)
    return float(abs(series - contour))


def verify_residue_identities(k: int = 2, q: float = 2.0, expansion: ExpansionConfig = ExpansionConfig(), nodes: int = 256) -> tuple[float, float]:
    """(nested residual, expansion residual)."""
    return nested_residual(k, q, nodes=nodes), expansion_residual(expansion, nodes)
