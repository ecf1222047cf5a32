"""Airy function, extended Airy kernel and the two-point Airy-process CDF.

Two independent routes to P(A(tau1) <= x1, A(tau2) <= x2):

* a block Nystrom discretisation of det(I - f A f) on {tau1, tau2} x R
  (with the Fredholm-expansion partial sums as a cross-check), and
* the vertical-contour series sum_{N1,N2} K(N1, N2), evaluated exactly on a
  tensor trapezoid grid through the determinant generating function
  det(I + Lambda K) whose (lambda1^N1 lambda2^N2) coefficient is K(N1, N2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import BadAbscissas, OutOfRange
from .result import QuadResult


@dataclass(frozen=True)
class AiryQuadConfig:
    """Discretisation controls for the Airy-side computations.

    ``c1..c4`` left as ``None`` are filled by :func:`default_abscissas`.
    """

    lambda_cutoff: float = 12.0
    lambda_nodes: int = 96
    nystrom_nodes: int = 48
    xi_window: float = 10.0
    vertical_cutoff: float = 12.0
    vertical_tol: float = 1e-10
    max_line_nodes: int = 4096
    fft_points: int = 16
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: Optional[float] = None
    c4: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("lambda_cutoff", "xi_window", "vertical_cutoff", "vertical_tol"):
            if not getattr(self, name) > 0:
                raise OutOfRange(f"{name} must be positive")
        for name in ("lambda_nodes", "nystrom_nodes", "max_line_nodes", "fft_points"):
            if getattr(self, name) < 1:
                raise OutOfRange(f"{name} must be at least 1")

    def to_json(self) -> dict:
        return asdict(self)


DEFAULT_AIRY = AiryQuadConfig()


# ---------------------------------------------------------------- Airy function


def _airy_abscissa(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 1.0, np.sqrt(np.maximum(x, 1.0)), np.where(x <= -1.0, 1.0 / np.sqrt(np.maximum(-x, 1.0)), 1.0))


def _airy_contour(x, mirrored: bool):
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    if flat.size and np.max(np.abs(flat)) > 40.0:
        raise OutOfRange("airy_ai supports |x| <= 40")
    delta = _airy_abscissa(flat)
    # log|integrand| on the line Re z = c is c^3/3 - x c - c y^2
    mag = lambda c: c**3 / 3.0 - flat * c  # noqa: E731
    peak = mag(delta)
    ymax = np.sqrt(40.0 / delta)
    # trapezoid error ~ exp(max over the strip |Re z - delta| < delta/2 - 2 pi (delta/2)/h)
    strip = np.maximum(mag(0.5 * delta), mag(1.5 * delta))
    h = math.pi * delta / (strip - np.minimum(peak, 0.0) + 36.0)
    out = np.empty_like(flat)
    order = np.argsort(h)
    for start in range(0, flat.size, 128):
        idx = order[start : start + 128]
        step = h[idx].min()
        kmax = int(np.ceil(ymax[idx].max() / step))
        y = np.arange(-kmax, kmax + 1) * step
        if mirrored:
            z = -delta[idx, None] + 1j * y[None, :]
            vals = np.exp(-(z**3) / 3.0 + flat[idx, None] * z)
        else:
            z = delta[idx, None] + 1j * y[None, :]
            vals = np.exp(z**3 / 3.0 - flat[idx, None] * z)
        out[idx] = vals.sum(axis=1).real * step / (2.0 * math.pi)
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out


def airy_ai(x, cfg: AiryQuadConfig = DEFAULT_AIRY):
    """Ai(x) for |x| <= 40 from (1/2 pi i) int_{delta + iR} e^{z^3/3 - x z} dz.

    The line passes through the saddle sqrt(x) for x >= 1; for x < -1 it is
    pulled towards the imaginary axis (abscissa 1/sqrt|x|) to limit
    cancellation between the two oscillating saddles.  Trapezoid steps are
    sized from the integrand growth in a strip around the line.
    """
    return _airy_contour(x, mirrored=False)


def airy_ai_mirrored(x, cfg: AiryQuadConfig = DEFAULT_AIRY):
    """Ai(x) from the mirrored line -delta + iR with integrand e^{-z^3/3 + x z}."""
    return _airy_contour(x, mirrored=True)


def airy_ai_series(x: float, terms: int = 200) -> float:
    """Maclaurin series of Ai, usable for |x| <= 5 as an oracle."""
    c1 = 1.0 / (3 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
    c2 = 1.0 / (3 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
    f = 1.0
    g = x
    fs, gs = f, g
    for k in range(1, terms):
        f *= x**3 / ((3 * k - 1) * (3 * k))
        g *= x**3 / ((3 * k) * (3 * k + 1))
        fs += f
        gs += g
        if abs(f) + abs(g) < 1e-18 * (abs(fs) + abs(gs)):
            break
    return c1 * fs - c2 * gs


# ------------------------------------------------------------- extended kernel


def _gauss_legendre(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _kernel_block(tau: float, xi: np.ndarray, tau2: float, xi2: np.ndarray, cfg: AiryQuadConfig) -> np.ndarray:
    """Matrix A(tau, xi_k; tau2, xi2_l) for vectors xi, xi2."""
    lam, wl = _gauss_legendre(cfg.lambda_nodes, 0.0, cfg.lambda_cutoff)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    left = airy_ai(np.clip(xi[:, None] + lam[None, :], -40.0, 40.0))
    right = airy_ai(np.clip(xi2[:, None] + lam[None, :], -40.0, 40.0))
    gap = tau - tau2
    out = (left * (wl * np.exp(-lam * gap))[None, :]) @ right.T
    if gap < 0:
        # -int_{-inf}^0 = int_0^inf - int_R, and the full-line integral is Gaussian
        c = -gap
        d = xi[:, None] - xi2[None, :]
        s = xi[:, None] + xi2[None, :]
        out -= np.exp(-d * d / (4.0 * c) - 0.5 * c * s + c**3 / 12.0) / math.sqrt(4.0 * math.pi * c)
    return out


def extended_kernel(tau, xi, tau2, xi2, cfg: AiryQuadConfig = DEFAULT_AIRY):
    """Extended Airy kernel A(tau, xi; tau2, xi2); ``xi`` and ``xi2`` broadcast."""
    xi_b, xi2_b = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(xi2, dtype=float))
    flat1, flat2 = xi_b.ravel(), xi2_b.ravel()
    vals = np.array([_kernel_block(tau, np.array([p]), tau2, np.array([q]), cfg)[0, 0] for p, q in zip(flat1, flat2)])
    vals = vals.reshape(xi_b.shape)
    return float(vals) if vals.ndim == 0 else vals


# ------------------------------------------------------ Fredholm determinant


def _nystrom_matrix(taus, xs, cfg: AiryQuadConfig, nodes: Optional[int] = None) -> tuple[np.ndarray, list[int]]:
    """Symmetrised block Nystrom matrix sqrt(w) A sqrt(w) on {tau_i} x [x_i, x_i + L]."""
    n = nodes or cfg.nystrom_nodes
    grids = [_gauss_legendre(n, x, x + cfg.xi_window) for x in xs]
    blocks = []
    for i, ti in enumerate(taus):
        row = []
        for j, tj in enumerate(taus):
            (p, wp), (q, wq) = grids[i], grids[j]
            row.append(np.sqrt(wp)[:, None] * _kernel_block(ti, p, tj, q, cfg) * np.sqrt(wq)[None, :])
        blocks.append(row)
    return np.block(blocks), [n] * len(taus)


def fredholm_two_point_cdf(tau1: float, tau2: float, x1: float, x2: float, cfg: AiryQuadConfig = DEFAULT_AIRY) -> float:
    """P(A(tau1) <= x1, A(tau2) <= x2) as det(I - f A f) by block Nystrom."""
    if tau1 < tau2:
        raise OutOfRange("need tau1 >= tau2")
    if tau1 == tau2:
        return one_point_cdf(min(x1, x2), cfg)
    mat, _ = _nystrom_matrix((tau1, tau2), (x1, x2), cfg)
    return float(np.linalg.det(np.eye(mat.shape[0]) - mat).real)


def one_point_cdf(x: float, cfg: AiryQuadConfig = DEFAULT_AIRY, tau: float = 0.0) -> float:
    """P(A(tau) <= x), the GUE Tracy-Widom distribution for every tau."""
    mat, _ = _nystrom_matrix((tau,), (x,), cfg)
    return float(np.linalg.det(np.eye(mat.shape[0]) - mat).real)


def _elementary_symmetric(eigs: np.ndarray, kmax: int) -> np.ndarray:
    """e_0..e_kmax of the given numbers (last axis), by running convolution."""
    eigs = np.asarray(eigs)
    out = np.zeros(eigs.shape[:-1] + (kmax + 1,), dtype=complex)
    out[..., 0] = 1.0
    for j in range(eigs.shape[-1]):
        mu = eigs[..., j : j + 1]
        out[..., 1:] = out[..., 1:] + mu * out[..., :-1]
    return out


def fde_partial_sums(tau1: float, tau2: float, x1: float, x2: float, nmax: int = 6, cfg: AiryQuadConfig = DEFAULT_AIRY) -> np.ndarray:
    """Partial sums 1 + sum_{n<=m} (-1)^n/n! (n-fold integral) for m = 0..nmax.

    Uses an independent discretisation from :func:`fredholm_two_point_cdf`:
    half-infinite intervals mapped by xi = x + s/(1-s) with Gauss nodes in s.
    """
    n = cfg.nystrom_nodes
    s, ws = _gauss_legendre(n, 0.0, 1.0)
    s = s * 0.9  # keep xi <= x + 9
    ws = ws * 0.9
    xi_off = s / (1.0 - s)
    jac = ws / (1.0 - s) ** 2
    taus, xs = (tau1, tau2), (x1, x2)
    blocks = []
    for ti, xa in zip(taus, xs):
        row = []
        for tj, xb in zip(taus, xs):
            row.append(np.sqrt(jac)[:, None] * _kernel_block(ti, xa + xi_off, tj, xb + xi_off, cfg) * np.sqrt(jac)[None, :])
        blocks.append(row)
    mat = np.block(blocks)
    e = _elementary_symmetric(np.linalg.eigvals(mat), nmax).real
    terms = e * (-1.0) ** np.arange(nmax + 1)
    return np.cumsum(terms)


def fredholm_terms(tau1: float, tau2: float, x1: float, x2: float, ncap: int = 4, cfg: AiryQuadConfig = DEFAULT_AIRY) -> np.ndarray:
    """Coefficients of lambda1^N1 lambda2^N2 in det(I - Lambda f A f), N1, N2 <= ncap.

    These are the two-slice groupings of the Fredholm expansion, the
    kernel-side counterparts of K(N1, N2).
    """
    mat, sizes = _nystrom_matrix((tau1, tau2), (x1, x2), cfg)
    n1 = sizes[0]
    return _bivariate_coefficients(-mat[:n1, :n1], -mat[:n1, n1:], -mat[n1:, :n1], -mat[n1:, n1:], ncap, cfg.fft_points)


def _bivariate_coefficients(k11, k12, k21, k22, ncap: int, fft_points: int) -> np.ndarray:
    """Coefficients [lambda1^a lambda2^b] det(I + Lambda K) for a, b <= ncap.

    The lambda2 dependence is exact through eigenvalues of the Schur
    complement; the lambda1 dependence is recovered by a discrete Fourier
    transform over fft_points roots of unity.
    """
    p = max(fft_points, ncap + 1)
    roots = np.exp(2j * math.pi * np.arange(p) / p)
    eye1 = np.eye(k11.shape[0])
    g = np.zeros((p, ncap + 1), dtype=complex)
    for idx, lam1 in enumerate(roots):
        a = eye1 + lam1 * k11
        sign, logdet = np.linalg.slogdet(a)
        schur = k22 - lam1 * (k21 @ np.linalg.solve(a, k12))
        e = _elementary_symmetric(np.linalg.eigvals(schur), ncap)
        g[idx] = sign * math.exp(logdet) * e
    coeffs = np.fft.fft(g, axis=0) / p  # sum_p g_p roots_p^{-a}
    return coeffs[: ncap + 1]


# ----------------------------------------------------- vertical-contour series


def default_abscissas(tau1: float, tau2: float) -> tuple[float, float, float, float]:
    """c1 = 1, c4 = -1 and c3 = -c2 = min(1, (tau1 - tau2)/3).

    The inner pair balances its distance to the imaginary axis against the
    gap (tau1 - tau2) - (c3 - c2) to the shifted hat-z line.
    """
    b = min(1.0, (tau1 - tau2) / 3.0)
    return (1.0, -b, b, -1.0)


def check_abscissas(c: tuple[float, float, float, float], tau1: float, tau2: float) -> None:
    c1, c2, c3, c4 = c
    if not (c1 > 0 and c3 > 0 and c2 < 0 and c4 < 0):
        raise BadAbscissas("need c1, c3 > 0 > c2, c4")
    if not c2 + tau1 > c3 + tau2:
        raise BadAbscissas("need c2 + tau1 > c3 + tau2")


def _resolve_abscissas(tau1: float, tau2: float, cfg: AiryQuadConfig) -> tuple[float, float, float, float]:
    default = default_abscissas(tau1, tau2)
    c = tuple(d if v is None else float(v) for v, d in zip((cfg.c1, cfg.c2, cfg.c3, cfg.c4), default))
    check_abscissas(c, tau1, tau2)
    return c


@dataclass(frozen=True)
class _Line:
    center: float
    step: float
    half_length: float

    def nodes(self, refine: int = 1) -> tuple[np.ndarray, float]:
        h = self.step * refine
        j = np.arange(-int(math.ceil(self.half_length / h)), int(math.ceil(self.half_length / h)) + 1)
        return self.center + 1j * h * j, h / (2.0 * math.pi)


def _contour_lines(c, delta: float, x1: float, x2: float, cfg: AiryQuadConfig) -> list[_Line]:
    """Step and truncation for the z, w, hat-z, hat-w lines."""
    c1, c2, c3, c4 = c
    # Cauchy poles couple z and hat-z - delta with w and hat-w - delta
    shifted = (c1, c2, c3 - delta, c4 - delta)
    partners = {0: (1, 3), 1: (0, 2), 2: (1, 3), 3: (0, 2)}
    log_tol = math.log(1.0 / cfg.vertical_tol)
    xs = (x1, x1, x2, x2)
    lines = []
    for i, ci in enumerate(c):
        gap = min(abs(shifted[i] - shifted[j]) for j in partners[i])
        # keep the analyticity strip on one side of the imaginary axis
        width = 0.9 * min(gap, abs(ci))
        # |e^{+-S}| on Re z = ci is exp(|ci| y^2 ... ) decaying like exp(-|ci| y^2)
        peak = abs(ci**3 / 3.0 - xs[i] * ci)
        step = 2.0 * math.pi * width / (log_tol + 2.0 * peak + 4.0)
        half = max(cfg.vertical_cutoff, math.sqrt((log_tol + 2.0 * peak) / abs(ci)))
        if 2.0 * half / step > cfg.max_line_nodes:
            from .errors import BudgetExceeded

            raise BudgetExceeded(f"vertical line at {ci} would need more than {cfg.max_line_nodes} nodes")
        lines.append(_Line(ci, step, half))
    return lines


def _contour_blocks(x1, x2, tau1, tau2, cfg: AiryQuadConfig, refine: int = 1):
    c = _resolve_abscissas(tau1, tau2, cfg)
    delta = tau1 - tau2
    lines = _contour_lines(c, delta, x1, x2, cfg)
    (z, hz), (w, hw), (zh, hzh), (wh, hwh) = (ln.nodes(refine) for ln in lines)

    def s_fun(v, x):
        return v**3 / 3.0 - x * v

    # the (-1)^{N1+N2} sign is carried by the weights
    w1 = -np.exp(s_fun(z, x1)[:, None] - s_fun(w, x1)[None, :]) / (z[:, None] - w[None, :]) * hz * hw
    w2 = -np.exp(s_fun(zh, x2)[:, None] - s_fun(wh, x2)[None, :]) / (zh[:, None] - wh[None, :]) * hzh * hwh
    big_z = (z, zh - delta)
    big_w = (w, wh - delta)
    weights = (w1, w2)

    def block(g, gp):
        cauchy = 1.0 / (big_z[gp][:, None] - big_w[g][None, :])
        return weights[g] @ cauchy.T

    return block(0, 0), block(0, 1), block(1, 0), block(1, 1), c, lines


def contour_term_table(x1: float, x2: float, tau1: float, tau2: float, ncap: int = 4, cfg: AiryQuadConfig = DEFAULT_AIRY, refine: int = 1) -> tuple[np.ndarray, complex, tuple]:
    """Table K(N1, N2) for N1, N2 <= ncap, the full sum det(I + K), and the abscissas."""
    if not tau1 > tau2:
        raise OutOfRange("need tau1 > tau2")
    k11, k12, k21, k22, c, _ = _contour_blocks(x1, x2, tau1, tau2, cfg, refine)
    table = _bivariate_coefficients(k11, k12, k21, k22, ncap, cfg.fft_points)
    big = np.block([[k11, k12], [k21, k22]])
    full = np.linalg.det(np.eye(big.shape[0]) + big)
    return table, complex(full), c


def K_term(N1: int, N2: int, x1: float, x2: float, tau1: float, tau2: float, cfg: AiryQuadConfig = DEFAULT_AIRY) -> QuadResult:
    """K(N1, N2) from vertical-line trapezoid quadrature.

    err_est compares against the same sum on every other node (step doubled).
    """
    if N1 < 0 or N2 < 0:
        raise OutOfRange("N1, N2 must be nonnegative")
    if N1 == 0 and N2 == 0:
        _resolve_abscissas(tau1, tau2, cfg)
        return QuadResult(1.0 + 0j, 0.0, 0.0)
    ncap = max(N1, N2)
    fine, _, c = contour_term_table(x1, x2, tau1, tau2, ncap, cfg)
    coarse, _, _ = contour_term_table(x1, x2, tau1, tau2, ncap, cfg, refine=2)
    value = complex(fine[N1, N2])
    return QuadResult(value, float(abs(value - coarse[N1, N2])), 0.0, {"abscissas": list(c)})


def _decay_tail(table: np.ndarray, ncap: int, nmax: int = 80) -> tuple[float, float]:
    """Fit |K(N1,N2)| <= C^N N^{-N/2} (N = N1 + N2) and sum the majorant off the box."""
    mags = np.abs(table)
    logc = -math.inf
    for a in range(ncap + 1):
        for b in range(ncap + 1):
            n = a + b
            if n == 0 or mags[a, b] == 0:
                continue
            logc = max(logc, (math.log(mags[a, b]) + 0.5 * n * math.log(n)) / n)
    if logc == -math.inf:
        return 0.0, 0.0
    tail = 0.0
    for n in range(1, nmax + 1):
        # number of (a, b) with a + b = n outside the box [0, ncap]^2
        outside = sum(1 for a in range(n + 1) if a > ncap or n - a > ncap)
        if outside:
            tail += outside * math.exp(n * logc - 0.5 * n * math.log(n))
    return math.exp(logc), tail


def series_two_point_cdf(x1: float, x2: float, tau1: float, tau2: float, cfg: AiryQuadConfig = DEFAULT_AIRY, Ncap: int = 4) -> QuadResult:
    """Q truncated to N1, N2 <= Ncap, with a fitted super-exponential tail bound."""
    if Ncap < 0:
        raise OutOfRange("Ncap must be nonnegative")
    if Ncap == 0:
        _resolve_abscissas(tau1, tau2, cfg)
        return QuadResult(1.0 + 0j, 0.0, 0.0)
    fine, full, c = contour_term_table(x1, x2, tau1, tau2, Ncap, cfg)
    coarse, _, _ = contour_term_table(x1, x2, tau1, tau2, Ncap, cfg, refine=2)
    value = complex(fine.sum())
    const, tail = _decay_tail(fine, Ncap)
    info = {"abscissas": list(c), "decay_constant": const, "untruncated": {"re": full.real, "im": full.imag}}
    return QuadResult(value, float(abs(value - coarse.sum())), tail, info)
