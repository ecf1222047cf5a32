"""t-deformed special functions: Pochhammer symbols, t-factorials, t-Gamma,
the t-exponential and the bilateral spiral sum S(w, z; u, t).

Everything accepts numpy arrays and broadcasts.  Parameters ``u`` that can be
astronomically small are carried as :class:`LogU` so that powers ``(-u)^s``
are formed as ``exp(s * log(-u))`` without ever materialising ``u``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BadU, Nonconvergence, OnSpiral, OutOfRange, PoleHit

ArrayLike = Union[complex, float, np.ndarray]


@dataclass(frozen=True)
class QTol:
    """Truncation control for infinite products and bilateral sums."""

    abs_tol: float = 1e-14
    max_terms: int = 100_000

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise OutOfRange("abs_tol must be positive")
        if self.max_terms < 1:
            raise OutOfRange("max_terms must be at least 1")


DEFAULT_TOL = QTol()


@dataclass(frozen=True)
class LogU:
    """A parameter ``u = -exp(log_abs + 1j*phase)`` off the ray [0, inf).

    ``phase`` lies in (-pi, pi); ``log_abs = -inf`` encodes ``u = 0``.
    """

    log_abs: float
    phase: float = 0.0

    sign = -1

    def __post_init__(self) -> None:
        if math.isnan(self.log_abs) or self.log_abs == math.inf:
            raise BadU(f"invalid log-magnitude {self.log_abs}")
        if not -math.pi < self.phase < math.pi:
            raise BadU("u lies on [0, inf): phase of -u must be in (-pi, pi)")

    @classmethod
    def from_value(cls, u: complex) -> "LogU":
        u = complex(u)
        if u == 0:
            return cls(-math.inf, 0.0)
        if u.imag == 0.0 and u.real > 0:
            raise BadU(f"u = {u} lies on [0, inf)")
        minus = -u
        return cls(math.log(abs(minus)), cmath.phase(minus))

    @property
    def is_zero(self) -> bool:
        return self.log_abs == -math.inf

    @property
    def log_minus_u(self) -> complex:
        """Principal logarithm of ``-u``."""
        return complex(self.log_abs, self.phase)

    @property
    def value(self) -> complex:
        """The number ``u`` itself (may underflow to 0)."""
        if self.is_zero:
            return 0j
        return -cmath.exp(self.log_minus_u)

    def times_power_of_t(self, t: float, k: float) -> "LogU":
        """Return ``u * t**k`` for real ``k``."""
        if self.is_zero:
            return self
        return LogU(self.log_abs + k * math.log(t), self.phase)

    def to_json(self) -> dict:
        return {"sign": self.sign, "log_abs": self.log_abs, "phase": self.phase}


def as_logu(u: Union[LogU, complex, float]) -> LogU:
    return u if isinstance(u, LogU) else LogU.from_value(u)


def _check_t(t: float) -> None:
    if not 0.0 < t < 1.0:
        raise OutOfRange(f"t = {t} must lie in (0, 1)")


def pochhammer_length(zmax: float, t: float, tol: QTol = DEFAULT_TOL) -> int:
    """Number of factors of (z;t)_inf to keep when |z| <= zmax.

    The neglected factors n > n0 contribute at most
    sum_{n>n0} |z| t^n / (1 - |z| t^{n0+1}) to the logarithm.
    """
    _check_t(t)
    if zmax == 0.0:
        return 0
    n0 = 0
    while True:
        first = zmax * t ** (n0 + 1)
        if first < 0.5:
            tail = first / ((1.0 - t) * (1.0 - first))
            if tail < tol.abs_tol:
                return n0 + 1
        n0 += 1
        if n0 > tol.max_terms:
            raise Nonconvergence("t-Pochhammer truncation exceeded max_terms")


def t_pochhammer(z: ArrayLike, t: float, tol: QTol = DEFAULT_TOL):
    """(z; t)_inf = prod_{n>=0} (1 - z t^n), elementwise."""
    arr = np.asarray(z)
    zmax = float(np.max(np.abs(arr))) if arr.size else 0.0
    nterms = pochhammer_length(zmax, t, tol)
    out = np.ones_like(arr, dtype=np.result_type(arr.dtype, np.float64))
    power = 1.0
    for _ in range(nterms):
        out = out * (1.0 - arr * power)
        power *= t
    if np.ndim(z) == 0:
        return out.item()
    return out


def t_pochhammer_finite(z: ArrayLike, t: float, k: int):
    """(z; t)_k = prod_{n<k} (1 - z t^n)."""
    arr = np.asarray(z)
    out = np.ones_like(arr, dtype=np.result_type(arr.dtype, np.float64))
    for n in range(k):
        out = out * (1.0 - arr * t**n)
    if np.ndim(z) == 0:
        return out.item()
    return out


def t_factorial(k: int, t: float) -> float:
    """k_t! = (1-t)(1-t^2)...(1-t^k)/(1-t)^k."""
    if k < 0:
        raise OutOfRange("k must be nonnegative")
    out = 1.0
    for j in range(1, k + 1):
        out *= sum(t**i for i in range(j))
    return out


def t_gamma(x: complex, t: float, tol: QTol = DEFAULT_TOL) -> complex:
    """Gamma_t(x) = (t;t)_inf / (t^x;t)_inf * (1-t)^(1-x)."""
    _check_t(t)
    logt = math.log(t)
    tx = cmath.exp(complex(x) * logt)
    # (t^x;t)_inf vanishes iff t^x = t^{-n} for some n >= 0
    nmax = pochhammer_length(abs(tx), t, tol)
    for n in range(nmax + 1):
        if abs(1.0 - tx * t**n) < 1e-13:
            raise PoleHit(f"t-Gamma pole at x = {x}")
    # ratio of products summed in log form so (t;t)_inf may underflow near t = 1
    n = np.arange(max(nmax, pochhammer_length(t, t, tol)) + 1)
    powers = t**n
    log_ratio = np.sum(np.log1p(-t * powers)) - np.sum(np.log(1.0 - tx * powers))
    return cmath.exp(log_ratio + (1.0 - complex(x)) * math.log(1.0 - t))


def t_exponential(u: complex, t: float, tol: QTol = DEFAULT_TOL) -> complex:
    """e_t(u) = sum_k u^k / (t;t)_k, equal to 1/(u;t)_inf for |u| < 1."""
    _check_t(t)
    u = complex(u)
    if abs(u) >= 1:
        raise OutOfRange("t-exponential series needs |u| < 1")
    total = 0j
    term = 1 + 0j
    k = 0
    while True:
        total += term
        k += 1
        term *= u / (1.0 - t**k)
        if abs(term) < tol.abs_tol * max(1.0, abs(total)) * (1 - abs(u)):
            return total + term
        if k > tol.max_terms:
            raise Nonconvergence("t-exponential series did not converge")


def spiral_cutoff(phase: float, t: float, tol: QTol = DEFAULT_TOL) -> int:
    """Smallest m0 such that the terms |m| > m0 of the spiral sum are below tol.

    With B = -2 pi / log t every term obeys
    |term_m| <= 2 pi e^{pi B} / (1 - e^{-2 pi B}) * e^{(|phase| - pi) B |m|}.
    """
    big_b = -2.0 * math.pi / math.log(t)
    log_q = (abs(phase) - math.pi) * big_b
    const = 2.0 * math.pi * math.exp(math.pi * big_b) / (-math.expm1(-2.0 * math.pi * big_b))
    log_c = math.log(2.0 * const) - math.log(-math.expm1(log_q))
    m0 = 1
    while log_c + (m0 + 1) * log_q >= math.log(tol.abs_tol):
        m0 += 1
        if m0 > tol.max_terms:
            raise Nonconvergence("spiral sum cutoff exceeded max_terms")
    return m0


def _pi_over_sin_times_exp(zeta: np.ndarray, expo: np.ndarray) -> np.ndarray:
    """pi * exp(expo) / sin(zeta) without overflow for large |Im zeta|."""
    upper = zeta.imag > 0
    # Im zeta > 0: 1/sin = 2i e^{i zeta} / (e^{2 i zeta} - 1)
    # Im zeta <= 0: 1/sin = 2i e^{-i zeta} / (1 - e^{-2 i zeta})
    sgn = np.where(upper, 1.0, -1.0)
    e1 = np.exp(expo + sgn * 1j * zeta)
    e2 = np.exp(sgn * 2j * zeta)
    den = np.where(upper, e2 - 1.0, 1.0 - e2)
    return math.pi * 2j * e1 / den


def spiral_S(
    w: ArrayLike,
    z: ArrayLike,
    u: Union[LogU, complex, float],
    t: float,
    tol: QTol = DEFAULT_TOL,
    m_cutoff: int | None = None,
    split: bool = False,
):
    """Bilateral sum S(w, z; u, t) = sum_m pi (-u)^{A_m} / sin(-pi A_m).

    Here A_m = (log w - log z)/log t - 2 pi i m / log t with principal logs.
    With ``split=True`` returns ``(log_prefactor, reduced)`` such that
    S = exp(log_prefactor) * reduced; the prefactor is (-u)^{A_0}, which
    carries the possibly extreme magnitude.
    """
    _check_t(t)
    uu = as_logu(u)
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(w == 0) or np.any(z == 0):
        raise OnSpiral("S requires zw != 0")
    logt = math.log(t)
    A = (np.log(w) - np.log(z)) / logt
    ratio = A.real
    dist = np.abs(ratio - np.round(ratio))
    if np.any(dist <= 1e-12 * np.maximum(1.0, np.abs(ratio))):
        raise OnSpiral("|z| = t^n |w| for some integer n")
    shape = np.broadcast(w, z).shape
    if uu.is_zero:
        zeros = np.zeros(shape, dtype=complex)
        if split:
            return np.full(shape, -np.inf + 0j), zeros
        return zeros if shape else 0j
    ell = uu.log_minus_u
    big_b = -2.0 * math.pi / logt
    m0 = spiral_cutoff(uu.phase, t, tol) if m_cutoff is None else int(m_cutoff)
    A = np.broadcast_to(A, shape)
    total = np.zeros(shape, dtype=complex)
    for m in range(-m0, m0 + 1):
        zeta = -math.pi * (A + 1j * m * big_b)
        total += _pi_over_sin_times_exp(zeta, np.full(shape, 1j * m * big_b * ell))
    log_pref = A * ell
    if split:
        return log_pref, total
    out = np.exp(log_pref) * total
    return out if shape else complex(out)


def log_inv_pochhammer(u: Union[LogU, complex, float], shift: int, t: float, tol: QTol = DEFAULT_TOL) -> complex:
    """log of 1/(u t^{-shift}; t)_inf, safe for astronomically large or small |u|.

    Factors with |u t^{n-shift}| far above 1 are summed as logs of their
    dominant part so nothing overflows.
    """
    _check_t(t)
    uu = as_logu(u)
    if uu.is_zero:
        return 0j
    logt = math.log(t)
    # z = u t^{-shift} = -exp(lz)
    lz = complex(uu.log_abs - shift * logt, uu.phase)
    total = 0j
    n = 0
    while True:
        lzn = lz + n * logt
        if lzn.real > 30.0:
            # log(1 + e^{lzn}) = lzn + log(1 + e^{-lzn})
            total += lzn + cmath.log(1.0 + cmath.exp(-lzn))
        else:
            zn = cmath.exp(lzn)
            total += cmath.log(1.0 + zn)
            if abs(zn) < 0.5 and abs(zn) / (1.0 - t) < tol.abs_tol:
                return -total
        n += 1
        if n > tol.max_terms:
            raise Nonconvergence("inverse Pochhammer did not converge")


def _as_vectors(w, zhat, lam, mu):
    w = np.asarray(w, dtype=complex).ravel()
    zhat = np.asarray(zhat, dtype=complex).ravel()
    lam = [int(v) for v in np.ravel(lam)]
    mu = [int(v) for v in np.ravel(mu)]
    if len(lam) != w.size or len(mu) != zhat.size:
        raise OutOfRange("need one part per variable")
    return w, zhat, lam, mu


def cross_term_product_form(w, zhat, lam, mu, t: float, tol: QTol = DEFAULT_TOL) -> complex:
    """Two Cauchy determinants times the Pochhammer cross term of the joint series.

    det[1/(w_i t^{-lam_i} - w_j)] det[1/(zhat_i - zhat_j t^{mu_j})] times
    prod_{i,j} (x t^{lam_i};t)(x t^{mu_j};t) / ((x t^{lam_i+mu_j};t)(x;t)), x = zhat_j / w_i.
    """
    _check_t(t)
    w, zhat, lam, mu = _as_vectors(w, zhat, lam, mu)
    tl = t ** np.array(lam, dtype=float)
    tm = t ** np.array(mu, dtype=float)
    value = complex(np.linalg.det(1.0 / (w[:, None] / tl[:, None] - w[None, :])))
    value *= complex(np.linalg.det(1.0 / (zhat[:, None] - zhat[None, :] * tm[None, :])))
    x = zhat[None, :] / w[:, None]
    num = t_pochhammer(x * tl[:, None], t, tol) * t_pochhammer(x * tm[None, :], t, tol)
    den = t_pochhammer(x * tl[:, None] * tm[None, :], t, tol) * t_pochhammer(x, t, tol)
    return value * complex(np.prod(num / den))


def cross_term_gamma_form(w, zhat, lam, mu, t: float, tol: QTol = DEFAULT_TOL) -> complex:
    """The same quantity as one Cauchy determinant of size N1 + N2 times t-Gamma ratios.

    Z = (w t^{-lam}, zhat), W = (w, zhat t^{mu}); with z = w t^{-lam} and
    what = zhat t^{mu} the ratio is
    Gamma_t(1 + L(zhat) - L(w)) Gamma_t(1 + L(what) - L(z)) /
    (Gamma_t(1 + L(zhat) - L(z)) Gamma_t(1 + L(what) - L(w))), L = log_t.
    """
    _check_t(t)
    w, zhat, lam, mu = _as_vectors(w, zhat, lam, mu)
    z = w / t ** np.array(lam, dtype=float)
    what = zhat * t ** np.array(mu, dtype=float)
    Z = np.concatenate([z, zhat])
    W = np.concatenate([w, what])
    value = complex(np.linalg.det(1.0 / (Z[:, None] - W[None, :])))
    logt = math.log(t)

    def log_t(v):
        return cmath.log(v) / logt

    for i in range(w.size):
        for j in range(zhat.size):
            value *= t_gamma(1 + log_t(zhat[j]) - log_t(w[i]), t, tol) * t_gamma(1 + log_t(what[j]) - log_t(z[i]), t, tol)
            value /= t_gamma(1 + log_t(zhat[j]) - log_t(z[i]), t, tol) * t_gamma(1 + log_t(what[j]) - log_t(w[i]), t, tol)
    return value
