"""Stochastic six-vertex model with step initial data: exact sampling and an
exact transfer-matrix law for the top-exit counts at two columns.

Vertex rule: a lone vertical arrow continues up with probability b1 and
otherwise turns right; a lone horizontal arrow continues right with
probability b2 and otherwise turns up; zero or two entering arrows pass
through.  The top-exit count lambda'(n) is the number of arrows leaving the
top boundary of the box [1, n] x [1, M], and the height is h(n+1, M) = M -
lambda'(n).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ._backend import sweep_columns
from .errors import OutOfRange, TooLarge
from .params import ModelParams
from .qseries import LogU, QTol, DEFAULT_TOL, log_inv_pochhammer

M_CAP = 14


@dataclass(frozen=True)
class HeightSample:
    """Heights h(n+1, M) at the query columns n for one sample."""

    M: int
    columns: tuple[int, ...]
    heights: tuple[int, ...]
    seed: dict = field(default_factory=dict)

    def top_exits(self) -> tuple[int, ...]:
        return tuple(self.M - h for h in self.heights)

    def to_json(self) -> dict:
        return {"M": self.M, "columns": list(self.columns), "heights": list(self.heights), "seed": dict(self.seed)}


@dataclass(frozen=True)
class JointHeightLaw:
    """pmf[i, j] = P(lambda'(n2) = i, lambda'(n1) = j)."""

    M: int
    n1: int
    n2: int
    pmf: np.ndarray
    source: str = "transfer-matrix"

    def __post_init__(self) -> None:
        if not 1 <= self.n2 <= self.n1:
            raise OutOfRange("need 1 <= n2 <= n1")
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 2:
            raise OutOfRange("pmf must be a 2-D table")
        object.__setattr__(self, "pmf", pmf)

    @property
    def total(self) -> float:
        return float(self.pmf.sum())

    def marginal_n1(self) -> np.ndarray:
        return self.pmf.sum(axis=0)

    def marginal_n2(self) -> np.ndarray:
        return self.pmf.sum(axis=1)

    def expectation(self, fn) -> complex:
        """E[fn(lambda'(n2), lambda'(n1))] by finite summation."""
        total = 0j
        for i, j in zip(*np.nonzero(self.pmf)):
            total += self.pmf[i, j] * fn(int(i), int(j))
        return total

    def tv_distance(self, other: "JointHeightLaw") -> float:
        rows = max(self.pmf.shape[0], other.pmf.shape[0])
        cols = max(self.pmf.shape[1], other.pmf.shape[1])
        a = np.zeros((rows, cols))
        b = np.zeros((rows, cols))
        a[: self.pmf.shape[0], : self.pmf.shape[1]] = self.pmf
        b[: other.pmf.shape[0], : other.pmf.shape[1]] = other.pmf
        return 0.5 * float(np.abs(a - b).sum())

    def to_json(self) -> dict:
        entries = [
            {"lambda_n2": int(i), "lambda_n1": int(j), "p": float(self.pmf[i, j])}
            for i, j in zip(*np.nonzero(self.pmf))
        ]
        return {"M": self.M, "n1": self.n1, "n2": self.n2, "source": self.source, "pmf": entries}


def _check_weights(b1: float, b2: float) -> None:
    for name, b in (("b1", b1), ("b2", b2)):
        if not 0.0 <= b <= 1.0:
            raise OutOfRange(f"{name} = {b} must lie in [0, 1]")


def _column_step(P: np.ndarray, M: int, b1: float, b2: float) -> np.ndarray:
    """Advance a law over horizontal-occupancy masks (axis 0) through one column."""
    # Q[mask, carry, ...]
    Q = np.zeros((P.shape[0], 2) + P.shape[1:])
    Q[:, 0] = P
    masks = np.arange(1 << M)
    for y in range(M):
        bit = 1 << y
        hi = masks[(masks & bit) != 0]
        lo = hi ^ bit
        lone_h = Q[hi, 0].copy()
        lone_v = Q[lo, 1].copy()
        Q[hi, 0] = b2 * lone_h + (1.0 - b1) * lone_v
        Q[lo, 1] = (1.0 - b2) * lone_h + b1 * lone_v
    # the top carry leaves the box
    return Q[:, 0] + Q[:, 1]


def exact_joint_height_law_weights(b1: float, b2: float, M: int, n1: int, n2: int, M_cap: int = M_CAP) -> JointHeightLaw:
    """Exact joint law for raw vertex weights b1, b2 in [0, 1]."""
    _check_weights(b1, b2)
    if M < 1:
        raise OutOfRange("M must be at least 1")
    if not 1 <= n2 <= n1:
        raise OutOfRange("need 1 <= n2 <= n1")
    if M > M_cap:
        raise TooLarge(f"M = {M} exceeds the transfer-matrix cap {M_cap}")
    size = 1 << M
    popcount = np.array([bin(m).count("1") for m in range(size)])
    P = np.zeros(size)
    P[size - 1] = 1.0
    for _ in range(n2):
        P = _column_step(P, M, b1, b2)
    # attach lambda'(n2) = M - popcount as a second axis
    joint = np.zeros((size, M + 1))
    joint[np.arange(size), M - popcount] = P
    for _ in range(n1 - n2):
        joint = _column_step(joint, M, b1, b2)
    pmf = np.zeros((min(n2, M) + 1, min(n1, M) + 1))
    lam1 = M - popcount
    for l2 in range(pmf.shape[0]):
        pmf[l2] = np.bincount(lam1, weights=joint[:, l2], minlength=M + 1)[: pmf.shape[1]]
    return JointHeightLaw(M=M, n1=n1, n2=n2, pmf=pmf)


def exact_joint_height_law(params: ModelParams, M: int, n1: int, n2: int, M_cap: int = M_CAP) -> JointHeightLaw:
    """Exact joint pmf of (lambda'(n2), lambda'(n1)) by a column sweep over occupancy masks."""
    return exact_joint_height_law_weights(params.b1, params.b2, M, n1, n2, M_cap)


def law_observable(
    law: JointHeightLaw,
    t: float,
    u1: Union[LogU, complex, float],
    u2: Union[LogU, complex, float],
    k1: int = 0,
    k2: int = 0,
    tol: QTol = DEFAULT_TOL,
) -> complex:
    """E[t^{-k1 L1} t^{-k2 L2} / ((u1 t^{-L1};t)_inf (u2 t^{-L2};t)_inf)].

    L1 = lambda'(n1) and L2 = lambda'(n2); the sum over the pmf is finite.
    """
    if k1 < 0 or k2 < 0:
        raise OutOfRange("k1, k2 must be nonnegative")
    logt = math.log(t)
    rows, cols = law.pmf.shape
    f1 = [log_inv_pochhammer(u1, j, t, tol) - k1 * j * logt for j in range(cols)]
    f2 = [log_inv_pochhammer(u2, i, t, tol) - k2 * i * logt for i in range(rows)]
    total = 0j
    for i, j in zip(*np.nonzero(law.pmf)):
        total += law.pmf[i, j] * np.exp(f1[j] + f2[i])
    return complex(total)


def _stream(seed: int, index: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, sample index)
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def sample_top_exits_weights(
    b1: float,
    b2: float,
    M: int,
    columns: Sequence[int],
    count: int,
    seed: int = 0,
    start: int = 0,
    batch: int = 1024,
    block: int = 16,
    threads: int = 1,
) -> np.ndarray:
    """Top-exit counts lambda'(n), shape (count, len(columns)), for raw weights.

    Sample k draws its uniforms column by column, rows bottom to top, from the
    stream keyed by (seed, start + k), so results do not depend on ``batch``
    or ``block`` and any sub-range of samples can be regenerated on its own.
    With ``threads > 1`` batches run on a thread pool; the output is unchanged.
    """
    _check_weights(b1, b2)
    if M < 1:
        raise OutOfRange("M must be at least 1")
    if count < 1:
        raise OutOfRange("count must be at least 1")
    if threads < 1:
        raise OutOfRange("threads must be at least 1")
    if seed < 0 or start < 0:
        raise OutOfRange("seed and start must be nonnegative")
    cols = np.asarray(list(columns), dtype=np.int64)
    if cols.size == 0 or np.any(cols < 0):
        raise OutOfRange("columns must be a nonempty list of nonnegative integers")
    ncols = int(cols.max())
    result = np.zeros((count, cols.size), dtype=np.int64)
    if ncols == 0:
        return result
    wanted = cols >= 1

    def run(lo: int) -> None:
        hi = min(count, lo + batch)
        streams = [_stream(seed, start + k) for k in range(lo, hi)]
        horiz = np.ones((hi - lo, M), dtype=np.uint8)
        exits = np.zeros(hi - lo, dtype=np.int64)
        history = np.zeros((hi - lo, ncols + 1), dtype=np.int64)
        for x0 in range(0, ncols, block):
            K = min(block, ncols - x0)
            U = np.empty((hi - lo, K, M))
            for i, g in enumerate(streams):
                U[i] = g.random((K, M))
            record = np.zeros((hi - lo, K), dtype=np.int64)
            sweep_columns(U, float(b1), float(b2), horiz, exits, record)
            history[:, x0 + 1 : x0 + 1 + K] = record
        result[lo:hi, wanted] = history[:, cols[wanted]]

    starts = range(0, count, batch)
    if threads == 1:
        for lo in starts:
            run(lo)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    return result


def sample_top_exits(
    params: ModelParams, M: int, columns: Sequence[int], count: int, seed: int = 0, start: int = 0, threads: int = 1
) -> np.ndarray:
    return sample_top_exits_weights(params.b1, params.b2, M, columns, count, seed, start, threads=threads)


def sample_heights(params: ModelParams, M: int, columns: Sequence[int], count: int, seed: int = 0) -> list[HeightSample]:
    """i.i.d. samples of h(n+1, M) at each query column n."""
    exits = sample_top_exits(params, M, columns, count, seed)
    cols = tuple(int(c) for c in columns)
    return [
        HeightSample(M=M, columns=cols, heights=tuple(int(M - e) for e in row), seed={"seed": seed, "index": k})
        for k, row in enumerate(exits)
    ]
