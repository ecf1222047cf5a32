"""Ascending Hall-Littlewood process with all specialisations equal to a.

A chain is emptyset = lam(0) < lam(1) < ... < lam(N) (horizontal strips,
weights psi * a^{size change}) followed by a descending leg
emptyset = mu(0) < ... < mu(M) = lam(N) (weights phi * a^{size change})
that expands Q_{lam(N)}(a, ..., a).  The normalisation is
((1 - a^2) / (1 - t a^2))^{N M}.  The top-exit count lambda'(n) of the
six-vertex model has the law of the length of lam(n).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, InvalidChain, OutOfRange
from .partitions import EMPTY, Partition, strip_coeffs, strip_successors
from .sixvertex import JointHeightLaw


@dataclass(frozen=True)
class HLChain:
    """ascending = (lam(1), ..., lam(N)); descending = (mu(1), ..., mu(M)) with mu(M) = lam(N)."""

    ascending: tuple[Partition, ...]
    descending: tuple[Partition, ...]

    @classmethod
    def of(cls, ascending: Sequence, descending: Sequence) -> "HLChain":
        def conv(p):
            return p if isinstance(p, Partition) else Partition.of(p)

        return cls(tuple(conv(p) for p in ascending), tuple(conv(p) for p in descending))

    @property
    def N(self) -> int:
        return len(self.ascending)

    @property
    def M(self) -> int:
        return len(self.descending)

    def lengths(self) -> list[int]:
        """lambda'(n) = length of lam(n) for n = 1..N."""
        return [p.length for p in self.ascending]


def _check_unit(name: str, v: float) -> None:
    if not 0.0 < v < 1.0:
        raise OutOfRange(f"{name} = {v} must lie in (0, 1)")


@lru_cache(maxsize=1 << 18)
def _coeffs(lam: Partition, mu: Partition, t: float) -> tuple[bool, float, float]:
    return strip_coeffs(lam, mu, t)


def chain_weight(chain: HLChain, a: float, t: float) -> float:
    """Probability of a chain under the ascending process."""
    _check_unit("a", a)
    _check_unit("t", t)
    if chain.N < 1 or chain.M < 1:
        raise InvalidChain("need at least one step on each leg")
    if chain.descending[-1] != chain.ascending[-1]:
        raise InvalidChain("the descending leg must end at lam(N)")
    weight = ((1.0 - a * a) / (1.0 - t * a * a)) ** (chain.N * chain.M)
    for leg, pick in ((chain.ascending, 1), (chain.descending, 2)):
        prev = EMPTY
        for i, lam in enumerate(leg, start=1):
            if lam.length > i:
                raise InvalidChain(f"step {i} has length {lam.length} > {i}")
            ok, psi, phi = _coeffs(lam, prev, t)
            if not ok:
                raise InvalidChain(f"{lam} / {prev} is not a horizontal strip")
            weight *= (psi if pick == 1 else phi) * a ** (lam.size - prev.size)
            prev = lam
    return weight


def _leg_dp(steps: int, a: float, t: float, part_cap: int, max_len: int, pick: int, max_states: int):
    """Forward DP over one leg.  Yields the state dict after each step."""
    states = {EMPTY: 1.0}
    for i in range(1, steps + 1):
        nxt: dict = defaultdict(float)
        for mu, w in states.items():
            for lam in strip_successors(mu, part_cap, min(i, max_len)):
                _, psi, phi = _coeffs(lam, mu, t)
                nxt[lam] += w * (psi if pick == 1 else phi) * a ** (lam.size - mu.size)
        if len(nxt) > max_states:
            raise BudgetExceeded(f"{len(nxt)} partitions exceed the state cap {max_states}")
        states = dict(nxt)
        yield states


def _truncated_law(a, t, N, M, n1, n2, part_cap, max_states) -> tuple[JointHeightLaw, float]:
    # Q_{lam}(a,...,a) over M variables, lengths at most M
    q_values: dict = {}
    for q_values in _leg_dp(M, a, t, part_cap, M, 2, max_states):
        pass
    # ascending leg, tagged with lambda'(n2)
    tagged: dict = {(EMPTY, 0): 1.0}
    for i in range(1, N + 1):
        nxt: dict = defaultdict(float)
        for (mu, l2), w in tagged.items():
            for lam in strip_successors(mu, part_cap, min(i, M)):
                _, psi, _ = _coeffs(lam, mu, t)
                nxt[(lam, lam.length if i == n2 else l2)] += w * psi * a ** (lam.size - mu.size)
        if len(nxt) > max_states:
            raise BudgetExceeded(f"{len(nxt)} states exceed the state cap {max_states}")
        tagged = dict(nxt)
    norm = ((1.0 - a * a) / (1.0 - t * a * a)) ** (N * M)
    pmf = np.zeros((min(n2, M) + 1, min(n1, M) + 1))
    # lambda'(n1) is tracked through the length of lam(N) only when n1 = N
    if n1 != N:
        raise OutOfRange("internal: n1 must equal the chain length")
    for (lam, l2), w in tagged.items():
        q = q_values.get(lam, 0.0)
        if q:
            pmf[l2, lam.length] += norm * w * q
    mass = float(pmf.sum())
    return JointHeightLaw(M=M, n1=n1, n2=n2, pmf=pmf, source="hall-littlewood"), max(0.0, 1.0 - mass)


def truncated_joint_law(
    a: float,
    t: float,
    N: int,
    M: int,
    n1: int,
    n2: int,
    part_cap: Optional[int] = None,
    max_states: int = 2_000_000,
    adapt_tol: float = 1e-10,
    max_part_cap: int = 512,
) -> tuple[JointHeightLaw, float]:
    """Joint law of (lambda'(n2), lambda'(n1)) over chains with parts <= part_cap.

    Returns the law and tail_bound = 1 - truncated mass, which bounds the
    total-variation truncation error because every chain weight is positive.
    With ``part_cap=None`` the cap doubles from 8 until the pmf moves by less
    than ``adapt_tol``.
    """
    _check_unit("a", a)
    _check_unit("t", t)
    if N < 1 or M < 1:
        raise OutOfRange("N and M must be at least 1")
    if not 1 <= n2 <= n1 <= N:
        raise OutOfRange("need 1 <= n2 <= n1 <= N")
    # steps after n1 do not change the law of lam(n1) and lam(n2)
    if part_cap is not None:
        if part_cap < 1:
            raise OutOfRange("part_cap must be at least 1")
        return _truncated_law(a, t, n1, M, n1, n2, part_cap, max_states)
    cap = 8
    prev, tail = _truncated_law(a, t, n1, M, n1, n2, cap, max_states)
    while cap < max_part_cap:
        cap *= 2
        law, tail = _truncated_law(a, t, n1, M, n1, n2, cap, max_states)
        if np.max(np.abs(law.pmf - prev.pmf)) < adapt_tol:
            return law, tail
        prev = law
    return prev, tail
