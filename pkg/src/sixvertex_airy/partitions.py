"""Integer partitions, interlacing and the one-variable skew Hall-Littlewood coefficients."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import OutOfRange


@dataclass(frozen=True, order=True)
class Partition:
    """Weakly decreasing tuple of positive parts."""

    parts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise OutOfRange(f"parts must be positive: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise OutOfRange(f"parts must be weakly decreasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, parts: Iterable[int]) -> "Partition":
        """Build from any iterable, dropping zeros."""
        return cls(tuple(p for p in parts if p))

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def part(self, i: int) -> int:
        """lambda_i with 1-based index, zero past the length."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def multiplicity(self, i: int) -> int:
        return self.parts.count(i)

    def multiplicities(self) -> dict[int, int]:
        return dict(Counter(self.parts))

    def conjugate(self) -> "Partition":
        return conjugate(self)

    def to_json(self) -> list[int]:
        return list(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __repr__(self) -> str:
        return f"Partition({self.parts})"


EMPTY = Partition(())


def conjugate(lam: Partition) -> Partition:
    """lambda'_i = #{j : lambda_j >= i}."""
    if not lam.parts:
        return EMPTY
    return Partition(tuple(sum(1 for p in lam.parts if p >= i) for i in range(1, lam.parts[0] + 1)))


def _partitions_bounded(k: int, largest: int) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for first in range(min(k, largest), 0, -1):
        for rest in _partitions_bounded(k - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _partitions_cached(k: int) -> tuple[Partition, ...]:
    return tuple(Partition(p) for p in _partitions_bounded(k, k))


def partitions_of(k: int) -> list[Partition]:
    """All partitions of k in reverse-lexicographic order, e.g. (3), (2,1), (1,1,1)."""
    if k < 0:
        raise OutOfRange("k must be nonnegative")
    return list(_partitions_cached(k))


def interlaces(lam: Partition, mu: Partition) -> bool:
    """True when lambda_1 >= mu_1 >= lambda_2 >= mu_2 >= ... (lam/mu is a horizontal strip)."""
    if lam.length > mu.length + 1:
        return False
    for i in range(1, lam.length + 1):
        if lam.part(i) < mu.part(i):
            return False
        if mu.part(i) < lam.part(i + 1):
            return False
    return mu.length <= lam.length


def strip_coeffs(lam: Partition, mu: Partition, t: float) -> tuple[bool, float, float]:
    """(is horizontal strip, psi_{lam/mu}(t), phi_{lam/mu}(t)).

    With theta = lam - mu, phi is the product of (1 - t^{m_i(lam)}) over i with
    theta'_i > theta'_{i+1}, and psi the product of (1 - t^{m_j(mu)}) over j
    with theta'_j < theta'_{j+1}.  Both vanish off horizontal strips.
    """
    if not interlaces(lam, mu):
        return False, 0.0, 0.0
    top = lam.part(1)
    # theta'_i = lam'_i - mu'_i, each 0 or 1 on a horizontal strip
    lc, mc = conjugate(lam), conjugate(mu)
    theta = [lc.part(i) - mc.part(i) for i in range(1, top + 2)]
    m_lam = lam.multiplicities()
    m_mu = mu.multiplicities()
    phi = 1.0
    psi = 1.0
    for i in range(1, top + 1):
        if theta[i - 1] > theta[i]:
            phi *= 1.0 - t ** m_lam.get(i, 0)
        if theta[i - 1] < theta[i]:
            psi *= 1.0 - t ** m_mu.get(i, 0)
    return True, psi, phi


def strip_successors(mu: Partition, max_part: int, max_length: int) -> Iterator[Partition]:
    """All lam with lam/mu a horizontal strip, parts <= max_part, length <= max_length."""
    n = min(mu.length + 1, max_length)
    if mu.part(1) > max_part or mu.length > max_length:
        return

    def rec(i: int, prefix: list[int]) -> Iterator[Partition]:
        if i > n:
            yield Partition.of(prefix)
            return
        hi = max_part if i == 1 else mu.part(i - 1)
        lo = mu.part(i)
        for v in range(lo, hi + 1):
            yield from rec(i + 1, prefix + [v])

    yield from rec(1, [])


def partition_count(k: int) -> int:
    """p(k) from Euler's pentagonal recurrence."""
    p = [1] + [0] * k
    for n in range(1, k + 1):
        total = 0
        j = 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > n:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[n - g1]
            g2 = j * (3 * j + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            j += 1
        p[n] = total
    return p[k]
