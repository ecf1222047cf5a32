"""Result record shared by the quadrature and series evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class QuadResult:
    """A complex value with a quadrature error estimate and a series tail estimate."""

    value: complex
    err_est: float = 0.0
    tail_est: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for name in ("err_est", "tail_est"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")

    def to_json(self) -> dict:
        v = complex(self.value)
        return {"value": {"re": v.real, "im": v.imag}, "err_est": self.err_est, "tail_est": self.tail_est, **self.info}
