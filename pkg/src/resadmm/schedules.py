"""Proximal-weight schedules with declared lower/upper bounds.

A schedule maps (block index i, iteration counter k) to a positive weight.
The bounds lo/hi are declared by the caller and checked against the
boundedness assumptions by the parameter validators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

__all__ = ["Schedule"]


@dataclass(frozen=True)
class Schedule:
    fn: Callable[[int, int], float]
    lo: float
    hi: float
    non_decreasing: bool = True

    def __post_init__(self):
        if not (0.0 < self.lo <= self.hi):
            raise ValueError("schedule bounds must satisfy 0 < lo <= hi")

    def value(self, i: int, k: int) -> float:
        v = float(self.fn(i, k))
        if not self.lo <= v <= self.hi:
            raise ValueError(f"schedule value {v} at (i={i}, k={k}) leaves [{self.lo}, {self.hi}]")
        return v

    @classmethod
    def constant(cls, c: float) -> "Schedule":
        if c <= 0:
            raise ValueError("schedule constant must be positive")
        return cls(lambda i, k: c, c, c)

    @classmethod
    def geometric_ramp(cls, lo: float, hi: float, rate: float = 1.05) -> "Schedule":
        """Non-decreasing ramp lo * rate^k capped at hi."""
        if rate < 1.0:
            raise ValueError("rate must be >= 1 for a non-decreasing ramp")
        return cls(lambda i, k: min(lo * rate**k, hi), lo, hi)
