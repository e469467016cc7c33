"""Closed-form two-phase sensitivities for each estimation strategy.

These are deliberately plain formula evaluations, independent of the QFI
engine, so the two can be compared against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .spin_algebra import SpinQuantum

STRATEGIES = ("joint", "sequential", "sequential_spin", "sql")


@dataclass(frozen=True)
class SensitivityReport:
    strategy: str
    j: SpinQuantum
    delta_phi_total: float
    per_phase: tuple[float, float] | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not self.delta_phi_total > 0:
            raise ValueError("sensitivity must be positive")

    def to_row(self) -> dict:
        return {
            "two_j": self.j.two_j,
            "j": self.j.j,
            "parity": self.j.parity,
            "strategy": self.strategy,
            "delta_phi": self.delta_phi_total,
        }


def combine_effective(dphi_x: float, dphi_y: float) -> float:
    """Total sensitivity of a sequential protocol with M/2 copies per phase.

    Each single-phase sensitivity is inflated by sqrt 2 (half the copies) and
    the two are added in quadrature.
    """
    if not (dphi_x > 0 and dphi_y > 0):
        raise ValueError("single-phase sensitivities must be positive")
    return math.hypot(math.sqrt(2) * dphi_x, math.sqrt(2) * dphi_y)


def _effective_pair(dphi_x: float, dphi_y: float) -> tuple[float, float]:
    return math.sqrt(2) * dphi_x, math.sqrt(2) * dphi_y


def joint_sensitivity(j) -> SensitivityReport:
    j = SpinQuantum.parse(j)
    denom = j.casimir if j.is_integer else j.casimir - 0.25
    return SensitivityReport("joint", j, 1 / math.sqrt(denom))


def sequential_sensitivity(j) -> SensitivityReport:
    j = SpinQuantum.parse(j)
    single = 1 / (2 * j.j)
    return SensitivityReport("sequential", j, combine_effective(single, single), _effective_pair(single, single))


def spin_sequential_sensitivity(j) -> SensitivityReport:
    j = SpinQuantum.parse(j)
    single = 1 / math.sqrt(j.casimir if j.is_integer else j.casimir + 0.25)
    return SensitivityReport("sequential_spin", j, combine_effective(single, single), _effective_pair(single, single))


def sql_sensitivity(j) -> SensitivityReport:
    j = SpinQuantum.parse(j)
    single = 1 / math.sqrt(2 * j.j)
    return SensitivityReport("sql", j, combine_effective(single, single), _effective_pair(single, single))


_FORMULAS = {
    "joint": joint_sensitivity,
    "sequential": sequential_sensitivity,
    "sequential_spin": spin_sequential_sensitivity,
    "sql": sql_sensitivity,
}


def sensitivity(strategy: str, j) -> SensitivityReport:
    try:
        return _FORMULAS[strategy](j)
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}") from None


def scan(j_min, j_max, which=STRATEGIES) -> list[SensitivityReport]:
    """All strategies on the half-integer grid j_min..j_max, ordered by (j, strategy)."""
    lo, hi = SpinQuantum.parse(j_min), SpinQuantum.parse(j_max)
    if lo > hi:
        raise ValueError(f"empty range: j_min={lo} > j_max={hi}")
    chosen = [s for s in STRATEGIES if s in set(which)]
    unknown = set(which) - set(STRATEGIES)
    if unknown or not chosen:
        raise ValueError(f"unknown strategies {sorted(unknown)}; choose from {STRATEGIES}")
    return [_FORMULAS[s](SpinQuantum(tj)) for tj in range(lo.two_j, hi.two_j + 1) for s in chosen]
