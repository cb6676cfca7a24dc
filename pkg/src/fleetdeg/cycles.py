"""Cycle accounting for SoC trajectories.

Two independent routes extract cycles with the ASTM E1049 three-point rule:

* :class:`TurningPointTracker` consumes one SoC value at a time, exposes the
  active switching point and reports cycles as soon as they close.
* :func:`rainflow_offline` processes a complete trajectory.

Given the same trajectory, the cycles emitted by the tracker plus its residual
half cycles equal the offline result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, NumericalDomainError, ValidationError

FULL = "full"
HALF = "half"


@dataclass(frozen=True)
class CycleRecord:
    depth: float
    kind: str
    completed_at: int
    battery: int = 0
    amplitude: int = 0


def _record(amplitude: int, capacity: int, kind: str, t: int, battery: int) -> CycleRecord:
    return CycleRecord(amplitude / capacity, kind, t, battery, amplitude)


class TurningPointTracker:
    """Online turning-point list for one battery.

    ``points`` holds confirmed extrema that are not yet part of a closed
    cycle; the first entry is the current starting point. ``last_soc`` is the
    latest SoC, which acts as a provisional extremum while it keeps moving in
    the same direction.
    """

    def __init__(self, initial_soc: int, battery: int = 0):
        self.points: list[int] = [int(initial_soc)]
        self.last_soc = int(initial_soc)
        self.battery = battery

    @property
    def direction(self) -> int:
        """+1 rising, -1 falling, 0 flat (no move since the last extremum)."""
        d = self.last_soc - self.points[-1]
        return (d > 0) - (d < 0)

    @property
    def switching_point(self) -> int:
        return self.points[-1]

    def push(self, new_soc: int, t: int, capacity: int) -> list[CycleRecord]:
        if not 0 <= new_soc <= capacity:
            raise DomainError(f"SoC {new_soc} outside [0, {capacity}]")
        move = new_soc - self.last_soc
        if move == 0:
            return []
        if self.direction * move < 0:
            self.points.append(self.last_soc)
        self.last_soc = int(new_soc)
        return self._reduce(t, capacity)

    def _reduce(self, t: int, capacity: int) -> list[CycleRecord]:
        pts = self.points
        closed = []
        while len(pts) >= 2:
            x = abs(self.last_soc - pts[-1])
            y = abs(pts[-1] - pts[-2])
            if x < y:
                break
            if len(pts) == 2:
                closed.append(_record(y, capacity, HALF, t, self.battery))
                del pts[0]
            else:
                closed.append(_record(y, capacity, FULL, t, self.battery))
                del pts[-2:]
        return closed

    def residual(self, t: int, capacity: int) -> list[CycleRecord]:
        """Open excursions as half cycles, oldest first."""
        pts = self.points + ([self.last_soc] if self.last_soc != self.points[-1] else [])
        return [
            _record(abs(b - a), capacity, HALF, t, self.battery) for a, b in zip(pts, pts[1:])
        ]

    def copy(self) -> "TurningPointTracker":
        other = TurningPointTracker.__new__(TurningPointTracker)
        other.points = list(self.points)
        other.last_soc = self.last_soc
        other.battery = self.battery
        return other


def tracker_init(initial_soc: int, battery: int = 0) -> TurningPointTracker:
    return TurningPointTracker(initial_soc, battery)


def push_soc(tracker: TurningPointTracker, new_soc: int, t: int, capacity: int) -> list[CycleRecord]:
    return tracker.push(new_soc, t, capacity)


def current_switching_point(tracker: TurningPointTracker) -> int:
    return tracker.switching_point


@dataclass
class CycleLedger:
    records: list[CycleRecord] = field(default_factory=list)
    residual_half_weight: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.residual_half_weight <= 1.0:
            raise ValidationError("residual_half_weight must lie in (0, 1]")

    def weight(self, rec: CycleRecord) -> float:
        return 1.0 if rec.kind == FULL else self.residual_half_weight

    def weighted_count(self) -> float:
        return sum(self.weight(r) for r in self.records)

    def full_count(self) -> int:
        return sum(1 for r in self.records if r.kind == FULL)

    def __add__(self, other: "CycleLedger") -> "CycleLedger":
        if other.residual_half_weight != self.residual_half_weight:
            raise ValidationError("cannot merge ledgers with different half-cycle weights")
        return CycleLedger(self.records + other.records, self.residual_half_weight)

    def __len__(self) -> int:
        return len(self.records)


def turning_points(trace: Sequence[int]) -> list[tuple[int, int]]:
    """Compress a trajectory to ``(index, value)`` reversals, keeping both ends."""
    pts: list[tuple[int, int]] = []
    direction = 0
    for i, v in enumerate(trace):
        if not pts:
            pts.append((i, v))
            continue
        d = v - pts[-1][1]
        if d == 0:
            continue
        s = 1 if d > 0 else -1
        if s == direction:
            pts[-1] = (i, v)
        else:
            pts.append((i, v))
            direction = s
    return pts


def rainflow_offline(
    trace: Sequence[int],
    capacity: int,
    battery: int = 0,
    residual_half_weight: float = 0.5,
) -> CycleLedger:
    """Rainflow-count a complete SoC trajectory.

    Full cycles come from the three-point rule; the turning points left over
    are reported pairwise as half cycles. Depths are amplitudes over ``capacity``.
    """
    if len(trace) < 2:
        raise ValidationError("rainflow needs a trace of at least two samples")
    records: list[CycleRecord] = []
    stack: list[int] = []
    for idx, value in turning_points([int(v) for v in trace]):
        stack.append(value)
        while len(stack) >= 3:
            x = abs(stack[-1] - stack[-2])
            y = abs(stack[-2] - stack[-3])
            if x < y:
                break
            if len(stack) == 3:
                records.append(_record(y, capacity, HALF, idx, battery))
                stack.pop(0)
            else:
                records.append(_record(y, capacity, FULL, idx, battery))
                del stack[-3:-1]
    end = len(trace) - 1
    for a, b in zip(stack, stack[1:]):
        records.append(_record(abs(b - a), capacity, HALF, end, battery))
    return CycleLedger(records, residual_half_weight)


@dataclass(frozen=True)
class ExponentialStress:
    """``alpha_d * exp(beta * depth)``."""

    alpha_d: float = 0.01
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha_d <= 0 or self.beta <= 0:
            raise ValidationError("alpha_d and beta must be positive")
        if not math.isfinite(self.alpha_d * math.exp(self.beta)):
            raise ValidationError("stress at depth 1 overflows")

    def __call__(self, depth: float) -> float:
        return self.alpha_d * math.exp(self.beta * depth)


@dataclass(frozen=True)
class RationalStress:
    """``1 / (k1 * depth**k2 + k3)``; the defaults are an NMC-cell calibration."""

    k1: float = 1.4e5
    k2: float = -5.01e-1
    k3: float = -1.23e5

    def __post_init__(self):
        grid = np.linspace(1e-3, 1.0, 1000)
        if np.any(self.k1 * grid**self.k2 + self.k3 <= 0):
            raise ValidationError("rational stress denominator must stay positive on (0, 1]")

    def __call__(self, depth: float) -> float:
        denom = self.k1 * depth**self.k2 + self.k3
        if denom <= 0:
            raise NumericalDomainError(f"stress denominator {denom} <= 0 at depth {depth}")
        return 1.0 / denom


StressModel = Union[ExponentialStress, RationalStress]


def stress(model: StressModel, depth: float) -> float:
    if not 0.0 < depth <= 1.0:
        raise DomainError(f"depth {depth} outside (0, 1]")
    return model(depth)


def total_degradation(ledger: CycleLedger, model: StressModel) -> float:
    return sum(ledger.weight(r) * stress(model, r.depth) for r in ledger.records)


def default_bin_edges(n_bins: int = 10) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_bins + 1)


def dod_histogram(ledger: CycleLedger, bin_edges: Iterable[float]) -> tuple[np.ndarray, float]:
    """Weighted cycle counts per ``(lo, hi]`` depth bin, plus overflow mass."""
    edges = np.asarray(list(bin_edges), dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing with at least two entries")
    counts = np.zeros(len(edges) - 1)
    overflow = 0.0
    for rec in ledger.records:
        k = int(np.searchsorted(edges, rec.depth, side="left"))
        if 1 <= k < len(edges):
            counts[k - 1] += ledger.weight(rec)
        else:
            overflow += ledger.weight(rec)
    return counts, overflow
