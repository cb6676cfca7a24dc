"""Battery fleet physics: per-unit bounds, aggregate limits and feasible actions.

All energies are integers. Positive actions charge, negative actions discharge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Sequence

from .errors import DomainError, InfeasibleActionError, ValidationError

SocVector = tuple[int, ...]
ActionVector = tuple[int, ...]


@dataclass(frozen=True)
class BatteryUnit:
    capacity: int
    max_charge: int
    max_discharge: int

    def __post_init__(self):
        for name in ("capacity", "max_charge", "max_discharge"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))


@dataclass(frozen=True)
class FleetConfig:
    units: tuple[BatteryUnit, ...]

    def __post_init__(self):
        units = tuple(self.units)
        if not units:
            raise ValidationError("a fleet needs at least one battery")
        object.__setattr__(self, "units", units)

    @classmethod
    def from_lists(cls, capacities, max_charge, max_discharge=None) -> "FleetConfig":
        if max_discharge is None:
            max_discharge = max_charge
        if not len(capacities) == len(max_charge) == len(max_discharge):
            raise ValidationError("capacity and ramp lists differ in length")
        return cls(tuple(BatteryUnit(*u) for u in zip(capacities, max_charge, max_discharge)))

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def capacities(self) -> tuple[int, ...]:
        return tuple(u.capacity for u in self.units)

    def half_capacity(self) -> SocVector:
        return tuple(u.capacity // 2 for u in self.units)

    def validate_socs(self, socs: Sequence[int]) -> SocVector:
        socs = tuple(int(s) for s in socs)
        if len(socs) != self.n:
            raise ValidationError(f"expected {self.n} SoC values, got {len(socs)}")
        for s, u in zip(socs, self.units):
            if not 0 <= s <= u.capacity:
                raise DomainError(f"SoC {s} outside [0, {u.capacity}]")
        return socs


def per_battery_bounds(unit: BatteryUnit, soc: int) -> tuple[int, int]:
    """Admissible action interval ``(lo, hi)`` for one battery at ``soc``."""
    if not 0 <= soc <= unit.capacity:
        raise DomainError(f"SoC {soc} outside [0, {unit.capacity}]")
    return -min(unit.max_discharge, soc), min(unit.max_charge, unit.capacity - soc)


def fleet_bounds(fleet: FleetConfig, socs: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    pairs = [per_battery_bounds(u, s) for u, s in zip(fleet.units, socs)]
    return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)


def aggregate_limits(fleet: FleetConfig, socs: Sequence[int]) -> tuple[int, int]:
    """Total discharge and charge the fleet can absorb this slot: ``(A_min, A_max)``."""
    lo, hi = fleet_bounds(fleet, socs)
    return sum(lo), sum(hi)


def served_regulation(r: int, a_min: int, a_max: int) -> int:
    if a_min > a_max:
        raise DomainError(f"empty limit interval [{a_min}, {a_max}]")
    return min(max(r, a_min), a_max)


def _compositions(lo: tuple[int, ...], hi: tuple[int, ...], total: int) -> list[ActionVector]:
    n = len(lo)
    # suffix sums of bounds for components i+1..n-1
    suf_lo = [0] * (n + 1)
    suf_hi = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suf_lo[i] = suf_lo[i + 1] + lo[i]
        suf_hi[i] = suf_hi[i + 1] + hi[i]

    out: list[ActionVector] = []
    prefix: list[int] = []

    def rec(i: int, remaining: int) -> None:
        if i == n - 1:
            if lo[i] <= remaining <= hi[i]:
                out.append(tuple(prefix) + (remaining,))
            return
        first = max(lo[i], remaining - suf_hi[i + 1])
        last = min(hi[i], remaining - suf_lo[i + 1])
        for v in range(first, last + 1):
            prefix.append(v)
            rec(i + 1, remaining - v)
            prefix.pop()

    rec(0, total)
    return out


@lru_cache(maxsize=1 << 16)
def _enumerate_cached(fleet: FleetConfig, socs: SocVector, served: int) -> tuple[ActionVector, ...]:
    lo, hi = fleet_bounds(fleet, socs)
    if not sum(lo) <= served <= sum(hi):
        raise InfeasibleActionError(f"served regulation {served} outside [{sum(lo)}, {sum(hi)}]")
    return tuple(_compositions(lo, hi, served))


def enumerate_actions(fleet: FleetConfig, socs: Sequence[int], served: int) -> tuple[ActionVector, ...]:
    """All integer action vectors within per-battery bounds summing to ``served``.

    Returned in lexicographic order, which fixes argmax tie-breaking downstream.
    """
    return _enumerate_cached(fleet, tuple(int(s) for s in socs), int(served))


def check_action(fleet: FleetConfig, socs: Sequence[int], a: Sequence[int]) -> None:
    if len(a) != fleet.n:
        raise InfeasibleActionError(f"action has {len(a)} components, fleet has {fleet.n}")
    for i, (u, s, ai) in enumerate(zip(fleet.units, socs, a)):
        lo, hi = per_battery_bounds(u, s)
        if not lo <= ai <= hi:
            raise InfeasibleActionError(f"battery {i}: action {ai} outside [{lo}, {hi}] at SoC {s}")


def apply_action(fleet: FleetConfig, socs: Sequence[int], a: Sequence[int]) -> SocVector:
    check_action(fleet, socs, a)
    return tuple(s + ai for s, ai in zip(socs, a))


def count_state_action_pairs(fleet: FleetConfig, alphabet=None) -> int:
    """Size of the SoC grid times the unconstrained per-battery action box.

    This is ``prod(B_i + 1) * prod(c_i + d_i + 1)``, the figure used to size
    tabular problems. It does not depend on the regulation alphabet; see
    :func:`count_feasible_pairs` for the exact number of admissible pairs.
    """
    return prod(u.capacity + 1 for u in fleet.units) * prod(
        u.max_charge + u.max_discharge + 1 for u in fleet.units
    )


def count_feasible_pairs(fleet: FleetConfig, alphabet) -> int:
    """Sum over all (SoC configuration, regulation value) of the feasible action count.

    Iterates the full SoC product space, so only practical for small fleets.
    """
    total = 0
    for socs in itertools.product(*(range(u.capacity + 1) for u in fleet.units)):
        lo, hi = fleet_bounds(fleet, socs)
        a_min, a_max = sum(lo), sum(hi)
        for r in alphabet:
            total += len(_compositions(lo, hi, served_regulation(r, a_min, a_max)))
    return total
