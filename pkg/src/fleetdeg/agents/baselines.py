"""Reward-agnostic and myopic dispatch baselines."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..env import proxy_rewards
from ..errors import InfeasibleActionError
from ..fleet import ActionVector, FleetConfig, fleet_bounds


def naive_allocate(
    fleet: FleetConfig,
    socs: Sequence[int],
    served: int,
    rng: np.random.Generator,
) -> ActionVector:
    """Split ``served`` in proportion to capacity, then fix rounding one unit at a time.

    Each battery first gets ``floor(B_i / sum(B) * served)`` clipped into its
    bounds. The leftover is moved one unit at a time to a battery drawn
    uniformly among those that can still take a unit in that direction.
    """
    lo, hi = fleet_bounds(fleet, socs)
    if not sum(lo) <= served <= sum(hi):
        raise InfeasibleActionError(f"served regulation {served} outside [{sum(lo)}, {sum(hi)}]")
    total_cap = sum(fleet.capacities)
    a = [min(max((b * served) // total_cap, l), h) for b, l, h in zip(fleet.capacities, lo, hi)]
    gap = served - sum(a)
    step = 1 if gap > 0 else -1
    for _ in range(abs(gap)):
        open_ = [i for i in range(fleet.n) if lo[i] <= a[i] + step <= hi[i]]
        a[open_[int(rng.integers(len(open_)))]] += step
    return tuple(a)


def greedy_select(
    actions: Sequence[ActionVector],
    socs: Sequence[int],
    sps: Sequence[int],
    alpha_d: float,
    beta: float,
    scales=None,
) -> ActionVector:
    """Action with the best one-step proxy reward; ties go to the earliest action."""
    if len(actions) == 1:
        return actions[0]
    rewards = proxy_rewards(socs, sps, np.asarray(actions), alpha_d, beta, scales)
    return actions[int(np.argmax(rewards))]


class NaivePolicy:
    name = "naive"
    learns = False

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def act(self, env, served, actions, t, explore=False):
        return naive_allocate(env.fleet, env.state.socs, served, self.rng)


class GreedyPolicy:
    name = "greedy"
    learns = False

    def act(self, env, served, actions, t, explore=False):
        if len(actions) == 1:
            return actions[0]
        return actions[int(np.argmax(env.rewards_for(actions)))]
