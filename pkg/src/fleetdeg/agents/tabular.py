"""Tabular Q-learning with visit-count (Robbins-Monro) step sizes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from ..errors import ValidationError
from ..fleet import count_state_action_pairs
from .exploration import epsilon_at


@dataclass
class TabularQ:
    gamma: float
    base_alpha: float = 1e-4
    q: dict = field(default_factory=lambda: defaultdict(float))
    visits: dict = field(default_factory=lambda: defaultdict(int))

    def value(self, s: Hashable, a: Hashable) -> float:
        return self.q.get((s, a), 0.0)

    def best(self, s: Hashable, actions: Sequence) -> int:
        """Index of the highest-valued action, earliest on ties."""
        vals = [self.q.get((s, a), 0.0) for a in actions]
        return int(np.argmax(vals))


def q_update(table: TabularQ, s, a, reward: float, s_next, feasible_next: Sequence) -> float:
    """One Q-learning step with ``alpha = base_alpha / N(s, a)``; returns the TD error."""
    key = (s, a)
    table.visits[key] += 1
    alpha = table.base_alpha / table.visits[key]
    nxt = max((table.q.get((s_next, b), 0.0) for b in feasible_next), default=0.0)
    td = reward + table.gamma * nxt - table.q[key]
    table.q[key] += alpha * td
    return td


class TabularAgent:
    name = "tabular"
    learns = True

    def __init__(self, gamma: float, seed: int, base_alpha: float = 1e-4, epsilon0: float = 0.6,
                 max_pairs: int = 10**6, fleet=None):
        if fleet is not None and count_state_action_pairs(fleet) > max_pairs:
            raise ValidationError(
                f"{count_state_action_pairs(fleet)} state-action pairs exceed the tabular cap {max_pairs}"
            )
        self.table = TabularQ(gamma, base_alpha)
        self.epsilon0 = epsilon0
        self.rng = np.random.default_rng(seed)

    def act(self, env, served, actions, t, explore=False):
        if len(actions) == 1:
            return actions[0]
        if explore and self.rng.random() < epsilon_at(t, self.epsilon0):
            return actions[int(self.rng.integers(len(actions)))]
        return actions[self.table.best(env.state.key(), actions)]

    def train(self, env, total_steps: int, start_step: int = 0) -> dict:
        rewards = []
        truncated = False
        for t in range(total_steps):
            served, actions = env.feasible_actions()
            a = self.act(env, served, actions, start_step + t, explore=True)
            s = env.state.key()
            out = env.step(a)
            feasible_next = () if out.done else env.feasible_actions()[1]
            q_update(self.table, s, a, out.reward, env.state.key(), feasible_next)
            rewards.append(out.reward)
            if out.done:
                truncated = t + 1 < total_steps
                break
        return {"steps": len(rewards), "reward": float(np.sum(rewards)), "truncated": truncated}
