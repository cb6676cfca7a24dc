"""Fleet dispatch MDP: SoC dynamics, exogenous regulation and the proxy reward."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .cycles import CycleRecord, TurningPointTracker
from .errors import EpisodeEnd, InfeasibleActionError, ValidationError
from .fleet import (
    ActionVector,
    FleetConfig,
    aggregate_limits,
    apply_action,
    enumerate_actions,
    served_regulation,
)
from .signal import MarkovSignalModel, RegulationAlphabet, TraceSignal, alphabet_of, markov_next


@dataclass(frozen=True)
class EnvConfig:
    """Static description of one dispatch problem.

    ``initial_soc`` is ``"half"``, ``"uniform"`` or an explicit SoC vector.
    With ``normalize_deviation`` the reward measures SoC deviations as a
    fraction of each battery's capacity instead of in raw energy units.
    """

    fleet: FleetConfig
    signal: Union[MarkovSignalModel, TraceSignal]
    alpha_d: float = 0.01
    beta: float = 1.0
    gamma: float = 0.95
    initial_soc: Union[str, tuple] = "half"
    normalize_deviation: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.alpha_d <= 0 or self.beta <= 0:
            raise ValidationError("alpha_d and beta must be positive")
        if isinstance(self.initial_soc, str):
            if self.initial_soc not in ("half", "uniform"):
                raise ValidationError(f"unknown initial SoC policy {self.initial_soc!r}")
        else:
            try:
                socs = self.fleet.validate_socs(self.initial_soc)
            except ValueError as exc:
                raise ValidationError(f"initial SoC: {exc}") from None
            object.__setattr__(self, "initial_soc", socs)

    @property
    def alphabet(self) -> RegulationAlphabet:
        if isinstance(self.signal, TraceSignal):
            return alphabet_of(self.signal)
        return self.signal.alphabet

    @property
    def replay(self) -> bool:
        return isinstance(self.signal, TraceSignal)

    @property
    def deviation_scales(self) -> np.ndarray:
        if self.normalize_deviation:
            return np.array(self.fleet.capacities, dtype=float)
        return np.ones(self.fleet.n)


@dataclass
class EnvState:
    socs: tuple[int, ...]
    regulation: int
    trackers: list[TurningPointTracker]
    t: int = 0
    exhausted: bool = False

    @property
    def switching_points(self) -> tuple[int, ...]:
        return tuple(tr.switching_point for tr in self.trackers)

    def key(self) -> tuple:
        return self.socs + (self.regulation,)


@dataclass
class StepOutcome:
    reward: float
    per_battery_rewards: tuple[float, ...]
    served: int
    completed_cycles: list[CycleRecord]
    next_state: EnvState
    clipped: bool = False
    done: bool = False


def proxy_reward(
    socs: Sequence[int],
    sps: Sequence[int],
    a: Sequence[int],
    alpha_d: float,
    beta: float,
    scales=None,
) -> tuple[float, tuple[float, ...]]:
    """One-step reward penalizing growth of each battery's distance to its switching point.

    Returns the fleet total and the per-battery terms
    ``-alpha_d * (exp(beta*|soc+a-sp|/scale) - exp(beta*|soc-sp|/scale))``.
    """
    s = np.asarray(socs, dtype=float)
    sp = np.asarray(sps, dtype=float)
    act = np.asarray(a, dtype=float)
    sc = 1.0 if scales is None else np.asarray(scales, dtype=float)
    per = -alpha_d * (np.exp(beta * np.abs(s + act - sp) / sc) - np.exp(beta * np.abs(s - sp) / sc))
    per = tuple(float(v) for v in per)
    return sum(per), per


def proxy_rewards(socs, sps, actions: np.ndarray, alpha_d: float, beta: float, scales=None) -> np.ndarray:
    """Vectorized fleet reward for each row of ``actions`` (shape ``k x N``)."""
    s = np.asarray(socs, dtype=float)
    sp = np.asarray(sps, dtype=float)
    sc = 1.0 if scales is None else np.asarray(scales, dtype=float)
    before = np.exp(beta * np.abs(s - sp) / sc)
    after = np.exp(beta * np.abs(s + np.asarray(actions, dtype=float) - sp) / sc)
    per = -alpha_d * (after - before)
    total = per[:, 0].copy()
    for i in range(1, per.shape[1]):
        total += per[:, i]
    return total


def feasible_actions(state: EnvState, fleet: FleetConfig) -> tuple[int, tuple[ActionVector, ...]]:
    a_min, a_max = aggregate_limits(fleet, state.socs)
    served = served_regulation(state.regulation, a_min, a_max)
    return served, enumerate_actions(fleet, state.socs, served)


class FleetEnv:
    """Stateful simulator; one instance per run.

    All randomness (initial SoC draw and Markov regulation steps) comes from the
    generator seeded in :meth:`reset`.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.fleet = config.fleet
        self.state: EnvState | None = None
        self.rng: np.random.Generator | None = None
        self._scales = config.deviation_scales
        self._scale_arg = self._scales if config.normalize_deviation else None

    def reset(self, seed: int) -> EnvState:
        cfg = self.config
        self.rng = np.random.default_rng(seed)
        if cfg.initial_soc == "half":
            socs = self.fleet.half_capacity()
        elif cfg.initial_soc == "uniform":
            socs = tuple(int(self.rng.integers(u.capacity + 1)) for u in self.fleet.units)
        else:
            socs = tuple(cfg.initial_soc)
        if cfg.replay:
            r0 = cfg.signal.samples[0]
        else:
            r0 = cfg.signal.initial(self.rng)
        trackers = [TurningPointTracker(s, battery=i) for i, s in enumerate(socs)]
        self.state = EnvState(socs, r0, trackers, 0)
        return self.state

    def feasible_actions(self) -> tuple[int, tuple[ActionVector, ...]]:
        return feasible_actions(self.state, self.fleet)

    def reward(self, a: Sequence[int]) -> tuple[float, tuple[float, ...]]:
        st = self.state
        return proxy_reward(
            st.socs, st.switching_points, a, self.config.alpha_d, self.config.beta, self._scale_arg
        )

    def rewards_for(self, actions) -> np.ndarray:
        st = self.state
        return proxy_rewards(
            st.socs, st.switching_points, np.asarray(actions), self.config.alpha_d,
            self.config.beta, self._scale_arg,
        )

    def step(self, a: Sequence[int]) -> StepOutcome:
        st = self.state
        if st is None:
            raise RuntimeError("call reset() before step()")
        if st.exhausted:
            raise EpisodeEnd(f"trace exhausted after {st.t} steps")
        cfg = self.config
        a = tuple(int(v) for v in a)
        served, _ = self.feasible_actions()
        if sum(a) != served:
            raise InfeasibleActionError(f"action {a} sums to {sum(a)}, served regulation is {served}")
        # reward uses the switching points in force before this step
        total, per = self.reward(a)
        new_socs = apply_action(self.fleet, st.socs, a)
        completed: list[CycleRecord] = []
        for tr, s, u in zip(st.trackers, new_socs, self.fleet.units):
            completed.extend(tr.push(s, st.t + 1, u.capacity))

        done = False
        if cfg.replay:
            nxt = st.t + 1
            if nxt < len(cfg.signal.samples):
                regulation = cfg.signal.samples[nxt]
            else:
                regulation, done = st.regulation, True
        else:
            regulation = markov_next(cfg.signal, st.regulation, self.rng)

        clipped = served != st.regulation
        st.socs = new_socs
        st.regulation = regulation
        st.t += 1
        st.exhausted = done
        return StepOutcome(total, per, served, completed, st, clipped, done)
