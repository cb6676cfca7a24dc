"""Linear TD learning on extreme-learning-machine random features.

The value of a state-action pair is ``w . phi(x)`` where ``x`` stacks the
normalized SoCs, regulation request, candidate action, its one-step reward and
the switching points, and ``phi`` is a frozen random hidden layer. Only ``w`` is
learned, by minibatch semi-gradient Q-learning from a replay buffer.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from .exploration import epsilon_at


def silu(z):
    return z / (1.0 + np.exp(-z))


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


ACTIVATIONS = {"silu": silu, "relu": relu, "sigmoid": sigmoid}


@dataclass(frozen=True)
class Normalizer:
    """Divisors that bring every ELM input component to roughly [-1, 1]."""

    capacity_scales: tuple[float, ...]
    rate_scales: tuple[float, ...]
    regulation_scale: float
    reward_scale: float

    def __post_init__(self):
        scales = (*self.capacity_scales, *self.rate_scales, self.regulation_scale, self.reward_scale)
        if any(not s > 0 for s in scales):
            raise ValidationError("normalizer scales must be positive")

    @classmethod
    def for_env(cls, config) -> "Normalizer":
        fleet = config.fleet
        n = fleet.n
        return cls(
            capacity_scales=tuple(float(u.capacity) for u in fleet.units),
            rate_scales=tuple(float(max(u.max_charge, u.max_discharge)) for u in fleet.units),
            regulation_scale=float(max(config.alphabet.max_magnitude, 1)),
            reward_scale=config.alpha_d * math.expm1(config.beta) * n,
        )

    @property
    def n(self) -> int:
        return len(self.capacity_scales)

    @property
    def p(self) -> int:
        return 3 * self.n + 2


def build_inputs(socs, regulation, actions, rewards, sps, norm: Normalizer) -> tuple[np.ndarray, int]:
    """ELM inputs for every candidate action; returns ``(X, n_reward_clamped)``.

    Row layout: ``[soc/B, r/r_scale, a/rate, reward/reward_scale, sp/B]``.
    """
    A = np.asarray(actions, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    n = norm.n
    if A.shape[1] != n or len(socs) != n or len(sps) != n:
        raise ValidationError(f"dimension mismatch: fleet of {n} batteries")
    cap = np.asarray(norm.capacity_scales)
    k = A.shape[0]
    X = np.empty((k, 3 * n + 2))
    X[:, :n] = np.asarray(socs, dtype=float) / cap
    X[:, n] = regulation / norm.regulation_scale
    X[:, n + 1:2 * n + 1] = A / np.asarray(norm.rate_scales)
    rw = np.asarray(rewards, dtype=float).reshape(k) / norm.reward_scale
    clamped = int(np.count_nonzero(np.abs(rw) > 1.0))
    X[:, 2 * n + 1] = np.clip(rw, -1.0, 1.0)
    X[:, 2 * n + 2:] = np.asarray(sps, dtype=float) / cap
    return X, clamped


def build_input(socs, regulation, a, one_step_reward, sps, norm: Normalizer) -> np.ndarray:
    return build_inputs(socs, regulation, [a], [one_step_reward], sps, norm)[0][0]


@dataclass(frozen=True)
class ElmFeatureMap:
    W: np.ndarray
    b_tilde: np.ndarray
    activation: str = "silu"
    seed: int = 0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        W = np.array(self.W, dtype=float)
        b = np.array(self.b_tilde, dtype=float)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise ValidationError("W must be d x p and b_tilde length d")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b_tilde", b)

    @classmethod
    def random(cls, d: int, p: int, seed: int, activation: str = "silu") -> "ElmFeatureMap":
        """Input weights and biases i.i.d. uniform on [-1, 1]."""
        rng = np.random.default_rng(seed)
        W = rng.uniform(-1.0, 1.0, size=(d, p))
        b = rng.uniform(-1.0, 1.0, size=d)
        return cls(W, b, activation, seed)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return ACTIVATIONS[self.activation](X @ self.W.T + self.b_tilde)


def elm_features(x: np.ndarray, fmap: ElmFeatureMap) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fmap.p:
        raise ValidationError(f"input has {x.shape[-1]} components, map expects {fmap.p}")
    return fmap(x)


def q_hat(w: np.ndarray, phi: np.ndarray) -> float:
    if np.shape(w) != np.shape(phi):
        raise ValidationError(f"weight shape {np.shape(w)} != feature shape {np.shape(phi)}")
    return float(np.dot(w, phi))


@dataclass
class Transition:
    phi: np.ndarray
    reward: float
    next_inputs: np.ndarray | None  # candidate inputs at s'; None when terminal
    key: tuple


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValidationError("buffer capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def push(self, tr: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def sample(self, size: int, rng: np.random.Generator) -> list[Transition]:
        idx = rng.choice(len(self._items), size=size, replace=False)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]


def td_minibatch_update(agent: "ElmAgent", batch: Sequence[Transition], alpha_t: float) -> np.ndarray:
    """Averaged semi-gradient step; every term uses the pre-update weights.

    Returns the TD errors of the batch.
    """
    w = agent.w
    Phi = np.stack([tr.phi for tr in batch])
    q = Phi @ w
    rewards = np.array([tr.reward for tr in batch])
    next_max = np.zeros(len(batch))
    live = [i for i, tr in enumerate(batch) if tr.next_inputs is not None]
    if live:
        blocks = [batch[i].next_inputs for i in live]
        offsets = np.cumsum([0] + [len(b) for b in blocks[:-1]])
        qn = agent.features(np.concatenate(blocks)) @ w
        next_max[live] = np.maximum.reduceat(qn, offsets)
    delta = rewards + agent.gamma * next_max - q
    agent.w = w + (alpha_t / len(batch)) * (Phi.T @ delta)
    return delta


class ElmAgent:
    name = "elm"
    learns = True

    def __init__(
        self,
        features: ElmFeatureMap,
        normalizer: Normalizer,
        gamma: float,
        seed: int,
        base_alpha: float = 1e-4,
        batch_size: int = 128,
        update_period: int = 8,
        buffer_capacity: int = 2000,
        epsilon0: float = 0.6,
        lr_schedule: str = "visits",
        kappa: float = 1e-3,
    ):
        if features.p != normalizer.p:
            raise ValidationError(f"feature map expects p={features.p}, fleet gives p={normalizer.p}")
        if batch_size > buffer_capacity:
            raise ValidationError("batch_size cannot exceed buffer capacity")
        if lr_schedule not in ("visits", "global"):
            raise ValidationError(f"unknown learning-rate schedule {lr_schedule!r}")
        self.features = features
        self.norm = normalizer
        self.gamma = gamma
        self.base_alpha = base_alpha
        self.batch_size = batch_size
        self.update_period = update_period
        self.epsilon0 = epsilon0
        self.lr_schedule = lr_schedule
        self.kappa = kappa
        self.buffer = ReplayBuffer(buffer_capacity)
        self.w = np.zeros(features.d)
        self.visits: defaultdict = defaultdict(int)
        self.rng = np.random.default_rng(seed)
        self.updates = 0
        self.reward_clamps = 0

    def candidate_inputs(self, env, actions) -> np.ndarray:
        st = env.state
        X, clamped = build_inputs(
            st.socs, st.regulation, actions, env.rewards_for(actions), st.switching_points, self.norm
        )
        self.reward_clamps += clamped
        return X

    def _choose(self, q: np.ndarray, t: int, explore: bool) -> int:
        k = len(q)
        if k == 1:
            return 0
        if explore and self.rng.random() < epsilon_at(t, self.epsilon0):
            return int(self.rng.integers(k))
        return int(np.argmax(q))

    def act(self, env, served, actions, t, explore=False):
        X = self.candidate_inputs(env, actions)
        return actions[self._choose(self.features(X) @ self.w, t, explore)]

    def learning_rate(self, batch: Sequence[Transition]) -> float:
        if self.lr_schedule == "global":
            return self.base_alpha / (1.0 + self.kappa * self.updates)
        mean_visits = sum(self.visits[tr.key] for tr in batch) / len(batch)
        return self.base_alpha / max(mean_visits, 1.0)

    def update(self) -> None:
        batch = self.buffer.sample(self.batch_size, self.rng)
        td_minibatch_update(self, batch, self.learning_rate(batch))
        self.updates += 1

    def train(self, env, total_steps: int, log_window: int = 1000, start_step: int = 0) -> dict:
        """Epsilon-greedy interaction from the env's current state for ``total_steps`` steps.

        ``start_step`` offsets the exploration clock so it keeps decaying across episodes.
        """
        window_rewards: list[float] = []
        acc = 0.0
        steps = 0
        truncated = False
        served, actions = env.feasible_actions()
        X = self.candidate_inputs(env, actions)
        Phi = self.features(X)
        for t in range(total_steps):
            i = self._choose(Phi @ self.w, start_step + t, explore=True)
            a = actions[i]
            key = (env.state.key(), a)
            self.visits[key] += 1
            out = env.step(a)
            steps += 1
            acc += out.reward
            if out.done:
                self.buffer.push(Transition(Phi[i], out.reward, None, key))
            else:
                served, actions = env.feasible_actions()
                X_next = self.candidate_inputs(env, actions)
                self.buffer.push(Transition(Phi[i], out.reward, X_next, key))
                X, Phi = X_next, self.features(X_next)
            if steps % self.update_period == 0 and len(self.buffer) >= self.batch_size:
                self.update()
            if steps % log_window == 0:
                window_rewards.append(acc)
                acc = 0.0
            if out.done:
                truncated = steps < total_steps
                break
        if steps % log_window:
            window_rewards.append(acc)
        return {
            "steps": steps,
            "updates": self.updates,
            "window_rewards": window_rewards,
            "truncated": truncated,
            "reward_clamps": self.reward_clamps,
        }

    def save(self, path) -> None:
        save_checkpoint(self, path)


def select_action(agent: ElmAgent, env, feasible, t: int, explore: bool = True):
    return agent.act(env, None, feasible, t, explore)


def train(env, agent, total_steps: int) -> dict:
    return agent.train(env, total_steps)


def save_checkpoint(agent: ElmAgent, path) -> None:
    fm, nm = agent.features, agent.norm
    doc = {
        "seed": fm.seed,
        "d": fm.d,
        "p": fm.p,
        "activation": fm.activation,
        "W": fm.W.tolist(),
        "b_tilde": fm.b_tilde.tolist(),
        "w": agent.w.tolist(),
        "gamma": agent.gamma,
        "normalizer": {
            "capacity_scales": list(nm.capacity_scales),
            "rate_scales": list(nm.rate_scales),
            "regulation_scale": nm.regulation_scale,
            "reward_scale": nm.reward_scale,
        },
    }
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_checkpoint(path, seed: int = 0, **agent_kwargs) -> ElmAgent:
    try:
        doc = json.loads(Path(path).read_text())
        fm = ElmFeatureMap(np.array(doc["W"]), np.array(doc["b_tilde"]), doc["activation"], doc["seed"])
        nd = doc["normalizer"]
        norm = Normalizer(
            tuple(nd["capacity_scales"]), tuple(nd["rate_scales"]),
            nd["regulation_scale"], nd["reward_scale"],
        )
        gamma = doc["gamma"]
        w = np.array(doc["w"], dtype=float)
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed checkpoint ({exc})") from None
    if fm.d != doc["d"] or fm.p != doc["p"] or w.shape != (fm.d,):
        raise ValidationError(f"{path}: inconsistent checkpoint dimensions")
    agent = ElmAgent(fm, norm, gamma, seed, **agent_kwargs)
    agent.w = w
    return agent
