"""Training, greedy evaluation and offline degradation scoring of dispatch policies."""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..agents import ElmAgent, ElmFeatureMap, GreedyPolicy, NaivePolicy, Normalizer, TabularAgent
from ..cycles import CycleLedger, dod_histogram, rainflow_offline, total_degradation
from ..env import FleetEnv
from ..errors import ValidationError
from .config import AgentSpec, ExperimentConfig

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    agent: str
    accumulated_reward: float
    per_battery_degradation: list[float]
    cycle_counts: list[int]
    weighted_cycle_counts: list[float]
    dod_histogram: list[np.ndarray]
    bin_edges: tuple[float, ...]
    clipping_events: int
    steps: int
    regulation_checksum: str
    truncated: bool = False
    wall_time: float = 0.0
    train_log: dict | None = None
    ledgers: list[CycleLedger] = field(default_factory=list, repr=False)
    soc_trajectory: np.ndarray | None = field(default=None, repr=False)
    regulation: np.ndarray | None = field(default=None, repr=False)
    served: np.ndarray | None = field(default=None, repr=False)

    def high_dod_mass(self, threshold: float = 0.5) -> float:
        """Histogram mass in bins lying entirely above ``threshold``, summed over batteries."""
        lo = np.asarray(self.bin_edges[:-1])
        return float(sum(h[lo >= threshold].sum() for h in self.dod_histogram))


def make_agent(spec: AgentSpec, config: ExperimentConfig):
    env_cfg = config.env_config()
    seeds = config.seeds
    if spec.kind == "naive":
        return NaivePolicy(seeds.naive)
    if spec.kind == "greedy":
        return GreedyPolicy()
    if spec.kind == "tabular":
        return TabularAgent(
            config.gamma, seeds.exploration, spec.base_alpha, spec.epsilon0, spec.max_pairs, config.fleet
        )
    norm = Normalizer.for_env(env_cfg)
    fmap = ElmFeatureMap.random(spec.d, norm.p, seeds.elm, spec.activation)
    return ElmAgent(
        fmap, norm, config.gamma, seeds.exploration,
        base_alpha=spec.base_alpha,
        batch_size=spec.batch_size,
        update_period=spec.update_period,
        buffer_capacity=spec.buffer_capacity,
        epsilon0=spec.epsilon0,
        lr_schedule=spec.lr_schedule,
        kappa=spec.kappa,
    )


def train_agent(config: ExperimentConfig, agent) -> dict | None:
    """Train on the training realization; episode ``k`` resets with seed ``seeds.signal + k``."""
    if not getattr(agent, "learns", False):
        return None
    env = FleetEnv(config.env_config())
    per_episode = config.training_steps // config.episodes
    done = 0
    summary: dict = {"steps": 0, "truncated": False}
    for k in range(config.episodes):
        env.reset(config.seeds.signal + k)
        steps = per_episode if k < config.episodes - 1 else config.training_steps - done
        info = agent.train(env, steps, start_step=done)
        done += info["steps"]
        for key, value in info.items():
            if key == "window_rewards":
                summary.setdefault(key, []).extend(value)
            elif key in ("steps", "reward"):
                summary[key] = summary.get(key, 0) + value
            elif key == "truncated":
                summary[key] = summary[key] or value
            else:
                summary[key] = value
    summary["episodes"] = config.episodes
    return summary


def evaluate(config: ExperimentConfig, agent, label: str | None = None) -> RunReport:
    """Roll out ``agent`` greedily and score the SoC trajectories by rainflow counting."""
    start = time.perf_counter()
    env = FleetEnv(config.env_config())
    seed = config.seeds.signal if config.same_realization else config.seeds.eval_signal
    state = env.reset(seed)
    horizon = config.horizon
    if config.replay:
        horizon = min(horizon, len(config.signal.samples))
    n = config.fleet.n
    socs = np.empty((horizon + 1, n), dtype=np.int64)
    regulation = np.empty(horizon, dtype=np.int64)
    served_log = np.empty(horizon, dtype=np.int64)
    socs[0] = state.socs
    total = 0.0
    clipped = 0
    steps = 0
    for t in range(horizon):
        regulation[t] = state.regulation
        served, actions = env.feasible_actions()
        a = agent.act(env, served, actions, t, explore=False)
        out = env.step(a)
        total += out.reward
        clipped += out.clipped
        served_log[t] = out.served
        socs[t + 1] = out.next_state.socs
        steps += 1
        if out.done:
            break
    truncated = config.replay and steps < config.horizon
    socs, regulation, served_log = socs[: steps + 1], regulation[:steps], served_log[:steps]

    ledgers, degradation, counts, weighted, hists = [], [], [], [], []
    for i, unit in enumerate(config.fleet.units):
        ledger = rainflow_offline(socs[:, i], unit.capacity, i, config.residual_half_weight)
        ledgers.append(ledger)
        degradation.append(total_degradation(ledger, config.stress))
        counts.append(ledger.full_count())
        weighted.append(ledger.weighted_count())
        hists.append(dod_histogram(ledger, config.bin_edges)[0])

    return RunReport(
        agent=label or getattr(agent, "name", type(agent).__name__),
        accumulated_reward=total,
        per_battery_degradation=degradation,
        cycle_counts=counts,
        weighted_cycle_counts=weighted,
        dod_histogram=hists,
        bin_edges=tuple(config.bin_edges),
        clipping_events=int(clipped),
        steps=steps,
        regulation_checksum=hashlib.sha256(regulation.astype("<i8").tobytes()).hexdigest()[:16],
        truncated=bool(truncated),
        wall_time=time.perf_counter() - start,
        ledgers=ledgers,
        soc_trajectory=socs,
        regulation=regulation,
        served=served_log,
    )


def run_experiment(config: ExperimentConfig, spec: AgentSpec | None = None, agent=None) -> RunReport:
    """Train the configured agent (if it learns), then evaluate it greedily.

    A pre-built ``agent`` (e.g. loaded from a checkpoint) skips training.
    """
    spec = spec or config.agent
    start = time.perf_counter()
    train_log = None
    if agent is None:
        agent = make_agent(spec, config)
        train_log = train_agent(config, agent)
        if train_log is not None:
            log.info("%s trained for %d steps", spec.label, train_log["steps"])
    report = evaluate(config, agent, spec.label)
    report.train_log = train_log
    report.truncated = report.truncated or bool(train_log and train_log.get("truncated"))
    report.wall_time = time.perf_counter() - start
    return report


def _run_one(args):
    config, spec = args
    return run_experiment(config, spec)


def compare_policies(config: ExperimentConfig, specs: Sequence[AgentSpec], jobs: int = 1) -> list[RunReport]:
    """Evaluate several agents on the same regulation realization.

    Every run derives its randomness from the config seeds alone, so a row
    does not depend on which other agents are listed or in what order.
    """
    if len(specs) < 2:
        raise ValidationError("compare needs at least two agent specs")
    work = [(config, s) for s in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, work))
    return [_run_one(w) for w in work]


def _fmt(x: float) -> str:
    return repr(float(x))


def report_rows(reports: Sequence[RunReport]) -> tuple[list[str], list[list[str]]]:
    n = len(reports[0].per_battery_degradation)
    header = (
        ["agent", "reward"]
        + [f"D_{i + 1}" for i in range(n)]
        + ["cycle_count"]
        + [f"cycles_{i + 1}" for i in range(n)]
        + ["clipping_events", "steps", "truncated", "checksum"]
    )
    rows = []
    for r in reports:
        rows.append(
            [r.agent, _fmt(r.accumulated_reward)]
            + [_fmt(d) for d in r.per_battery_degradation]
            + [str(sum(r.cycle_counts))]
            + [str(c) for c in r.cycle_counts]
            + [str(r.clipping_events), str(r.steps), str(int(r.truncated)), r.regulation_checksum]
        )
    return header, rows


def write_report_csv(reports: Sequence[RunReport], path) -> None:
    header, rows = report_rows(reports)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_histogram_csv(report: RunReport, path) -> None:
    """Per-battery DoD histogram rows ``battery,bin_lo,bin_hi,count``."""
    edges = report.bin_edges
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["battery", "bin_lo", "bin_hi", "count"])
        for i, hist in enumerate(report.dod_histogram):
            for lo, hi, c in zip(edges[:-1], edges[1:], hist):
                w.writerow([i + 1, _fmt(lo), _fmt(hi), _fmt(c)])


def write_trajectory_csv(report: RunReport, path) -> None:
    """SoC trajectory ``t,soc_1..soc_N,r,served``; the final row has no request."""
    socs = report.soc_trajectory
    n = socs.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"soc_{i + 1}" for i in range(n)] + ["r", "served"])
        for t in range(len(socs)):
            tail = [str(report.regulation[t]), str(report.served[t])] if t < len(report.regulation) else ["", ""]
            w.writerow([t] + [str(v) for v in socs[t]] + tail)


def read_trajectory_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = [c for c in reader.fieldnames if c.startswith("soc_")]
        return np.array([[int(row[c]) for c in cols] for row in reader], dtype=np.int64)


def degradation_from_trajectory(socs: np.ndarray, config: ExperimentConfig) -> list[float]:
    return [
        total_degradation(
            rainflow_offline(socs[:, i], u.capacity, i, config.residual_half_weight), config.stress
        )
        for i, u in enumerate(config.fleet.units)
    ]


def with_agent(config: ExperimentConfig, spec: AgentSpec) -> ExperimentConfig:
    return replace(config, agent=spec)
