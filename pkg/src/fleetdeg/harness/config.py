"""Experiment configuration: an INI file with one section per concern.

Example::

    [fleet]
    capacity = 25, 25
    max_charge = 2, 3
    max_discharge = 2, 3

    [signal]
    source = markov
    alphabet = -4, -1, 1, 5

    [agent]
    kind = elm
    d = 50

    [run]
    horizon = 100000

    [seeds]
    signal = 1
    eval_signal = 2
    elm = 3
    exploration = 4
    naive = 5

Relative file paths are resolved against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

from ..cycles import ExponentialStress, RationalStress, default_bin_edges
from ..env import EnvConfig
from ..errors import ValidationError
from ..fleet import FleetConfig
from ..signal import (
    MarkovSignalModel,
    RegulationAlphabet,
    TraceSignal,
    fit_transition_matrix,
    ingest_trace,
    load_matrix,
    read_trace_csv,
)

TOY_ALPHABET = (-4, -1, 1, 5)
AGENT_KINDS = ("naive", "greedy", "tabular", "elm")
SEED_FIELDS = ("signal", "eval_signal", "elm", "exploration", "naive")


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    d: int = 50
    activation: str = "silu"
    batch_size: int = 128
    update_period: int = 8
    buffer_capacity: int = 2000
    epsilon0: float = 0.6
    base_alpha: float = 1e-4
    lr_schedule: str = "visits"
    kappa: float = 1e-3
    max_pairs: int = 10**6

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ValidationError(f"unknown agent kind {self.kind!r}; expected one of {AGENT_KINDS}")

    @property
    def label(self) -> str:
        return self.kind if self.kind != "elm" else f"elm{self.d}"

    @classmethod
    def parse(cls, text: str, base: "AgentSpec | None" = None) -> "AgentSpec":
        """Parse ``kind`` or ``kind:key=value,key=value`` (e.g. ``elm:d=10``)."""
        kind, _, rest = text.partition(":")
        spec = replace(base, kind=kind) if base is not None else cls(kind)
        overrides = {}
        for item in filter(None, rest.split(",")):
            key, _, value = item.partition("=")
            overrides[key.strip()] = value.strip()
        return replace(spec, **_coerce_agent_fields(overrides))


_AGENT_FIELD_TYPES = {
    "kind": str, "activation": str, "lr_schedule": str,
    "d": int, "batch_size": int, "update_period": int, "buffer_capacity": int, "max_pairs": int,
    "epsilon0": float, "base_alpha": float, "kappa": float,
}


def _coerce_agent_fields(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        typ = _AGENT_FIELD_TYPES.get(key)
        if typ is None:
            raise ValidationError(f"unknown agent option {key!r}")
        value = str(value).strip()
        try:
            if typ is int:
                f = float(value)  # accepts 1e6
                if f != int(f):
                    raise ValueError
                out[key] = int(f)
            else:
                out[key] = typ(value)
        except ValueError:
            raise ValidationError(f"agent option {key}={value!r} is not a valid {typ.__name__}") from None
    return out


@dataclass(frozen=True)
class Seeds:
    signal: int
    eval_signal: int
    elm: int
    exploration: int
    naive: int


@dataclass(frozen=True)
class ExperimentConfig:
    fleet: FleetConfig
    signal: Union[MarkovSignalModel, TraceSignal]
    seeds: Seeds
    agent: AgentSpec = field(default_factory=lambda: AgentSpec("elm"))
    alpha_d: float = 0.01
    beta: float = 1.0
    gamma: float = 0.95
    normalize_deviation: bool = False
    initial_soc: Union[str, tuple] = "half"
    horizon: int = 100_000
    train_steps: int | None = None
    episodes: int = 1
    same_realization: bool = False
    stress: Union[ExponentialStress, RationalStress] = field(default_factory=RationalStress)
    bin_edges: tuple[float, ...] = tuple(default_bin_edges(10))
    residual_half_weight: float = 0.5
    persist_trajectory: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("horizon must be at least 1")
        if not 1 <= self.episodes <= self.training_steps:
            raise ValidationError("episodes must lie between 1 and the number of training steps")
        edges = np.asarray(self.bin_edges, dtype=float)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValidationError("bin edges must be strictly increasing")
        if edges[0] > 0 or edges[-1] < 1:
            raise ValidationError("bin edges must cover (0, 1]")

    @property
    def replay(self) -> bool:
        return isinstance(self.signal, TraceSignal)

    @property
    def training_steps(self) -> int:
        return self.horizon if self.train_steps is None else self.train_steps

    def env_config(self) -> EnvConfig:
        return EnvConfig(
            fleet=self.fleet,
            signal=self.signal,
            alpha_d=self.alpha_d,
            beta=self.beta,
            gamma=self.gamma,
            initial_soc=self.initial_soc,
            normalize_deviation=self.normalize_deviation,
        )


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ValidationError(f"expected a list of integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ValidationError(f"expected a list of numbers, got {text!r}") from None


def _path(base: Path, text: str) -> Path:
    p = Path(text)
    p = p if p.is_absolute() else base / p
    if not p.exists():
        raise ValidationError(f"referenced file does not exist: {p}")
    return p


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return parse_config(cp, path.parent)


def parse_config(cp: configparser.ConfigParser, base: Path = Path(".")) -> ExperimentConfig:
    try:
        return _parse(cp, base)
    except (configparser.Error, KeyError) as exc:
        raise ValidationError(f"config: {exc}") from None


def _parse(cp: configparser.ConfigParser, base: Path) -> ExperimentConfig:
    fl = cp["fleet"]
    caps = _ints(fl["capacity"])
    charge = _ints(fl["max_charge"])
    discharge = _ints(fl.get("max_discharge", fl["max_charge"]))
    fleet = FleetConfig.from_lists(caps, charge, discharge)
    init = fl.get("initial_soc", "half").strip()
    initial_soc = init if init in ("half", "uniform") else tuple(_ints(init))

    if "seeds" not in cp:
        raise ValidationError("config needs a [seeds] section; no implicit seeding")
    sd = cp["seeds"]
    missing = [k for k in SEED_FIELDS if k not in sd]
    if missing:
        raise ValidationError(f"missing seed fields: {', '.join(missing)}")
    seeds = Seeds(**{k: sd.getint(k) for k in SEED_FIELDS})

    sg = cp["signal"] if "signal" in cp else {}
    source = sg.get("source", "markov").strip()
    if source == "markov":
        if sg.get("matrix", "").strip():
            signal = load_matrix(_path(base, sg["matrix"].strip()), seeds.signal)
        else:
            alphabet = RegulationAlphabet.of(_ints(sg.get("alphabet", " ".join(map(str, TOY_ALPHABET)))))
            signal = MarkovSignalModel.uniform(alphabet, seeds.signal)
    elif source == "trace":
        raw = read_trace_csv(_path(base, sg["trace"].strip()))
        trace = ingest_trace(
            raw,
            int(sg.get("regulation_capacity", "10")),
            sg.get("resolution", "0.1").strip(),
            int(sg.get("sample_period_seconds", "10")),
        )
        mode = sg.get("mode", "replay").strip()
        if mode == "replay":
            signal = trace
        elif mode == "fit":
            signal = fit_transition_matrix(trace, seed=seeds.signal)
        else:
            raise ValidationError(f"unknown trace mode {mode!r}; expected replay or fit")
    else:
        raise ValidationError(f"unknown signal source {source!r}")

    rw = cp["reward"] if "reward" in cp else {}
    ag = dict(cp["agent"]) if "agent" in cp else {"kind": "elm"}
    agent = AgentSpec(**_coerce_agent_fields(ag))

    run = cp["run"] if "run" in cp else {}
    ev = cp["evaluation"] if "evaluation" in cp else {}
    kind = ev.get("stress", "rational").strip()
    if kind == "rational":
        stress = RationalStress(
            float(ev.get("k1", "1.4e5")), float(ev.get("k2", "-0.501")), float(ev.get("k3", "-1.23e5"))
        )
    elif kind == "exponential":
        stress = ExponentialStress(float(ev.get("alpha_d", "0.01")), float(ev.get("beta", "1.0")))
    else:
        raise ValidationError(f"unknown stress model {kind!r}")
    if ev.get("bin_edges", "").strip():
        edges = tuple(_floats(ev["bin_edges"]))
    else:
        edges = tuple(float(e) for e in default_bin_edges(int(ev.get("bins", "10"))))

    def flag(section, key, default="false"):
        value = str(section.get(key, default)).strip().lower()
        if value not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ValidationError(f"{key} must be a boolean, got {value!r}")
        return value in ("true", "yes", "1", "on")

    train_steps = run.get("train_steps", "").strip() if run else ""
    try:
        return ExperimentConfig(
            fleet=fleet,
            signal=signal,
            seeds=seeds,
            agent=agent,
            alpha_d=float(rw.get("alpha_d", "0.01")),
            beta=float(rw.get("beta", "1.0")),
            gamma=float(rw.get("gamma", "0.95")),
            normalize_deviation=flag(rw, "normalize_deviation"),
            initial_soc=initial_soc,
            horizon=int(run.get("horizon", "100000")),
            train_steps=int(train_steps) if train_steps else None,
            episodes=int(run.get("episodes", "1")),
            same_realization=flag(run, "same_realization"),
            stress=stress,
            bin_edges=edges,
            residual_half_weight=float(ev.get("residual_half_weight", "0.5")),
            persist_trajectory=flag(run, "persist_trajectory"),
        )
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"config: {exc}") from None
