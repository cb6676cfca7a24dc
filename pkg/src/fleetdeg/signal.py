"""Regulation signal models: finite-alphabet Markov chains and discretized traces."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class RegulationAlphabet:
    """Sorted set of distinct integer regulation values (energy units per slot)."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ValidationError("regulation alphabet must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError(f"alphabet must be strictly increasing, got {vals}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(vals)})

    @classmethod
    def of(cls, values: Iterable[int]) -> "RegulationAlphabet":
        """Build from arbitrary values (deduplicated and sorted)."""
        return cls(tuple(sorted(set(int(v) for v in values))))

    def check_regulation_range(self) -> None:
        if self.values[0] >= 0 or self.values[-1] <= 0:
            warnings.warn(
                f"alphabet {self.values} lacks a negative or positive value",
                stacklevel=2,
            )

    def index(self, value: int) -> int:
        try:
            return self._index[value]
        except KeyError:
            raise DomainError(f"{value} is not in alphabet {self.values}") from None

    @property
    def max_magnitude(self) -> int:
        return max(abs(self.values[0]), abs(self.values[-1]))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, value) -> bool:
        return value in self._index


@dataclass(frozen=True)
class MarkovSignalModel:
    """First-order Markov chain over a regulation alphabet.

    ``transition[i, j]`` is the probability of moving from ``alphabet.values[i]``
    to ``alphabet.values[j]``.
    """

    alphabet: RegulationAlphabet
    transition: np.ndarray
    seed: int = 0
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        k = len(self.alphabet)
        if P.shape != (k, k):
            raise ValidationError(f"transition matrix must be {k}x{k}, got {P.shape}")
        if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
            raise ValidationError("transition entries must lie in [0, 1]")
        sums = P.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise ValidationError(f"transition rows must sum to 1, got sums {sums}")
        P.setflags(write=False)
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "_cumulative", cum)

    @classmethod
    def uniform(cls, alphabet: RegulationAlphabet, seed: int = 0) -> "MarkovSignalModel":
        k = len(alphabet)
        return cls(alphabet, np.full((k, k), 1.0 / k), seed)

    def initial(self, rng: np.random.Generator) -> int:
        """Draw a starting value uniformly from the alphabet."""
        return self.alphabet.values[int(rng.integers(len(self.alphabet)))]

    def save(self, path) -> None:
        save_matrix(self, path)


def markov_next(model: MarkovSignalModel, current: int, rng: np.random.Generator) -> int:
    """Sample the successor of ``current`` from its transition row."""
    i = model.alphabet.index(current)
    u = rng.random()
    j = int(np.searchsorted(model._cumulative[i], u, side="right"))
    return model.alphabet.values[min(j, len(model.alphabet) - 1)]


def sample_path(model: MarkovSignalModel, start: int, length: int, rng: np.random.Generator) -> list[int]:
    path = [start]
    for _ in range(length - 1):
        path.append(markov_next(model, path[-1], rng))
    return path


@dataclass(frozen=True)
class TraceSignal:
    """A regulation trace discretized onto an integer energy grid."""

    samples: tuple[int, ...]
    regulation_capacity: int
    resolution: Fraction
    sample_period_seconds: int = 10
    clamped: int = 0

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValidationError("a trace needs at least two samples")
        step = self.resolution * self.regulation_capacity
        for s in self.samples:
            if Fraction(s) % step != 0 or abs(s) > self.regulation_capacity:
                raise ValidationError(f"sample {s} is not on the {step} grid within capacity")

    def __len__(self) -> int:
        return len(self.samples)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # shortest repr recovers the decimal the value was parsed from
        return Fraction(repr(x))
    return Fraction(x)


def _round_half_away(q: Fraction) -> int:
    r = math.floor(abs(q) + Fraction(1, 2))
    return r if q >= 0 else -r


def ingest_trace(
    raw: Sequence[float],
    regulation_capacity: int,
    resolution=Fraction(1, 10),
    sample_period_seconds: int = 10,
) -> TraceSignal:
    """Discretize a normalized trace in [-1, 1] onto the integer regulation grid.

    Each value is snapped to the nearest multiple of ``resolution`` (ties away
    from zero) and scaled by ``regulation_capacity``. Out-of-range values are
    clamped to +-1 and counted in ``TraceSignal.clamped``.
    """
    if len(raw) == 0:
        raise ValidationError("empty trace")
    res = _as_fraction(resolution)
    if res <= 0 or Fraction(1) / res != int(Fraction(1) / res):
        raise ValidationError(f"resolution {res} must divide 1 exactly")
    unit = res * regulation_capacity
    if unit.denominator != 1:
        raise ValidationError("regulation_capacity * resolution must be an integer")
    unit = int(unit)

    samples = []
    clamped = 0
    for v in raw:
        q = _as_fraction(v)
        if q > 1 or q < -1:
            clamped += 1
            q = Fraction(1) if q > 0 else Fraction(-1)
        samples.append(_round_half_away(q / res) * unit)
    if clamped:
        warnings.warn(f"{clamped} trace values outside [-1, 1] were clamped", stacklevel=2)
    return TraceSignal(tuple(samples), int(regulation_capacity), res, int(sample_period_seconds), clamped)


def alphabet_of(trace: TraceSignal) -> RegulationAlphabet:
    return RegulationAlphabet.of(trace.samples)


def fit_transition_matrix(
    trace: TraceSignal | Sequence[int],
    alphabet: RegulationAlphabet | None = None,
    seed: int = 0,
) -> MarkovSignalModel:
    """Maximum-likelihood transition matrix from successive sample pairs.

    Rows of values never left (no observed successor) become uniform.
    """
    samples = trace.samples if isinstance(trace, TraceSignal) else tuple(int(s) for s in trace)
    if len(samples) < 2:
        raise ValidationError("need at least two samples to fit transitions")
    if alphabet is None:
        alphabet = RegulationAlphabet.of(samples)
    k = len(alphabet)
    idx = np.array([alphabet.index(s) for s in samples])
    counts = np.zeros((k, k))
    np.add.at(counts, (idx[:-1], idx[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    P = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / k)
    return MarkovSignalModel(alphabet, P, seed)


def save_matrix(model: MarkovSignalModel, path) -> None:
    lines = [" ".join(str(v) for v in model.alphabet.values)]
    for row in model.transition:
        lines.append(" ".join(repr(float(p)) for p in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path, seed: int = 0) -> MarkovSignalModel:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ValidationError(f"{path}: empty matrix file")
    try:
        alphabet = RegulationAlphabet(tuple(int(v) for v in rows[0]))
        P = np.array([[float(p) for p in r] for r in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return MarkovSignalModel(alphabet, P, seed)


def read_trace_csv(path, column: str = "regd_normalized") -> list[float]:
    """Read the normalized regulation column of a ``timestamp,regd_normalized`` CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ValidationError(f"{path}: missing column {column!r}")
        try:
            return [float(row[column]) for row in reader]
        except ValueError as exc:
            raise ValidationError(f"{path}: {exc}") from None
