"""Degradation-aware dispatch of a battery fleet providing frequency regulation.

Modules
-------
signal
    Finite-alphabet Markov regulation model and trace ingestion.
fleet
    Battery constraints, served regulation and feasible action enumeration.
cycles
    Online switching-point tracking, rainflow counting and stress models.
env
    The dispatch MDP with the switching-point proxy reward.
agents
    Naive and greedy baselines, tabular Q-learning and the ELM agent.
harness
    Config loading, training/evaluation runs and CSV reports.
"""

from .errors import (
    DomainError,
    EpisodeEnd,
    FleetDegError,
    InfeasibleActionError,
    NumericalDomainError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EpisodeEnd",
    "FleetDegError",
    "InfeasibleActionError",
    "NumericalDomainError",
    "ValidationError",
    "__version__",
]
