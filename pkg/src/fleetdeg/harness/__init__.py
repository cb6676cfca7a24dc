"""Experiment configuration, training/evaluation runs and CSV reporting."""

from .config import AgentSpec, ExperimentConfig, Seeds, load_config, parse_config
from .runner import (
    RunReport,
    compare_policies,
    degradation_from_trajectory,
    emit_histogram_csv,
    evaluate,
    make_agent,
    read_trajectory_csv,
    run_experiment,
    train_agent,
    write_report_csv,
    write_trajectory_csv,
)

__all__ = [
    "AgentSpec",
    "ExperimentConfig",
    "RunReport",
    "Seeds",
    "compare_policies",
    "degradation_from_trajectory",
    "emit_histogram_csv",
    "evaluate",
    "load_config",
    "make_agent",
    "parse_config",
    "read_trajectory_csv",
    "run_experiment",
    "train_agent",
    "write_report_csv",
    "write_trajectory_csv",
]
