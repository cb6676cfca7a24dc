"""Dispatch policies: baselines, tabular Q-learning and the ELM linear-TD agent."""

from .baselines import GreedyPolicy, NaivePolicy, greedy_select, naive_allocate
from .elm import (
    ElmAgent,
    ElmFeatureMap,
    Normalizer,
    ReplayBuffer,
    Transition,
    build_input,
    build_inputs,
    elm_features,
    load_checkpoint,
    q_hat,
    save_checkpoint,
    select_action,
    td_minibatch_update,
    train,
)
from .exploration import epsilon_at
from .tabular import TabularAgent, TabularQ, q_update

__all__ = [
    "ElmAgent",
    "ElmFeatureMap",
    "GreedyPolicy",
    "NaivePolicy",
    "Normalizer",
    "ReplayBuffer",
    "TabularAgent",
    "TabularQ",
    "Transition",
    "build_input",
    "build_inputs",
    "elm_features",
    "epsilon_at",
    "greedy_select",
    "load_checkpoint",
    "naive_allocate",
    "q_hat",
    "q_update",
    "save_checkpoint",
    "select_action",
    "td_minibatch_update",
    "train",
]
