"""Experiment drivers, reports and the command-line interface."""

from .config import TAGS, ExperimentConfig
from .experiments import (
    penalized_bandwidth,
    run_bias_floor_experiment,
    run_bound_suite,
    run_experiment,
    run_lemma4_check,
    run_log_factor_experiment,
    run_rate_experiment,
    run_sawtooth_bias_experiment,
)
from .report import ExperimentReport, Table, config_from_csv, read_csv, render_csv, slope_fit

__all__ = [
    "TAGS",
    "ExperimentConfig",
    "ExperimentReport",
    "Table",
    "config_from_csv",
    "penalized_bandwidth",
    "read_csv",
    "render_csv",
    "run_bias_floor_experiment",
    "run_bound_suite",
    "run_experiment",
    "run_lemma4_check",
    "run_log_factor_experiment",
    "run_rate_experiment",
    "run_sawtooth_bias_experiment",
    "slope_fit",
]
