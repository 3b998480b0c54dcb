"""Experiment configuration, execution and reporting."""

from .config import ExperimentConfig
from .runner import (
    CSV_COLUMNS,
    bandit_regret,
    cumulative_regret,
    delay_probe,
    doubling_ratios,
    fit_exponent,
    regret,
    run_experiment,
    run_single,
    scaling_sweep,
    write_csv,
)
