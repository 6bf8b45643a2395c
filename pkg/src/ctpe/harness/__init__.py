"""Config-driven experiments, sweeps and reports."""

from .config import ESTIMATORS, SWEEP_AXES, ExperimentConfig, load_config, parse_config
from .recipes import RECIPES, get_recipe, recipe_text
from .report import aggregate, emit_report, mean_ci
from .run import apply_axes, build_models, run_cell, run_experiment, run_sweep

__all__ = [
    "ESTIMATORS",
    "ExperimentConfig",
    "RECIPES",
    "SWEEP_AXES",
    "aggregate",
    "apply_axes",
    "build_models",
    "emit_report",
    "get_recipe",
    "load_config",
    "mean_ci",
    "parse_config",
    "recipe_text",
    "run_cell",
    "run_experiment",
    "run_sweep",
]
