"""Experiment harness: TOML specs in, deterministic result directories
(records.csv, summary.json, spec.resolved.toml, SVG figures) out."""
from .config import ExperimentSpec, SpecError, emit_toml, format_float
from .plots import DEFAULT_PLOTS, emit_plot
from .runner import (COLUMNS, ResultSet, calibrate_sigmas, read_records,
                     round9, run_experiment, summarize)

__all__ = [
    "COLUMNS",
    "DEFAULT_PLOTS",
    "ExperimentSpec",
    "ResultSet",
    "SpecError",
    "calibrate_sigmas",
    "emit_plot",
    "emit_toml",
    "format_float",
    "read_records",
    "round9",
    "run_experiment",
    "summarize",
]
