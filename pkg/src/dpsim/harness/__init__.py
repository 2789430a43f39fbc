"""Experiment orchestration: configs, sweeps, result files, canned scenarios."""

from .config import ConfigError, DataError, SweepConfig, load_config, parse_config
from .output import PlotKind, emit_csv, emit_plot_data, format_csv, read_csv
from .scenarios import Scenario, scenario_paper
from .sweep import SweepResult, SweepRow, load_series, run_sweep

__all__ = [
    "ConfigError",
    "DataError",
    "PlotKind",
    "Scenario",
    "SweepConfig",
    "SweepResult",
    "SweepRow",
    "emit_csv",
    "emit_plot_data",
    "format_csv",
    "load_config",
    "load_series",
    "parse_config",
    "read_csv",
    "run_sweep",
    "scenario_paper",
]
