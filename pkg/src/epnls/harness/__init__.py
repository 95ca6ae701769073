"""Experiment drivers, configuration, file formats, CLI, and figure output."""

from .config import ConfigError, ExperimentConfig, InitialCondition, load_initial
from .runs import run_conserve, run_converge, run_epcheck, run_solve
from .snapshot import read_snapshot, write_snapshot

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "InitialCondition",
    "load_initial",
    "run_solve",
    "run_converge",
    "run_conserve",
    "run_epcheck",
    "read_snapshot",
    "write_snapshot",
]
