"""Experiment plumbing: configs, sweeps, verification suites, CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .sde import reverse_sde_demo, simulate_forward
from .sweep import COLUMNS, Row, SweepResult, run_sweep
from .verify import SUITES, Check, VerifyReport, verify_theorems

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run_sweep",
    "SweepResult",
    "Row",
    "COLUMNS",
    "verify_theorems",
    "VerifyReport",
    "Check",
    "SUITES",
    "reverse_sde_demo",
    "simulate_forward",
]
