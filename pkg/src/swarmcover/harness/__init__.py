"""Experiment runner for the coverage, convergence and loss studies."""

from .config import DEFAULTS, config_hash, normalize, validate_config
from .studies import (
    StudyResult,
    run_convergence_study,
    run_coverage_sweep,
    run_loss_comparison,
    run_studies,
)

__all__ = [
    "DEFAULTS",
    "StudyResult",
    "config_hash",
    "normalize",
    "run_convergence_study",
    "run_coverage_sweep",
    "run_loss_comparison",
    "run_studies",
    "validate_config",
]
