"""Reproducible experiments with machine-checkable verdicts."""

from .criterion import CriterionEstimate, mar_criterion_estimate, mar_criterion_exact
from .experiments import (DEFAULT_SUITE, default_configs, recheck_report, run_all, run_experiment,
                          verify_exchangeable_corollary, verify_mar_criterion, verify_mar_floor,
                          verify_mixture_theorem)
from .report import ConfigError, ExperimentConfig, ExperimentReport
