"""Model-free conditional association tests for high-dimensional regression.

For each predictor ``X_i`` the outcome is sliced, ``X_i`` is regressed on the
other predictors by a cross-validated LASSO, and the slice-wise covariances
between the residual and the slice indicators are combined into a max-type
(KS) or mean-type (CvM) statistic calibrated by a Gaussian multiplier
bootstrap.
"""

from __future__ import annotations

from .association import SdaResult, compute_sda, estimate_sda, influence_matrix, variance_estimate, z_scores
from .dataset import Dataset, OutcomeKind, center_columns, load_csv, write_csv
from .errors import ConfigError, ConvergenceError, DataError, DegenerateVarianceError, SdaError
from .inference import (
    BootstrapDraws,
    StatKind,
    TestOutcome,
    analyze_variable,
    critical_value,
    cvm_statistic,
    ks_statistic,
    multiplier_bootstrap,
    p_value,
    test_variable,
)
from .lasso import CvReport, LassoFit, cv_select_lambda, fit_lasso, nodewise_fit
from .screening import FdrReport, ScreenSet, bh_adjust, outcome_screen, sis_screen
from .simgen import block_precision, generate_coefficients, generate_response, sample_gaussian, smallworld_precision
from .simulation import PowerReport, ScenarioConfig, load_scenario, run_scenario
from .slicing import SlicePlan, default_h, indicator_matrix, make_slices

__all__ = [
    "BootstrapDraws",
    "ConfigError",
    "ConvergenceError",
    "CvReport",
    "DataError",
    "Dataset",
    "DegenerateVarianceError",
    "FdrReport",
    "LassoFit",
    "OutcomeKind",
    "PowerReport",
    "ScenarioConfig",
    "ScreenSet",
    "SdaError",
    "SdaResult",
    "SlicePlan",
    "StatKind",
    "TestOutcome",
    "analyze_variable",
    "bh_adjust",
    "block_precision",
    "center_columns",
    "compute_sda",
    "critical_value",
    "cv_select_lambda",
    "cvm_statistic",
    "default_h",
    "estimate_sda",
    "fit_lasso",
    "generate_coefficients",
    "generate_response",
    "indicator_matrix",
    "influence_matrix",
    "ks_statistic",
    "load_csv",
    "load_scenario",
    "make_slices",
    "multiplier_bootstrap",
    "nodewise_fit",
    "outcome_screen",
    "p_value",
    "run_scenario",
    "sample_gaussian",
    "sis_screen",
    "smallworld_precision",
    "test_variable",
    "variance_estimate",
    "write_csv",
    "z_scores",
]
