"""Distributional-outcome regression via quantile functions.

Regresses outcome quantile functions on scalar covariates and a
predictor quantile function under joint monotonicity constraints,
with projection-based joint bands, bootstrap effect tests, and a
Monte-Carlo study harness.
"""

from .archive import load_fit, save_fit
from .bernstein import (CoefficientLayout, ConstraintSystem, bernstein_eval,
                        build_constraint_system)
from .covariance import (ResidualCovariance, estimate_residual_covariance,
                         sandwich_covariance)
from .design import Dataset, build_design
from .estimators import DorqfRegressor, IsotonicQuantileMap
from .inference import (ConfidenceBand, GlobalTestResult, band_global_pvalue,
                        bootstrap_effect_test, joint_band)
from .invnorm import norm_quantile
from .model import (CvReport, DorqfFit, PavaFit, cross_validate, fit_dorqf,
                    fit_pava_baseline, loocv_r_squared, pava)
from .qp import QpError, QpSolution, project_onto_cone, solve_qp
from .quantiles import (default_grid, empirical_quantile, trapezoid_weights,
                        wasserstein_distance)
from .simulate import (ScenarioSpec, generate_replication, run_coverage_study,
                       run_estimation_study, run_power_study)

__version__ = "0.1.0"

__all__ = [
    "CoefficientLayout",
    "ConfidenceBand",
    "ConstraintSystem",
    "CvReport",
    "Dataset",
    "DorqfFit",
    "DorqfRegressor",
    "GlobalTestResult",
    "IsotonicQuantileMap",
    "PavaFit",
    "QpError",
    "QpSolution",
    "ResidualCovariance",
    "ScenarioSpec",
    "band_global_pvalue",
    "bernstein_eval",
    "bootstrap_effect_test",
    "build_constraint_system",
    "build_design",
    "cross_validate",
    "default_grid",
    "empirical_quantile",
    "estimate_residual_covariance",
    "fit_dorqf",
    "fit_pava_baseline",
    "generate_replication",
    "joint_band",
    "load_fit",
    "loocv_r_squared",
    "norm_quantile",
    "pava",
    "project_onto_cone",
    "run_coverage_study",
    "run_estimation_study",
    "run_power_study",
    "sandwich_covariance",
    "save_fit",
    "solve_qp",
    "trapezoid_weights",
    "wasserstein_distance",
    "__version__",
]
