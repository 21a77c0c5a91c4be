"""Scaled heteroscedastic Dantzig selector: joint sparse mean and variance
estimation through a single second-order cone program."""

from .cone import ConeProgram, ConeSolution, SolverConfig, solve
from .estimator import (
    LambdaRule,
    ScHeDsEstimate,
    ScHeDsProblem,
    SolverError,
    assemble_program,
    bias_correct,
    check_feasible,
    fit,
    lambda_weights,
    predict,
    saturation_residual,
)
from .model import GroupGeometry, GroupPartition, RegressionData, group_geometry, normalize_columns, validate

__version__ = "0.1.0"
