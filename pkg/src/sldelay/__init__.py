"""Spectral solver for a discontinuous second-order boundary problem
with a retarded argument and an eigenparameter-dependent boundary
condition.

Public surface re-exported here; submodules stay importable directly.
"""

from .asymptotics import (
    AsymptoticPrediction,
    AsymptoticsUnavailable,
    QuadTerms,
    leading_eigenfunction,
    leading_s,
    oscillatory_decay,
    prediction,
    quad_terms,
    refined_eigenfunction,
    refined_s,
)
from .backend import BACKEND
from .checks import CheckReport, CheckResult, run_checks
from .expressions import CoefficientExpr, DomainError, ParseError, parse_expression
from .integrate import (
    DelayViolationError,
    IntegrationError,
    ResidualReport,
    residual,
    solve_both,
    solve_left,
    solve_right,
)
from .picard import ConvergenceError, PicardResult, picard_solve
from .problem import (
    ConfigError,
    ProblemSpec,
    config_digest,
    load_problem,
    parse_problem,
    validate_delay,
)
from .spectrum import (
    Eigenpair,
    QNorms,
    characteristic,
    compute_qnorms,
    eigenfunction,
    find_eigenvalues,
    global_scan,
    locate_window,
    scaled_characteristic,
)
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "AsymptoticPrediction",
    "AsymptoticsUnavailable",
    "BACKEND",
    "CheckReport",
    "CheckResult",
    "CoefficientExpr",
    "ConfigError",
    "ConvergenceError",
    "DelayViolationError",
    "DomainError",
    "Eigenpair",
    "IntegrationError",
    "ParseError",
    "PicardResult",
    "ProblemSpec",
    "QNorms",
    "QuadTerms",
    "ResidualReport",
    "Trajectory",
    "__version__",
    "characteristic",
    "compute_qnorms",
    "config_digest",
    "eigenfunction",
    "find_eigenvalues",
    "global_scan",
    "leading_eigenfunction",
    "leading_s",
    "load_problem",
    "locate_window",
    "oscillatory_decay",
    "parse_expression",
    "parse_problem",
    "picard_solve",
    "prediction",
    "quad_terms",
    "refined_eigenfunction",
    "refined_s",
    "residual",
    "run_checks",
    "scaled_characteristic",
    "solve_both",
    "solve_left",
    "solve_right",
    "validate_delay",
]
