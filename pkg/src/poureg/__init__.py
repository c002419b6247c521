"""Local-averaging regression on partition-of-unity bases.

Builds indicator and hat-function families on the unit cube, fits the
plug-in estimator whose coefficients are per-index response-mass over
cell-mass ratios, and ships a seeded Monte Carlo harness that measures
the estimator's variance scaling, convergence rate, and deviation tails
against closed-form bounds.
"""

from .backends import available_backends, get_kernels
from .estimator import (
    CellStats,
    EstimatorCoeffs,
    FittedFunction,
    empirical_stats,
    evaluate,
    fit,
    population_coeffs,
)
from .metrics import (
    Estimate,
    ErrorEstimate,
    approx_error,
    bernstein_mass_bound,
    bernstein_response_bound,
    estimate_expected_error,
    exact_expected_error,
    l2_sq_distance,
    tail_bound,
    variance_bounds,
)
from .partition import (
    PartitionFamily,
    evaluate_family,
    make_dyadic,
    make_hat,
    validate_partition,
)
from .problems import (
    Dataset,
    MarginalMeasure,
    RegressionProblem,
    builtin_problems,
    get_problem,
    sample_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "available_backends",
    "get_kernels",
    "CellStats",
    "EstimatorCoeffs",
    "FittedFunction",
    "empirical_stats",
    "evaluate",
    "fit",
    "population_coeffs",
    "Estimate",
    "ErrorEstimate",
    "approx_error",
    "bernstein_mass_bound",
    "bernstein_response_bound",
    "estimate_expected_error",
    "exact_expected_error",
    "l2_sq_distance",
    "tail_bound",
    "variance_bounds",
    "PartitionFamily",
    "evaluate_family",
    "make_dyadic",
    "make_hat",
    "validate_partition",
    "Dataset",
    "MarginalMeasure",
    "RegressionProblem",
    "builtin_problems",
    "get_problem",
    "sample_dataset",
    "__version__",
]
