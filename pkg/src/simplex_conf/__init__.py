"""Multinomial/Gaussian approximation bounds and convex confidence bounds on the simplex."""

from .domain import (
    CountVector,
    Deviation,
    ModelParams,
    SimplexPoint,
    count_vector_from_full,
    deviation,
    in_bulk,
    in_p_tau,
    make_count_vector,
    make_simplex_point,
    simplex_point_from_full,
)
from .errors import (
    CapExceeded,
    ConvergenceError,
    DimensionMismatch,
    DomainError,
    NonInterior,
    OutOfBulk,
    OutOfPTau,
    RegimeViolation,
    SimplexConfError,
    ZeroCount,
)
from .specfun import ToleranceConfig, chi2_cdf, chi2_pdf, chi2_quantile, log_gamma, reg_lower_gamma
from .multinomial import MomentSet, central_moments, enumerate_support, log_pmf, sample, support_size
from .gaussian import (
    CovarianceBundle,
    covariance_bundle,
    normal_density,
    pearson_statistic,
    pearson_statistic_quadratic,
)
from .approx import (
    CouplingBound,
    CouplingContext,
    ExpansionResult,
    ExpansionTable,
    cdf_gap_bound,
    coupling_c,
    coupling_upper,
    epsilon_n,
    local_expansion,
    local_expansion_array,
    transformed_local_expansion,
    tv_bound,
)
from .simulate import CoverageRow, run_coverage
from .oracle import QuadratureConfig, StepCdf, exact_pearson_cdf, quantile, sup_cdf_gap, tv_estimate
from .confopt import (
    BoundResult,
    ConfidenceSpec,
    ContainmentReport,
    Objective,
    PseudoCounts,
    binomial_exact_interval,
    confidence_bounds,
    containment_check,
    eval_objective,
    exact_set_member,
    fig2_matrix,
    gaussian_set_member,
    maximize_over_set,
    minimize_over_set,
    neg_entropy,
    quadratic,
    smooth_half,
    threshold_L,
)

__version__ = "0.1.0"

__all__ = [
    "BoundResult",
    "CapExceeded",
    "ConfidenceSpec",
    "ContainmentReport",
    "ConvergenceError",
    "CountVector",
    "CouplingBound",
    "CouplingContext",
    "CovarianceBundle",
    "CoverageRow",
    "Deviation",
    "DimensionMismatch",
    "DomainError",
    "ExpansionResult",
    "ExpansionTable",
    "ModelParams",
    "MomentSet",
    "NonInterior",
    "Objective",
    "OutOfBulk",
    "OutOfPTau",
    "PseudoCounts",
    "QuadratureConfig",
    "RegimeViolation",
    "SimplexConfError",
    "SimplexPoint",
    "StepCdf",
    "ToleranceConfig",
    "ZeroCount",
    "binomial_exact_interval",
    "cdf_gap_bound",
    "central_moments",
    "chi2_cdf",
    "chi2_pdf",
    "chi2_quantile",
    "confidence_bounds",
    "containment_check",
    "count_vector_from_full",
    "coupling_c",
    "coupling_upper",
    "covariance_bundle",
    "deviation",
    "enumerate_support",
    "epsilon_n",
    "eval_objective",
    "exact_pearson_cdf",
    "exact_set_member",
    "fig2_matrix",
    "gaussian_set_member",
    "in_bulk",
    "in_p_tau",
    "local_expansion",
    "local_expansion_array",
    "log_gamma",
    "log_pmf",
    "make_count_vector",
    "make_simplex_point",
    "maximize_over_set",
    "minimize_over_set",
    "neg_entropy",
    "normal_density",
    "pearson_statistic",
    "pearson_statistic_quadratic",
    "quadratic",
    "quantile",
    "reg_lower_gamma",
    "run_coverage",
    "sample",
    "simplex_point_from_full",
    "smooth_half",
    "sup_cdf_gap",
    "support_size",
    "threshold_L",
    "transformed_local_expansion",
    "tv_bound",
    "tv_estimate",
]
