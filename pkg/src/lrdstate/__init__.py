"""Exact inference and simulation for a finite-state stationary process with
long-range dependence, and the fractional multinomial distribution built on
top of it.

The process takes values in {0, 1, ..., m}; each non-base state k has its own
memory exponent H_k, marginal probability p_k, and coupling strength c_k, and
its indicator sequence decays in covariance like lag**(2*H_k - 2).  Joint
probabilities are exact (two cross-checked evaluation strategies), sampling is
sequential from exact conditionals, and the analytics layer verifies the
closed-form claims statistically.
"""

from .analytics import (
    CovEstimate,
    FracmultResult,
    HurstEstimate,
    InterArrivalSummary,
    OverdispersionReport,
    VarianceGrowthFit,
    chi_square_vs_table,
    empirical_indicator_cov,
    estimate_hurst,
    exact_count_covariance,
    fractional_multinomial,
    inter_arrival_summary,
    variance_growth,
)
from .engine import (
    CovarianceTable,
    DpFrontier,
    ExactProbability,
    Strategy,
    Theorem33Report,
    conditional_next,
    d_star_dp,
    d_star_recursive,
    joint_probability,
    theoretical_covariances,
    verify_theorem_33,
)
from .errors import (
    AssumptionViolation,
    CapExceeded,
    DegenerateSeries,
    FrontierOverflow,
    HorizonExceeded,
    InsufficientData,
    LrdstateError,
    ParameterError,
    PreconditionUnmet,
    RangeViolation,
    SimplexViolation,
    SizeExceeded,
    ZeroDenominator,
)
from .model import (
    ModelParams,
    OccupancyPattern,
    l_star,
    params_to_text,
    read_params_file,
    validate_params,
)
from .oracle import EnumerationTable, d_star_literal, enumerate_all, peel_state_decomposition
from .sampling import PathSample, SampleBatch, derive_seed, sample_batch, sample_path, splitmix64

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "ModelParams",
    "OccupancyPattern",
    "validate_params",
    "l_star",
    "read_params_file",
    "params_to_text",
    # engine
    "Strategy",
    "ExactProbability",
    "DpFrontier",
    "d_star_recursive",
    "d_star_dp",
    "joint_probability",
    "conditional_next",
    "CovarianceTable",
    "theoretical_covariances",
    "Theorem33Report",
    "verify_theorem_33",
    # oracle
    "EnumerationTable",
    "d_star_literal",
    "enumerate_all",
    "peel_state_decomposition",
    # sampling
    "PathSample",
    "SampleBatch",
    "sample_path",
    "sample_batch",
    "derive_seed",
    "splitmix64",
    # analytics
    "CovEstimate",
    "empirical_indicator_cov",
    "HurstEstimate",
    "estimate_hurst",
    "InterArrivalSummary",
    "inter_arrival_summary",
    "OverdispersionReport",
    "FracmultResult",
    "fractional_multinomial",
    "VarianceGrowthFit",
    "variance_growth",
    "exact_count_covariance",
    "chi_square_vs_table",
    # errors
    "LrdstateError",
    "ParameterError",
    "RangeViolation",
    "SimplexViolation",
    "AssumptionViolation",
    "CapExceeded",
    "HorizonExceeded",
    "FrontierOverflow",
    "ZeroDenominator",
    "SizeExceeded",
    "PreconditionUnmet",
    "InsufficientData",
    "DegenerateSeries",
]
