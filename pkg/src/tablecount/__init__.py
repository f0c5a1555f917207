"""Counting contingency tables: exact, Monte Carlo, and low-rank asymptotic."""

from .errors import (
    BudgetError,
    DimensionMismatchError,
    EnumerationBudgetError,
    PermanentSizeError,
    RankBoundError,
    SurjectionSamplingError,
    TableCountError,
    TermBudgetError,
    ValidationError,
)
from .counting import (
    CountEstimate,
    LowRankResult,
    Margins,
    VarianceReport,
    WeightMatrix,
    bekessy_estimate,
    chebyshev_sample_count,
    exact_count_01,
    exact_count_bruteforce,
    exact_count_dp,
    fisher_yates_count,
    iter_tables,
    lowrank_01_count,
    lowrank_asymptotic_count,
    lowrank_column_sets_count,
    lowrank_weighted_count,
    mc_estimate_count,
    mc_weighted_count,
    variance_ratio_report,
    weighted_count_bruteforce,
    weighted_fy_count,
)
from .lowrank import (
    ApproxSymmetricPoly,
    CoefficientReport,
    TruncationSpec,
    build_e_tilde,
    build_h_tilde,
    choose_elementary_sample_count,
    choose_sample_count,
    solve_threshold,
    surjection_count,
    verify_coefficients,
)
from .permanent import BlockStructure, SquareMatrix, permanent_exact, permanent_float_batch
from .polynomial import LinearForm, SparsePolynomial, reduced_pairing, scalar_product

__version__ = "0.1.0"

__all__ = [
    "ApproxSymmetricPoly",
    "BlockStructure",
    "BudgetError",
    "CoefficientReport",
    "CountEstimate",
    "DimensionMismatchError",
    "EnumerationBudgetError",
    "LinearForm",
    "LowRankResult",
    "Margins",
    "PermanentSizeError",
    "RankBoundError",
    "SparsePolynomial",
    "SquareMatrix",
    "SurjectionSamplingError",
    "TableCountError",
    "TermBudgetError",
    "TruncationSpec",
    "ValidationError",
    "VarianceReport",
    "WeightMatrix",
    "bekessy_estimate",
    "build_e_tilde",
    "build_h_tilde",
    "chebyshev_sample_count",
    "choose_elementary_sample_count",
    "choose_sample_count",
    "exact_count_01",
    "exact_count_bruteforce",
    "exact_count_dp",
    "fisher_yates_count",
    "iter_tables",
    "lowrank_01_count",
    "lowrank_asymptotic_count",
    "lowrank_column_sets_count",
    "lowrank_weighted_count",
    "mc_estimate_count",
    "mc_weighted_count",
    "permanent_exact",
    "permanent_float_batch",
    "reduced_pairing",
    "scalar_product",
    "solve_threshold",
    "surjection_count",
    "variance_ratio_report",
    "verify_coefficients",
    "weighted_count_bruteforce",
    "weighted_fy_count",
]
