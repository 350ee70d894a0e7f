from sqmean.estimators.dyadic import (
    dyadic_mean,
    known_bound_error_budget,
    known_bound_mean,
    known_bound_parameters,
    naive_mean,
)
from sqmean.estimators.general import (
    VECTOR_QUERY_CONSTANT,
    nonneg_mean,
    relative_accuracy_mean,
    relative_accuracy_parameter,
    signed_mean,
    vector_mean,
    vector_query_budget,
)
from sqmean.estimators.quantiles import (
    approximate_median,
    grid_quantile,
    quantile_search,
    tail_quantile,
)
from sqmean.estimators.reports import EstimateReport, QuantileResult, VectorMeanResult

__all__ = [
    "EstimateReport",
    "QuantileResult",
    "VectorMeanResult",
    "VECTOR_QUERY_CONSTANT",
    "approximate_median",
    "dyadic_mean",
    "grid_quantile",
    "known_bound_error_budget",
    "known_bound_mean",
    "known_bound_parameters",
    "naive_mean",
    "nonneg_mean",
    "quantile_search",
    "relative_accuracy_mean",
    "relative_accuracy_parameter",
    "signed_mean",
    "tail_quantile",
    "vector_mean",
    "vector_query_budget",
]
