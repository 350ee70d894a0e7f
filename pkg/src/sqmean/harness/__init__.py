"""Experiment harness: distribution generators, config-driven runs and the CLI."""
from sqmean.harness.experiment import (
    CSV_FIELDS,
    ESTIMATORS,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    build_query,
    compare_naive,
    emit_results,
    plan_experiment,
    rows_from_csv,
    rows_from_json,
    rows_to_csv,
    rows_to_json,
    run_experiment,
    trial_seed,
)
from sqmean.harness.generators import (
    KINDS,
    discretized_gaussian,
    discretized_lognormal,
    discretized_pareto,
    generate_coordinates,
    generate_distribution,
)

__all__ = [
    "CSV_FIELDS",
    "ESTIMATORS",
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "build_query",
    "compare_naive",
    "discretized_gaussian",
    "discretized_lognormal",
    "discretized_pareto",
    "emit_results",
    "generate_coordinates",
    "generate_distribution",
    "plan_experiment",
    "rows_from_csv",
    "rows_from_json",
    "rows_to_csv",
    "rows_to_json",
    "run_experiment",
    "trial_seed",
]
