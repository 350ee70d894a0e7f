"""Range-independent mean estimation with statistical-query and 1-bit oracles."""
from sqmean.core import (
    FiniteDistribution,
    Moments,
    PreconditionError,
    Query,
    clamp,
    discretize_round_down,
    exact_moments,
    exact_tail,
    residual,
)
from sqmean.oracles import (
    BudgetLedger,
    CommOracle,
    CommVstatOracle,
    OracleContractError,
    StatOracle,
    VstatOracle,
    vstat_tolerance,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetLedger",
    "CommOracle",
    "CommVstatOracle",
    "FiniteDistribution",
    "Moments",
    "OracleContractError",
    "PreconditionError",
    "Query",
    "StatOracle",
    "VstatOracle",
    "clamp",
    "discretize_round_down",
    "exact_moments",
    "exact_tail",
    "residual",
    "vstat_tolerance",
]
