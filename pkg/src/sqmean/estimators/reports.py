from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sqmean.core import Query, exact_moments


@dataclass(frozen=True)
class EstimateReport:
    value: float
    true_value: float
    realized_error: float
    theoretical_bound: float
    queries_used: int
    oracle_parameter: int
    notes: str = ""
    bits_used: int = 0


@dataclass(frozen=True)
class QuantileResult:
    """Output of a threshold binary search.

    ``strict_tail_at_point`` is the exact mass above the cell of ``point``:
    ``Pr[q > point]`` when searching the range of ``q``, and
    ``Pr[q >= point + zeta]`` when searching a grid of step ``zeta``.
    ``steps`` records every (threshold, oracle answer) pair in order.
    """

    point: float
    tail_at_point: float
    strict_tail_at_point: float
    queries_used: int
    successor: float = float("inf")
    threshold: float = 0.0
    steps: tuple = ()


@dataclass(frozen=True)
class VectorMeanResult:
    estimate: np.ndarray
    true_mean: np.ndarray
    realized_error: float
    theoretical_bound: float
    queries_used: int
    oracle_parameter: int
    bits_used: int = 0
    coordinates: tuple = field(default=(), repr=False)


class BudgetTracker:
    """Sums ledger deltas over every oracle an estimator touches."""

    def __init__(self):
        self._seen: dict[int, tuple] = {}

    def watch(self, oracle):
        if id(oracle) not in self._seen:
            self._seen[id(oracle)] = (oracle, oracle.ledger.snapshot())
        return oracle

    def wrap(self, factory):
        return lambda dist, n: self.watch(factory(dist, n))

    @property
    def queries(self) -> int:
        return sum(o.ledger.queries_asked - s[0] for o, s in self._seen.values())

    @property
    def bits(self) -> int:
        return sum(o.ledger.bits_consumed - s[1] for o, s in self._seen.values())


def make_report(value, q: Query, bound, tracker: BudgetTracker, parameter, notes="") -> EstimateReport:
    truth = exact_moments(q.dist, q).mean
    value = float(value)
    return EstimateReport(
        value=value,
        true_value=truth,
        realized_error=abs(value - truth),
        theoretical_bound=float(bound),
        queries_used=tracker.queries,
        oracle_parameter=int(parameter),
        notes=notes,
        bits_used=tracker.bits,
    )
