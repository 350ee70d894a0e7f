"""Adaptive estimators whose error scales with the standard deviation, not the range."""
from __future__ import annotations

import math

import numpy as np

from sqmean.core import (
    FiniteDistribution,
    PreconditionError,
    Query,
    clamp,
    discretize_round_down,
    exact_moments,
    grid_floor,
    grid_floor_index,
    grid_point,
)
from sqmean.estimators.dyadic import _constant_report, dyadic_mean
from sqmean.estimators.quantiles import quantile_search, tail_quantile
from sqmean.estimators.reports import BudgetTracker, EstimateReport, VectorMeanResult, make_report

# Documented constant C in: vector_mean queries <= C * d * log2(d B / eps).
VECTOR_QUERY_CONSTANT = 16

_SLACK = 1 + 1e-9


def _check_second_moment(q: Query, B: float) -> float:
    if not B > 0:
        raise ValueError(f"B must be positive, got {B!r}")
    s = math.sqrt(exact_moments(q.dist, q).second_moment)
    if s > B * _SLACK:
        raise PreconditionError(f"second moment bound violated: sqrt(D[q^2]) = {s:.6g} > B = {B:.6g}")
    return s


def _log_factor(n: int) -> float:
    return math.log2(8 * n) / math.sqrt(n)


def nonneg_mean(oracle_factory, q: Query, n: int, zeta: float, B: float) -> EstimateReport:
    """Mean of a nonnegative query within ``2 s log2(8n)/sqrt(n) + zeta``.

    ``s`` is the root second moment of ``q``; only ``D[q^2] <= B^2`` is
    assumed. Steps: round down to multiples of ``zeta/2`` after capping at
    ``2B^2/zeta``, locate the top-``8/n`` tail point ``a`` with a quantile
    search, truncate at ``a`` and run the dyadic estimator on the result.
    """
    if n < 32:
        raise ValueError(f"nonneg_mean needs n >= 32, got {n}")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    if q.values.min() < 0:
        raise ValueError("nonneg_mean expects a nonnegative query")
    s = _check_second_moment(q, B)
    tracker = BudgetTracker()
    oracle = tracker.watch(oracle_factory(q.dist, n))
    if q.declared_lo == q.declared_hi:
        return _constant_report(q, tracker, n)

    # Chebyshev: capping at c moves the mean by at most B^2/c = zeta/2.
    psi = discretize_round_down(q, zeta / 2, 2 * B * B / zeta)
    a = tail_quantile(oracle, psi, n).point
    if a > 0:
        value = dyadic_mean(oracle, psi.derive(clamp(psi.values, a), 0.0, a)).value
    else:
        value = 0.0
    bound = 2 * s * math.log2(8 * n) / math.sqrt(n) + zeta
    return make_report(value, q, bound, tracker, n, notes=f"tail_point={a!r}")


def median_grid_step(n: int, zeta: float) -> float:
    """Grid step for locating the split point in :func:`signed_mean`.

    Rounding the split point to this grid costs at most ``zeta/4`` of the
    final error budget.
    """
    return zeta / (8 * math.sqrt(2) * _log_factor(n))


def signed_mean(oracle_factory, q: Query, n: int, zeta: float, B: float) -> EstimateReport:
    """Mean of a real query within ``8 sigma log2(8n)/sqrt(n) + zeta`` given ``D[q^2] <= B^2``.

    The query is rounded down to a fine grid and a split point ``a`` of the
    rounded values is found with a quantile search on the same VSTAT(n)
    oracle (``p = 1/2``, ``delta = sqrt(2/n)``), so at least 1/4 of the mass
    is at or above ``a`` and at least 1/2 below ``a + h``. By Cantelli's
    inequality ``a`` is then within ``sqrt(3) sigma + h`` of the mean, hence
    ``sqrt(E[(q - a)^2]) <= 2 sigma + h``. Then ``(q - a)+`` and ``(a - q)+``
    are estimated separately with :func:`nonneg_mean` at precision
    ``3 zeta / 8`` each and recombined.
    """
    if n < 32:
        raise ValueError(f"signed_mean needs n >= 32, got {n}")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    _check_second_moment(q, B)
    moments = exact_moments(q.dist, q)
    tracker = BudgetTracker()
    factory = tracker.wrap(oracle_factory)
    if q.declared_lo == q.declared_hi:
        return _constant_report(q, tracker, n)

    h = median_grid_step(n, zeta)
    p_split, delta_split = 0.5, math.sqrt(2 / n)
    # Markov on q^2: a split point with mass beta above it lies below B / sqrt(beta)
    reach = B / math.sqrt(p_split - delta_split)
    lower = grid_point(grid_floor_index(-reach, h), h)
    upper = grid_point(grid_floor_index(reach, h) + 1, h)
    rounded = q.derive(np.clip(grid_floor(q.values, h), lower, upper), lower, upper)
    a = quantile_search(factory(q.dist, n), rounded, p_split, delta_split).point

    lo, hi = q.declared_lo, q.declared_hi
    above = q.derive(np.maximum(q.values - a, 0.0), max(lo - a, 0.0), max(hi - a, 0.0))
    below = q.derive(np.maximum(a - q.values, 0.0), max(a - hi, 0.0), max(a - lo, 0.0))
    shifted_B = B + abs(a)
    half_zeta = 3 * zeta / 8
    v_above = nonneg_mean(factory, above, n, half_zeta, shifted_B).value
    v_below = nonneg_mean(factory, below, n, half_zeta, shifted_B).value

    bound = 8 * moments.std_dev * _log_factor(n) + zeta
    return make_report(a + v_above - v_below, q, bound, tracker, n, notes=f"split={a!r}")


def relative_accuracy_parameter(eps: float) -> int:
    """Smallest ``n >= 32`` with ``8 log2(8n) / sqrt(n) <= eps``."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    lo, hi = 32, 64
    if 8 * _log_factor(lo) <= eps:
        return lo
    while 8 * _log_factor(hi) > eps:
        lo, hi = hi, hi * 2
    # 8 log2(8n)/sqrt(n) is decreasing in n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if 8 * _log_factor(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def relative_accuracy_mean(oracle_factory, q: Query, eps: float, zeta: float, B: float) -> EstimateReport:
    """Mean within ``eps * sigma + zeta``; picks the VSTAT parameter from ``eps``."""
    if not B > zeta > 0:
        raise ValueError(f"need B > zeta > 0, got B={B}, zeta={zeta}")
    n = relative_accuracy_parameter(eps)
    inner = signed_mean(oracle_factory, q, n, zeta, B)
    sigma = exact_moments(q.dist, q).std_dev
    return EstimateReport(
        value=inner.value,
        true_value=inner.true_value,
        realized_error=inner.realized_error,
        theoretical_bound=eps * sigma + zeta,
        queries_used=inner.queries_used,
        oracle_parameter=n,
        notes=inner.notes,
        bits_used=inner.bits_used,
    )


def vector_query_budget(d: int, B: float, eps: float) -> float:
    return VECTOR_QUERY_CONSTANT * d * math.log2(d * B / eps)


def vector_mean(oracle_factory, dists: list[FiniteDistribution], eps: float, B: float) -> VectorMeanResult:
    """Mean vector within ``eps`` in l2 norm, one coordinate at a time.

    ``dists`` are the coordinate marginals; every query looks at a single
    coordinate so nothing else about the joint law is needed. Requires total
    variance at most 1 and total second moment at most ``B^2``. Each
    coordinate gets relative accuracy ``eps/2`` and additive slack
    ``eps / (2 sqrt(d))``, so the l2 error is at most
    ``eps/2 * sqrt(sum var) + eps/2 <= eps``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    if not B > eps:
        raise ValueError(f"need B > eps, got B={B}, eps={eps}")
    d = len(dists)
    if d == 0:
        raise ValueError("need at least one coordinate")
    queries = [Query.identity(dist) for dist in dists]
    moments = [exact_moments(q.dist, q) for q in queries]
    total_var = math.fsum(m.variance for m in moments)
    total_second = math.fsum(m.second_moment for m in moments)
    if total_var > 1 * _SLACK:
        raise PreconditionError(f"total variance {total_var:.6g} exceeds 1")
    if total_second > B * B * _SLACK:
        raise PreconditionError(f"total second moment {total_second:.6g} exceeds B^2 = {B * B:.6g}")

    zeta = eps / (2 * math.sqrt(d))
    reports = tuple(relative_accuracy_mean(oracle_factory, q, eps / 2, zeta, B) for q in queries)
    estimate = np.array([r.value for r in reports])
    truth = np.array([m.mean for m in moments])
    return VectorMeanResult(
        estimate=estimate,
        true_mean=truth,
        realized_error=float(np.linalg.norm(estimate - truth)),
        theoretical_bound=eps,
        queries_used=sum(r.queries_used for r in reports),
        oracle_parameter=reports[0].oracle_parameter,
        bits_used=sum(r.bits_used for r in reports),
        coordinates=reports,
    )
