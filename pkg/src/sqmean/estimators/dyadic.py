"""Single-query baseline and the non-adaptive dyadic estimators."""
from __future__ import annotations

import math

import numpy as np

from sqmean.core import PreconditionError, Query, clamp, exact_moments
from sqmean.estimators.reports import BudgetTracker, EstimateReport, make_report


def _constant_report(q: Query, tracker: BudgetTracker, parameter: int) -> EstimateReport:
    # declared range is a single point: the mean is known without asking anything
    return make_report(q.declared_lo, q, 0.0, tracker, parameter, notes="degenerate declared range")


def floor_log2(n) -> int:
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    return n.bit_length() - 1


def naive_mean(oracle, q: Query) -> EstimateReport:
    """Rescale the declared range onto [0, 1], ask once, and scale back.

    The error of this baseline grows linearly with the declared range length.
    """
    tracker = BudgetTracker()
    tracker.watch(oracle)
    lo, hi = q.declared_lo, q.declared_hi
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("naive_mean needs a finite declared range")
    if hi == lo:
        return _constant_report(q, tracker, oracle.n)
    width = hi - lo
    scaled = q.derive(np.clip((q.values - lo) / width, 0.0, 1.0), 0.0, 1.0)
    answer = oracle.query(scaled)
    p = exact_moments(q.dist, scaled).mean
    bound = width * oracle.tolerance(min(max(p, 0.0), 1.0))
    return make_report(lo + width * answer, q, bound, tracker, oracle.n)


def dyadic_mean(oracle, q: Query, levels: int | None = None) -> EstimateReport:
    """Mean of a nonnegative query on [0, R] from ``floor(log2 n)`` non-adaptive queries.

    The range is split into the dyadic bands ``(R 2^-i, R 2^-i+1]`` and the
    restriction of ``q`` to each band, rescaled to fill [0, 1], is queried
    once. Mass below the last band is dropped. Error is at most
    ``4R/n + 2 s log2(n) / sqrt(n)`` with ``s`` the root second moment of ``q``.

    ``levels`` overrides the number of bands (callers that can bound the
    dropped mass themselves use fewer).
    """
    tracker = BudgetTracker()
    tracker.watch(oracle)
    if q.declared_lo < 0 or q.values.min() < 0:
        raise ValueError("dyadic_mean expects a nonnegative query")
    R = q.declared_hi
    if not math.isfinite(R):
        raise ValueError("dyadic_mean needs a finite declared upper bound")
    n = oracle.n
    if n < 2:
        raise ValueError("dyadic_mean needs an oracle parameter of at least 2")
    if q.declared_lo == q.declared_hi:
        return _constant_report(q, tracker, n)
    default_levels = floor_log2(n)
    t = default_levels if levels is None else int(levels)
    if t < 1:
        raise ValueError("need at least one band")

    x = np.clip(q.values / R, 0.0, 1.0)
    terms = []
    for i in range(1, t + 1):
        lo, hi = 2.0 ** -i, 2.0 ** (-i + 1)
        band = np.where((x > lo) & (x <= hi), 2.0 ** (i - 1) * x, 0.0)
        v = oracle.query(q.derive(band, 0.0, 1.0))
        terms.append(2.0 ** (-i + 1) * v)
    value = R * math.fsum(terms)

    s = math.sqrt(exact_moments(q.dist, q).second_moment)
    if t == default_levels:
        bound = 4 * R / n + 2 * s * math.log2(n) / math.sqrt(n)
    else:
        bound = R * 2.0 ** -t + 2 * R / n + 2 * t * s / math.sqrt(n)
    return make_report(value, q, bound, tracker, n, notes=f"bands={t}")


def known_bound_parameters(B: float, eps: float) -> dict:
    """Oracle parameter, truncation point and band count for :func:`known_bound_mean`.

    All quantities are in units where the second-moment bound is 1.
    """
    if not (B > 0 and eps > 0):
        raise ValueError("B and eps must be positive")
    if eps > B / 16:
        raise ValueError(f"eps must be at most B/16 (got eps={eps}, B={B})")
    log_ratio = math.log2(B / eps)
    rel = eps / B
    n = math.ceil((8 * B * log_ratio / eps) ** 2)
    # Dropping mass below a * 2^-levels costs at most eps/4 once levels >= 4 + 2 log(B/eps).
    levels = min(
        math.ceil(4 + 2 * log_ratio - 1e-9),
        math.floor(3 * log_ratio + 1e-9),
        floor_log2(n),
    )
    return {"n": n, "cap": 4 / rel, "levels": levels, "rel_eps": rel}


def known_bound_error_budget(B: float, eps: float) -> float:
    """Worst-case error (relative to B) of :func:`known_bound_mean` under any compliant oracle.

    Sum of: truncation at ``a`` (Chebyshev, ``1/a``), mass below the last
    band (``a 2^-levels``), the ``1/n`` floors (``2a/n``), and the variance
    terms, which Cauchy-Schwarz across bands bounds by ``2 sqrt(levels / n)``.
    """
    p = known_bound_parameters(B, eps)
    a, n, t = p["cap"], p["n"], p["levels"]
    return 1 / a + a * 2.0 ** -t + 2 * a / n + 2 * math.sqrt(t / n)


def known_bound_mean(oracle_factory, q: Query, B: float, eps: float) -> EstimateReport:
    """Mean of a nonnegative query within ``eps`` given ``D[q^2] <= B^2``.

    Truncates at ``4B^2/eps`` and runs the dyadic estimator on a VSTAT oracle
    with parameter ``ceil((8 B log2(B/eps) / eps)^2)``. Uses at most
    ``3 log2(B/eps)`` queries, all chosen before any answer is seen.
    """
    params = known_bound_parameters(B, eps)
    if q.values.min() < 0:
        raise ValueError("known_bound_mean expects a nonnegative query")
    s = math.sqrt(exact_moments(q.dist, q).second_moment)
    if s > B * (1 + 1e-9):
        raise PreconditionError(f"second moment bound violated: sqrt(D[q^2]) = {s} > B = {B}")
    tracker = BudgetTracker()
    oracle = tracker.watch(oracle_factory(q.dist, params["n"]))
    if q.declared_lo == q.declared_hi:
        return _constant_report(q, tracker, params["n"])

    a = params["cap"]
    scaled = q.derive(clamp(q.values / B, a), 0.0, a)
    inner = dyadic_mean(oracle, scaled, levels=params["levels"])
    return make_report(
        B * inner.value, q, eps, tracker, params["n"], notes=f"bands={params['levels']}"
    )
