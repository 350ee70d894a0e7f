"""Approximate quantiles by binary search over threshold queries."""
from __future__ import annotations

import math

from sqmean.core import Query, exact_tail, grid_floor_index, grid_point
from sqmean.estimators.reports import QuantileResult


def required_parameter(p: float, delta: float) -> int:
    """Smallest VSTAT parameter for which the search guarantees hold: ``ceil(4p/delta^2)``."""
    # tolerate rounding in 4p/delta^2 (e.g. p = 16/n, delta = 8/n gives n)
    return math.ceil(4 * p / delta**2 - 1e-9)


def _check_levels(p: float, delta: float) -> None:
    if not (0 < delta and 2 * delta <= p <= 1):
        raise ValueError(f"need 1 >= p >= 2 delta > 0, got p={p}, delta={delta}")


def _bracket_search(oracle, q: Query, threshold: float, count: int, point_of):
    """Largest index whose threshold query clears ``threshold``.

    Index 0 is assumed to clear (callers guarantee it) and index ``count``
    is a sentinel that fails. Returns ``(lo, steps)`` with ``lo + 1`` the
    failing neighbour.
    """
    lo, hi = 0, count
    steps = []
    while hi - lo > 1:
        mid = (lo + hi) // 2
        z = point_of(mid)
        estimate = oracle.query(q.derive((q.values >= z).astype(float), 0.0, 1.0))
        steps.append((float(z), estimate))
        if estimate >= threshold:
            lo = mid
        else:
            hi = mid
    return lo, tuple(steps)


def quantile_search(oracle, q: Query, p: float, delta: float) -> QuantileResult:
    """Point ``a`` of the range of ``q`` with ``Pr[q >= a] >= p - delta`` and ``Pr[q > a] < p``.

    Needs an oracle at least as accurate as VSTAT(ceil(4p/delta^2)). The
    minimum of the range is never queried: its tail is 1, and any compliant
    answer there clears ``p - delta/2``.
    """
    _check_levels(p, delta)
    need = required_parameter(p, delta)
    if oracle.n < need:
        raise ValueError(f"oracle parameter {oracle.n} is below the required {need}")
    Z = q.distinct_values()
    lo, steps = _bracket_search(oracle, q, p - delta / 2, Z.size, lambda i: Z[i])
    a = float(Z[lo])
    return QuantileResult(
        point=a,
        tail_at_point=exact_tail(q.dist, q, a),
        strict_tail_at_point=exact_tail(q.dist, q, a, strict=True),
        queries_used=len(steps),
        successor=float(Z[lo + 1]) if lo + 1 < Z.size else math.inf,
        threshold=p - delta / 2,
        steps=steps,
    )


def tail_quantile(oracle, q: Query, n: int | None = None) -> QuantileResult:
    """Point ``a`` with ``Pr[q >= a] >= 8/n`` and ``Pr[q > a] < 16/n`` using VSTAT(n)."""
    n = oracle.n if n is None else n
    if n < 32:
        raise ValueError(f"tail_quantile needs n >= 32, got {n}")
    p, delta = 16 / n, 8 / n
    assert abs(4 * p / delta**2 - n) <= 1e-9 * n
    return quantile_search(oracle, q, p, delta)


def approximate_median(oracle, q: Query) -> QuantileResult:
    """Point ``a`` with at least 1/3 of the mass on each side (``>= a`` and ``<= a``).

    Runs the quantile search with ``p = 1/2``, ``delta = 1/6`` so the oracle
    parameter must be at least 72.
    """
    return quantile_search(oracle, q, 0.5, 1 / 6)


def grid_quantile(oracle, q: Query, B: float, zeta: float, p: float, delta: float) -> QuantileResult:
    """Multiple ``a`` of ``zeta`` with ``Pr[q >= a] >= p - delta`` and ``Pr[q >= a + zeta] < p``.

    ``q`` must take values in ``[-B, B]``. The search runs over the grid
    from the largest multiple of ``zeta`` at or below ``-B`` up to the largest
    at or below ``B``, so it costs about ``log2(2B/zeta) + 1`` queries no
    matter how many distinct values ``q`` has.
    """
    _check_levels(p, delta)
    if not (B > 0 and 0 < zeta < 2 * B):
        raise ValueError(f"need 0 < zeta < 2B, got zeta={zeta}, B={B}")
    if q.values.min() < -B or q.values.max() > B:
        raise ValueError("query values must lie in [-B, B]")
    need = required_parameter(p, delta)
    if oracle.n < need:
        raise ValueError(f"oracle parameter {oracle.n} is below the required {need}")
    k_lo = grid_floor_index(-B, zeta)
    k_hi = grid_floor_index(B, zeta)
    count = k_hi - k_lo + 1
    lo, steps = _bracket_search(oracle, q, p - delta / 2, count, lambda i: grid_point(k_lo + i, zeta))
    a = grid_point(k_lo + lo, zeta)
    above = grid_point(k_lo + lo + 1, zeta)
    return QuantileResult(
        point=a,
        tail_at_point=exact_tail(q.dist, q, a),
        strict_tail_at_point=exact_tail(q.dist, q, above),
        queries_used=len(steps),
        successor=above,
        threshold=p - delta / 2,
        steps=steps,
    )
