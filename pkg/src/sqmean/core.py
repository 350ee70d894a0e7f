"""Exact finite-support probability machinery.

Everything downstream (oracles, estimators, verification) treats the objects
here as ground truth: expectations, tails and quantiles are computed by direct
weighted sums over the support, with no sampling noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

# Constructor accepts weights this far from summing to one, then renormalizes.
WEIGHT_TOL = 1e-12


class PreconditionError(ValueError):
    """A documented precondition of an estimator does not hold."""


class FiniteDistribution:
    """Probability distribution over finitely many real points.

    Duplicate support points are merged (weights summed) and the support is
    stored strictly increasing. Weights are renormalized so they sum to one.
    """

    __slots__ = ("support", "weights")

    def __init__(self, support, weights):
        support = np.asarray(support, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if support.size == 0:
            raise ValueError("support must be non-empty")
        if support.shape != weights.shape:
            raise ValueError("support and weights must have the same length")
        if not (np.all(np.isfinite(support)) and np.all(np.isfinite(weights))):
            raise ValueError("support and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        points, inverse = np.unique(support, return_inverse=True)
        merged = np.bincount(inverse, weights=weights, minlength=points.size)
        merged = merged / math.fsum(merged)
        points.setflags(write=False)
        merged.setflags(write=False)
        object.__setattr__(self, "support", points)
        object.__setattr__(self, "weights", merged)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteDistribution is immutable")

    def __len__(self) -> int:
        return self.support.size

    def __repr__(self) -> str:
        if len(self) <= 6:
            pairs = ", ".join(f"{x:g}: {w:g}" for x, w in zip(self.support, self.weights))
            return f"FiniteDistribution({{{pairs}}})"
        return f"FiniteDistribution(<{len(self)} points in [{self.support[0]:g}, {self.support[-1]:g}]>)"

    @classmethod
    def from_dict(cls, mass: dict[float, float]) -> "FiniteDistribution":
        return cls(list(mass.keys()), list(mass.values()))

    @classmethod
    def point_mass(cls, x: float) -> "FiniteDistribution":
        return cls([x], [1.0])

    @classmethod
    def uniform(cls, points) -> "FiniteDistribution":
        points = np.asarray(points, dtype=float).ravel()
        return cls(points, np.full(points.size, 1.0 / points.size))

    @classmethod
    def from_samples(cls, samples, sample_weight=None) -> "FiniteDistribution":
        """Empirical distribution of ``samples`` (optionally weighted)."""
        samples = np.asarray(samples, dtype=float).ravel()
        if sample_weight is None:
            sample_weight = np.ones_like(samples)
        sample_weight = np.asarray(sample_weight, dtype=float).ravel()
        total = math.fsum(sample_weight)
        if not total > 0:
            raise ValueError("sample weights must have a positive sum")
        return cls(samples, sample_weight / total)

    @classmethod
    def from_file(cls, path) -> "FiniteDistribution":
        """Read ``value weight`` lines (``#`` comments allowed); weights are renormalized."""
        try:
            table = np.loadtxt(path, comments="#", ndmin=2, dtype=float)
        except ValueError as exc:
            raise ValueError(f"malformed distribution file {path}: {exc}") from exc
        if table.shape[0] == 0 or table.shape[1] != 2:
            raise ValueError(f"{path}: expected one 'value weight' pair per line")
        weights = table[:, 1]
        total = math.fsum(weights)
        if not total > 0:
            raise ValueError(f"{path}: weights must have a positive sum")
        return cls(table[:, 0], weights / total)

    def to_file(self, path) -> None:
        lines = ["# value weight"]
        lines += [f"{x!r} {w!r}" for x, w in zip(self.support.tolist(), self.weights.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class Query:
    """A real-valued function on the support of ``dist``, one value per point.

    ``declared_lo``/``declared_hi`` is the range the algorithm is told about;
    it must contain every value and may be infinite.
    """

    dist: FiniteDistribution
    values: np.ndarray
    declared_lo: float = None
    declared_hi: float = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != len(self.dist):
            raise ValueError(
                f"query has {values.size} values but the distribution has {len(self.dist)} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("query values must be finite")
        values.setflags(write=False)
        lo = float(values.min()) if self.declared_lo is None else float(self.declared_lo)
        hi = float(values.max()) if self.declared_hi is None else float(self.declared_hi)
        if not (lo <= values.min() and values.max() <= hi):
            raise ValueError(f"declared range [{lo}, {hi}] does not contain the query values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "declared_lo", lo)
        object.__setattr__(self, "declared_hi", hi)

    @classmethod
    def identity(cls, dist: FiniteDistribution, declared_lo=None, declared_hi=None) -> "Query":
        return cls(dist, dist.support, declared_lo, declared_hi)

    @classmethod
    def from_function(cls, dist: FiniteDistribution, fn: Callable, declared_lo=None, declared_hi=None) -> "Query":
        return cls(dist, np.asarray(fn(dist.support), dtype=float), declared_lo, declared_hi)

    def derive(self, values, declared_lo=None, declared_hi=None) -> "Query":
        """New query on the same distribution."""
        return Query(self.dist, values, declared_lo, declared_hi)

    @property
    def declared_range(self) -> float:
        return self.declared_hi - self.declared_lo

    def distinct_values(self) -> np.ndarray:
        return np.unique(self.values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Moments:
    mean: float
    second_moment: float
    variance: float
    std_dev: float


def _check_radius(a: float) -> None:
    if not a >= 0:
        raise ValueError(f"truncation radius must be nonnegative, got {a!r}")


def clamp(z, a: float):
    """Truncate ``z`` to ``[-a, a]``. Works elementwise on arrays."""
    _check_radius(a)
    if np.ndim(z) == 0:
        z = float(z)
        return a if z > a else (-a if z < -a else z)
    return np.clip(np.asarray(z, dtype=float), -a, a)


def residual(z, a: float):
    """The part of ``z`` removed by :func:`clamp`, ``z - clamp(z, a)``."""
    return z - clamp(z, a)


def exact_moments(dist: FiniteDistribution, q: Query) -> Moments:
    """Mean, second moment and variance of ``q`` under ``dist`` by exactly-rounded sums."""
    _check_bound(dist, q)
    w, v = dist.weights, q.values
    mean = math.fsum(w * v)
    second = math.fsum(w * v * v)
    # sum w (v - mean)^2 is better conditioned than second - mean^2
    variance = max(math.fsum(w * (v - mean) ** 2), 0.0)
    return Moments(mean, second, variance, math.sqrt(variance))


def exact_tail(dist: FiniteDistribution, q: Query, t: float, strict: bool = False) -> float:
    """Pr[q >= t] (or Pr[q > t] when ``strict``)."""
    _check_bound(dist, q)
    mask = q.values > t if strict else q.values >= t
    return min(math.fsum(dist.weights[mask]), 1.0)


def exact_lower_tail(dist: FiniteDistribution, q: Query, t: float) -> float:
    """Pr[q <= t]."""
    _check_bound(dist, q)
    return min(math.fsum(dist.weights[q.values <= t]), 1.0)


def _check_bound(dist: FiniteDistribution, q: Query) -> None:
    if q.dist is not dist and not (
        len(q.dist) == len(dist)
        and np.array_equal(q.dist.support, dist.support)
        and np.array_equal(q.dist.weights, dist.weights)
    ):
        raise ValueError("query is bound to a different distribution")


def grid_point(k: int, step: float) -> float:
    """The ``k``-th multiple of ``step``, snapped to 12 significant digits.

    Snapping keeps decimal grids exact (``3 * 0.1`` is reported as ``0.3``)
    while staying strictly increasing in ``k`` for ``|k| < 1e11``.
    """
    return float(f"{k * step:.12g}")


def grid_floor_index(x: float, step: float) -> int:
    """Largest ``k`` with ``grid_point(k, step) <= x``."""
    k = math.floor(x / step)
    while grid_point(k + 1, step) <= x:
        k += 1
    while grid_point(k, step) > x:
        k -= 1
    return k


def grid_floor(values, step: float) -> np.ndarray:
    """Round each value down to the snapped grid of ``step``."""
    values = np.asarray(values, dtype=float)
    k0 = np.floor(values / step)
    # float division is off by at most one grid index
    ks = np.unique(np.concatenate([k0 - 1, k0, k0 + 1]).ravel())
    points = np.array([grid_point(int(k), step) for k in ks])
    idx = np.searchsorted(points, values, side="right") - 1
    return points[idx]


def discretize_round_down(q: Query, step: float, cap: float) -> Query:
    """Cap nonnegative values at ``cap`` then round down to multiples of ``step``."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    if not cap > 0:
        raise ValueError(f"cap must be positive, got {cap!r}")
    if np.any(q.values < 0):
        raise ValueError("discretize_round_down expects a nonnegative query")
    rounded = grid_floor(np.minimum(q.values, cap), step)
    return q.derive(rounded, 0.0, cap)
