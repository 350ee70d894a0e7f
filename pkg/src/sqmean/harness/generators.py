"""Finite-support test distributions, including discretized heavy-tailed families.

Continuous families are placed on a grid by midpoint mass assignment: the
point ``x`` receives ``F(x + step/2) - F(x - step/2)``. Mass beyond the cap is
assigned to the outermost grid point, so every generated distribution has
finite moments.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

from sqmean.core import FiniteDistribution

KINDS = (
    "uniform-grid",
    "two-point",
    "point-mass",
    "discretized-gaussian",
    "discretized-lognormal",
    "discretized-pareto",
    "empirical-file",
)


def _positive(spec: dict, key: str) -> float:
    value = float(spec[key])
    if not value > 0:
        raise ValueError(f"{spec.get('kind')}: {key} must be positive, got {value}")
    return value


def _midpoint_masses(cdf, points: np.ndarray, step: float) -> np.ndarray:
    edges = np.concatenate([points - step / 2, [points[-1] + step / 2]])
    F = cdf(edges)
    F[0] = 0.0
    F[-1] = 1.0
    return np.diff(F)


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def discretized_gaussian(mean: float, std: float, step: float, cap: float) -> FiniteDistribution:
    """Gaussian on ``mean + k*step`` for ``|k*step| <= cap``."""
    half = np.arange(1, int(math.floor(cap / step + 1e-9)) + 1) * step
    points = mean + np.concatenate([-half[::-1], [0.0], half])
    weights = _midpoint_masses(stats.norm(mean, std).cdf, points, step)
    return FiniteDistribution(points, weights)


def discretized_lognormal(mu: float, sigma: float, step: float, cap: float) -> FiniteDistribution:
    points = _grid(0.0, cap, step)
    weights = _midpoint_masses(stats.lognorm(s=sigma, scale=math.exp(mu)).cdf, points, step)
    return FiniteDistribution(points, weights)


def discretized_pareto(alpha: float, xmin: float, step: float, cap: float) -> FiniteDistribution:
    if not alpha > 2:
        raise ValueError(f"pareto shape must exceed 2 for a finite second moment, got {alpha}")
    if not cap > xmin:
        raise ValueError("pareto cap must exceed xmin")
    points = _grid(xmin, cap, step)
    weights = _midpoint_masses(stats.pareto(b=alpha, scale=xmin).cdf, points, step)
    return FiniteDistribution(points, weights)


def generate_distribution(spec: dict) -> FiniteDistribution:
    """Build a distribution from a ``{"kind": ..., **params}`` mapping."""
    kind = spec.get("kind")
    if kind == "uniform-grid":
        step = _positive(spec, "step")
        lo, hi = float(spec["lo"]), float(spec["hi"])
        if hi < lo:
            raise ValueError("uniform-grid needs lo <= hi")
        return FiniteDistribution.uniform(_grid(lo, hi, step))
    if kind == "two-point":
        p = float(spec.get("p", 0.5))
        if not 0 <= p <= 1:
            raise ValueError("two-point p must lie in [0, 1]")
        return FiniteDistribution([spec["lo"], spec["hi"]], [1 - p, p])
    if kind == "point-mass":
        return FiniteDistribution.point_mass(float(spec["value"]))
    if kind == "discretized-gaussian":
        return discretized_gaussian(
            float(spec.get("mean", 0.0)), _positive(spec, "std"), _positive(spec, "step"), _positive(spec, "cap")
        )
    if kind == "discretized-lognormal":
        return discretized_lognormal(
            float(spec.get("mu", 0.0)), _positive(spec, "sigma"), _positive(spec, "step"), _positive(spec, "cap")
        )
    if kind == "discretized-pareto":
        return discretized_pareto(
            float(spec["alpha"]), _positive(spec, "xmin"), _positive(spec, "step"), _positive(spec, "cap")
        )
    if kind == "empirical-file":
        return FiniteDistribution.from_file(spec["path"])
    raise ValueError(f"unknown distribution kind {kind!r}; expected one of {KINDS}")


def generate_coordinates(spec: dict) -> list[FiniteDistribution]:
    """Coordinate marginals for a ``{"kind": "product", ...}`` spec.

    Either ``"coordinates": [spec, ...]`` or ``"d"`` copies of ``"coordinate"``
    (a ``"means"`` list, if given, overrides each copy's mean).
    """
    if spec.get("kind") != "product":
        raise ValueError("vector estimators need a distribution of kind 'product'")
    if "coordinates" in spec:
        return [generate_distribution(c) for c in spec["coordinates"]]
    d = int(spec["d"])
    base = dict(spec["coordinate"])
    means = spec.get("means")
    out = []
    for i in range(d):
        coord = dict(base)
        if means is not None:
            coord["mean"] = means[i]
        out.append(generate_distribution(coord))
    return out
