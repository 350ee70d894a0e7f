"""scikit-learn style wrappers around the functional estimators.

``fit(X)`` treats each column of ``X`` as an empirical distribution, runs
the estimator against a simulated oracle for that column and stores the
per-column estimates in ``mean_`` (reports in ``reports_``).
``transform`` centers ``X`` with those estimates.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from sqmean import estimators as est
from sqmean.core import FiniteDistribution, Query, exact_moments
from sqmean.harness.experiment import trial_seed
from sqmean.oracles import HONEST, oracle_factory


class _OracleMean(TransformerMixin, BaseEstimator):
    def _factory(self, column: int):
        seed = trial_seed(0 if self.random_state is None else self.random_state, column)
        return oracle_factory(self.oracle, self.policy, seed, self.q_total, self.delta)

    def _columns(self, X, sample_weight):
        X = check_array(X, dtype=float)
        return X, [FiniteDistribution.from_samples(X[:, j], sample_weight) for j in range(X.shape[1])]

    def _estimate(self, factory, dist: FiniteDistribution):
        raise NotImplementedError

    def fit(self, X, y=None, sample_weight=None):
        X, dists = self._columns(X, sample_weight)
        self.reports_ = [self._estimate(self._factory(j), d) for j, d in enumerate(dists)]
        self.mean_ = np.array([r.value for r in self.reports_])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X - self.mean_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        return check_array(X, dtype=float) + self.mean_


def _root_second_moment(dist: FiniteDistribution) -> float:
    s = math.sqrt(exact_moments(dist, Query.identity(dist)).second_moment)
    return s if s > 0 else 1.0


class NaiveMean(_OracleMean):
    """Single rescaled query over ``declared_range`` (the column's min/max when ``None``)."""

    def __init__(self, n=1000, declared_range=None, oracle="vstat", policy=HONEST, random_state=None,
                 q_total=100, delta=0.1):
        self.n = n
        self.declared_range = declared_range
        self.oracle = oracle
        self.policy = policy
        self.random_state = random_state
        self.q_total = q_total
        self.delta = delta

    def _query(self, dist):
        lo, hi = (None, None) if self.declared_range is None else self.declared_range
        return Query(dist, dist.support, lo, hi)

    def _estimate(self, factory, dist):
        return est.naive_mean(factory(dist, self.n), self._query(dist))


class DyadicMean(NaiveMean):
    """Dyadic-band estimator for nonnegative columns on ``[0, R]``."""

    def _query(self, dist):
        hi = dist.support.max() if self.declared_range is None else self.declared_range[1]
        return Query(dist, dist.support, 0.0, hi)

    def _estimate(self, factory, dist):
        return est.dyadic_mean(factory(dist, self.n), self._query(dist))


class KnownBoundMean(_OracleMean):
    """Additive ``eps`` accuracy for nonnegative columns with ``E[x^2] <= B^2``.

    ``B=None`` uses each column's exact root second moment.
    """

    def __init__(self, eps=0.1, B=None, oracle="vstat", policy=HONEST, random_state=None, q_total=100, delta=0.1):
        self.eps = eps
        self.B = B
        self.oracle = oracle
        self.policy = policy
        self.random_state = random_state
        self.q_total = q_total
        self.delta = delta

    def _estimate(self, factory, dist):
        B = _root_second_moment(dist) if self.B is None else self.B
        return est.known_bound_mean(factory, Query.identity(dist), B, self.eps)


class _GeneralMean(_OracleMean):
    def __init__(self, n=1024, zeta=0.01, B=None, oracle="vstat", policy=HONEST, random_state=None,
                 q_total=100, delta=0.1):
        self.n = n
        self.zeta = zeta
        self.B = B
        self.oracle = oracle
        self.policy = policy
        self.random_state = random_state
        self.q_total = q_total
        self.delta = delta

    def _bound(self, dist):
        return _root_second_moment(dist) if self.B is None else self.B


class NonnegMean(_GeneralMean):
    """Nonnegative columns, no range assumption; error ``O(s log n / sqrt n) + zeta``."""

    def _estimate(self, factory, dist):
        return est.nonneg_mean(factory, Query.identity(dist), self.n, self.zeta, self._bound(dist))


class SignedMean(_GeneralMean):
    """Real-valued columns; error ``O(sigma log n / sqrt n) + zeta``."""

    def _estimate(self, factory, dist):
        return est.signed_mean(factory, Query.identity(dist), self.n, self.zeta, self._bound(dist))


class RelativeAccuracyMean(_OracleMean):
    """Error at most ``eps * sigma + zeta`` per column."""

    def __init__(self, eps=0.5, zeta=0.01, B=None, oracle="vstat", policy=HONEST, random_state=None,
                 q_total=100, delta=0.1):
        self.eps = eps
        self.zeta = zeta
        self.B = B
        self.oracle = oracle
        self.policy = policy
        self.random_state = random_state
        self.q_total = q_total
        self.delta = delta

    def _estimate(self, factory, dist):
        B = _root_second_moment(dist) if self.B is None else self.B
        return est.relative_accuracy_mean(factory, Query.identity(dist), self.eps, self.zeta, max(B, 2 * self.zeta))


class VectorMean(_OracleMean):
    """Mean vector within ``eps`` in l2 norm; needs total variance at most 1.

    ``B=None`` uses the root of the summed second moments.
    """

    def __init__(self, eps=0.25, B=None, oracle="vstat", policy=HONEST, random_state=None, q_total=100, delta=0.1):
        self.eps = eps
        self.B = B
        self.oracle = oracle
        self.policy = policy
        self.random_state = random_state
        self.q_total = q_total
        self.delta = delta

    def fit(self, X, y=None, sample_weight=None):
        X, dists = self._columns(X, sample_weight)
        B = self.B
        if B is None:
            B = math.sqrt(math.fsum(exact_moments(d, Query.identity(d)).second_moment for d in dists)) or 1.0
        self.result_ = est.vector_mean(self._factory(0), dists, self.eps, B)
        self.reports_ = list(self.result_.coordinates)
        self.mean_ = np.asarray(self.result_.estimate, dtype=float)
        self.n_features_in_ = X.shape[1]
        return self
