import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from sqmean.api import (
    DyadicMean,
    KnownBoundMean,
    NaiveMean,
    NonnegMean,
    RelativeAccuracyMean,
    SignedMean,
    VectorMean,
)


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    return np.c_[rng.lognormal(size=400), rng.normal(3, 1, 400)]


def test_get_params_roundtrip():
    est = SignedMean(n=256, zeta=0.05, policy="adversarial-up", random_state=3)
    twin = clone(est)
    assert twin.get_params() == est.get_params()


@pytest.mark.parametrize("cls", [SignedMean, NonnegMean, RelativeAccuracyMean])
def test_fit_reports_bound(cls, data):
    X = np.abs(data) if cls is NonnegMean else data
    est = cls(policy="adversarial-down", random_state=1).fit(X)
    assert est.mean_.shape == (2,)
    for rep in est.reports_:
        assert rep.realized_error <= rep.theoretical_bound


def test_transform_centers(data):
    est = SignedMean(n=1024, zeta=0.001)
    out = est.fit_transform(data)
    np.testing.assert_allclose(out, data - est.mean_)
    np.testing.assert_allclose(est.inverse_transform(out), data)
    with pytest.raises(ValueError):
        est.transform(data[:, :1])


def test_naive_and_dyadic(data):
    X = np.abs(data)
    assert NaiveMean(n=100).fit(X).mean_ == pytest.approx(X.mean(0))
    dy = DyadicMean(n=4096).fit(X)
    for rep in dy.reports_:
        assert rep.realized_error <= rep.theoretical_bound


def test_known_bound(data):
    est = KnownBoundMean(eps=0.1, policy="adversarial-up").fit(np.abs(data))
    assert np.all(np.abs(est.mean_ - np.abs(data).mean(0)) <= 0.1)


def test_vector(data):
    rng = np.random.default_rng(1)
    Y = rng.normal(0.2, 0.1, (300, 8))
    est = VectorMean(eps=0.25).fit(Y)
    assert np.linalg.norm(est.mean_ - Y.mean(0)) <= 0.25
    assert len(est.reports_) == 8


def test_sample_weight_and_pipeline(data):
    w = np.ones(len(data))
    w[:200] = 3.0
    est = SignedMean().fit(data, sample_weight=w)
    assert est.reports_[1].true_value == pytest.approx(np.average(data[:, 1], weights=w))
    pipe = make_pipeline(SignedMean(random_state=0))
    assert pipe.fit_transform(data).shape == data.shape


def test_random_state_reproducible(data):
    a = SignedMean(policy="adversarial-seeded-random-sign", random_state=5).fit(data).mean_
    b = SignedMean(policy="adversarial-seeded-random-sign", random_state=5).fit(data).mean_
    np.testing.assert_array_equal(a, b)
