"""Tests for the estimator-style sampler wrappers."""
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from odebayes.estimators import RksbSampler, RktbSampler, TwoStepSampler
from odebayes.rng import RngStream
from odebayes.solver import dense_eval_many, rk4_solve
from odebayes.systems import get_system

ALL = [RksbSampler, RktbSampler, TwoStepSampler]


@pytest.fixture(scope="module")
def exp_data():
    system = get_system("exponential")
    stream = RngStream(31, 0)
    x = np.sort(stream.uniform(size=120))
    path = rk4_solve(system, np.array([1.0]), 512)
    y = dense_eval_many(path, x) + 0.05 * stream.normal(size=(120, 1))
    return x, y


@pytest.mark.parametrize("cls", ALL)
class TestInterface:
    def test_params_round_trip(self, cls):
        est = cls(system="exponential", draws=50, seed=4)
        params = est.get_params()
        assert params["system"] == "exponential"
        assert params["draws"] == 50
        est.set_params(draws=75)
        assert est.get_params()["draws"] == 75
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_predict_requires_fit(self, cls):
        with pytest.raises(NotFittedError):
            cls().predict([0.5])

    def test_intervals_require_fit(self, cls):
        with pytest.raises(NotFittedError):
            cls().credible_intervals()


def fast_instance(cls):
    if cls is RksbSampler:
        return cls(system="exponential", draws=60, seed=13, burn_in=400)
    return cls(system="exponential", draws=60, seed=13)


@pytest.mark.parametrize("cls", ALL)
class TestFit:
    def test_fit_recovers_rate_and_predicts(self, cls, exp_data):
        x, y = exp_data
        est = fast_instance(cls).fit(x, y)
        assert est.theta_draws_.shape == (60, 1)
        assert est.sigma2_draws_.shape == (60,)
        assert abs(est.theta_mean_[0] - 1.0) < 0.4
        pred = est.predict([0.0, 1.0])
        assert pred.shape == (2, 1)
        assert pred[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert abs(pred[1, 0] - np.e) < 0.5
        intervals = est.credible_intervals(0.9)
        assert intervals.shape == (1, 2)
        assert intervals[0, 0] < est.theta_mean_[0] < intervals[0, 1]

    def test_fit_is_deterministic(self, cls, exp_data):
        x, y = exp_data
        a = fast_instance(cls).fit(x, y)
        b = fast_instance(cls).fit(x, y)
        assert np.array_equal(a.theta_draws_, b.theta_draws_)


def test_acceptance_rate_only_for_random_walk(exp_data):
    x, y = exp_data
    walk = fast_instance(RksbSampler).fit(x, y)
    assert 0.0 < walk.acceptance_rate_ < 1.0
    proj = fast_instance(RktbSampler).fit(x, y)
    assert proj.acceptance_rate_ is None
