import math

import numpy as np
import pytest

from odebayes.optimize import BoxDomain
from odebayes.rksb import RksbConfig, rksb_gibbs_sigma, rksb_loglik, rksb_run
from odebayes.rng import split_stream
from odebayes.solver import dense_eval_many, rk4_solve
from odebayes.systems import get_system


def test_loglik_zero_residuals_reduces_to_constant():
    sys_ = get_system("exponential")
    path = rk4_solve(sys_, [1.0], 50)
    x = path.nodes[5:45:4]
    y = path.values[5:45:4]
    n = x.shape[0]
    sigma2 = 0.04
    want = -0.5 * n * math.log(2 * math.pi * sigma2)
    got = rksb_loglik(sys_, [1.0], sigma2, x, y, 50)
    assert abs(got - want) <= 1e-10


def test_loglik_single_observation_arithmetic():
    sys_ = get_system("exponential")
    # at t=0 the curve equals the initial state 1 exactly
    got = rksb_loglik(sys_, [1.0], 0.04, np.array([0.0]), np.array([1.3]), 20)
    want = -0.5 * math.log(2 * math.pi * 0.04) - 0.09 / 0.08
    assert abs(got - want) <= 1e-12


def test_loglik_matches_closed_form_solution():
    sys_ = get_system("exponential")
    stream = split_stream(21, 0)
    x = np.sort(stream.uniform(size=50))
    theta = 1.3
    y = np.exp(theta * x) + 0.1 * stream.normal(size=50)
    sigma2 = 0.01
    got = rksb_loglik(sys_, [theta], sigma2, x, y[:, None], 2000)
    resid = y - np.exp(theta * x)
    want = -25.0 * math.log(2 * math.pi * sigma2) - 0.5 * resid @ resid / sigma2
    assert abs(got - want) <= 1e-6


def test_loglik_divergence_is_minus_infinity():
    sys_ = get_system("lotka_volterra")
    x = np.array([0.5])
    y = np.array([[1.0, 1.0]])
    val = rksb_loglik(sys_, [100.0, 0.01, 100.0, 0.01], 0.01, x, y, 100)
    assert val == -math.inf


def test_gibbs_conditional_moments():
    # n=0: the conditional is the prior itself
    draws = np.array([rksb_gibbs_sigma(0.0, 0, 1, 30.0, 5.0, split_stream(3, i))
                      for i in range(20_000)])
    assert abs(draws.mean() - 5.0 / 29.0) <= 0.02 * (5.0 / 29.0)

    # pooled over components: shape n d / 2 + a
    stream = split_stream(4, 0)
    draws = np.array([rksb_gibbs_sigma(3.0, 100, 2, 30.0, 5.0, stream)
                      for _ in range(20_000)])
    want_mean = (0.5 * 3.0 + 5.0) / (130.0 - 1.0)
    assert abs(draws.mean() - want_mean) <= 0.02 * want_mean


def test_gibbs_validation():
    with pytest.raises(ValueError):
        rksb_gibbs_sigma(-1.0, 10, 1, 30.0, 5.0, split_stream(0, 0))
    with pytest.raises(ValueError):
        rksb_gibbs_sigma(math.inf, 10, 1, 30.0, 5.0, split_stream(0, 0))


def test_prior_only_run_recovers_prior_moments():
    sys_ = get_system("exponential")
    config = RksbConfig(chain_length=105_000, burn_in=5_000, thin=1,
                        prior_theta_mean=6.0, prior_theta_var=16.0,
                        domain=BoxDomain(lower=[-60.0], upper=[70.0]))
    out = rksb_run(sys_, np.array([]), np.empty((0, 1)), config, split_stream(17, 0))
    assert out.n_draws == 100_000
    theta = out.theta[:, 0]
    assert abs(theta.mean() - 6.0) <= 0.3          # 5% of the prior mean
    assert abs(theta.var() - 16.0) <= 0.8          # 5% of the prior variance
    ig_mean = 5.0 / 29.0
    assert abs(out.sigma2.mean() - ig_mean) <= 0.02 * ig_mean


def test_posterior_concentrates_near_truth():
    sys_ = get_system("exponential")
    stream = split_stream(42, 0)
    x = np.sort(stream.uniform(size=200))
    y = np.exp(x) + 0.1 * stream.normal(size=200)
    config = RksbConfig(chain_length=6000, burn_in=5000,
                        prior_theta_mean=1.5, prior_theta_var=16.0,
                        domain=BoxDomain(lower=[-10.0], upper=[12.0]))
    out = rksb_run(sys_, x, y, config, split_stream(42, 1))
    mean = out.theta[:, 0].mean()
    sd = out.theta[:, 0].std()
    assert abs(mean - 1.0) <= 3 * sd
    assert sd <= 0.1
    assert np.all(out.sigma2 > 0)
    # noise variance should sit near the true 0.01 (prior pulls it up a bit)
    assert 0.005 <= np.median(out.sigma2) <= 0.05


def test_run_is_deterministic_given_stream_key():
    sys_ = get_system("exponential")
    stream = split_stream(7, 0)
    x = np.sort(stream.uniform(size=40))
    y = np.exp(0.8 * x) + 0.1 * stream.normal(size=40)
    config = RksbConfig(chain_length=1500, burn_in=1000)
    a = rksb_run(sys_, x, y, config, split_stream(7, 1))
    b = rksb_run(sys_, x, y, config, split_stream(7, 1))
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.sigma2, b.sigma2)
    c = rksb_run(sys_, x, y, config, split_stream(7, 2))
    assert not np.array_equal(a.theta, c.theta)


def test_acceptance_rate_lands_in_working_band():
    sys_ = get_system("lotka_volterra")
    stream = split_stream(9, 0)
    x = np.sort(stream.uniform(size=50))
    truth = rk4_solve(sys_, [10.0, 10.0, 10.0, 10.0], 4096)
    y = dense_eval_many(truth, x) + 0.1 * stream.normal(size=(50, 2))
    config = RksbConfig(chain_length=3500, burn_in=2500, thin=1,
                        domain=BoxDomain(lower=[0.1] * 4, upper=[30.0] * 4))
    out = rksb_run(sys_, x, y, config, split_stream(9, 1))
    assert 0.1 <= out.acceptance_rate <= 0.5
    assert out.theta.shape == (1000, 4)
    # adapted, data-informed chain should sit near the generating parameters
    np.testing.assert_allclose(out.theta.mean(axis=0), [10.0] * 4, atol=3.0)


def test_small_grid_warns():
    sys_ = get_system("exponential")
    stream = split_stream(11, 0)
    x = np.sort(stream.uniform(size=300))
    y = np.exp(x) + 0.1 * stream.normal(size=300)
    config = RksbConfig(grid_count=3, chain_length=60, burn_in=40)
    with pytest.warns(UserWarning, match="grid_count"):
        rksb_run(sys_, x, y, config, split_stream(11, 1))


def test_config_and_input_validation():
    sys_ = get_system("exponential")
    with pytest.raises(ValueError):
        RksbConfig(chain_length=100, burn_in=100)
    with pytest.raises(ValueError):
        RksbConfig(thin=0)
    with pytest.raises(ValueError):
        rksb_loglik(sys_, [1.0], -0.1, np.array([0.5]), np.array([1.0]), 20)
    with pytest.raises(ValueError):
        rksb_run(sys_, np.array([0.5, 2.0]), np.array([1.0, 1.0]),
                 RksbConfig(chain_length=20, burn_in=10), split_stream(0, 0))
    with pytest.raises(ValueError):
        rksb_run(sys_, np.array([0.5]), np.array([[1.0, 2.0]]),
                 RksbConfig(chain_length=20, burn_in=10), split_stream(0, 0))
