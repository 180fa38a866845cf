import math

import numpy as np
import pytest

from odebayes.solver import (
    OdeDivergenceError,
    dense_eval,
    dense_eval_many,
    dense_sens_many,
    euler_solve,
    reset_solve_count,
    rk4_solve,
    solve_count,
)
from odebayes.systems import OdeSystem, get_system


def pure_time_system():
    """y' = 3 t^2, y(0)=0, no parameter dependence (generic path)."""
    return OdeSystem(
        name="pure_time", state_dim=1, param_dim=1, initial_state=np.array([0.0]),
        vector_field=lambda t, y, th: np.array([3.0 * t * t]),
        jac_state=lambda t, y, th: np.zeros((1, 1)),
        jac_param=lambda t, y, th: np.zeros((1, 1)),
    )


def constant_rate_system():
    """y' = 2, y(0)=0."""
    return OdeSystem(
        name="constant_rate", state_dim=1, param_dim=1, initial_state=np.array([0.0]),
        vector_field=lambda t, y, th: np.array([2.0]),
        jac_state=lambda t, y, th: np.zeros((1, 1)),
        jac_param=lambda t, y, th: np.zeros((1, 1)),
    )


def test_zero_field_keeps_state_constant():
    sys_ = OdeSystem(
        name="still", state_dim=2, param_dim=1, initial_state=np.array([1.5, -2.0]),
        vector_field=lambda t, y, th: np.zeros(2),
        jac_state=lambda t, y, th: np.zeros((2, 2)),
        jac_param=lambda t, y, th: np.zeros((2, 1)),
    )
    path = rk4_solve(sys_, [0.0], 17)
    np.testing.assert_array_equal(path.values, np.tile([1.5, -2.0], (17, 1)))


def test_polynomial_rate_is_integrated_exactly():
    # stages reduce to Simpson's rule for a pure-time field; cubics are exact
    path = rk4_solve(pure_time_system(), [0.0], 11)
    assert abs(path.values[-1, 0] - 1.0) <= 1e-12


def test_exponential_terminal_value():
    path = rk4_solve(get_system("exponential"), [1.0], 11)
    assert abs(path.values[-1, 0] - math.e) <= 3e-6


def test_euler_exponential_closed_form():
    path = euler_solve(get_system("exponential"), [1.0], 11)
    assert abs(path.values[-1, 0] - 1.1**10) <= 1e-8


def test_euler_error_halves_with_step():
    sys_ = get_system("exponential")
    e11 = abs(euler_solve(sys_, [1.0], 11).values[-1, 0] - math.e)
    e21 = abs(euler_solve(sys_, [1.0], 21).values[-1, 0] - math.e)
    assert 1.8 <= e11 / e21 <= 2.2


def test_rk4_fourth_order_error_decay():
    sys_ = get_system("exponential")
    errors = [abs(rk4_solve(sys_, [1.0], r).values[-1, 0] - math.e)
              for r in (11, 21, 41, 81)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 12.0 <= coarse / fine <= 20.0


def test_dense_eval_bitwise_at_nodes():
    path = rk4_solve(get_system("lotka_volterra"), [10.0, 10.0, 10.0, 10.0], 100)
    for k in (0, 1, 37, 98, 99):
        assert np.array_equal(dense_eval(path, path.nodes[k]), path.values[k])
    many = dense_eval_many(path, path.nodes)
    assert np.array_equal(many, path.values)


def test_dense_eval_matches_exponential_between_nodes():
    path = rk4_solve(get_system("exponential"), [1.0], 21)
    assert abs(dense_eval(path, 0.5)[0] - math.exp(0.5)) <= 1e-6
    ts = np.linspace(0.013, 0.987, 211)
    vals = dense_eval_many(path, ts)[:, 0]
    assert np.max(np.abs(vals - np.exp(ts))) <= 1e-6


def test_dense_eval_exact_on_linear_trajectory():
    path = rk4_solve(constant_rate_system(), [0.0], 6)
    assert abs(dense_eval(path, 0.3)[0] - 0.6) <= 1e-12


def test_dense_eval_rejects_outside_domain():
    path = rk4_solve(get_system("exponential"), [1.0], 11)
    with pytest.raises(ValueError):
        dense_eval(path, 1.0001)
    with pytest.raises(ValueError):
        dense_eval_many(path, [-0.1, 0.5])


def test_sensitivities_exponential_closed_form():
    # d/dtheta e^{theta t} = t e^{theta t}
    path = rk4_solve(get_system("exponential"), [1.0], 201, with_sensitivities=True)
    got = dense_sens_many(path, [0.5, 1.0])[:, 0, 0]
    want = np.array([0.5 * math.exp(0.5), math.e])
    np.testing.assert_allclose(got, want, atol=1e-5)


def test_sensitivities_zero_for_parameter_free_field():
    path = rk4_solve(pure_time_system(), [3.0], 21, with_sensitivities=True)
    assert np.all(path.sensitivities == 0.0)


def test_sensitivities_match_finite_differences():
    sys_ = get_system("lotka_volterra")
    theta = np.array([10.0, 10.0, 10.0, 10.0])
    r = 100
    path = rk4_solve(sys_, theta, r, with_sensitivities=True)
    ts = np.array([0.25, 0.5, 1.0])
    sens = dense_sens_many(path, ts)
    delta = 1e-5
    for j in range(4):
        up, dn = theta.copy(), theta.copy()
        up[j] += delta
        dn[j] -= delta
        fd = (dense_eval_many(rk4_solve(sys_, up, r), ts)
              - dense_eval_many(rk4_solve(sys_, dn, r), ts)) / (2 * delta)
        np.testing.assert_allclose(sens[:, :, j], fd, rtol=1e-3, atol=1e-6)


def test_divergence_raises_with_node_index():
    sys_ = get_system("lotka_volterra")
    with pytest.raises(OdeDivergenceError) as err:
        rk4_solve(sys_, [100.0, 0.01, 100.0, 0.01], 100)
    assert 0 < err.value.node_index < 100
    with pytest.raises(OdeDivergenceError):
        rk4_solve(sys_, [100.0, 0.01, 100.0, 0.01], 100, with_sensitivities=True)


def test_fast_and_generic_paths_agree():
    fast = get_system("lotka_volterra")
    slow = OdeSystem(
        name="pp_generic", state_dim=2, param_dim=4,
        initial_state=fast.initial_state.copy(),
        vector_field=fast.vector_field, jac_state=fast.jac_state,
        jac_param=fast.jac_param,
    )
    theta = [10.0, 10.0, 10.0, 10.0]
    a = rk4_solve(fast, theta, 100, with_sensitivities=True)
    b = rk4_solve(slow, theta, 100, with_sensitivities=True)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.sensitivities, b.sensitivities, rtol=1e-12, atol=1e-11)
    np.testing.assert_allclose(a.node_slopes, b.node_slopes, rtol=1e-12, atol=1e-14)


def test_solve_counter_tracks_calls():
    reset_solve_count()
    sys_ = get_system("exponential")
    rk4_solve(sys_, [1.0], 11)
    euler_solve(sys_, [1.0], 11)
    rk4_solve(sys_, [1.0], 11, with_sensitivities=True)
    assert solve_count() == 3


def test_argument_validation():
    sys_ = get_system("exponential")
    with pytest.raises(ValueError):
        rk4_solve(sys_, [1.0], 1)
    with pytest.raises(ValueError):
        rk4_solve(sys_, [np.nan], 11)
    path = rk4_solve(sys_, [1.0], 11)
    with pytest.raises(ValueError):
        dense_sens_many(path, [0.5])


def test_registry_lookup():
    assert get_system("exponential") is get_system("exponential")
    with pytest.raises(KeyError):
        get_system("heat_equation")
