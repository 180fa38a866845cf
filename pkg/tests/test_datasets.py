"""Tests for synthetic data generation and the data CSV format."""
import io

import numpy as np
import pytest

from odebayes.datasets import (Dataset, generate_dataset, misspec_constants,
                               misspec_shift, read_data_csv, truth_path,
                               write_data_csv)
from odebayes.quadrature import composite_gauss, panels_for_grid
from odebayes.rng import RngStream
from odebayes.solver import dense_eval_many
from odebayes.systems import OdeSystem, get_system


def constant_curve_system():
    """y' = 0 from y(0) = 1: the trajectory is identically one."""
    return OdeSystem(
        name="constant_unit", state_dim=1, param_dim=1,
        initial_state=np.array([1.0]),
        vector_field=lambda t, y, th: np.zeros(1),
        jac_state=lambda t, y, th: np.zeros((1, 1)),
        jac_param=lambda t, y, th: np.zeros((1, 1)))


class TestMisspecConstants:
    def test_constant_component_gives_five_sixths(self):
        # integral of t^2 + t over [0,1] is 5/6 when the curve is flat one
        c = misspec_constants(constant_curve_system(), np.array([1.0]))
        assert c[0] == pytest.approx(5.0 / 6.0, abs=1e-12)

    def test_defining_orthogonality(self):
        system = get_system("lotka_volterra")
        theta = np.full(4, 10.0)
        c = misspec_constants(system, theta)
        path = truth_path(system, theta)
        rule = composite_gauss(panels_for_grid(4096), 4)
        values = dense_eval_many(path, rule.nodes)
        shift = misspec_shift(rule.nodes, c)
        residual = rule.weights @ (values * shift)
        assert np.max(np.abs(residual)) <= 1e-8

    def test_frozen_values_and_grid_stability(self):
        system = get_system("lotka_volterra")
        theta = np.full(4, 10.0)
        c = misspec_constants(system, theta, 4096)
        assert c[0] == pytest.approx(0.830961084525, abs=1e-9)
        assert c[1] == pytest.approx(0.887661045308, abs=1e-9)
        c_fine = misspec_constants(system, theta, 8192)
        assert np.max(np.abs(c - c_fine)) <= 1e-6

    def test_rejects_nonpositive_mass(self):
        system = OdeSystem(
            name="flat_zero", state_dim=1, param_dim=1,
            initial_state=np.array([0.0]),
            vector_field=lambda t, y, th: np.zeros(1),
            jac_state=lambda t, y, th: np.zeros((1, 1)),
            jac_param=lambda t, y, th: np.zeros((1, 1)))
        with pytest.raises(ValueError, match="positive"):
            misspec_constants(system, np.array([1.0]))


class TestGenerate:
    def test_deterministic_given_stream(self):
        system = get_system("lotka_volterra")
        a = generate_dataset(system, 1, 50, RngStream(9, 0))
        b = generate_dataset(system, 1, 50, RngStream(9, 0))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_shapes_and_defaults(self):
        system = get_system("lotka_volterra")
        ds = generate_dataset(system, 1, 40, RngStream(1, 0))
        assert ds.x.shape == (40,) and ds.y.shape == (40, 2)
        assert np.all(ds.truth_theta == 10.0)
        assert ds.sigma0 == 0.1 and ds.case == 1
        assert ds.n_obs == 40
        assert np.all(np.diff(ds.x) >= 0)
        assert np.all((ds.x >= 0) & (ds.x <= 1))

    def test_noise_scale_matches_target(self):
        system = get_system("exponential")
        ds = generate_dataset(system, 1, 10_000, RngStream(3, 0), theta=[1.0])
        clean = dense_eval_many(truth_path(system, np.array([1.0])), ds.x)
        resid = ds.y - clean
        assert abs(resid.std() - 0.1) < 0.003

    def test_case2_shift_is_exact_construction(self):
        system = get_system("lotka_volterra")
        a = generate_dataset(system, 1, 60, RngStream(5, 0))
        b = generate_dataset(system, 2, 60, RngStream(5, 0))
        # identical stream: same x and same noise, so the difference of means
        # is the deterministic perturbation
        assert np.array_equal(a.x, b.x)
        c = misspec_constants(system, a.truth_theta)
        assert np.allclose(b.y - a.y, misspec_shift(a.x, c), atol=1e-12)

    def test_validation(self):
        system = get_system("exponential")
        with pytest.raises(ValueError, match="case"):
            generate_dataset(system, 3, 10, RngStream(1, 0))
        with pytest.raises(ValueError, match="n must"):
            generate_dataset(system, 1, 0, RngStream(1, 0))
        with pytest.raises(ValueError, match="finite"):
            Dataset(system_name="exponential", case=1, x=np.array([0.5]),
                    y=np.array([[np.nan]]), truth_theta=np.array([1.0]),
                    sigma0=0.1, seed=0, stream_id=0)


class TestCsv:
    def test_round_trip_is_exact(self, tmp_path):
        system = get_system("lotka_volterra")
        ds = generate_dataset(system, 1, 25, RngStream(2, 0))
        path = tmp_path / "data.csv"
        write_data_csv(path, ds.x, ds.y)
        x, y = read_data_csv(path)
        assert np.array_equal(x, ds.x)
        assert np.array_equal(y, ds.y)

    def test_header_and_single_component(self, tmp_path):
        path = tmp_path / "one.csv"
        write_data_csv(path, [0.25, 0.5], np.array([1.5, 2.5]))
        first = path.read_text().splitlines()[0]
        assert first == "x,y1"
        x, y = read_data_csv(path)
        assert y.shape == (2, 1)

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            read_data_csv(io.StringIO("time,value\n0.1,2.0\n"))

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="empty"):
            read_data_csv(io.StringIO(""))
