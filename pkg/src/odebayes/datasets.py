"""Synthetic regression data from ODE truth curves.

Responses are y_i = mean(x_i) + Normal(0, sigma0^2) noise per component with
design points drawn uniformly on [0, 1]. The mean is either the trajectory of
a named system at the generating parameter (case 1, well-specified) or that
trajectory shifted by the polynomial (t^2 + t - c_i)/6 per component
(case 2, misspecified), where each c_i makes the shift orthogonal to the
trajectory component under the uniform design density. Truth curves always
come from a fine fixed solver grid so generation error is negligible next to
the noise scale.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .quadrature import composite_gauss, panels_for_grid
from .rng import RngStream
from .solver import Rk4Path, dense_eval_many, rk4_solve
from .systems import OdeSystem

__all__ = ["Dataset", "FINE_GRID_COUNT", "generate_dataset", "misspec_constants",
           "misspec_shift", "read_data_csv", "truth_path", "write_data_csv"]

FINE_GRID_COUNT = 4096

_TRUTH_CACHE: dict[tuple, Rk4Path] = {}


@dataclass(eq=False)
class Dataset:
    """One simulated sample: design points, responses, and provenance."""

    system_name: str
    case: int
    x: np.ndarray              # (n,) in [0, 1]
    y: np.ndarray              # (n, components)
    truth_theta: np.ndarray
    sigma0: float
    seed: int
    stream_id: int

    def __post_init__(self):
        if self.case not in (1, 2):
            raise ValueError("case must be 1 (well-specified) or 2 (misspecified)")
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape[0] != self.x.shape[0] or self.x.shape[0] < 1:
            raise ValueError("x and y must hold the same positive number of rows")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("data must be finite")

    @property
    def n_obs(self) -> int:
        return self.x.shape[0]


def truth_path(system: OdeSystem, theta, grid_count: int = FINE_GRID_COUNT) -> Rk4Path:
    """Fine-grid trajectory used as the data-generating mean (cached)."""
    theta = np.asarray(theta, dtype=float).reshape(system.param_dim)
    key = (system.name, tuple(theta.tolist()), grid_count)
    if key not in _TRUTH_CACHE:
        _TRUTH_CACHE[key] = rk4_solve(system, theta, grid_count)
    return _TRUTH_CACHE[key]


def misspec_constants(system: OdeSystem, theta,
                      grid_count: int = FINE_GRID_COUNT) -> np.ndarray:
    """Centering constants c making (t^2 + t - c_i)/6 orthogonal to component i.

    c_i solves integral f_i(t) (t^2 + t - c_i) dt = 0 under the uniform design
    density, so c_i = integral f_i (t^2 + t) dt / integral f_i dt, computed by
    composite Gauss quadrature on the fine trajectory.
    """
    path = truth_path(system, theta, grid_count)
    rule = composite_gauss(panels_for_grid(grid_count), 4)
    values = dense_eval_many(path, rule.nodes)
    poly = rule.nodes ** 2 + rule.nodes
    numer = rule.weights @ (values * poly[:, None])
    denom = rule.weights @ values
    if np.any(denom <= 0):
        raise ValueError("component integrals must be positive to center the shift")
    return numer / denom


def misspec_shift(ts: np.ndarray, constants: np.ndarray) -> np.ndarray:
    """The case-2 mean perturbation (t^2 + t - c_i)/6 per component."""
    ts = np.asarray(ts, dtype=float)
    poly = ts ** 2 + ts
    return (poly[:, None] - np.asarray(constants, dtype=float)[None, :]) / 6.0


def generate_dataset(system: OdeSystem, case: int, n: int, stream: RngStream,
                     theta=None, sigma0: float = 0.1) -> Dataset:
    """Draw one sample of size n from the case-1 or case-2 model."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta is None:
        theta = np.full(system.param_dim, 10.0)
    theta = np.asarray(theta, dtype=float).reshape(system.param_dim)
    x = np.sort(stream.uniform(size=n))
    path = truth_path(system, theta)
    mean = dense_eval_many(path, x)
    if case == 2:
        mean = mean + misspec_shift(x, misspec_constants(system, theta))
    y = mean + sigma0 * stream.normal(size=mean.shape)
    return Dataset(system_name=system.name, case=case, x=x, y=y,
                   truth_theta=theta, sigma0=sigma0,
                   seed=stream.seed, stream_id=stream.stream_id)


def write_data_csv(path, x, y) -> None:
    """Write `x,y1,...,yd` rows with full float precision."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    header = "x," + ",".join(f"y{c + 1}" for c in range(y.shape[1]))
    table = np.column_stack([x, y])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def read_data_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a `x,y1,...,yd` file back to (x, y) arrays."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = text.strip().splitlines()
    if not lines:
        raise ValueError("empty data file")
    header = [col.strip() for col in lines[0].split(",")]
    d = len(header) - 1
    if header[0] != "x" or d < 1 or header[1:] != [f"y{c + 1}" for c in range(d)]:
        raise ValueError("data file must start with header x,y1,...,yd")
    table = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
    if table.shape[1] != d + 1:
        raise ValueError("data rows do not match the header width")
    return table[:, 0].copy(), table[:, 1:].copy()
