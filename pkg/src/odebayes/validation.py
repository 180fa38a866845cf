"""Input checking shared by the samplers and the estimator wrappers."""
from __future__ import annotations

import numpy as np

__all__ = ["check_design_points", "check_responses", "as_param_vector"]


def check_design_points(x) -> np.ndarray:
    """Validate covariates: finite 1-d values inside [0, 1].

    Accepts a column vector (n, 1) as well, for estimator-style call sites.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError("design points must be a 1-d array (or a single column)")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("design points must be finite")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("design points must lie in [0, 1]")
    return x


def check_responses(y, n: int, state_dim: int) -> np.ndarray:
    """Validate responses against n points and the system's state dimension."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] != n:
        raise ValueError(f"responses must have shape ({n}, components)")
    if y.shape[1] != state_dim:
        raise ValueError(f"responses have {y.shape[1]} components; system has {state_dim}")
    if y.size and not np.all(np.isfinite(y)):
        raise ValueError("responses must be finite")
    return y


def as_param_vector(value, p: int, name: str) -> np.ndarray:
    """Broadcast a scalar or length-p sequence to a float parameter vector."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(p, float(arr))
    if arr.shape != (p,):
        raise ValueError(f"{name} must be a scalar or a length-{p} vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr
