"""ODE initial value problems on [0, 1].

A system bundles the vector field, its Jacobians with respect to state and
parameters, and a fixed (known) initial state. Built-in systems also carry
numba-compiled callables so the solver can run a fast path; user-defined
systems work through the generic numpy path with identical semantics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

__all__ = ["OdeSystem", "get_system", "SYSTEM_NAMES"]


@dataclass(eq=False)
class OdeSystem:
    """An ODE model ``y'(t) = F(t, y, theta)`` with known initial state.

    ``vector_field(t, y, theta) -> (d,)``, ``jac_state -> (d, d)`` and
    ``jac_param -> (d, p)`` take a scalar time and 1-d arrays. The optional
    ``*_batch`` callables evaluate many (t, y) pairs at once for
    integrand-style use; fallbacks loop over rows. ``njit_*`` are optional
    numba dispatchers mirroring the scalar callables for the solver fast path.
    """

    name: str
    state_dim: int
    param_dim: int
    initial_state: np.ndarray
    vector_field: Callable
    jac_state: Callable
    jac_param: Callable
    vf_batch: Optional[Callable] = None
    jac_param_batch: Optional[Callable] = None
    njit_vf: Optional[Callable] = field(default=None, repr=False)
    njit_jac_state: Optional[Callable] = field(default=None, repr=False)
    njit_jac_param: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        self.initial_state = np.asarray(self.initial_state, dtype=float).reshape(self.state_dim)

    def field_at(self, ts, ys, theta) -> np.ndarray:
        """Vector field on a batch: ts (N,), ys (N, d) -> (N, d)."""
        if self.vf_batch is not None:
            return np.asarray(self.vf_batch(ts, ys, theta), dtype=float)
        return np.stack([np.asarray(self.vector_field(t, y, theta), dtype=float)
                         for t, y in zip(ts, ys)])

    def param_jac_at(self, ts, ys, theta) -> np.ndarray:
        """Parameter Jacobian on a batch: -> (N, d, p)."""
        if self.jac_param_batch is not None:
            return np.asarray(self.jac_param_batch(ts, ys, theta), dtype=float)
        return np.stack([np.asarray(self.jac_param(t, y, theta), dtype=float)
                         for t, y in zip(ts, ys)])

    @property
    def has_fast_path(self) -> bool:
        return (self.njit_vf is not None and self.njit_jac_state is not None
                and self.njit_jac_param is not None)


# --- predator-prey (two species, four rate parameters) ---------------------

@numba.njit(cache=True)
def _pp_vf(t, y, theta):
    out = np.empty(2)
    out[0] = theta[0] * y[0] - theta[1] * y[0] * y[1]
    out[1] = -theta[2] * y[1] + theta[3] * y[0] * y[1]
    return out


@numba.njit(cache=True)
def _pp_jac_state(t, y, theta):
    out = np.empty((2, 2))
    out[0, 0] = theta[0] - theta[1] * y[1]
    out[0, 1] = -theta[1] * y[0]
    out[1, 0] = theta[3] * y[1]
    out[1, 1] = -theta[2] + theta[3] * y[0]
    return out


@numba.njit(cache=True)
def _pp_jac_param(t, y, theta):
    out = np.zeros((2, 4))
    out[0, 0] = y[0]
    out[0, 1] = -y[0] * y[1]
    out[1, 2] = -y[1]
    out[1, 3] = y[0] * y[1]
    return out


def _pp_vf_batch(ts, ys, theta):
    y1, y2 = ys[:, 0], ys[:, 1]
    return np.stack([theta[0] * y1 - theta[1] * y1 * y2,
                     -theta[2] * y2 + theta[3] * y1 * y2], axis=-1)


def _pp_jac_param_batch(ts, ys, theta):
    n = ys.shape[0]
    out = np.zeros((n, 2, 4))
    out[:, 0, 0] = ys[:, 0]
    out[:, 0, 1] = -ys[:, 0] * ys[:, 1]
    out[:, 1, 2] = -ys[:, 1]
    out[:, 1, 3] = ys[:, 0] * ys[:, 1]
    return out


# --- exponential growth (one state, one parameter) --------------------------

@numba.njit(cache=True)
def _exp_vf(t, y, theta):
    return theta[0] * y


@numba.njit(cache=True)
def _exp_jac_state(t, y, theta):
    out = np.empty((1, 1))
    out[0, 0] = theta[0]
    return out


@numba.njit(cache=True)
def _exp_jac_param(t, y, theta):
    out = np.empty((1, 1))
    out[0, 0] = y[0]
    return out


def _exp_vf_batch(ts, ys, theta):
    return theta[0] * ys


def _exp_jac_param_batch(ts, ys, theta):
    return ys[:, :, None].copy()


# --- logistic growth (one state, two parameters) -----------------------------

@numba.njit(cache=True)
def _logi_vf(t, y, theta):
    out = np.empty(1)
    out[0] = theta[0] * y[0] * (1.0 - y[0] / theta[1])
    return out


@numba.njit(cache=True)
def _logi_jac_state(t, y, theta):
    out = np.empty((1, 1))
    out[0, 0] = theta[0] * (1.0 - 2.0 * y[0] / theta[1])
    return out


@numba.njit(cache=True)
def _logi_jac_param(t, y, theta):
    out = np.empty((1, 2))
    out[0, 0] = y[0] * (1.0 - y[0] / theta[1])
    out[0, 1] = theta[0] * y[0] ** 2 / theta[1] ** 2
    return out


def _logi_vf_batch(ts, ys, theta):
    return theta[0] * ys * (1.0 - ys / theta[1])


def _logi_jac_param_batch(ts, ys, theta):
    n = ys.shape[0]
    out = np.empty((n, 1, 2))
    out[:, 0, 0] = ys[:, 0] * (1.0 - ys[:, 0] / theta[1])
    out[:, 0, 1] = theta[0] * ys[:, 0] ** 2 / theta[1] ** 2
    return out


def _python_view(fn):
    """Plain-python callable for a numba dispatcher (generic-path reuse)."""
    return fn.py_func


_REGISTRY: dict[str, Callable[[], OdeSystem]] = {
    "lotka_volterra": lambda: OdeSystem(
        name="lotka_volterra", state_dim=2, param_dim=4,
        initial_state=np.array([1.0, 0.5]),
        vector_field=_python_view(_pp_vf), jac_state=_python_view(_pp_jac_state),
        jac_param=_python_view(_pp_jac_param),
        vf_batch=_pp_vf_batch, jac_param_batch=_pp_jac_param_batch,
        njit_vf=_pp_vf, njit_jac_state=_pp_jac_state, njit_jac_param=_pp_jac_param,
    ),
    "exponential": lambda: OdeSystem(
        name="exponential", state_dim=1, param_dim=1,
        initial_state=np.array([1.0]),
        vector_field=_python_view(_exp_vf), jac_state=_python_view(_exp_jac_state),
        jac_param=_python_view(_exp_jac_param),
        vf_batch=_exp_vf_batch, jac_param_batch=_exp_jac_param_batch,
        njit_vf=_exp_vf, njit_jac_state=_exp_jac_state, njit_jac_param=_exp_jac_param,
    ),
    "logistic": lambda: OdeSystem(
        name="logistic", state_dim=1, param_dim=2,
        initial_state=np.array([0.1]),
        vector_field=_python_view(_logi_vf), jac_state=_python_view(_logi_jac_state),
        jac_param=_python_view(_logi_jac_param),
        vf_batch=_logi_vf_batch, jac_param_batch=_logi_jac_param_batch,
        njit_vf=_logi_vf, njit_jac_state=_logi_jac_state, njit_jac_param=_logi_jac_param,
    ),
}

SYSTEM_NAMES = tuple(sorted(_REGISTRY))
_CACHE: dict[str, OdeSystem] = {}


def get_system(name: str) -> OdeSystem:
    """Look up a built-in system by name (shared instance)."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown system {name!r}; built-ins: {', '.join(SYSTEM_NAMES)}")
    if name not in _CACHE:
        _CACHE[name] = _REGISTRY[name]()
    return _CACHE[name]
