"""Box-constrained smooth minimization.

A thin, contract-enforcing front end over scipy.optimize: quasi-Newton with
projection (L-BFGS-B) when the caller supplies a gradient, Nelder-Mead
otherwise. The wrapper guarantees what the raw optimizers do not:

* non-finite objective values act as a large finite barrier instead of
  aborting the run,
* the returned point always lies inside the box and is never worse than the
  starting point (best-seen tracking),
* ``converged`` reflects an in-house projected-gradient check (gradient case)
  rather than the backend's own flag.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sciopt

__all__ = ["BoxDomain", "MinimizeResult", "minimize_box"]

_BARRIER = 1e25


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of feasible parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("box must have lower < upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def sample(self, stream, size: int) -> np.ndarray:
        """Uniform points from the box, shape (size, dim)."""
        u = stream.uniform(size=(size, self.dim))
        return self.lower + u * (self.upper - self.lower)


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    converged: bool
    n_iter: int
    grad_norm: float | None = None


def projected_gradient_norm(x: np.ndarray, grad: np.ndarray, box: BoxDomain) -> float:
    """Norm of x - P_box(x - grad): zero exactly at a box-constrained stationary point."""
    step = box.clip(np.asarray(x) - np.asarray(grad))
    return float(np.linalg.norm(np.asarray(x) - step))


def minimize_box(objective, start, box: BoxDomain, gradient=None,
                 tol: float = 1e-8, max_iter: int = 2000) -> MinimizeResult:
    """Minimize ``objective`` over ``box`` starting from ``start``.

    ``gradient`` (if given) must return the exact gradient of ``objective``;
    the pair is then solved with projected quasi-Newton steps, otherwise with
    Nelder-Mead. ``converged`` means: projected-gradient norm <=
    ``tol * (1 + |value|)`` in the gradient case, backend simplex convergence
    otherwise.
    """
    x0 = box.clip(start)
    best = {"x": x0.copy(), "value": _safe_value(objective(x0))}

    def wrapped(x):
        val = _safe_value(objective(x))
        if val < best["value"] and box.contains(x):
            best["value"] = val
            best["x"] = np.array(x, dtype=float)
        return val

    bounds = list(zip(box.lower, box.upper))
    if gradient is None:
        res = _sciopt.minimize(wrapped, x0, method="Nelder-Mead", bounds=bounds,
                               options={"maxiter": max_iter, "xatol": tol, "fatol": tol})
        x = box.clip(res.x)
        val = _safe_value(objective(x))
        if best["value"] < val:
            x, val = best["x"], best["value"]
        return MinimizeResult(x=x, value=val, converged=bool(res.success),
                              n_iter=int(res.nit), grad_norm=None)

    def wrapped_grad(x):
        g = np.asarray(gradient(x), dtype=float)
        return np.where(np.isfinite(g), g, 0.0)

    res = _sciopt.minimize(wrapped, x0, jac=wrapped_grad, method="L-BFGS-B",
                           bounds=bounds,
                           options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-12})
    x = box.clip(res.x)
    val = _safe_value(objective(x))
    if best["value"] < val:
        x, val = best["x"], best["value"]
    gnorm = projected_gradient_norm(x, wrapped_grad(x), box)
    converged = bool(np.isfinite(val)) and gnorm <= tol * (1.0 + abs(val))
    return MinimizeResult(x=x, value=val, converged=converged,
                          n_iter=int(res.nit), grad_norm=gnorm)


def _safe_value(v) -> float:
    v = float(v)
    return v if np.isfinite(v) else _BARRIER
