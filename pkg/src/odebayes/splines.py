"""Clamped B-spline regression with a conjugate Gaussian/inverse-gamma posterior.

The basis lives on [0, 1] with ``knot_count`` equal subintervals and full
multiplicity at both ends. Coefficients get a zero-mean Gaussian prior whose
scale grows with the sample size (variance ``sigma^2 n^2 / knot_count`` per
coefficient), which makes the posterior a ridge regression with penalty
``knot_count / n^2`` - vanishing relative to the data as n grows. The noise
variance gets an inverse-gamma prior and, after integrating the coefficients,
an inverse-gamma posterior; multi-component observations share one noise
variance (residuals pool across components).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .rng import RngStream

__all__ = [
    "SplineBasis",
    "make_basis",
    "eval_basis",
    "design_matrix",
    "design_matrix_deriv",
    "CurvePosterior",
    "fit_conjugate",
    "sample_curve",
]


@dataclass(frozen=True)
class SplineBasis:
    """Clamped spline basis of a given order on equal subintervals of [0, 1]."""

    order: int
    knot_count: int
    knots: np.ndarray

    @property
    def dim(self) -> int:
        """Number of basis functions."""
        return self.knot_count + self.order - 1


def make_basis(order: int, knot_count: int) -> SplineBasis:
    if order < 1:
        raise ValueError("order must be >= 1")
    if knot_count < 1:
        raise ValueError("knot_count must be >= 1")
    interior = np.arange(1, knot_count) / knot_count
    knots = np.concatenate([np.zeros(order), interior, np.ones(order)])
    return SplineBasis(order=order, knot_count=knot_count, knots=knots)


def _spans(basis: SplineBasis, ts: np.ndarray) -> np.ndarray:
    """Index i of the non-empty knot interval [U_i, U_{i+1}) containing each t
    (the last interval is closed at 1)."""
    lo = basis.order - 1
    hi = basis.dim - 1
    spans = np.searchsorted(basis.knots, ts, side="right") - 1
    return np.clip(spans, lo, hi)


def _nonzero_basis(knots: np.ndarray, degree: int, spans: np.ndarray,
                   ts: np.ndarray) -> np.ndarray:
    """The ``degree + 1`` non-vanishing basis values at each t (triangular
    recursion on the local knot window), shape (N, degree + 1)."""
    npts = ts.shape[0]
    vals = np.ones((npts, degree + 1))
    left = np.empty((npts, degree + 1))
    right = np.empty((npts, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = ts - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - ts
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = vals[:, r] / denom
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return vals


def _scatter(vals: np.ndarray, spans: np.ndarray, degree: int, n_basis: int) -> np.ndarray:
    npts = vals.shape[0]
    out = np.zeros((npts, n_basis))
    cols = spans[:, None] - degree + np.arange(degree + 1)[None, :]
    out[np.arange(npts)[:, None], cols] = vals
    return out


def design_matrix(basis: SplineBasis, ts) -> np.ndarray:
    """Basis values at each t: shape (N, dim). Rows sum to one."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    spans = _spans(basis, ts)
    vals = _nonzero_basis(basis.knots, basis.order - 1, spans, ts)
    return _scatter(vals, spans, basis.order - 1, basis.dim)


def eval_basis(basis: SplineBasis, t: float) -> np.ndarray:
    """Basis values at a single point, shape (dim,)."""
    return design_matrix(basis, np.array([float(t)]))[0]


def design_matrix_deriv(basis: SplineBasis, ts, deriv: int = 1) -> np.ndarray:
    """Derivative-of-basis values at each t, shape (N, dim).

    ``deriv`` may not exceed ``order - 2`` so the result is continuous on the
    closed interval.
    """
    if deriv < 0:
        raise ValueError("deriv must be >= 0")
    if deriv == 0:
        return design_matrix(basis, ts)
    if deriv > basis.order - 2:
        raise ValueError("deriv must be <= order - 2 for a continuous result")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    knots = basis.knots
    spans = _spans(basis, ts)
    low_order = basis.order - deriv
    vals = _nonzero_basis(knots, low_order - 1, spans, ts)
    cur = _scatter(vals, spans, low_order - 1, len(knots) - low_order)
    # ladder the order back up, differentiating once per step
    for order in range(low_order, basis.order):
        n_next = len(knots) - (order + 1)
        den_a = knots[order:order + n_next] - knots[:n_next]
        den_b = knots[order + 1:order + 1 + n_next] - knots[1:1 + n_next]
        with np.errstate(divide="ignore", invalid="ignore"):
            term_a = np.where(den_a > 0, cur[:, :n_next] / den_a, 0.0)
            term_b = np.where(den_b > 0, cur[:, 1:n_next + 1] / den_b, 0.0)
        cur = order * (term_a - term_b)
    return cur


@dataclass(eq=False)
class CurvePosterior:
    """Factored conjugate posterior over spline coefficients and noise variance.

    Coefficients given the noise variance are Gaussian, mean ``coef_mean``
    (dim, components) and covariance ``sigma2 * (X'X + ridge I)^{-1}``; the
    noise variance is inverse-gamma with ``sigma2_shape``/``sigma2_scale``.
    """

    basis: SplineBasis
    coef_mean: np.ndarray
    chol: np.ndarray
    chol_inv: np.ndarray
    sigma2_shape: float
    sigma2_scale: float
    n_obs: int
    n_components: int
    ridge: float


def fit_conjugate(basis: SplineBasis, x, y, prior_shape: float = 30.0,
                  prior_scale: float = 5.0) -> CurvePosterior:
    """Fit the conjugate spline regression posterior to points (x, y).

    ``x``: (n,) design points in [0, 1]; ``y``: (n,) or (n, components)
    responses. One pooled noise variance across components.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, d = y.shape
    if x.shape[0] != n:
        raise ValueError("x and y must have matching lengths")
    if n == 0:
        raise ValueError("cannot fit a curve posterior to an empty sample")
    if prior_shape <= 0 or prior_scale <= 0:
        raise ValueError("inverse-gamma prior parameters must be positive")
    design = design_matrix(basis, x)
    ridge = basis.knot_count / float(n) ** 2
    a_mat = design.T @ design + ridge * np.eye(basis.dim)
    chol = np.linalg.cholesky(a_mat)
    xty = design.T @ y
    coef_mean = solve_triangular(chol.T, solve_triangular(chol, xty, lower=True), lower=False)
    quad = float(np.sum(y * y) - np.sum(xty * coef_mean))
    chol_inv = solve_triangular(chol, np.eye(basis.dim), lower=True)
    return CurvePosterior(
        basis=basis, coef_mean=coef_mean, chol=chol, chol_inv=chol_inv,
        sigma2_shape=n * d / 2.0 + prior_shape,
        sigma2_scale=0.5 * quad + prior_scale,
        n_obs=n, n_components=d, ridge=ridge,
    )


def sample_curve(posterior: CurvePosterior, stream: RngStream):
    """One joint draw (coef, sigma2) from the posterior.

    Draw order is fixed (noise variance first), so a given stream state always
    produces the same curve.
    """
    sigma2 = float(stream.inverse_gamma(posterior.sigma2_shape, posterior.sigma2_scale))
    z = stream.normal(size=(posterior.basis.dim, posterior.n_components))
    coef = posterior.coef_mean + np.sqrt(sigma2) * (posterior.chol_inv.T @ z)
    return coef, sigma2
