"""Asymptotic reference quantities for the samplers.

For a trajectory family f_theta with parameter sensitivities fdot, design
density g and noise variance sigma0^2, this module computes:

- the curvature matrix V = integral (fdot^T fdot - sum_c gap_c * hess_c) g dt,
  where gap = f0 - f_theta0 is the deviation of the true mean from the best
  trajectory (zero when the model is well-specified) and hess_c is the
  parameter Hessian of component c (obtained by central differences of the
  sensitivity paths);
- the Fisher information of (theta, sigma^2), block diagonal with blocks
  sigma0^-2 * integral fdot^T fdot g dt and 1/(2 sigma0^4);
- the inflated noise level sigma_star^2 = sigma0^2 + integral |gap|^2 g dt;
- the large-sample covariance limit for sqrt(n)(theta - theta0):
  sigma0^2 * V^-1 (integral fdot^T fdot g dt) V^-T, which collapses to
  sigma0^2 (integral fdot^T fdot g dt)^-1 when well-specified.

Posterior draw covariances scaled by n should approach the covariance limit
when the model holds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import composite_gauss, panels_for_grid
from .solver import dense_eval_many, dense_sens_many, rk4_solve
from .systems import OdeSystem

__all__ = ["AsymptoticDiagnostics", "asymptotic_diagnostics"]


@dataclass(frozen=True)
class AsymptoticDiagnostics:
    """Limit quantities at a reference parameter."""

    theta0: np.ndarray
    v_matrix: np.ndarray           # curvature of the weighted L2 criterion
    score_scale: np.ndarray        # integral fdot^T fdot g dt
    fisher_info: np.ndarray        # (p+1) x (p+1), block diagonal
    sigma_star_sq: float           # noise level absorbing the model gap
    limit_covariance: np.ndarray   # limit of n x Cov(theta draws)


def _hessian_gap_term(system, theta0, grid_count, nodes, gap, fd_step):
    """sum_c integral-ready gap_c(t) * d^2 f_c / dtheta_j dtheta_k at nodes."""
    p = system.param_dim
    term = np.zeros((nodes.shape[0], p, p))
    for j in range(p):
        step = fd_step * max(1.0, abs(float(theta0[j])))
        bump = np.zeros(p)
        bump[j] = step
        up = rk4_solve(system, theta0 + bump, grid_count, with_sensitivities=True)
        down = rk4_solve(system, theta0 - bump, grid_count, with_sensitivities=True)
        dsens = (dense_sens_many(up, nodes) - dense_sens_many(down, nodes)) / (2 * step)
        # dsens[i, c, k] = d^2 f_c / dtheta_j dtheta_k at node i
        term[:, j, :] = np.einsum("ic,ick->ik", gap, dsens)
    return 0.5 * (term + np.transpose(term, (0, 2, 1)))


def asymptotic_diagnostics(system: OdeSystem, theta0, sigma0_sq: float,
                           true_mean=None, weight=None,
                           grid_count: int = 4096,
                           fd_step: float = 1e-5) -> AsymptoticDiagnostics:
    """Compute the limit quantities at theta0.

    ``true_mean`` is a callable ts -> (len(ts), d) giving the actual
    data-generating mean; omit it when the model is well-specified.
    ``weight`` is the design density on [0, 1] (uniform when omitted).
    """
    theta0 = np.asarray(theta0, dtype=float).reshape(system.param_dim)
    if sigma0_sq <= 0:
        raise ValueError("sigma0_sq must be positive")
    path = rk4_solve(system, theta0, grid_count, with_sensitivities=True)
    rule = composite_gauss(panels_for_grid(grid_count), 4)
    g = np.ones_like(rule.nodes) if weight is None else \
        np.asarray(weight(rule.nodes), dtype=float)
    if np.any(g < 0):
        raise ValueError("the design density must be nonnegative")
    wg = rule.weights * g

    sens = dense_sens_many(path, rule.nodes)          # (N, d, p)
    score_scale = np.einsum("n,ncj,nck->jk", wg, sens, sens)
    score_scale = 0.5 * (score_scale + score_scale.T)

    if true_mean is None:
        gap = None
        gap_mass = 0.0
        v_matrix = score_scale.copy()
    else:
        values = dense_eval_many(path, rule.nodes)
        gap = np.asarray(true_mean(rule.nodes), dtype=float).reshape(values.shape) - values
        gap_mass = float(np.einsum("n,nc,nc->", wg, gap, gap))
        hess_term = _hessian_gap_term(system, theta0, grid_count, rule.nodes,
                                      gap, fd_step)
        v_matrix = score_scale - np.einsum("n,njk->jk", wg, hess_term)
        v_matrix = 0.5 * (v_matrix + v_matrix.T)

    p = system.param_dim
    fisher = np.zeros((p + 1, p + 1))
    fisher[:p, :p] = score_scale / sigma0_sq
    fisher[p, p] = 0.5 / sigma0_sq ** 2

    eigvals = np.linalg.eigvalsh(v_matrix)
    if eigvals.min() <= 1e-12 * max(1.0, eigvals.max()):
        raise np.linalg.LinAlgError(
            "curvature matrix is singular: a parameter direction leaves the "
            "trajectory unchanged, so no covariance limit exists")
    v_inv = np.linalg.inv(v_matrix)
    limit_cov = sigma0_sq * v_inv @ score_scale @ v_inv.T

    return AsymptoticDiagnostics(
        theta0=theta0, v_matrix=v_matrix, score_scale=score_scale,
        fisher_info=fisher, sigma_star_sq=float(sigma0_sq + gap_mass),
        limit_covariance=0.5 * (limit_cov + limit_cov.T))
