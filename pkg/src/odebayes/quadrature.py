"""Composite Gauss-Legendre quadrature on [0, 1].

The integration grid is a set of equal-width panels, each carrying a fixed
Gauss-Legendre rule. Panel boundaries can be chosen to coincide with an ODE
solver grid so that piecewise-smooth integrands (dense solver output) are
polynomial inside every panel and the rule is exact for them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "IntegrationError",
    "composite_gauss",
    "panels_for_grid",
    "integrate",
    "integrate_values",
]


class IntegrationError(ValueError):
    """Raised when an integrand evaluates to a non-finite value at a node.

    Carries the offending node location in ``node``.
    """

    def __init__(self, node: float, message: str | None = None):
        self.node = float(node)
        super().__init__(message or f"non-finite integrand value at node t={node!r}")


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights of a composite rule on [0, 1].

    ``weights`` integrate the uniform density to exactly the panel widths, so
    they sum to 1 over the unit interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panels: int
    points_per_panel: int

    @property
    def exact_degree(self) -> int:
        """Highest polynomial degree integrated exactly within one panel."""
        return 2 * self.points_per_panel - 1


def composite_gauss(panels: int = 64, points_per_panel: int = 4) -> QuadratureRule:
    """Build a composite Gauss-Legendre rule with equal panels on [0, 1]."""
    if panels < 1 or points_per_panel < 1:
        raise ValueError("panels and points_per_panel must be >= 1")
    base_nodes, base_weights = np.polynomial.legendre.leggauss(points_per_panel)
    width = 1.0 / panels
    left = np.arange(panels) * width
    # map the [-1, 1] base rule into each panel
    nodes = (left[:, None] + 0.5 * width * (base_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * base_weights, panels)
    return QuadratureRule(nodes=nodes, weights=weights, panels=panels,
                          points_per_panel=points_per_panel)


def panels_for_grid(grid_count: int, floor: int = 64, cap: int = 1024) -> int:
    """Panel count aligned with a solver grid of ``grid_count`` points.

    Uses one panel per grid interval when that lands inside [floor, cap];
    otherwise the nearest multiple that keeps boundaries on grid nodes is not
    generally possible, so the count is clamped.
    """
    intervals = max(1, grid_count - 1)
    return int(min(max(intervals, floor), cap))


def integrate(f, rule: QuadratureRule, weight=None) -> float | np.ndarray:
    """Integrate ``f`` (optionally against a weight density) over [0, 1].

    ``f`` maps an array of nodes to an array of values; an extra trailing axis
    is allowed (vector-valued integrands integrate componentwise). Non-finite
    values raise :class:`IntegrationError` pointing at the first bad node.
    """
    values = np.asarray(f(rule.nodes), dtype=float)
    if weight is not None:
        w = np.asarray(weight(rule.nodes), dtype=float)
        values = values * w.reshape(w.shape + (1,) * (values.ndim - w.ndim))
    return integrate_values(values, rule)


def integrate_values(values: np.ndarray, rule: QuadratureRule) -> float | np.ndarray:
    """Contract precomputed node values (nodes first axis) with the weights."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != rule.nodes.shape[0]:
        raise ValueError("values first axis must match the rule's node count")
    bad = ~np.isfinite(values)
    if bad.any():
        first = int(np.nonzero(bad.reshape(values.shape[0], -1).any(axis=1))[0][0])
        raise IntegrationError(rule.nodes[first])
    return np.tensordot(rule.weights, values, axes=(0, 0))
