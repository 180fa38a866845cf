"""Posterior draw containers, credible-interval summaries, and draw CSV IO."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PosteriorDraws", "equal_tailed_interval", "read_draws_csv",
           "write_draws_csv"]


@dataclass(eq=False)
class PosteriorDraws:
    """Matrix of retained posterior draws for one method run.

    ``theta`` has shape (draws, params); ``sigma2`` aligns row-wise. The
    originating stream key is kept so a run can be reproduced exactly.
    """

    method: str
    theta: np.ndarray
    sigma2: np.ndarray
    seed: int
    stream_id: int
    acceptance_rate: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.sigma2 = np.asarray(self.sigma2, dtype=float).reshape(-1)
        if self.theta.shape[0] != self.sigma2.shape[0]:
            raise ValueError("theta and sigma2 must have one row per draw")
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.sigma2))):
            raise ValueError("posterior draws must be finite")
        if np.any(self.sigma2 <= 0):
            raise ValueError("noise-variance draws must be positive")
        if self.acceptance_rate is not None and not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance_rate must lie in [0, 1]")

    @property
    def n_draws(self) -> int:
        return self.theta.shape[0]

    @property
    def n_params(self) -> int:
        return self.theta.shape[1]

    def intervals(self, level: float = 0.95) -> np.ndarray:
        """Equal-tailed intervals per parameter, shape (params, 2)."""
        return np.stack([equal_tailed_interval(self.theta[:, j], level)
                         for j in range(self.n_params)])


def equal_tailed_interval(draws, level: float = 0.95) -> np.ndarray:
    """Equal-tailed credible interval from posterior draws.

    Bounds are the ``(1-level)/2`` and ``(1+level)/2`` sample quantiles with
    linear interpolation between order statistics at positions
    ``(M-1)q + 1`` (the common default definition); with 1000 draws and level
    0.95 the bounds interpolate the 25th/26th and 975th/976th order
    statistics.
    """
    draws = np.asarray(draws, dtype=float).reshape(-1)
    if draws.shape[0] < 10:
        raise ValueError("need at least 10 draws for an equal-tailed interval")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [alpha, 1.0 - alpha], method="linear")
    return np.array([lo, hi])


def write_draws_csv(path, draws: PosteriorDraws) -> None:
    """Write `draw,theta1,...,thetap,sigma2` rows with full float precision."""
    header = ("draw,"
              + ",".join(f"theta{j + 1}" for j in range(draws.n_params))
              + ",sigma2")
    index = np.arange(1, draws.n_draws + 1, dtype=float)
    table = np.column_stack([index, draws.theta, draws.sigma2])
    fmt = ["%d"] + ["%.17g"] * (draws.n_params + 1)
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt=fmt)


def read_draws_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a draws file back to (theta, sigma2) arrays."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = text.strip().splitlines()
    if not lines:
        raise ValueError("empty draws file")
    header = [col.strip() for col in lines[0].split(",")]
    p = len(header) - 2
    expected = ["draw"] + [f"theta{j + 1}" for j in range(p)] + ["sigma2"]
    if p < 1 or header != expected:
        raise ValueError("draws file must start with header draw,theta1,...,sigma2")
    table = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
    if table.shape[1] != p + 2:
        raise ValueError("draw rows do not match the header width")
    return table[:, 1:1 + p].copy(), table[:, 1 + p].copy()
