"""Bayesian parameter inference for ODE regression.

Two posterior constructions over the parameters of an ODE initial value
problem observed with noise on [0, 1], plus a derivative-matching comparator:

* a solver-based sampler that runs MCMC on an approximate likelihood built
  from a fixed-grid Runge-Kutta solution,
* a projection posterior that first fits a spline regression posterior and
  then projects each posterior curve draw onto the ODE solution manifold,
* a two-step comparator that matches the spline curve's derivative to the
  vector field instead of solving the ODE.

The package also ships the simulation-study harness (coverage/length tables),
asymptotic diagnostics, and a command line front end (``odebayes``).
"""
from __future__ import annotations

__version__ = "0.1.0"

from .datasets import (Dataset, generate_dataset, misspec_constants,
                       misspec_shift, read_data_csv, truth_path,
                       write_data_csv)
from .diagnostics import AsymptoticDiagnostics, asymptotic_diagnostics
from .draws import (PosteriorDraws, equal_tailed_interval, read_draws_csv,
                    write_draws_csv)
from .estimators import RksbSampler, RktbSampler, TwoStepSampler
from .optimize import BoxDomain, MinimizeResult, minimize_box
from .quadrature import (IntegrationError, QuadratureRule, composite_gauss,
                         integrate)
from .rksb import RksbConfig, rksb_run
from .rktb import ProjectionResult, RktbConfig, default_knot_count, rktb_run
from .rng import RngStream, split_stream
from .solver import (OdeDivergenceError, Rk4Path, dense_eval, dense_eval_many,
                     dense_sens_many, euler_solve, reset_solve_count,
                     rk4_solve, solve_count)
from .splines import (CurvePosterior, SplineBasis, design_matrix,
                      design_matrix_deriv, fit_conjugate, make_basis,
                      sample_curve)
from .study import (StudyConfig, StudyFailureError, StudyResult,
                    load_replication_dir, run_study, write_study_outputs)
from .systems import OdeSystem, SYSTEM_NAMES, get_system
from .ts import TsConfig, boundary_taper_weight, ts_run

__all__ = [
    "AsymptoticDiagnostics",
    "BoxDomain",
    "CurvePosterior",
    "Dataset",
    "IntegrationError",
    "MinimizeResult",
    "OdeDivergenceError",
    "OdeSystem",
    "PosteriorDraws",
    "ProjectionResult",
    "QuadratureRule",
    "Rk4Path",
    "RksbConfig",
    "RksbSampler",
    "RktbConfig",
    "RktbSampler",
    "RngStream",
    "SYSTEM_NAMES",
    "SplineBasis",
    "StudyConfig",
    "StudyFailureError",
    "StudyResult",
    "TsConfig",
    "TwoStepSampler",
    "asymptotic_diagnostics",
    "boundary_taper_weight",
    "composite_gauss",
    "default_knot_count",
    "dense_eval",
    "dense_eval_many",
    "dense_sens_many",
    "design_matrix",
    "design_matrix_deriv",
    "equal_tailed_interval",
    "euler_solve",
    "fit_conjugate",
    "generate_dataset",
    "get_system",
    "integrate",
    "load_replication_dir",
    "make_basis",
    "minimize_box",
    "misspec_constants",
    "misspec_shift",
    "read_data_csv",
    "read_draws_csv",
    "reset_solve_count",
    "rk4_solve",
    "rksb_run",
    "rktb_run",
    "run_study",
    "sample_curve",
    "solve_count",
    "split_stream",
    "truth_path",
    "ts_run",
    "write_data_csv",
    "write_draws_csv",
    "write_study_outputs",
    "__version__",
]
