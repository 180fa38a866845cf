"""Command-line interface.

Subcommands:

- ``simulate``: draw one synthetic dataset and write a `x,y1,...,yd` CSV.
- ``fit``: run one posterior sampler on a data CSV and write the draws.
- ``study``: run a replication study and write its report directory.
- ``report``: re-render results from a study directory to stdout.
- ``diag``: print asymptotic reference quantities as JSON.

Exit codes: 0 on success, 2 for configuration problems (bad JSON, unknown
keys, invalid values, malformed input files), 3 for numerical failures
(divergence, failed replications beyond the tolerated fraction).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import (ConfigError, load_json, parse_diag_config, parse_fit_config,
                     parse_simulate_config, parse_study_config)
from .datasets import (generate_dataset, misspec_constants, misspec_shift,
                       read_data_csv, truth_path, write_data_csv)
from .diagnostics import asymptotic_diagnostics
from .draws import write_draws_csv
from .rksb import rksb_run
from .rktb import rktb_run
from .rng import RngStream
from .solver import OdeDivergenceError, dense_eval_many
from .study import StudyFailureError, run_study, load_replication_dir, \
    render_results_csv, render_results_md, write_study_outputs
from .systems import get_system
from .ts import ts_run

__all__ = ["main"]

_RUNNERS = {"rksb": rksb_run, "rktb": rktb_run, "ts": ts_run}


def _cmd_simulate(args) -> int:
    spec = parse_simulate_config(load_json(args.config))
    system = get_system(spec.system)
    dataset = generate_dataset(system, spec.case, spec.n,
                               RngStream(spec.seed, spec.stream_id),
                               theta=spec.theta, sigma0=spec.sigma0)
    write_data_csv(args.out, dataset.x, dataset.y)
    print(f"wrote {dataset.n_obs} observations to {args.out}", file=sys.stderr)
    return 0


def _cmd_fit(args) -> int:
    spec = parse_fit_config(load_json(args.config), args.method)
    system = get_system(spec.system)
    x, y = read_data_csv(args.data)
    draws = _RUNNERS[args.method](system, x, y, spec.method_config, spec.stream)
    write_draws_csv(args.out, draws)
    print(f"wrote {draws.n_draws} draws to {args.out}", file=sys.stderr)
    return 0


def _cmd_study(args) -> int:
    config = parse_study_config(load_json(args.config))

    def progress(done, total):
        print(f"replication {done}/{total} done", file=sys.stderr, flush=True)

    result = run_study(config, progress=progress)
    paths = write_study_outputs(result, args.out)
    print(f"wrote {', '.join(sorted(paths))} to {args.out}", file=sys.stderr)
    print(render_results_md(result), end="")
    return 0


def _cmd_report(args) -> int:
    result = load_replication_dir(args.in_dir)
    if args.format == "csv":
        print(render_results_csv(result), end="")
    else:
        print(render_results_md(result), end="")
    return 0


def _cmd_diag(args) -> int:
    spec = parse_diag_config(load_json(args.config))
    system = get_system(spec.system)
    theta = (np.full(system.param_dim, 10.0) if spec.theta is None
             else spec.theta.reshape(system.param_dim))
    true_mean = None
    if spec.case == 2:
        constants = misspec_constants(system, theta)
        path = truth_path(system, theta)

        def true_mean(ts):  # noqa: F811 - the case-2 data-generating mean
            return dense_eval_many(path, ts) + misspec_shift(ts, constants)

    diag = asymptotic_diagnostics(system, theta, spec.sigma0_sq,
                                  true_mean=true_mean)
    print(json.dumps({
        "system": spec.system,
        "theta0": [float(v) for v in diag.theta0],
        "curvature_matrix": diag.v_matrix.tolist(),
        "score_scale": diag.score_scale.tolist(),
        "fisher_information": diag.fisher_info.tolist(),
        "sigma_star_sq": diag.sigma_star_sq,
        "limit_covariance": diag.limit_covariance.tolist(),
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odebayes",
        description="Bayesian parameter inference for ODE regression models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output data CSV path")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("fit", help="sample one posterior from a data CSV")
    p.add_argument("--method", required=True, choices=sorted(_RUNNERS))
    p.add_argument("--data", required=True, help="input data CSV path")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output draws CSV path")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("study", help="run a coverage replication study")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_study)

    p = sub.add_parser("report", help="re-render a study directory")
    p.add_argument("--in", dest="in_dir", required=True, help="study directory")
    p.add_argument("--format", choices=("csv", "md"), default="md")
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser("diag", help="print asymptotic reference quantities")
    p.add_argument("--config", required=True, help="JSON config path")
    p.set_defaults(handler=_cmd_diag)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (StudyFailureError, OdeDivergenceError, np.linalg.LinAlgError,
            RuntimeError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
