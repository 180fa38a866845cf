"""Replication harness: coverage and length of credible intervals.

Each replication generates a fresh dataset on its own pair of random streams,
runs one posterior sampler, and records the equal-tailed interval per
parameter. Aggregates are the per-parameter coverage proportion (with
binomial standard error sqrt(p(1-p)/R)) and average interval length (with
standard error sd/sqrt(R)). Replications that fail numerically are excluded
and counted; if more than 10% fail the study aborts, since silently dropping
many replications would bias coverage.

Outputs: ``results.csv`` (machine-readable aggregates), ``results.md``
(human-readable table: coverage in percent to one decimal, lengths to two
decimals), ``replications.csv`` (per-replication intervals; enough to
re-render the aggregates), ``run_info.json`` (configuration echo and failure
counts), and ``timing.json`` (wall-clock; the only non-deterministic file).
"""
from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import generate_dataset
from .draws import equal_tailed_interval
from .optimize import BoxDomain
from .rksb import RksbConfig, rksb_run
from .rktb import RktbConfig, rktb_run
from .rng import RngStream, split_stream
from .systems import get_system
from .ts import TsConfig, ts_run

__all__ = ["METHODS", "ReplicationRecord", "StudyConfig", "StudyFailureError",
           "StudyResult", "aggregate_records", "render_results_csv",
           "render_results_md", "render_replications_csv", "run_study",
           "load_replication_dir", "write_study_outputs"]

METHODS = ("rksb", "rktb", "ts")

_METHOD_CONFIGS = {"rksb": RksbConfig, "rktb": RktbConfig, "ts": TsConfig}
_METHOD_RUNNERS = {"rksb": rksb_run, "rktb": rktb_run, "ts": ts_run}


class StudyFailureError(RuntimeError):
    """Raised when too many replications fail numerically."""


@dataclass
class StudyConfig:
    """Settings for one coverage study."""

    method: str
    case: int = 1
    n: int = 100
    replications: int = 100
    draws: int = 1000
    level: float = 0.95
    seed: int = 0
    system: str = "lotka_volterra"
    theta: tuple | None = None             # None: 10 for every parameter
    sigma0: float = 0.1
    max_failure_rate: float = 0.10
    method_options: dict | None = None     # overrides for the method config

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {', '.join(METHODS)}")
        if self.case not in (1, 2):
            raise ValueError("case must be 1 or 2")
        if self.method == "ts" and self.case == 2:
            raise ValueError("the derivative-matching comparator runs on case 1 only")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.draws < 10:
            raise ValueError("draws must be >= 10 to form intervals")
        if not 0.0 <= self.max_failure_rate <= 1.0:
            raise ValueError("max_failure_rate must lie in [0, 1]")


@dataclass
class ReplicationRecord:
    """Intervals from one replication (or the error that voided it)."""

    rep: int
    ok: bool
    error: str = ""
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    covered: np.ndarray | None = None
    length: np.ndarray | None = None
    sampler_failures: int = 0


@dataclass
class StudyResult:
    """Aggregated study output plus the per-replication records."""

    config: StudyConfig
    truth_theta: np.ndarray
    records: list[ReplicationRecord] = field(repr=False)
    coverage: np.ndarray
    coverage_se: np.ndarray
    avg_length: np.ndarray
    length_se: np.ndarray
    n_effective: int
    n_failures: int
    elapsed_seconds: float
    seconds_per_replication: float


def build_method_config(config: StudyConfig):
    """Construct the sampler config for the study, applying overrides."""
    opts = dict(config.method_options or {})
    opts.setdefault("draws", config.draws)
    if isinstance(opts.get("domain"), (list, tuple)):
        lower, upper = opts["domain"]
        opts["domain"] = BoxDomain(lower=np.asarray(lower, dtype=float),
                                   upper=np.asarray(upper, dtype=float))
    cls = _METHOD_CONFIGS[config.method]
    if config.method == "rksb":
        opts.pop("draws", None)
        if "chain_length" not in opts:
            defaults = {f.name: f.default for f in dataclasses.fields(cls)}
            burn = opts.get("burn_in", defaults["burn_in"])
            thin = opts.get("thin", defaults["thin"])
            opts["chain_length"] = burn + config.draws * thin
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(opts) - valid
    if unknown:
        raise ValueError(
            f"unknown {config.method} option(s): {', '.join(sorted(unknown))}")
    return cls(**opts)


def run_study(config: StudyConfig, progress=None) -> StudyResult:
    """Run all replications sequentially on disjoint streams and aggregate."""
    system = get_system(config.system)
    theta = (np.full(system.param_dim, 10.0) if config.theta is None
             else np.asarray(config.theta, dtype=float).reshape(system.param_dim))
    method_config = build_method_config(config)
    runner = _METHOD_RUNNERS[config.method]
    allowed_failures = config.max_failure_rate * config.replications

    records: list[ReplicationRecord] = []
    n_failures = 0
    started = time.perf_counter()
    for rep in range(1, config.replications + 1):
        data_stream = split_stream(config.seed, 2 * rep)
        fit_stream = split_stream(config.seed, 2 * rep + 1)
        dataset = generate_dataset(system, config.case, config.n, data_stream,
                                   theta=theta, sigma0=config.sigma0)
        try:
            draws = runner(system, dataset.x, dataset.y, method_config, fit_stream)
        except Exception as exc:  # noqa: BLE001 - recorded, counted, re-checked
            n_failures += 1
            records.append(ReplicationRecord(rep=rep, ok=False, error=str(exc)))
            if n_failures > allowed_failures:
                raise StudyFailureError(
                    f"{n_failures} of {rep} replications failed "
                    f"(limit {config.max_failure_rate:.0%} of "
                    f"{config.replications}); last error: {exc}") from exc
            continue
        lo = np.empty(system.param_dim)
        hi = np.empty(system.param_dim)
        for j in range(system.param_dim):
            lo[j], hi[j] = equal_tailed_interval(draws.theta[:, j], config.level)
        records.append(ReplicationRecord(
            rep=rep, ok=True, lo=lo, hi=hi,
            covered=(lo <= theta) & (theta <= hi), length=hi - lo,
            sampler_failures=int(draws.diagnostics.get("n_failures", 0))))
        if progress is not None:
            progress(rep, config.replications)
    elapsed = time.perf_counter() - started

    coverage, coverage_se, avg_length, length_se, n_eff = aggregate_records(records)
    return StudyResult(
        config=config, truth_theta=theta, records=records,
        coverage=coverage, coverage_se=coverage_se,
        avg_length=avg_length, length_se=length_se,
        n_effective=n_eff, n_failures=n_failures,
        elapsed_seconds=elapsed,
        seconds_per_replication=elapsed / max(1, len(records)))


def aggregate_records(records):
    """Coverage and length summaries over the successful replications."""
    ok = [r for r in records if r.ok]
    if not ok:
        raise StudyFailureError("no replication succeeded; nothing to aggregate")
    covered = np.vstack([r.covered for r in ok]).astype(float)
    lengths = np.vstack([r.length for r in ok])
    n_eff = len(ok)
    coverage = covered.mean(axis=0)
    coverage_se = np.sqrt(coverage * (1.0 - coverage) / n_eff)
    avg_length = lengths.mean(axis=0)
    if n_eff > 1:
        length_se = lengths.std(axis=0, ddof=1) / np.sqrt(n_eff)
    else:
        length_se = np.zeros_like(avg_length)
    return coverage, coverage_se, avg_length, length_se, n_eff


def render_results_csv(result: StudyResult) -> str:
    """Machine-readable aggregates, one row per parameter (no timing)."""
    lines = ["method,case,n,param,coverage,coverage_se,avg_length,length_se,failures"]
    for j in range(result.truth_theta.shape[0]):
        lines.append(",".join([
            result.config.method, str(result.config.case), str(result.config.n),
            f"theta{j + 1}",
            _fmt(result.coverage[j]), _fmt(result.coverage_se[j]),
            _fmt(result.avg_length[j]), _fmt(result.length_se[j]),
            str(result.n_failures)]))
    return "\n".join(lines) + "\n"


def render_results_md(result: StudyResult) -> str:
    """Table formatted like the benchmark write-up (percent / two decimals)."""
    cfg = result.config
    case_name = "well-specified" if cfg.case == 1 else "misspecified"
    head = [
        f"# Credible-interval study: {cfg.method}, case {cfg.case} ({case_name}), "
        f"n={cfg.n}",
        "",
        f"- replications: {result.n_effective} used, {result.n_failures} failed",
        f"- posterior draws per replication: {cfg.draws}",
        f"- nominal level: {cfg.level:.0%} equal-tailed",
        "",
        "| parameter | coverage % (se) | avg length (se) |",
        "|---|---|---|",
    ]
    rows = [
        f"| theta{j + 1} | {100 * result.coverage[j]:.1f} "
        f"({100 * result.coverage_se[j]:.1f}) | "
        f"{result.avg_length[j]:.2f} ({result.length_se[j]:.2f}) |"
        for j in range(result.truth_theta.shape[0])
    ]
    return "\n".join(head + rows) + "\n"


def render_replications_csv(result: StudyResult) -> str:
    """Per-replication intervals (successful replications only)."""
    lines = ["rep,param,lo,hi,covered,length"]
    for rec in result.records:
        if not rec.ok:
            continue
        for j in range(result.truth_theta.shape[0]):
            lines.append(",".join([
                str(rec.rep), f"theta{j + 1}", _fmt(rec.lo[j]), _fmt(rec.hi[j]),
                str(int(rec.covered[j])), _fmt(rec.length[j])]))
    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return np.format_float_positional(float(value), precision=17, unique=True,
                                      trim="0")


def write_study_outputs(result: StudyResult, out_dir) -> dict:
    """Write all study files; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    deterministic = {
        "results.csv": render_results_csv(result),
        "results.md": render_results_md(result),
        "replications.csv": render_replications_csv(result),
        "run_info.json": json.dumps({
            "config": _config_echo(result.config),
            "truth_theta": [float(v) for v in result.truth_theta],
            "n_effective": result.n_effective,
            "n_failures": result.n_failures,
            "sampler_failures_total": int(sum(r.sampler_failures
                                              for r in result.records if r.ok)),
        }, indent=2, sort_keys=True) + "\n",
    }
    for name, text in deterministic.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    timing = out / "timing.json"
    timing.write_text(json.dumps({
        "elapsed_seconds": result.elapsed_seconds,
        "seconds_per_replication": result.seconds_per_replication,
    }, indent=2) + "\n", encoding="utf-8")
    paths["timing.json"] = timing
    return paths


def _config_echo(config: StudyConfig) -> dict:
    echo = dataclasses.asdict(config)
    if echo.get("theta") is not None:
        echo["theta"] = [float(v) for v in echo["theta"]]
    return echo


def load_replication_dir(in_dir):
    """Re-read replications.csv + run_info.json for re-rendering reports."""
    in_dir = Path(in_dir)
    rep_path = in_dir / "replications.csv"
    info_path = in_dir / "run_info.json"
    if not rep_path.exists() or not info_path.exists():
        raise FileNotFoundError(
            f"{in_dir} must contain replications.csv and run_info.json")
    info = json.loads(info_path.read_text(encoding="utf-8"))
    config = StudyConfig(**{k: (tuple(v) if isinstance(v, list) else v)
                            for k, v in info["config"].items()})
    truth = np.asarray(info["truth_theta"], dtype=float)

    by_rep: dict[int, dict[str, list]] = {}
    lines = rep_path.read_text(encoding="utf-8").strip().splitlines()
    if lines[0] != "rep,param,lo,hi,covered,length":
        raise ValueError("unexpected replications.csv header")
    for line in lines[1:]:
        rep_s, param, lo, hi, covered, length = line.split(",")
        row = by_rep.setdefault(int(rep_s), {"lo": [], "hi": [], "covered": [],
                                             "length": []})
        row["lo"].append(float(lo))
        row["hi"].append(float(hi))
        row["covered"].append(bool(int(covered)))
        row["length"].append(float(length))
    records = [
        ReplicationRecord(rep=rep, ok=True,
                          lo=np.array(row["lo"]), hi=np.array(row["hi"]),
                          covered=np.array(row["covered"]),
                          length=np.array(row["length"]))
        for rep, row in sorted(by_rep.items())
    ]
    coverage, coverage_se, avg_length, length_se, n_eff = aggregate_records(records)
    return StudyResult(
        config=config, truth_theta=truth, records=records,
        coverage=coverage, coverage_se=coverage_se, avg_length=avg_length,
        length_se=length_se, n_effective=n_eff,
        n_failures=int(info["n_failures"]),
        elapsed_seconds=0.0, seconds_per_replication=0.0)
