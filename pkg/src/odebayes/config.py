"""Strict JSON configuration parsing for the command-line interface.

Every document is a single JSON object. Keys are checked against the exact
set a command accepts — unknown keys are rejected rather than ignored, so a
typo cannot silently fall back to a default. Validation problems raise
``ConfigError``, which the CLI maps to exit code 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import RngStream
from .study import StudyConfig, build_method_config
from .systems import SYSTEM_NAMES

__all__ = ["ConfigError", "DiagSpec", "FitSpec", "SimulateSpec", "load_json",
           "parse_diag_config", "parse_fit_config", "parse_simulate_config",
           "parse_study_config"]


class ConfigError(Exception):
    """A configuration document is malformed or inconsistent."""


def load_json(path) -> dict:
    """Read one JSON object from ``path``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _check_keys(doc: dict, allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"{where} requires key '{key}'")
    return doc[key]


def _check_system(name) -> str:
    if name not in SYSTEM_NAMES:
        raise ConfigError(
            f"unknown system {name!r}; built-ins: {', '.join(SYSTEM_NAMES)}")
    return name


@dataclass(frozen=True)
class SimulateSpec:
    system: str
    case: int
    n: int
    seed: int
    stream_id: int
    theta: tuple | None
    sigma0: float


def parse_simulate_config(doc: dict) -> SimulateSpec:
    _check_keys(doc, {"system", "case", "n", "seed", "stream_id", "theta",
                      "sigma0"}, "simulate config")
    spec = SimulateSpec(
        system=_check_system(_require(doc, "system", "simulate config")),
        case=int(doc.get("case", 1)),
        n=int(_require(doc, "n", "simulate config")),
        seed=int(doc.get("seed", 0)),
        stream_id=int(doc.get("stream_id", 0)),
        theta=tuple(doc["theta"]) if doc.get("theta") is not None else None,
        sigma0=float(doc.get("sigma0", 0.1)))
    if spec.case not in (1, 2):
        raise ConfigError("case must be 1 or 2")
    if spec.n < 1:
        raise ConfigError("n must be >= 1")
    if spec.sigma0 <= 0:
        raise ConfigError("sigma0 must be positive")
    return spec


@dataclass(frozen=True)
class FitSpec:
    system: str
    stream: RngStream
    method_config: object


def parse_fit_config(doc: dict, method: str) -> FitSpec:
    _check_keys(doc, {"system", "seed", "stream_id", "draws", "options"},
                f"fit config ({method})")
    system = _check_system(_require(doc, "system", "fit config"))
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("'options' must be an object")
    try:
        shell = StudyConfig(method=method, system=system,
                            draws=int(doc.get("draws", 1000)),
                            method_options=options)
        method_config = build_method_config(shell)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
    return FitSpec(system=system,
                   stream=RngStream(int(doc.get("seed", 0)),
                                    int(doc.get("stream_id", 0))),
                   method_config=method_config)


def parse_study_config(doc: dict) -> StudyConfig:
    allowed = {"method", "case", "n", "replications", "draws", "level", "seed",
               "system", "theta", "sigma0", "max_failure_rate", "method_options"}
    _check_keys(doc, allowed, "study config")
    _require(doc, "method", "study config")
    kwargs = dict(doc)
    if kwargs.get("theta") is not None:
        kwargs["theta"] = tuple(kwargs["theta"])
    if "system" in kwargs:
        _check_system(kwargs["system"])
    options = kwargs.get("method_options")
    if options is not None and not isinstance(options, dict):
        raise ConfigError("'method_options' must be an object")
    try:
        config = StudyConfig(**kwargs)
        build_method_config(config)   # validate option names/values eagerly
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
    return config


@dataclass(frozen=True)
class DiagSpec:
    system: str
    theta: np.ndarray
    sigma0_sq: float
    case: int


def parse_diag_config(doc: dict) -> DiagSpec:
    _check_keys(doc, {"system", "theta", "sigma0_sq", "case"}, "diag config")
    system = _check_system(_require(doc, "system", "diag config"))
    theta = doc.get("theta")
    spec = DiagSpec(
        system=system,
        theta=None if theta is None else np.asarray(theta, dtype=float),
        sigma0_sq=float(doc.get("sigma0_sq", 0.01)),
        case=int(doc.get("case", 1)))
    if spec.case not in (1, 2):
        raise ConfigError("case must be 1 or 2")
    if spec.sigma0_sq <= 0:
        raise ConfigError("sigma0_sq must be positive")
    return spec
