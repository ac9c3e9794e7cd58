"""Run configuration: JSON schema, validation and defaults.

Schema (unknown keys are rejected at every level)::

    {
      "task": "simulate_wave | simulate_schrodinger | resolvent_scan |
               spectral_constant | poincare | decay_report | full_report",
      "domain":  {"shape", "boundary", "elements", "length", "height", "elements_y"},
      "metric":  {"kind": "constant", "g0"} | {"kind": "piecewise_linear", "nodes": [[x, g], ...]},
      "damping": {"kind", "height", "intervals", "center", "width", "level", "measure"},
      "observation": {"kind": "damping" | "whole" | "intervals" | "fat_cantor", ...},
      "initial": {"smoothness", "velocity"},
      "equation": "wave | schrodinger",          # resolvent_scan only
      "numerics": {"modes", "dt", "T", "tau_max", "grid_points",
                   "Lambda_grid", "seed", "time_samples"},
      "output_dir": "path"
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .damping import DampingSpec
from .errors import ConfigError
from .geometry import DomainSpec, MetricSpec

TASKS = ("simulate_wave", "simulate_schrodinger", "resolvent_scan", "spectral_constant",
         "poincare", "decay_report", "full_report")


@dataclass
class Numerics:
    modes: int = 128
    dt: float = 1e-3
    T: float = 100.0
    tau_max: float = 50.0
    grid_points: int = 512
    Lambda_grid: list | None = None
    seed: int = 0
    time_samples: int = 200


@dataclass
class InitialData:
    """Spectral profile ``u_k = (-1)^k (1 + lambda_k^2)^{-s/2} / (1 + k)``,
    ``v_k = velocity (-1)^k (1 + lambda_k^2)^{-(s-1)/2} / (1 + k)``."""

    smoothness: float = 3.0
    velocity: float = 0.5


@dataclass
class Observation:
    kind: str = "damping"
    intervals: list = field(default_factory=list)
    level: int = 6
    measure: float = 0.5


@dataclass
class RunConfig:
    task: str
    domain: DomainSpec
    metric: MetricSpec = field(default_factory=MetricSpec)
    damping: DampingSpec = field(default_factory=lambda: DampingSpec("constant", height=1.0))
    observation: Observation = field(default_factory=Observation)
    initial: InitialData = field(default_factory=InitialData)
    equation: str = "wave"
    numerics: Numerics = field(default_factory=Numerics)
    output_dir: str = "decaylab_out"


def _check_keys(section: dict, allowed, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {'.'.join(filter(None, [where, key]))!r}")


def _names(cls):
    return [f.name for f in fields(cls)]


def _build(cls, section: dict, where: str):
    _check_keys(section, _names(cls), where)
    try:
        return cls(**section)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _positive(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    if integer and int(value) != value:
        raise ConfigError(f"{where} must be an integer")
    if not value > 0:
        raise ConfigError(f"{where} must be positive, got {value}")


def config_from_dict(raw: dict) -> RunConfig:
    _check_keys(raw, _names(RunConfig), "")
    if "task" not in raw:
        raise ConfigError("missing required key 'task'")
    if "domain" not in raw:
        raise ConfigError("missing required key 'domain'")
    task = raw["task"]
    if task not in TASKS:
        raise ConfigError(f"task: unknown task {task!r}")

    domain = _build(DomainSpec, raw["domain"], "domain")
    metric_raw = dict(raw.get("metric", {}))
    if "nodes" in metric_raw:
        metric_raw["nodes"] = tuple(tuple(p) for p in metric_raw["nodes"])
    metric = _build(MetricSpec, metric_raw, "metric")
    damping_raw = dict(raw.get("damping", {"kind": "constant", "height": 1.0}))
    if "intervals" in damping_raw:
        damping_raw["intervals"] = tuple(tuple(iv) for iv in damping_raw["intervals"])
    damping = _build(DampingSpec, damping_raw, "damping")
    observation = _build(Observation, dict(raw.get("observation", {})), "observation")
    if observation.kind not in ("damping", "whole", "intervals", "fat_cantor"):
        raise ConfigError(f"observation.kind: unknown kind {observation.kind!r}")
    if observation.kind == "intervals" and not observation.intervals:
        raise ConfigError("observation.intervals must be non-empty for kind 'intervals'")
    observation.intervals = [list(map(float, iv)) for iv in observation.intervals]
    initial = _build(InitialData, dict(raw.get("initial", {})), "initial")
    _positive(initial.smoothness, "initial.smoothness")
    if not initial.velocity >= 0:
        raise ConfigError("initial.velocity must be nonnegative")
    numerics = _build(Numerics, dict(raw.get("numerics", {})), "numerics")
    for name in ("modes", "grid_points", "time_samples"):
        _positive(getattr(numerics, name), f"numerics.{name}", integer=True)
    for name in ("dt", "T", "tau_max"):
        _positive(getattr(numerics, name), f"numerics.{name}")
    if isinstance(numerics.seed, bool) or not isinstance(numerics.seed, int) or numerics.seed < 0:
        raise ConfigError("numerics.seed must be a nonnegative integer")
    if numerics.Lambda_grid is not None:
        if not isinstance(numerics.Lambda_grid, list) or not numerics.Lambda_grid:
            raise ConfigError("numerics.Lambda_grid must be a non-empty list")
        for i, value in enumerate(numerics.Lambda_grid):
            _positive(value, f"numerics.Lambda_grid[{i}]")
    equation = raw.get("equation", "wave")
    if equation not in ("wave", "schrodinger"):
        raise ConfigError(f"equation: unknown equation {equation!r}")
    output_dir = raw.get("output_dir", "decaylab_out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a non-empty string")
    return RunConfig(task=task, domain=domain, metric=metric, damping=damping,
                     observation=observation, initial=initial, equation=equation,
                     numerics=numerics, output_dir=output_dir)


def parse_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of :func:`config_from_dict` (lists in place of tuples)."""
    def plain(obj):
        if isinstance(obj, (list, tuple)):
            return [plain(o) for o in obj]
        if isinstance(obj, dict):
            return {k: plain(v) for k, v in obj.items()}
        return obj

    out = {
        "task": cfg.task,
        "domain": asdict(cfg.domain),
        "metric": asdict(cfg.metric),
        "damping": asdict(cfg.damping),
        "observation": asdict(cfg.observation),
        "initial": asdict(cfg.initial),
        "equation": cfg.equation,
        "numerics": asdict(cfg.numerics),
        "output_dir": cfg.output_dir,
    }
    return plain(out)


def emit_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n")
