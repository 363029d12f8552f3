"""Experiment configuration: one self-describing JSON file per run.

Top-level keys: ``task`` (optional; must match the invoked subcommand when
present), ``model`` (finite-model block, see models.model_from_config) or
``continuum`` (continuum block, simulate only), ``seed``, ``out_dir``,
``threads``, plus per-task parameter blocks documented in the README.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .models import (
    ContinuumSpec,
    exponential_potential,
    hardcore_potential,
    model_from_config,
    step_potential,
)
from .statespace import DEFAULT_MAX_STATES

__all__ = ["TASKS", "ConfigError", "ExperimentConfig", "load_config", "continuum_from_config"]

TASKS = ("verify", "report", "decay", "simulate")


class ConfigError(Exception):
    """A configuration problem; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _require_number(cfg: dict, key: str, default, lo=None, hi=None, integer=False):
    value = cfg.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(key, "must be finite")
    if lo is not None and value < lo:
        raise ConfigError(key, f"must be >= {lo}, got {value!r}")
    if hi is not None and value > hi:
        raise ConfigError(key, f"must be <= {hi}, got {value!r}")
    return int(value) if integer else float(value)


@dataclass
class ExperimentConfig:
    """A fully resolved run description (config file + CLI overrides)."""

    task: str
    raw: dict
    model: dict | None
    continuum: dict | None
    seed: int | None
    out_dir: str
    threads: int
    max_states: int
    # verify
    n_functions: int
    key_samples: int
    # report
    budget: int
    n_probes: int
    restarts: int
    # decay
    t_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 10.0, 50))
    # simulate
    t_end: float = 10.0
    n_trajectories: int = 1000
    init_state: int = 0
    cutoff: float | None = None

    def resolved_dict(self) -> dict:
        """The full configuration as written into every report."""
        return {
            "task": self.task,
            "model": self.model,
            "continuum": self.continuum,
            "seed": self.seed,
            "threads": self.threads,
            "max_states": self.max_states,
            "n_functions": self.n_functions,
            "key_samples": self.key_samples,
            "budget": self.budget,
            "n_probes": self.n_probes,
            "restarts": self.restarts,
            "t_grid": [float(t) for t in self.t_grid],
            "t_end": self.t_end,
            "n_trajectories": self.n_trajectories,
            "init_state": self.init_state,
            "cutoff": self.cutoff,
        }


def _resolve_t_grid(cfg: dict) -> np.ndarray:
    spec = cfg.get("t_grid")
    if spec is None:
        return np.linspace(0.0, 10.0, 50)
    if isinstance(spec, dict):
        start = _require_number(spec, "start", 0.0, lo=0.0)
        stop = _require_number(spec, "stop", 10.0, lo=start)
        num = _require_number(spec, "num", 50, lo=2, integer=True)
        return np.linspace(start, stop, num)
    if isinstance(spec, list):
        try:
            ts = np.asarray([float(v) for v in spec])
        except (TypeError, ValueError):
            raise ConfigError("t_grid", "entries must be numbers") from None
        if ts.size < 2 or np.any(np.diff(ts) <= 0) or ts[0] < 0:
            raise ConfigError("t_grid", "must be increasing and nonnegative")
        return ts
    raise ConfigError("t_grid", "expected a list or a {start, stop, num} block")


def load_config(
    path: str,
    task: str,
    seed_override: int | None = None,
    out_override: str | None = None,
    threads_override: int | None = None,
    default_out: str = ".",
) -> ExperimentConfig:
    """Parse and validate a config file, applying CLI overrides."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    if task not in TASKS:
        raise ConfigError("task", f"unknown task {task!r}; expected one of {TASKS}")
    declared = raw.get("task")
    if declared is not None and declared != task:
        raise ConfigError(
            "task", f"config declares task {declared!r} but {task!r} was invoked"
        )

    model = raw.get("model")
    continuum = raw.get("continuum")
    if model is not None and not isinstance(model, dict):
        raise ConfigError("model", "must be an object")
    if continuum is not None and not isinstance(continuum, dict):
        raise ConfigError("continuum", "must be an object")
    if task in ("verify", "report", "decay"):
        if model is None:
            raise ConfigError("model", f"task {task!r} needs a model block")
    if task == "simulate" and model is None and continuum is None:
        raise ConfigError("model", "task 'simulate' needs a model or continuum block")
    if model is not None:
        try:
            model_from_config(model)  # validates family and parameters early
        except KeyError as exc:
            raise ConfigError("model", str(exc.args[0])) from None
        except ValueError as exc:
            raise ConfigError("model.family", str(exc)) from None
    if continuum is not None:
        continuum_from_config(continuum)

    seed = raw.get("seed") if seed_override is None else seed_override
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")
    if task == "simulate" and seed is None:
        raise ConfigError("seed", "stochastic tasks need an explicit seed")
    if seed is None:
        seed = 0

    out_dir = out_override or raw.get("out_dir") or default_out
    if not isinstance(out_dir, str):
        raise ConfigError("out_dir", "must be a string path")
    threads = threads_override if threads_override is not None else raw.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads", f"expected a positive integer, got {threads!r}")

    cutoff = raw.get("cutoff")
    if cutoff is not None:
        cutoff = _require_number(raw, "cutoff", None, lo=0.0)
    return ExperimentConfig(
        task=task,
        raw=raw,
        model=model,
        continuum=continuum,
        seed=seed,
        out_dir=out_dir,
        threads=threads,
        max_states=_require_number(raw, "max_states", DEFAULT_MAX_STATES, lo=1, integer=True),
        n_functions=_require_number(raw, "n_functions", 100, lo=1, integer=True),
        key_samples=_require_number(raw, "key_samples", 100_000, lo=1, integer=True),
        budget=_require_number(raw, "budget", 1920, lo=1, integer=True),
        n_probes=_require_number(raw, "n_probes", 100_000, lo=0, integer=True),
        restarts=_require_number(raw, "restarts", 32, lo=1, integer=True),
        t_grid=_resolve_t_grid(raw),
        t_end=_require_number(raw, "t_end", 10.0, lo=0.0),
        n_trajectories=_require_number(raw, "n_trajectories", 1000, lo=1, integer=True),
        init_state=_require_number(raw, "init_state", 0, lo=0, integer=True),
        cutoff=cutoff,
    )


def continuum_from_config(cfg: dict) -> ContinuumSpec:
    """Build a ContinuumSpec from its config block.

    Schema: ``dimension``, ``box`` (list of sides), ``z``, ``beta``,
    ``potential`` = {"name": "hardcore"|"step"|"exponential", ...params},
    optional ``periodic`` and ``boundary`` (list of points).
    """
    for key in ("dimension", "box", "z", "beta", "potential"):
        if key not in cfg:
            raise ConfigError(f"continuum.{key}", "missing")
    pot = cfg["potential"]
    if not isinstance(pot, dict) or "name" not in pot:
        raise ConfigError("continuum.potential", "needs a name")
    name = pot["name"]
    try:
        if name == "hardcore":
            phi = hardcore_potential(float(pot["R"]))
        elif name == "step":
            phi = step_potential(float(pot["R"]), float(pot["a"]))
        elif name == "exponential":
            phi = exponential_potential(float(pot["a"]), float(pot["ell"]))
        else:
            raise ConfigError(
                "continuum.potential.name",
                f"unknown potential {name!r}; expected hardcore, step, or exponential",
            )
    except KeyError as exc:
        raise ConfigError(f"continuum.potential.{exc.args[0]}", "missing") from None
    label = f"{name}(" + ",".join(
        f"{k}={v}" for k, v in sorted(pot.items()) if k != "name"
    ) + ")"
    try:
        return ContinuumSpec(
            dimension=int(cfg["dimension"]),
            box=tuple(float(b) for b in cfg["box"]),
            z=float(cfg["z"]),
            beta=float(cfg["beta"]),
            phi=phi,
            support_radius=getattr(phi, "support_radius", None),
            boundary=np.asarray(cfg["boundary"], dtype=float) if cfg.get("boundary") else None,
            periodic=bool(cfg.get("periodic", False)),
            potential_name=label,
        )
    except ValueError as exc:
        raise ConfigError("continuum", str(exc)) from None
