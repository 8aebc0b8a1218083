"""JSON config format shared by the CLI, the service and experiment files.

A solver block is ``{"kind": "ga" | "cma" | "grid", ...fields}``; omitted
fields take their defaults. Bounds are written as
``{"r0": [0, 28000], ...}`` and grid axes as ``{"r0": [min, max, step], ...}``.

An experiment file combines a scenario, a solver and harness settings::

    {
      "scenario": {"preset": "trial07"},
      "solver": {"kind": "cma", "feval_budget": 50000},
      "harness": {"M": 20, "master_seed": 0, "sigmas": [0, 0.5, 1, 2], "jobs": 1},
      "thresholds": {"max_std": {"r0": 10, "course": 0.1, "speed": 0.05}},
      "output": {"dir": "results"}
    }

``scenario`` may instead be ``{"path": "scenario.json"}`` or an inline
scenario object.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Union

from .cma import CmaConfig
from .ga import GaConfig
from .grid import FULL_GRID, Axis, GridSpec
from .kinematics import Scenario
from .objective import SearchBounds
from .scenarios import load_preset, load_scenario, scenario_from_dict

SolverConfig = Union[GaConfig, CmaConfig, GridSpec]
SOLVER_KINDS = ("ga", "cma", "grid")


class ConfigError(ValueError):
    pass


def solver_kind(config: SolverConfig) -> str:
    if isinstance(config, GaConfig):
        return "ga"
    if isinstance(config, CmaConfig):
        return "cma"
    if isinstance(config, GridSpec):
        return "grid"
    raise ConfigError(f"not a solver config: {config!r}")


def _bounds_from(data) -> SearchBounds:
    return SearchBounds({k: (float(v[0]), float(v[1])) for k, v in data.items()})


def solver_config_from_dict(data: dict) -> SolverConfig:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in SOLVER_KINDS:
        raise ConfigError(f"unknown solver kind {kind!r}; expected one of {', '.join(SOLVER_KINDS)}")
    try:
        if kind == "grid":
            if "coarse" in data:
                return GridSpec.from_counts(tuple(int(n) for n in data.pop("coarse")))
            axes = {name: getattr(FULL_GRID, name) for name in ("r0", "course", "speed")}
            for name, triple in data.pop("axes", {}).items():
                if name not in axes:
                    raise ConfigError(f"unknown grid axis {name!r}")
                axes[name] = Axis(*(float(v) for v in triple))
            spec = GridSpec(**axes, endpoint=bool(data.pop("endpoint", False)))
            if data:
                raise ConfigError(f"unknown grid fields: {', '.join(sorted(data))}")
            return spec
        cls = GaConfig if kind == "ga" else CmaConfig
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown {kind} fields: {', '.join(sorted(unknown))}")
        if "bounds" in data:
            data["bounds"] = _bounds_from(data["bounds"])
        return cls(**data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} config: {exc}") from None


def solver_config_to_dict(config: SolverConfig) -> dict:
    kind = solver_kind(config)
    if kind == "grid":
        return {
            "kind": "grid",
            "axes": {n: [a.min, a.max, a.step] for n, a in zip(("r0", "course", "speed"), config.axes)},
            "endpoint": config.endpoint,
        }
    out = {"kind": kind}
    for f in fields(config):
        value = getattr(config, f.name)
        out[f.name] = {k: list(v) for k, v in value.as_dict().items()} if f.name == "bounds" else value
    return out


def scenario_from_ref(ref, base_dir: Path | None = None) -> Scenario:
    if isinstance(ref, str):
        return load_preset(ref)
    if "preset" in ref:
        return load_preset(ref["preset"])
    if "path" in ref:
        path = Path(ref["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_scenario(path)
    return scenario_from_dict(ref)


@dataclass
class ExperimentConfig:
    scenario: Scenario
    solver: SolverConfig
    M: int | None = None
    master_seed: int = 0
    sigmas: list[float] | None = None
    jobs: int = 1
    thresholds: dict = field(default_factory=dict)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if "scenario" not in data or "solver" not in data:
            raise ConfigError("experiment config needs 'scenario' and 'solver'")
        harness = data.get("harness", {})
        cfg = cls(
            scenario=scenario_from_ref(data["scenario"], base_dir),
            solver=solver_config_from_dict(data["solver"]),
            M=int(harness["M"]) if "M" in harness else None,
            master_seed=int(harness.get("master_seed", 0)),
            sigmas=[float(s) for s in harness["sigmas"]] if "sigmas" in harness else None,
            jobs=int(harness.get("jobs", 1)),
            thresholds=dict(data.get("thresholds", {})),
            output_dir=data.get("output", {}).get("dir"),
        )
        if cfg.M is not None and cfg.M < 1:
            raise ConfigError("harness.M must be >= 1")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        return cls.from_dict(data, base_dir=path.parent)


def load_solver_config(path: str | Path) -> SolverConfig:
    """Read a solver block, either bare or under an experiment's ``solver`` key."""
    with open(path) as fh:
        data = json.load(fh)
    return solver_config_from_dict(data.get("solver", data))

