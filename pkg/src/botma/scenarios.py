"""Scenario files and the twelve built-in trial presets.

A scenario file is JSON::

    {
      "name": "trial07",
      "observer_start": {"x": 0.0, "y": 0.0},
      "legs": [{"course": 0.0, "speed": 5.0, "duration": 600.0}, ...],
      "truth": {"r0": 4006.0, "b0": 0.0, "course": 90.0, "speed": 10.0},
      "dt": 10.0,
      "n_samples": 121,
      "noise_sigma": 0.0,
      "seed": 7,
      "observable": true
    }

``name`` and ``observable`` are optional (defaults ``""`` and ``true``).
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .kinematics import Leg, Point, Scenario, ScenarioError, TargetTruth

# (r0 m, course deg, speed m/s, noise sigma deg) per trial
TRIALS = {
    1: (7994.0, 90.0, 10.0, 0.3),
    2: (7071.0, 90.0, 6.0, 0.3),
    3: (4006.0, 90.0, 6.0, 0.3),
    4: (8000.0, 175.0, 10.0, 0.3),
    5: (8000.0, 150.0, 10.0, 0.3),
    6: (8000.0, 120.0, 10.0, 0.3),
    7: (4006.0, 90.0, 10.0, 0.0),
    8: (4006.0, 90.0, 10.0, 0.5),
    9: (4006.0, 90.0, 10.0, 1.0),
    10: (4006.0, 90.0, 10.0, 2.0),
    11: (4006.0, 90.0, 10.0, 5.0),
    12: (4006.0, 90.0, 10.0, 10.0),
}

DEFAULT_DT = 10.0
DEFAULT_N_SAMPLES = 121
DEFAULT_B0 = 0.0
DEFAULT_OBSERVER_SPEED = 5.0


def default_legs(dt: float = DEFAULT_DT, n_samples: int = DEFAULT_N_SAMPLES) -> tuple[Leg, ...]:
    """North then east at 5 m/s, each leg covering half the window."""
    half = (n_samples - 1) * dt / 2.0
    return (
        Leg(course=0.0, speed=DEFAULT_OBSERVER_SPEED, duration=half),
        Leg(course=90.0, speed=DEFAULT_OBSERVER_SPEED, duration=half),
    )


def build_trial(number: int) -> Scenario:
    try:
        r0, course, speed, sigma = TRIALS[number]
    except KeyError:
        raise ScenarioError(f"no trial {number}; presets are trial01..trial12") from None
    return Scenario(
        observer_start=Point(0.0, 0.0),
        observer_legs=default_legs(),
        truth=TargetTruth(r0=r0, b0=DEFAULT_B0, course=course, speed=speed),
        dt=DEFAULT_DT,
        n_samples=DEFAULT_N_SAMPLES,
        noise_sigma=sigma,
        seed=number,
        name=f"trial{number:02d}",
    )


def preset_names() -> list[str]:
    return [f"trial{n:02d}" for n in sorted(TRIALS)]


def load_preset(name: str) -> Scenario:
    """Load a shipped preset file such as ``trial07``."""
    if name not in preset_names():
        raise ScenarioError(f"unknown preset {name!r}; choose from trial01..trial12")
    text = resources.files("botma").joinpath("presets").joinpath(f"{name}.json").read_text()
    return scenario_from_dict(json.loads(text))


def scenario_from_dict(data: dict) -> Scenario:
    try:
        start = data["observer_start"]
        truth = data["truth"]
        return Scenario(
            observer_start=Point(float(start["x"]), float(start["y"])),
            observer_legs=tuple(
                Leg(float(leg["course"]), float(leg["speed"]), float(leg["duration"]))
                for leg in data["legs"]
            ),
            truth=TargetTruth(
                r0=float(truth["r0"]),
                b0=float(truth["b0"]),
                course=float(truth["course"]),
                speed=float(truth["speed"]),
            ),
            dt=float(data["dt"]),
            n_samples=int(data["n_samples"]),
            noise_sigma=float(data["noise_sigma"]),
            seed=int(data["seed"]),
            observable=bool(data.get("observable", True)),
            name=str(data.get("name", "")),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario is missing key {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "observer_start": {"x": scenario.observer_start.x, "y": scenario.observer_start.y},
        "legs": [
            {"course": leg.course, "speed": leg.speed, "duration": leg.duration}
            for leg in scenario.observer_legs
        ],
        "truth": {
            "r0": scenario.truth.r0,
            "b0": scenario.truth.b0,
            "course": scenario.truth.course,
            "speed": scenario.truth.speed,
        },
        "dt": scenario.dt,
        "n_samples": scenario.n_samples,
        "noise_sigma": scenario.noise_sigma,
        "seed": scenario.seed,
        "observable": scenario.observable,
    }


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def resolve_scenario(preset: str | None = None, path: str | Path | None = None) -> Scenario:
    if (preset is None) == (path is None):
        raise ScenarioError("give exactly one of a preset name or a scenario file")
    return load_preset(preset) if preset is not None else load_scenario(path)
