"""Scenario geometry: observer legs, straight-line target motion, bearings.

Angles are degrees measured clockwise from north (+y), so a bearing is
``atan2(dx, dy)`` normalized to [0, 360). Positions are meters, x east and
y north.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ScenarioError(ValueError):
    """A scenario violates one of its construction invariants."""


class GeometryError(ValueError):
    """Observer and target coincide, so the bearing is undefined."""


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def wrap360(deg):
    """Map angle(s) in degrees onto [0, 360)."""
    out = np.mod(deg, 360.0)
    # np.mod rounds a tiny negative value up to exactly 360.0
    out = np.where(out >= 360.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y)

    def distance_to(self, other: "Point") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class Leg:
    """Constant course and speed segment of the observer path."""

    course: float
    speed: float
    duration: float

    def __post_init__(self):
        _check_finite(course=self.course, speed=self.speed, duration=self.duration)
        if self.duration <= 0:
            raise ScenarioError(f"leg duration must be > 0, got {self.duration}")
        if self.speed < 0:
            raise ScenarioError(f"leg speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class TargetTruth:
    r0: float
    b0: float
    course: float
    speed: float

    def __post_init__(self):
        _check_finite(r0=self.r0, b0=self.b0, course=self.course, speed=self.speed)
        if self.r0 <= 0:
            raise ScenarioError(f"truth.r0 must be > 0, got {self.r0}")
        if self.speed < 0:
            raise ScenarioError(f"truth.speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to generate one bearing series.

    ``observable`` asks for the leg requirement: at least two observer legs
    with distinct courses, without which range cannot be resolved from
    bearings alone.
    """

    observer_start: Point
    observer_legs: tuple[Leg, ...]
    truth: TargetTruth
    dt: float = 10.0
    n_samples: int = 121
    noise_sigma: float = 0.0
    seed: int = 0
    observable: bool = True
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "observer_legs", tuple(self.observer_legs))
        _check_finite(dt=self.dt, noise_sigma=self.noise_sigma)
        if self.dt <= 0:
            raise ScenarioError(f"dt must be > 0, got {self.dt}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ScenarioError(f"n_samples must be an integer >= 2, got {self.n_samples}")
        if self.noise_sigma < 0:
            raise ScenarioError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ScenarioError(f"seed must be an unsigned integer, got {self.seed}")
        if not self.observer_legs:
            raise ScenarioError("observer_legs must contain at least one leg")
        window = (self.n_samples - 1) * self.dt
        total = sum(leg.duration for leg in self.observer_legs)
        if total < window:
            raise ScenarioError(
                f"observer legs cover {total} s but the observation window needs {window} s"
            )
        if self.observable:
            courses = {wrap360(leg.course) for leg in self.observer_legs}
            if len(self.observer_legs) < 2 or len(courses) < 2:
                raise ScenarioError(
                    "leg requirement: an observable scenario needs at least two observer "
                    "legs with distinct courses"
                )

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * float(self.dt)

    def with_noise(self, noise_sigma: float) -> "Scenario":
        from dataclasses import replace

        return replace(self, noise_sigma=noise_sigma)


@dataclass(frozen=True)
class Track:
    times: np.ndarray
    positions: np.ndarray  # shape (N, 2): columns x, y

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if len(times) != len(positions):
            raise ValueError("times and positions differ in length")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("track times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return len(self.times)

    def point(self, k: int) -> Point:
        return Point(float(self.positions[k, 0]), float(self.positions[k, 1]))


@dataclass(frozen=True)
class BearingSeries:
    times: np.ndarray
    bearings_deg: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        bearings = np.asarray(self.bearings_deg, dtype=float)
        if times.shape != bearings.shape:
            raise ValueError("times and bearings differ in length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "bearings_deg", bearings)

    def __len__(self) -> int:
        return len(self.bearings_deg)


def initial_target_position(obs0: Point, b0: float, r0: float) -> Point:
    """Place the target ``r0`` meters from ``obs0`` along bearing ``b0``."""
    _check_finite(b0=b0, r0=r0)
    if r0 <= 0:
        raise ValueError(f"r0 must be > 0, got {r0}")
    b = math.radians(b0)
    return Point(obs0.x + r0 * math.sin(b), obs0.y + r0 * math.cos(b))


def propagate_linear(start: Point, course: float, speed: float, dt: float, n: int) -> Track:
    _check_finite(course=course, speed=speed, dt=dt)
    if n < 1:
        raise ValueError("n must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    k = np.arange(n)
    c = math.radians(course)
    step = speed * dt
    positions = np.column_stack(
        (start.x + k * step * math.sin(c), start.y + k * step * math.cos(c))
    )
    return Track(k * float(dt), positions)


def observer_positions(start: Point, legs, times: np.ndarray) -> np.ndarray:
    """Observer position at arbitrary times, integrating legs piecewise.

    Course changes take effect at the exact cumulative leg boundary, so a
    boundary falling between two samples splits that step.
    """
    times = np.asarray(times, dtype=float)
    pos = np.zeros((len(times), 2))
    pos[:, 0] = start.x
    pos[:, 1] = start.y
    leg_start = 0.0
    for leg in legs:
        elapsed = np.clip(times - leg_start, 0.0, leg.duration)
        c = math.radians(leg.course)
        pos[:, 0] += leg.speed * math.sin(c) * elapsed
        pos[:, 1] += leg.speed * math.cos(c) * elapsed
        leg_start += leg.duration
    return pos


def observer_track(scenario: Scenario) -> Track:
    times = scenario.times
    return Track(times, observer_positions(scenario.observer_start, scenario.observer_legs, times))


def bearing_from_to(origin: Point, to: Point) -> float:
    dx, dy = to.x - origin.x, to.y - origin.y
    if dx == 0 and dy == 0:
        raise GeometryError("observer collocated with target: bearing undefined")
    return float(wrap360(math.degrees(math.atan2(dx, dy))))


def bearings_between(origins: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Vectorized bearings in [0, 360) from ``origins`` to ``targets``.

    Both arrays end in a length-2 (x, y) axis and broadcast together.
    Coincident pairs come back as NaN; callers decide how to treat them.
    """
    d = np.asarray(targets, dtype=float) - np.asarray(origins, dtype=float)
    dx, dy = d[..., 0], d[..., 1]
    out = wrap360(np.degrees(np.arctan2(dx, dy)))
    return np.where((dx == 0) & (dy == 0), np.nan, out)


def target_track(scenario: Scenario) -> Track:
    obs0 = scenario.observer_start
    t = scenario.truth
    start = initial_target_position(obs0, t.b0, t.r0)
    return propagate_linear(start, t.course, t.speed, scenario.dt, scenario.n_samples)


def synthesize_bearings(
    scenario: Scenario, rng: np.random.Generator | None = None
) -> tuple[BearingSeries, BearingSeries]:
    """Clean and noisy bearing series for ``scenario``.

    When ``rng`` is omitted a generator seeded with ``scenario.seed`` is used.
    With ``noise_sigma == 0`` the noisy series is the clean one, bit for bit,
    and no random numbers are consumed.
    """
    obs = observer_track(scenario)
    tgt = target_track(scenario)
    clean = bearings_between(obs.positions, tgt.positions)
    if np.isnan(clean).any():
        k = int(np.flatnonzero(np.isnan(clean))[0])
        raise GeometryError(f"target passes through the observer at sample {k}")
    if scenario.noise_sigma == 0:
        noisy = clean.copy()
    else:
        if rng is None:
            rng = np.random.default_rng(scenario.seed)
        noisy = wrap360(clean + rng.normal(0.0, scenario.noise_sigma, size=clean.shape))
    return BearingSeries(obs.times, clean), BearingSeries(obs.times, noisy)
