"""Candidate hypotheses and bearing-fit cost functions.

Two candidate forms exist. :class:`Candidate` is (initial range, course,
speed) with the initial position anchored on the first observed bearing,
which leaves a 3-D search. :class:`CandidateXY` places the target start
directly at (x0, y0); the genetic algorithm searches that 4-D form.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, fields

import numpy as np

from .kinematics import (
    BearingSeries,
    GeometryError,
    Point,
    Track,
    bearings_between,
    initial_target_position,
)

#: cost assigned to a candidate whose track passes through the observer
INFEASIBLE_PENALTY = 1e9


@dataclass(frozen=True)
class Candidate:
    r0: float
    course: float
    speed: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r0, self.course, self.speed], dtype=float)


@dataclass(frozen=True)
class CandidateXY:
    x0: float
    y0: float
    course: float
    speed: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.y0, self.course, self.speed], dtype=float)


class SearchBounds:
    """Ordered per-parameter ``(min, max)`` box."""

    def __init__(self, limits: dict[str, tuple[float, float]]):
        self.names = tuple(limits)
        lows, highs = zip(*(limits[n] for n in self.names))
        self.lows = np.array(lows, dtype=float)
        self.highs = np.array(highs, dtype=float)
        bad = [n for n, lo, hi in zip(self.names, self.lows, self.highs) if not lo < hi]
        if bad:
            raise ValueError(f"bounds need min < max for {', '.join(bad)}")

    @property
    def widths(self) -> np.ndarray:
        return self.highs - self.lows

    @property
    def center(self) -> np.ndarray:
        return (self.lows + self.highs) / 2.0

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {n: (float(lo), float(hi)) for n, lo, hi in zip(self.names, self.lows, self.highs)}

    def contains(self, values, tol: float = 0.0) -> bool:
        v = np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lows - tol) and np.all(v <= self.highs + tol))

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lows, self.highs)

    def __eq__(self, other):
        return (
            isinstance(other, SearchBounds)
            and self.names == other.names
            and np.array_equal(self.lows, other.lows)
            and np.array_equal(self.highs, other.highs)
        )

    def __repr__(self):
        return f"SearchBounds({self.as_dict()!r})"


RCS_BOUNDS = SearchBounds({"r0": (0.0, 28000.0), "course": (0.0, 360.0), "speed": (0.0, 25.0)})
XY_BOUNDS = SearchBounds(
    {"x0": (0.0, 20000.0), "y0": (0.0, 20000.0), "course": (0.0, 360.0), "speed": (0.0, 25.0)}
)


@dataclass(frozen=True)
class CostValue:
    value: float
    undefined_count: int = 0


def candidate_track(c: Candidate, b0: float, obs: Track) -> Track:
    start = initial_target_position(obs.point(0), b0, c.r0)
    return _straight_track(start.x, start.y, c.course, c.speed, obs.times)


def candidate_track_xy(c: CandidateXY, obs_times) -> Track:
    return _straight_track(c.x0, c.y0, c.course, c.speed, np.asarray(obs_times, dtype=float))


def _straight_track(x0, y0, course, speed, times) -> Track:
    elapsed = times - times[0]
    rad = math.radians(course)
    positions = np.column_stack(
        (x0 + speed * elapsed * math.sin(rad), y0 + speed * elapsed * math.cos(rad))
    )
    return Track(times, positions)


def predicted_bearings(target: Track, obs: Track) -> BearingSeries:
    b = bearings_between(obs.positions, target.positions)
    if np.isnan(b).any():
        raise GeometryError("candidate track passes through the observer")
    return BearingSeries(obs.times, b)


def angle_residual(a, b):
    """``a - b`` wrapped onto [-180, 180)."""
    r = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + 180.0, 360.0) - 180.0
    # mod can return exactly 360 for tiny negative inputs
    r = np.where(r >= 180.0, r - 360.0, r)
    return float(r) if r.ndim == 0 else r


def _series_values(s) -> np.ndarray:
    return s.bearings_deg if isinstance(s, BearingSeries) else np.asarray(s, dtype=float)


def cost_euclidean(predicted, observed) -> CostValue:
    """Root of summed squared wrapped bearing residuals, in degrees."""
    p, o = _series_values(predicted), _series_values(observed)
    if p.shape != o.shape:
        raise ValueError(f"series lengths differ: {p.shape} vs {o.shape}")
    if p.size == 0:
        raise ValueError("series are empty")
    r = angle_residual(p, o)
    return CostValue(float(np.sqrt(np.sum(np.square(r)))), 0)


def cost_total_deviation_nonmetric(predicted, observed) -> CostValue:
    """Literal sum of ``sqrt(M_i**2 - G_i**2)`` over samples.

    This is not a distance: the radicand goes negative whenever the
    predicted angle is smaller in magnitude than the observed one. Such
    terms add nothing to ``value`` and are tallied in ``undefined_count``.
    """
    m, g = _series_values(predicted), _series_values(observed)
    if m.shape != g.shape:
        raise ValueError(f"series lengths differ: {m.shape} vs {g.shape}")
    radicand = np.square(m) - np.square(g)
    undefined = radicand < 0
    value = float(np.sum(np.sqrt(np.where(undefined, 0.0, radicand))))
    return CostValue(value, int(np.count_nonzero(undefined)))


class _Counted:
    """Thread-safe evaluation counter shared by the objective classes."""

    def __init__(self):
        self._lock = threading.Lock()
        self.evaluations = 0

    def _bump(self, n: int) -> None:
        with self._lock:
            self.evaluations += n

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()


def _batch_costs(starts: np.ndarray, course: np.ndarray, speed: np.ndarray,
                 elapsed: np.ndarray, obs_pos: np.ndarray, observed: np.ndarray) -> np.ndarray:
    rad = np.radians(course)[:, None]
    travel = speed[:, None] * elapsed[None, :]
    dx = starts[:, 0:1] + travel * np.sin(rad) - obs_pos[None, :, 0]
    dy = starts[:, 1:2] + travel * np.cos(rad) - obs_pos[None, :, 1]
    pred = np.degrees(np.arctan2(dx, dy))
    resid = np.mod(pred - observed[None, :] + 180.0, 360.0) - 180.0
    costs = np.sqrt(np.sum(resid * resid, axis=1))
    hit = np.any((dx == 0) & (dy == 0), axis=1)
    return np.where(hit, INFEASIBLE_PENALTY, costs)


class BearingObjective(_Counted):
    """Cost of a :class:`Candidate` against an observed bearing series.

    The anchor bearing is the first observed bearing. Every scored candidate
    adds one to :attr:`evaluations`, whether it arrives through
    ``__call__`` or as a row of :meth:`batch`. Geometry failures score
    :data:`INFEASIBLE_PENALTY` instead of raising.
    """

    dimension = 3

    def __init__(self, observed: BearingSeries, obs_track: Track):
        super().__init__()
        if len(observed) != len(obs_track):
            raise ValueError("observed series and observer track are not aligned")
        self.observed = observed
        self.obs_track = obs_track
        self.b0 = float(observed.bearings_deg[0])
        self._obs = observed.bearings_deg
        self._pos = obs_track.positions
        self._elapsed = obs_track.times - obs_track.times[0]
        b = math.radians(self.b0)
        self._dir = np.array([math.sin(b), math.cos(b)])

    def __call__(self, c: Candidate) -> CostValue:
        return CostValue(float(self.batch(np.atleast_2d(c.as_array()))[0]))

    def batch(self, params: np.ndarray) -> np.ndarray:
        """Costs for rows of ``(r0, course, speed)``."""
        params = np.atleast_2d(np.asarray(params, dtype=float))
        self._bump(len(params))
        starts = self._pos[0][None, :] + params[:, 0:1] * self._dir[None, :]
        return _batch_costs(starts, params[:, 1], params[:, 2], self._elapsed, self._pos, self._obs)


class BearingObjectiveXY(_Counted):
    """Cost of a :class:`CandidateXY`; same accounting as :class:`BearingObjective`."""

    dimension = 4

    def __init__(self, observed: BearingSeries, obs_track: Track):
        super().__init__()
        if len(observed) != len(obs_track):
            raise ValueError("observed series and observer track are not aligned")
        self.observed = observed
        self.obs_track = obs_track
        self._obs = observed.bearings_deg
        self._pos = obs_track.positions
        self._elapsed = obs_track.times - obs_track.times[0]

    def __call__(self, c: CandidateXY) -> CostValue:
        return CostValue(float(self.batch(np.atleast_2d(c.as_array()))[0]))

    def batch(self, params: np.ndarray) -> np.ndarray:
        """Costs for rows of ``(x0, y0, course, speed)``."""
        params = np.atleast_2d(np.asarray(params, dtype=float))
        self._bump(len(params))
        return _batch_costs(params[:, :2], params[:, 2], params[:, 3], self._elapsed, self._pos, self._obs)


def objective_for(observed: BearingSeries, obs_track: Track) -> BearingObjective:
    return BearingObjective(observed, obs_track)


def objective_for_xy(observed: BearingSeries, obs_track: Track) -> BearingObjectiveXY:
    return BearingObjectiveXY(observed, obs_track)


def range_from_xy(c: CandidateXY, obs0: Point) -> float:
    return math.hypot(c.x0 - obs0.x, c.y0 - obs0.y)


def candidate_from_array(values, form: str = "rcs"):
    cls = Candidate if form == "rcs" else CandidateXY
    return cls(*(float(v) for v in values[: len(fields(cls))]))
