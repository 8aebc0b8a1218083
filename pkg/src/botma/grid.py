"""Exhaustive (r0, course, speed) search.

Axes are half-open by default, ``[min, max)`` sampled every ``step``, so
the 100 m / 0.5 deg / 0.1 m/s grid over [0, 28000) x [0, 360) x [0, 25)
holds 280 * 720 * 250 = 50,400,000 cells. Cells are linearly indexed
r0-major, then course, then speed; ties resolve to the lowest index no
matter how the index range is partitioned across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .objective import BearingObjective, Candidate
from .report import SolverReport

#: cells evaluated per vectorized batch
CHUNK = 16384
#: above this many cells a run needs explicit confirmation from the caller
CONFIRM_CELLS = 10**7
#: largest grid whose full cost volume may be kept in memory and dumped
VOLUME_LIMIT = 10**6


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max) and math.isfinite(self.step)):
            raise ValueError("grid axis values must be finite")
        if self.step <= 0:
            raise ValueError(f"grid step must be > 0, got {self.step}")
        if self.max < self.min:
            raise ValueError("grid axis needs max >= min")


@dataclass(frozen=True)
class GridSpec:
    r0: Axis
    course: Axis
    speed: Axis
    endpoint: bool = False

    @property
    def axes(self) -> tuple[Axis, Axis, Axis]:
        return (self.r0, self.course, self.speed)

    def axis_count(self, axis: Axis) -> int:
        ratio = (axis.max - axis.min) / axis.step
        if self.endpoint:
            return int(math.floor(ratio + 1e-9)) + 1
        return max(1, int(math.ceil(ratio - 1e-9)))

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(self.axis_count(a) for a in self.axes)

    def axis_values(self, i: int) -> np.ndarray:
        a = self.axes[i]
        return a.min + np.arange(self.counts[i]) * a.step

    def cell(self, index: int) -> Candidate:
        i, j, k = np.unravel_index(index, self.counts)
        return Candidate(
            float(self.axis_values(0)[i]), float(self.axis_values(1)[j]), float(self.axis_values(2)[k])
        )

    @classmethod
    def from_counts(cls, counts: tuple[int, int, int], limits=((0.0, 28000.0), (0.0, 360.0), (0.0, 25.0))) -> "GridSpec":
        """Evenly divide half-open ``limits`` into ``counts`` cells per axis."""
        axes = [Axis(lo, hi, (hi - lo) / n) for (lo, hi), n in zip(limits, counts)]
        return cls(*axes)


FULL_GRID = GridSpec(Axis(0.0, 28000.0, 100.0), Axis(0.0, 360.0, 0.5), Axis(0.0, 25.0, 0.1))


def grid_cell_count(spec: GridSpec) -> int:
    # python ints do not overflow; the product is exact at any size
    n = 1
    for c in spec.counts:
        n *= int(c)
    return n


def _scan(objective: BearingObjective, spec: GridSpec, start: int, stop: int, keep: bool):
    values = [spec.axis_values(i) for i in range(3)]
    best_val, best_idx = math.inf, -1
    volume = np.empty(stop - start) if keep else None
    for lo in range(start, stop, CHUNK):
        hi = min(lo + CHUNK, stop)
        i, j, k = np.unravel_index(np.arange(lo, hi), spec.counts)
        params = np.column_stack((values[0][i], values[1][j], values[2][k]))
        costs = objective.batch(params)
        if keep:
            volume[lo - start:hi - start] = costs
        m = int(np.argmin(costs))
        if costs[m] < best_val:
            best_val, best_idx = float(costs[m]), lo + m
    return best_val, best_idx, stop - start, volume


def _scan_worker(args):
    objective, spec, start, stop = args
    val, idx, n, _ = _scan(objective, spec, start, stop, False)
    return val, idx, n


def grid_search(
    objective: BearingObjective,
    spec: GridSpec,
    jobs: int = 1,
    keep_volume: bool = False,
) -> SolverReport:
    """Evaluate every cell and return the lowest-cost one.

    ``jobs > 1`` partitions the linear index range over worker processes;
    their evaluation counts are added back to ``objective``.
    """
    total = grid_cell_count(spec)
    if keep_volume and total >= VOLUME_LIMIT:
        raise ValueError(f"cost volume dump is limited to grids under {VOLUME_LIMIT} cells")
    before = objective.evaluations
    volume = None
    if jobs <= 1 or total < 2 * CHUNK:
        best_val, best_idx, _, volume = _scan(objective, spec, 0, total, keep_volume)
    else:
        if keep_volume:
            raise ValueError("keep_volume requires jobs=1")
        bounds = np.linspace(0, total, jobs + 1).astype(int)
        tasks = [(objective, spec, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_scan_worker, tasks))
        objective._bump(sum(n for _, _, n in parts))
        best_val, best_idx = min((v, i) for v, i, _ in parts)
    details = {"index": best_idx, "counts": spec.counts}
    if volume is not None:
        details["volume"] = volume.reshape(spec.counts)
    return SolverReport(
        solver="grid",
        estimate=spec.cell(best_idx),
        cost=best_val,
        fevals=objective.evaluations - before,
        details=details,
    )
