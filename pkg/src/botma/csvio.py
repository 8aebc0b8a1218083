"""CSV layouts written by the CLI and available to library users.

========================  =====================================================
file                      columns
========================  =====================================================
observer_track.csv        k, t, x, y
target_track.csv          k, t, x, y
bearings.csv              k, t, clean_deg, noisy_deg
report.csv                solver, r0, course, speed, cost, fevals
ga_runs.csv               run, x0, y0, course, speed, cost, fevals
cma_trace.csv             generation, sigma, best_cost, r0, course, speed
cost_volume.csv           r0, course, speed, cost
runs.csv                  run, r, course, speed, cost, fevals
summary.csv               solver, noise_sigma, stat, r0, course, speed, runs, total_fevals
========================  =====================================================

``summary.csv`` holds three rows per Monte Carlo summary, ``stat`` being
``mu``, ``sigma`` and ``abs_dev`` in that order.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

TRACK_COLUMNS = ("k", "t", "x", "y")
BEARING_COLUMNS = ("k", "t", "clean_deg", "noisy_deg")
REPORT_COLUMNS = ("solver", "r0", "course", "speed", "cost", "fevals")
GA_COLUMNS = ("run", "x0", "y0", "course", "speed", "cost", "fevals")
TRACE_COLUMNS = ("generation", "sigma", "best_cost", "r0", "course", "speed")
VOLUME_COLUMNS = ("r0", "course", "speed", "cost")
RUN_COLUMNS = ("run", "r", "course", "speed", "cost", "fevals")
SUMMARY_COLUMNS = ("solver", "noise_sigma", "stat", "r0", "course", "speed", "runs", "total_fevals")


def _fmt(v):
    # repr round-trips floats exactly, keeping repeated runs byte-identical
    return repr(float(v)) if isinstance(v, float) else v


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_rows(solver: str, noise_sigma: float, mean: dict, std: dict, abs_dev: dict,
                 runs: int, total_fevals: int) -> list[tuple]:
    return [
        (solver, noise_sigma, stat, d["r0"], d["course"], d["speed"], runs, total_fevals)
        for stat, d in (("mu", mean), ("sigma", std), ("abs_dev", abs_dev))
    ]
