"""Monte Carlo runs, noise sweeps and solver comparisons.

Run ``k`` of an experiment with master seed ``s`` draws its randomness from
``numpy.random.SeedSequence(s, spawn_key=(k,))``. That sequence spawns two
children: the first drives the bearing noise, the second the solver. Run
``k`` therefore never depends on how many runs are requested, and every
noise level in a sweep reuses the same underlying normal draws.

Course statistics are taken on residuals relative to the true course,
wrapped to [-180, 180), so a spread of estimates straddling north does
not average to 180.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cma import CmaConfig, run_cma
from .config import SolverConfig, solver_kind
from .ga import GaConfig, run_tmaga
from .grid import GridSpec, grid_search
from .kinematics import Scenario, initial_target_position, observer_track, synthesize_bearings
from .objective import (
    BearingObjective,
    BearingObjectiveXY,
    Candidate,
    range_from_xy,
)
from .report import SolverReport

PARAMS = ("r0", "course", "speed")


def run_streams(master_seed: int, k: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (noise, solver) generators for run ``k``."""
    noise, solver = np.random.SeedSequence(master_seed, spawn_key=(k,)).spawn(2)
    return np.random.default_rng(noise), np.random.default_rng(solver)


def solve_once(config: SolverConfig, scenario: Scenario, noise_rng: np.random.Generator,
               solver_rng: np.random.Generator, jobs: int = 1, trace: list | None = None,
               keep_volume: bool = False) -> SolverReport:
    """Synthesize one noisy observation series and run the solver on it."""
    _, noisy = synthesize_bearings(scenario, noise_rng)
    obs = observer_track(scenario)
    if isinstance(config, CmaConfig):
        return run_cma(noisy, obs, config, solver_rng, trace=trace)
    if isinstance(config, GridSpec):
        return grid_search(BearingObjective(noisy, obs), config, jobs=jobs, keep_volume=keep_volume)
    if isinstance(config, GaConfig):
        return _solve_ga(noisy, obs, config, solver_rng, scenario)
    raise TypeError(f"unsupported solver config {config!r}")


def _solve_ga(noisy, obs, config: GaConfig, rng, scenario: Scenario) -> SolverReport:
    objective = BearingObjectiveXY(noisy, obs)
    rep = run_tmaga(noisy, obs, config, rng, objective=objective)
    start = scenario.observer_start
    avg = rep.weighted_average
    truth = initial_target_position(start, scenario.truth.b0, scenario.truth.r0)
    truth_xy = np.array([truth.x, truth.y, scenario.truth.course, scenario.truth.speed])
    misses = sum(not box.contains(truth_xy) for box in rep.narrowed_bounds)
    return SolverReport(
        solver="ga",
        estimate=Candidate(range_from_xy(avg, start), avg.course % 360.0, avg.speed),
        cost=rep.best_cost,
        fevals=rep.fevals,
        details={
            "weighted_average": avg,
            "best": rep.best,
            "inner_bests": rep.inner_bests,
            "narrowing_misses": misses,
        },
    )


@dataclass
class RunRecord:
    run: int
    r0: float
    course: float
    speed: float
    cost: float
    fevals: int
    details: dict = field(default_factory=dict, repr=False)

    @property
    def estimate(self) -> Candidate:
        return Candidate(self.r0, self.course, self.speed)


@dataclass
class MonteCarloSummary:
    solver: str
    truth: Candidate
    noise_sigma: float
    mean: dict[str, float]
    std: dict[str, float]
    abs_dev: dict[str, float]
    runs: int
    total_fevals: int
    records: list[RunRecord] = field(repr=False, default_factory=list)


def summarize(records: list[RunRecord], truth: Candidate, solver: str, noise_sigma: float) -> MonteCarloSummary:
    """Mean, sample standard deviation (M - 1) and |mean - truth| per parameter."""
    if not records:
        raise ValueError("cannot summarize zero runs")
    course = np.array([r.course for r in records])
    # shift by whole turns onto the branch nearest the truth; exact when no shift is needed
    turns = np.floor((truth.course - course + 180.0) / 360.0)
    est = {
        "r0": np.array([r.r0 for r in records]),
        "course": course + 360.0 * turns,
        "speed": np.array([r.speed for r in records]),
    }
    mean = {p: float(np.mean(est[p])) for p in PARAMS}
    std = {p: float(np.std(est[p], ddof=1)) if len(records) > 1 else 0.0 for p in PARAMS}
    dev = {p: abs(mean[p] - getattr(truth, p)) for p in PARAMS}
    return MonteCarloSummary(
        solver=solver,
        truth=truth,
        noise_sigma=noise_sigma,
        mean=mean,
        std=std,
        abs_dev=dev,
        runs=len(records),
        total_fevals=sum(r.fevals for r in records),
        records=list(records),
    )


def _one_run(args) -> RunRecord:
    config, scenario, master_seed, k, grid_jobs = args
    noise_rng, solver_rng = run_streams(master_seed, k)
    rep = solve_once(config, scenario, noise_rng, solver_rng, jobs=grid_jobs)
    return RunRecord(k, rep.estimate.r0, rep.estimate.course, rep.estimate.speed, rep.cost, rep.fevals,
                     {k2: v for k2, v in rep.details.items() if k2 != "volume"})


def run_monte_carlo(solver_config: SolverConfig, scenario: Scenario, M: int,
                    master_seed: int = 0, jobs: int = 1) -> MonteCarloSummary:
    """``M`` independent solves, each with fresh noise and solver streams."""
    if M < 1:
        raise ValueError("M must be >= 1")
    tasks = [(solver_config, scenario, master_seed, k, 1) for k in range(M)]
    if jobs > 1 and M > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_one_run, tasks))
    else:
        if M == 1 and isinstance(solver_config, GridSpec):
            tasks = [(solver_config, scenario, master_seed, 0, jobs)]
        records = [_one_run(t) for t in tasks]
    records.sort(key=lambda r: r.run)
    t = scenario.truth
    return summarize(records, Candidate(t.r0, t.course, t.speed), solver_kind(solver_config), scenario.noise_sigma)


@dataclass
class SweepResult:
    rows: list[tuple[float, MonteCarloSummary]]

    @property
    def sigmas(self) -> list[float]:
        return [s for s, _ in self.rows]


def noise_sweep(solver_config: SolverConfig, base_scenario: Scenario, sigmas, M: int,
                master_seed: int = 0, jobs: int = 1) -> SweepResult:
    sigmas = [float(s) for s in sigmas]
    if not sigmas:
        raise ValueError("sweep needs at least one noise level")
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValueError("noise levels must be strictly increasing")
    return SweepResult([
        (s, run_monte_carlo(solver_config, base_scenario.with_noise(s), M, master_seed, jobs))
        for s in sigmas
    ])


@dataclass
class Comparison:
    rows: list[tuple[str, MonteCarloSummary]]

    def summary(self, label: str) -> MonteCarloSummary:
        for name, s in self.rows:
            if name == label:
                return s
        raise KeyError(label)

    def fevals(self, label: str) -> int:
        return self.summary(label).total_fevals

    def feval_ratio(self, numerator: str, denominator: str) -> float:
        return self.fevals(numerator) / self.fevals(denominator)


def compare_solvers(scenario: Scenario, configs, M: int, master_seed: int = 0, jobs: int = 1) -> Comparison:
    """Monte Carlo summary per solver on one scenario.

    ``configs`` is a mapping of label to solver config or a sequence of
    configs (labelled by kind, with an index suffix on repeats).
    """
    if isinstance(configs, dict):
        labelled = list(configs.items())
    else:
        labelled, seen = [], {}
        for c in configs:
            kind = solver_kind(c)
            seen[kind] = seen.get(kind, 0) + 1
            labelled.append((kind if seen[kind] == 1 else f"{kind}{seen[kind]}", c))
    if len(labelled) < 2:
        raise ValueError("compare_solvers needs at least two solver configs")
    return Comparison([(label, run_monte_carlo(c, scenario, M, master_seed, jobs)) for label, c in labelled])


def check_thresholds(summaries, thresholds: dict) -> list[str]:
    """Describe every threshold a summary (or sweep) violates.

    Recognized keys: ``max_std`` and ``max_abs_dev`` (per-parameter limits)
    and ``monotone_std`` (parameters whose std must not decrease with noise
    across a sweep).
    """
    if isinstance(summaries, MonteCarloSummary):
        summaries = [summaries]
    elif isinstance(summaries, SweepResult):
        summaries = [s for _, s in summaries.rows]
    problems = []
    for key, attr in (("max_std", "std"), ("max_abs_dev", "abs_dev")):
        for p, limit in thresholds.get(key, {}).items():
            for s in summaries:
                value = getattr(s, attr)[p]
                if not value <= float(limit):
                    problems.append(f"{attr}[{p}] = {value:.6g} exceeds {limit} at noise {s.noise_sigma}")
    for p in thresholds.get("monotone_std", []):
        stds = [s.std[p] for s in summaries]
        for (a, sa), (b, sb) in zip(zip(stds, summaries), zip(stds[1:], summaries[1:])):
            if b < a:
                problems.append(
                    f"std[{p}] falls from {a:.6g} to {b:.6g} between noise {sa.noise_sigma} and {sb.noise_sigma}"
                )
    unknown = set(thresholds) - {"max_std", "max_abs_dev", "monotone_std"}
    if unknown:
        problems.append(f"unknown threshold keys: {', '.join(sorted(unknown))}")
    return problems


def is_finite_summary(s: MonteCarloSummary) -> bool:
    return all(math.isfinite(v) for d in (s.mean, s.std, s.abs_dev) for v in d.values())
