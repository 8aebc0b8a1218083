"""Request handling shared by the HTTP routes and the in-process CLI backend."""
from __future__ import annotations

import numpy as np

from .. import __version__
from ..config import ConfigError, solver_config_from_dict, solver_kind
from ..grid import CONFIRM_CELLS, GridSpec, grid_cell_count
from ..harness import (
    MonteCarloSummary,
    check_thresholds,
    compare_solvers,
    noise_sweep,
    run_monte_carlo,
    run_streams,
    solve_once,
)
from ..kinematics import GeometryError, ScenarioError, observer_track, synthesize_bearings, target_track
from ..objective import CandidateXY
from ..scenarios import load_preset, preset_names, scenario_from_dict, scenario_to_dict
from . import schemas


class RequestError(ValueError):
    """The request is well-formed JSON but cannot be carried out as asked."""


def resolve(ref: schemas.ScenarioRef):
    try:
        if ref.preset is not None:
            return load_preset(ref.preset)
        return scenario_from_dict(ref.scenario.model_dump())
    except (ScenarioError, ValueError) as exc:
        raise RequestError(str(exc)) from None


def solver_config(spec: schemas.SolverSpec):
    try:
        return solver_config_from_dict(spec.model_dump())
    except ConfigError as exc:
        raise RequestError(str(exc)) from None


def health() -> schemas.Health:
    return schemas.Health(version=__version__)


def presets() -> schemas.PresetList:
    return schemas.PresetList(presets=preset_names())


def preset(name: str) -> schemas.ScenarioModel:
    try:
        return schemas.ScenarioModel(**scenario_to_dict(load_preset(name)))
    except ScenarioError as exc:
        raise RequestError(str(exc)) from None


def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    scenario = resolve(req)
    try:
        clean, noisy = synthesize_bearings(scenario)
    except GeometryError as exc:
        raise RequestError(str(exc)) from None
    obs, tgt = observer_track(scenario), target_track(scenario)
    return schemas.SimulateResponse(
        scenario=schemas.ScenarioModel(**scenario_to_dict(scenario)),
        times=obs.times.tolist(),
        observer=[tuple(p) for p in obs.positions.tolist()],
        target=[tuple(p) for p in tgt.positions.tolist()],
        clean=clean.bearings_deg.tolist(),
        noisy=noisy.bearings_deg.tolist(),
    )


def _plain(value):
    """JSON-friendly copy of solver report details."""
    if isinstance(value, CandidateXY):
        return {"x0": value.x0, "y0": value.y0, "course": value.course, "speed": value.speed}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def solve(req: schemas.SolveRequest, keep_volume: bool = False) -> schemas.SolveResponse:
    scenario = resolve(req)
    config = solver_config(req.solver)
    if isinstance(config, GridSpec):
        cells = grid_cell_count(config)
        if cells > CONFIRM_CELLS and not req.confirm_large_grid:
            raise RequestError(
                f"grid has {cells:,} cells (> {CONFIRM_CELLS:,}); confirmation is required to run it"
            )
    noise_rng, solver_rng = run_streams(req.master_seed, 0)
    trace = [] if req.trace and solver_kind(config) == "cma" else None
    try:
        rep = solve_once(config, scenario, noise_rng, solver_rng, jobs=req.jobs, trace=trace,
                         keep_volume=keep_volume)
    except ValueError as exc:
        raise RequestError(str(exc)) from None
    details = dict(rep.details)
    volume = details.pop("volume", None)
    ga_runs = []
    if rep.solver == "ga":
        per_run = config.population_size * (config.narrowing_generations + config.main_generations)
        ga_runs = [
            schemas.GaRunRow(run=i, x0=c.x0, y0=c.y0, course=c.course, speed=c.speed, cost=cost, fevals=per_run)
            for i, (c, cost) in enumerate(details.pop("inner_bests"))
        ]
    if volume is not None:
        details["volume"] = volume.ravel().tolist()
        details["axis_values"] = [config.axis_values(i).tolist() for i in range(3)]
    return schemas.SolveResponse(
        solver=rep.solver,
        estimate=schemas.CandidateModel(r0=rep.estimate.r0, course=rep.estimate.course, speed=rep.estimate.speed),
        cost=rep.cost,
        fevals=rep.fevals,
        details=_plain(details),
        trace=trace or [],
        ga_runs=ga_runs,
    )


def summary_model(s: MonteCarloSummary) -> schemas.SummaryModel:
    return schemas.SummaryModel(
        solver=s.solver,
        noise_sigma=s.noise_sigma,
        truth=schemas.CandidateModel(r0=s.truth.r0, course=s.truth.course, speed=s.truth.speed),
        mean=schemas.CandidateModel(**s.mean),
        std=schemas.CandidateModel(**s.std),
        abs_dev=schemas.CandidateModel(**s.abs_dev),
        runs=s.runs,
        total_fevals=s.total_fevals,
        records=[
            schemas.RunRecordModel(run=r.run, r=r.r0, course=r.course, speed=r.speed, cost=r.cost, fevals=r.fevals)
            for r in s.records
        ],
    )


def monte_carlo(req: schemas.MonteCarloRequest) -> schemas.MonteCarloResponse:
    scenario = resolve(req)
    config = solver_config(req.solver)
    try:
        summary = run_monte_carlo(config, scenario, req.M, req.master_seed, req.jobs)
    except ValueError as exc:
        raise RequestError(str(exc)) from None
    return schemas.MonteCarloResponse(
        summary=summary_model(summary), violations=check_thresholds(summary, req.thresholds)
    )


def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    scenario = resolve(req)
    config = solver_config(req.solver)
    try:
        result = noise_sweep(config, scenario, req.sigmas, req.M, req.master_seed, req.jobs)
    except ValueError as exc:
        raise RequestError(str(exc)) from None
    return schemas.SweepResponse(
        rows=[summary_model(s) for _, s in result.rows],
        violations=check_thresholds(result, req.thresholds),
    )


def compare(req: schemas.CompareRequest) -> schemas.CompareResponse:
    scenario = resolve(req)
    configs = {label: solver_config(spec) for label, spec in req.solvers.items()}
    try:
        result = compare_solvers(scenario, configs, req.M, req.master_seed, req.jobs)
    except ValueError as exc:
        raise RequestError(str(exc)) from None
    return schemas.CompareResponse(
        rows=[schemas.CompareRow(label=label, summary=summary_model(s)) for label, s in result.rows],
        fevals={label: s.total_fevals for label, s in result.rows},
    )
