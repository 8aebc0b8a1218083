"""Command line client.

Every command builds a service request. By default it is handled in
process; ``--server URL`` sends it to a running ``botma serve`` instead.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 a threshold
from the experiment config was violated.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, solver_config_to_dict
from .csvio import (
    BEARING_COLUMNS,
    GA_COLUMNS,
    REPORT_COLUMNS,
    RUN_COLUMNS,
    SUMMARY_COLUMNS,
    TRACE_COLUMNS,
    TRACK_COLUMNS,
    VOLUME_COLUMNS,
    summary_rows,
    write_csv,
)
from .grid import FULL_GRID, GridSpec
from .kinematics import ScenarioError
from .scenarios import scenario_from_dict, scenario_to_dict
from .service import schemas
from .service.client import HttpBackend, LocalBackend, ServiceError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_THRESHOLD = 0, 1, 2, 3
DEFAULT_M = 100
FULL_SCALE_M = 1000
COARSE_GRID = (28, 36, 25)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", help="built-in scenario, trial01..trial12")
    g.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--config", help="experiment or solver JSON config")
    p.add_argument("--print-preset", action="store_true",
                   help="print the fully resolved scenario as JSON and exit")
    p.add_argument("--out", help="output directory for CSV files (default: the config's output.dir, else out)")
    p.add_argument("--server", help="base URL of a running service; omit to run in process")


def _add_solver_flags(p, seed=True):
    p.add_argument("--solver", choices=("ga", "cma", "grid"), help="solver kind (default: from --config, else cma)")
    p.add_argument("--full-grid", action="store_true",
                   help="grid solver: use the full 280x720x250 grid instead of the coarse 28x36x25 one")
    p.add_argument("--yes", action="store_true", help="confirm runs of grids above 10^7 cells")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    if seed:
        p.add_argument("--master-seed", type=int, default=None, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="botma", description="Bearings-only target motion analysis workbench.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write observer/target tracks and clean+noisy bearings")
    _add_scenario_flags(p)

    p = sub.add_parser("solve", help="run one solver once")
    _add_scenario_flags(p)
    _add_solver_flags(p)
    p.add_argument("--trace", action="store_true", help="cma: write the per-generation trace")
    p.add_argument("--volume", action="store_true", help="grid: dump the full cost volume (< 10^6 cells)")

    for name, help_ in (("mc", "Monte Carlo summary for one solver"),
                        ("sweep", "Monte Carlo summaries across noise levels")):
        p = sub.add_parser(name, help=help_)
        _add_scenario_flags(p)
        _add_solver_flags(p)
        p.add_argument("-M", type=int, default=None, help=f"runs per summary (default {DEFAULT_M}; ga: outer_runs)")
        p.add_argument("--full-scale", action="store_true", help=f"use the full-scale {FULL_SCALE_M} runs")
        if name == "sweep":
            p.add_argument("--sigmas", default=None, help="comma-separated noise levels in degrees, ascending")

    p = sub.add_parser("compare", help="Monte Carlo summaries for several solvers on one scenario")
    _add_scenario_flags(p)
    p.add_argument("--solvers", default="ga,cma", help="comma-separated solver kinds (default ga,cma)")
    p.add_argument("-M", type=int, default=1, help="runs per solver (default 1)")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.add_argument("--server")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _backend(args):
    return HttpBackend(args.server) if getattr(args, "server", None) else LocalBackend()


def _experiment(args) -> ExperimentConfig | None:
    if not args.config:
        return None
    data = _load_json(args.config)
    if "scenario" in data:
        return ExperimentConfig.load(args.config)
    return None


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _scenario_ref(args, exp: ExperimentConfig | None) -> dict:
    if args.preset:
        return {"preset": args.preset}
    if args.scenario:
        return {"scenario": _load_json(args.scenario)}
    if exp is not None:
        return {"scenario": scenario_to_dict(exp.scenario)}
    raise UsageError("give --preset, --scenario or an experiment --config")


def _solver_spec(args, exp: ExperimentConfig | None) -> dict:
    block = None
    if args.config:
        data = _load_json(args.config)
        block = data.get("solver", data if "kind" in data else None)
    kind = args.solver or (block or {}).get("kind") or "cma"
    if block is not None and block.get("kind") == kind:
        spec = dict(block)
    else:
        spec = {"kind": kind}
    if kind == "grid":
        if args.full_grid:
            spec = solver_config_to_dict(FULL_GRID)
        elif "axes" not in spec and "coarse" not in spec:
            spec = solver_config_to_dict(GridSpec.from_counts(COARSE_GRID))
    elif args.full_grid:
        raise UsageError("--full-grid only applies to --solver grid")
    return spec


def _out_dir(args, exp: ExperimentConfig | None) -> Path:
    return Path(args.out or (exp.output_dir if exp else None) or "out")


def _pick(flag, exp_value, default):
    if flag is not None:
        return flag
    return exp_value if exp_value is not None else default


def _print_candidate(label, c):
    print(f"{label:>8}  r0 = {c.r0:12.3f} m   course = {c.course:9.4f} deg   speed = {c.speed:8.4f} m/s")


def _print_summary(s: schemas.SummaryModel, label: str | None = None):
    print(f"[{label or s.solver}] noise {s.noise_sigma} deg, {s.runs} runs, {s.total_fevals:,} fevals")
    print(f"{'':>8}  {'R (m)':>12}  {'C (deg)':>10}  {'S (m/s)':>9}")
    for stat, c in (("mu", s.mean), ("sigma", s.std), ("|Dev|", s.abs_dev)):
        print(f"{stat:>8}  {c.r0:12.3f}  {c.course:10.3f}  {c.speed:9.3f}")


def _write_summaries(path, summaries):
    rows = []
    for label, s in summaries:
        rows += summary_rows(label, s.noise_sigma, s.mean.model_dump(), s.std.model_dump(),
                             s.abs_dev.model_dump(), s.runs, s.total_fevals)
    return write_csv(path, SUMMARY_COLUMNS, rows)


def _write_runs(path, s: schemas.SummaryModel):
    return write_csv(path, RUN_COLUMNS, [(r.run, r.r, r.course, r.speed, r.cost, r.fevals) for r in s.records])


def cmd_simulate(args, backend) -> int:
    exp = _experiment(args)
    req = schemas.SimulateRequest(**_scenario_ref(args, exp))
    resp = backend.call("simulate", req)
    out = _out_dir(args, exp)
    n = len(resp.times)
    write_csv(out / "observer_track.csv", TRACK_COLUMNS,
              [(k, resp.times[k], *resp.observer[k]) for k in range(n)])
    write_csv(out / "target_track.csv", TRACK_COLUMNS,
              [(k, resp.times[k], *resp.target[k]) for k in range(n)])
    write_csv(out / "bearings.csv", BEARING_COLUMNS,
              [(k, resp.times[k], resp.clean[k], resp.noisy[k]) for k in range(n)])
    print(f"{resp.scenario.name or 'scenario'}: {n} samples, noise {resp.scenario.noise_sigma} deg -> {out}/")
    return EXIT_OK


def cmd_solve(args, backend) -> int:
    exp = _experiment(args)
    req = schemas.SolveRequest(
        **_scenario_ref(args, exp),
        solver=_solver_spec(args, exp),
        master_seed=_pick(args.master_seed, exp.master_seed if exp else None, 0),
        jobs=_pick(args.jobs, exp.jobs if exp else None, 1),
        trace=args.trace,
        confirm_large_grid=args.yes,
    )
    resp = backend.call("solve", req, keep_volume=args.volume)
    out = _out_dir(args, exp)
    e = resp.estimate
    write_csv(out / "report.csv", REPORT_COLUMNS, [(resp.solver, e.r0, e.course, e.speed, resp.cost, resp.fevals)])
    if resp.ga_runs:
        write_csv(out / "ga_runs.csv", GA_COLUMNS,
                  [(r.run, r.x0, r.y0, r.course, r.speed, r.cost, r.fevals) for r in resp.ga_runs])
    if resp.trace:
        write_csv(out / "cma_trace.csv", TRACE_COLUMNS, resp.trace)
    if "volume" in resp.details:
        import numpy as np

        counts = tuple(resp.details["counts"])
        axes = resp.details["axis_values"]
        vol = np.asarray(resp.details["volume"]).reshape(counts)
        idx = np.indices(counts).reshape(3, -1)
        write_csv(out / "cost_volume.csv", VOLUME_COLUMNS,
                  [(float(axes[0][i]), float(axes[1][j]), float(axes[2][k]), float(vol[i, j, k]))
                   for i, j, k in idx.T])
    print(f"solver {resp.solver}: cost {resp.cost:.6g} deg after {resp.fevals:,} fevals")
    _print_candidate("estimate", e)
    return EXIT_OK


def _harness_common(args, exp):
    solver = _solver_spec(args, exp)
    if args.full_scale:
        M = FULL_SCALE_M
    elif args.M is not None:
        M = args.M
    elif exp is not None and exp.M is not None:
        M = exp.M
    elif solver["kind"] == "ga":
        M = int(solver.get("outer_runs", 20))
    else:
        M = DEFAULT_M
    return dict(
        **_scenario_ref(args, exp),
        solver=solver,
        M=M,
        master_seed=_pick(args.master_seed, exp.master_seed if exp else None, 0),
        jobs=_pick(args.jobs, exp.jobs if exp else None, 1),
        thresholds=exp.thresholds if exp else {},
    )


def _report_violations(violations) -> int:
    for v in violations:
        print(f"THRESHOLD VIOLATED: {v}", file=sys.stderr)
    return EXIT_THRESHOLD if violations else EXIT_OK


def cmd_mc(args, backend) -> int:
    exp = _experiment(args)
    req = schemas.MonteCarloRequest(**_harness_common(args, exp))
    resp = backend.call("monte_carlo", req)
    out = _out_dir(args, exp)
    _write_runs(out / "runs.csv", resp.summary)
    _write_summaries(out / "summary.csv", [(resp.summary.solver, resp.summary)])
    _print_summary(resp.summary)
    return _report_violations(resp.violations)


def cmd_sweep(args, backend) -> int:
    exp = _experiment(args)
    if args.sigmas is not None:
        try:
            sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"--sigmas must be comma-separated numbers, got {args.sigmas!r}") from None
    elif exp is not None and exp.sigmas:
        sigmas = exp.sigmas
    else:
        raise UsageError("sweep needs --sigmas or harness.sigmas in --config")
    req = schemas.SweepRequest(**_harness_common(args, exp), sigmas=sigmas)
    resp = backend.call("sweep", req)
    out = _out_dir(args, exp)
    _write_summaries(out / "summary.csv", [(s.solver, s) for s in resp.rows])
    for s in resp.rows:
        _write_runs(out / f"runs_sigma{s.noise_sigma:g}.csv", s)
        _print_summary(s)
    return _report_violations(resp.violations)


def cmd_compare(args, backend) -> int:
    exp = _experiment(args)
    kinds = [k.strip() for k in args.solvers.split(",") if k.strip()]
    unknown = [k for k in kinds if k not in ("ga", "cma", "grid")]
    if unknown:
        raise UsageError(f"unknown solver(s): {', '.join(unknown)}")
    solvers = {}
    for i, kind in enumerate(kinds):
        label = kind if kinds.count(kind) == 1 else f"{kind}{i}"
        spec = {"kind": kind}
        if kind == "grid":
            spec = solver_config_to_dict(GridSpec.from_counts(COARSE_GRID))
        solvers[label] = spec
    req = schemas.CompareRequest(**_scenario_ref(args, exp), solvers=solvers, M=args.M,
                                 master_seed=args.master_seed, jobs=args.jobs)
    resp = backend.call("compare", req)
    _write_summaries(_out_dir(args, exp) / "summary.csv", [(r.label, r.summary) for r in resp.rows])
    for r in resp.rows:
        _print_summary(r.summary, r.label)
    labels = list(resp.fevals)
    for a in labels:
        for b in labels:
            if a != b and resp.fevals[b]:
                print(f"fevals {a}/{b} = {resp.fevals[a] / resp.fevals[b]:.4g}")
    return EXIT_OK


def cmd_presets(args, backend) -> int:
    for name in backend.call("presets").presets:
        print(name)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("botma.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "mc": cmd_mc,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "presets": cmd_presets,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    backend = _backend(args)
    try:
        if getattr(args, "print_preset", False):
            ref = _scenario_ref(args, _experiment(args))
            if "preset" in ref:
                data = backend.call("preset", name=ref["preset"]).model_dump()
            else:
                data = scenario_to_dict(scenario_from_dict(ref["scenario"]))
            print(json.dumps(data, indent=2))
            return EXIT_OK
        return COMMANDS[args.command](args, backend)
    except (UsageError, ConfigError, ScenarioError) as exc:
        print(f"botma: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ServiceError as exc:
        print(f"botma: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION if exc.validation else EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        if "pydantic" in type(exc).__module__:
            print(f"botma: error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"botma: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
