"""Command-line front end: run experiments, analyze maps and catalogs,
validate action logs, and sweep parameter grids into CSV.

Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from itertools import product
from multiprocessing import Pool
from pathlib import Path

from .distance import EdgeWeights, WeightsParseError, generate_lane_weights, parse_edge_weights
from .grid import (
    GridMap,
    MapParseError,
    Scenario,
    ScenarioParseError,
    check_cycle_condition,
    load_map,
    load_scenario,
)
from .lns import LnsBudget
from .logcheck import LogParseError, parse_action_log, validate_log
from .operations import enumerate_operations, format_operations
from .planner import MODES, TIEBREAKS, SolverConfig
from .simulator import (
    InternalCollisionError,
    SimConfig,
    format_action_log,
    format_heatmap_csv,
    format_heatmap_pgm,
    format_metrics_json,
    format_metrics_text,
    run_lifelong,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_PARSE = 3

PARSE_ERRORS = (MapParseError, ScenarioParseError, LogParseError, WeightsParseError)


@dataclass
class RunSpec:
    """Everything one `run` invocation needs; flags map onto these fields."""

    map_path: str
    scenario_path: str
    mode: str = "epibt"
    op_len: int = 3
    revisit_limit: int = 10
    tiebreak: str = "FRW"
    lns_iterations: int | None = None
    lns_ms: float | None = None
    guidance: str = "off"
    step_budget_s: float | None = None
    seed: int = 0
    out_dir: str = "out"


def _load_guidance(guidance: str, grid: GridMap) -> EdgeWeights | None:
    if guidance == "off":
        return None
    if guidance == "lanes":
        return generate_lane_weights(grid)
    if guidance.startswith("lanes:"):
        return generate_lane_weights(grid, float(guidance.split(":", 1)[1]))
    return parse_edge_weights(Path(guidance).read_text(), grid)


def _build_sim(spec: RunSpec) -> tuple[GridMap, Scenario, SimConfig]:
    grid = load_map(Path(spec.map_path).read_text())
    scenario = load_scenario(Path(spec.scenario_path).read_text(), grid)
    solver = SolverConfig(
        op_len=spec.op_len,
        revisit_limit=spec.revisit_limit,
        tiebreak=spec.tiebreak.upper(),
        model=scenario.model,
        mode=spec.mode,
        seed=spec.seed,
    )
    solver.validate()
    lns = None
    if spec.lns_iterations is not None:
        lns = LnsBudget(iterations=spec.lns_iterations)
    elif spec.lns_ms is not None:
        lns = LnsBudget(wall_ms=spec.lns_ms)
    weights = _load_guidance(spec.guidance, grid)
    sim = SimConfig(
        scenario=scenario,
        solver=solver,
        lns=lns,
        step_budget_s=spec.step_budget_s,
        seed=spec.seed,
        weights=weights,
    )
    return grid, scenario, sim


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    return RunSpec(
        map_path=args.map,
        scenario_path=args.scenario,
        mode=args.mode,
        op_len=args.op_len,
        revisit_limit=args.revisit_limit,
        tiebreak=args.tiebreak,
        lns_iterations=args.lns_iterations,
        lns_ms=args.lns_ms,
        guidance=args.guidance,
        step_budget_s=args.step_budget,
        seed=args.seed,
        out_dir=args.out,
    )


def cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    grid, scenario, sim = _build_sim(spec)
    metrics = run_lifelong(grid, sim)

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.txt").write_text(format_metrics_text(metrics))
    (out / "metrics.json").write_text(format_metrics_json(metrics))
    (out / "actions.log").write_text(format_action_log(metrics))
    (out / "heatmap.csv").write_text(format_heatmap_csv(metrics, grid))
    (out / "heatmap.pgm").write_text(format_heatmap_pgm(metrics, grid))

    # Every artifact is re-checked by the independent validator before a
    # successful exit.
    log = parse_action_log((out / "actions.log").read_text(), scenario.n_agents)
    violations = validate_log(log, grid, scenario)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return EXIT_VALIDATION

    print(f"throughput={metrics.throughput:.6f}")
    print(f"goals_completed={metrics.goals_completed}")
    print(f"mean_step_ms={metrics.mean_plan_seconds * 1000:.3f}")
    print(f"max_step_ms={metrics.max_plan_seconds * 1000:.3f}")
    print(f"artifacts={out}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.ops:
        model, length = args.ops
        opset = enumerate_operations(model, int(length))
        cells, states, sequences = opset.stats
        print(f"{cells} / {states} / {sequences}")
        print(format_operations(opset), end="")
    else:
        grid = load_map(Path(args.map).read_text())
        violations = check_cycle_condition(grid)
        print(f"passable_cells={grid.n_cells}")
        print(f"cycle_violations={len(violations)}")
        for a, b in violations:
            print(f"  {grid.coord(a)} - {grid.coord(b)}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    grid = load_map(Path(args.map).read_text())
    scenario = load_scenario(Path(args.scenario).read_text(), grid)
    log = parse_action_log(Path(args.log).read_text(), scenario.n_agents)
    violations = validate_log(log, grid, scenario)
    for v in violations:
        print(v)
    return EXIT_VALIDATION if violations else EXIT_OK


def _sweep_cell(params: dict) -> dict:
    spec = RunSpec(**params)
    grid, _scenario, sim = _build_sim(spec)
    metrics = run_lifelong(grid, sim)
    return {
        "op_len": spec.op_len,
        "revisit_limit": spec.revisit_limit,
        "tiebreak": spec.tiebreak,
        "seed": spec.seed,
        "throughput": f"{metrics.throughput:.6f}",
        "goals_completed": metrics.goals_completed,
        "mean_plan_ms": f"{metrics.mean_plan_seconds * 1000:.3f}",
        "max_plan_ms": f"{metrics.max_plan_seconds * 1000:.3f}",
    }


def cmd_sweep(args: argparse.Namespace) -> int:
    op_lens = [int(x) for x in args.op_lens.split(",")]
    limits = [int(x) for x in args.revisit_limits.split(",")]
    tiebreaks = [x.upper() for x in args.tiebreaks.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    cells = [
        dict(
            map_path=args.map,
            scenario_path=args.scenario,
            mode=args.mode,
            op_len=ol,
            revisit_limit=l,
            tiebreak=tb,
            lns_iterations=args.lns_iterations,
            guidance=args.guidance,
            seed=s,
        )
        for ol, l, tb, s in product(op_lens, limits, tiebreaks, seeds)
    ]
    if args.jobs > 1:
        with Pool(args.jobs) as pool:
            rows = pool.map(_sweep_cell, cells)
    else:
        rows = [_sweep_cell(c) for c in cells]
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epibt",
        description="Lifelong multi-agent path finding with multi-action operations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one configured lifelong run")
    run.add_argument("--map", required=True, help="map file (benchmark grid format)")
    run.add_argument("--scenario", required=True, help="scenario file")
    run.add_argument("--mode", default="epibt", choices=MODES)
    run.add_argument("--op-len", type=int, default=3, help="operation length (1..5)")
    run.add_argument("--revisit-limit", type=int, default=10, help="re-selections per agent per step")
    run.add_argument("--tiebreak", default="FRW", type=str.upper, choices=TIEBREAKS)
    lns_group = run.add_mutually_exclusive_group()
    lns_group.add_argument("--lns-iterations", type=int, default=None,
                           help="fixed improvement iterations per step (deterministic)")
    lns_group.add_argument("--lns-ms", type=float, default=None,
                           help="improvement wall-clock budget per step, milliseconds")
    run.add_argument("--guidance", default="off",
                     help="'off', 'lanes', 'lanes:<gamma>', or an edge-weights file")
    run.add_argument("--step-budget", type=float, default=None,
                     help="wall-clock seconds per step; overruns freeze the fleet")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="out", help="artifact output directory")
    run.set_defaults(func=cmd_run)

    analyze = sub.add_parser("analyze", help="inspect a map or an operation catalog")
    target = analyze.add_mutually_exclusive_group(required=True)
    target.add_argument("--map", help="map file to analyze")
    target.add_argument("--ops", nargs=2, metavar=("MODEL", "LENGTH"),
                        help="catalog to enumerate (rotation|omnidirectional, 1..5)")
    analyze.set_defaults(func=cmd_analyze)

    val = sub.add_parser("validate", help="re-simulate an action log and report violations")
    val.add_argument("log")
    val.add_argument("map")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    sweep = sub.add_parser("sweep", help="run a parameter grid, one CSV row per cell")
    sweep.add_argument("--map", required=True)
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--mode", default="epibt", choices=MODES)
    sweep.add_argument("--op-lens", default="3", help="comma-separated operation lengths")
    sweep.add_argument("--revisit-limits", default="10", help="comma-separated limits")
    sweep.add_argument("--tiebreaks", default="FRW", help="comma-separated schemes")
    sweep.add_argument("--seeds", default="0", help="comma-separated seeds")
    sweep.add_argument("--lns-iterations", type=int, default=None)
    sweep.add_argument("--guidance", default="off")
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sweep.add_argument("--out", default="sweep.csv")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PARSE_ERRORS as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InternalCollisionError as exc:
        print(f"internal collision: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
