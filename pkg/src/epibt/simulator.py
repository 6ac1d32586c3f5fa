"""Online lifelong simulation loop.

Per timestep: plan (optionally improve), execute every agent's first action
only, count completed goals and immediately hand out replacement tasks from
the pool, and record metrics. An online collision check runs on every
executed transition and aborts loudly if the planner ever emits a conflict;
that must never happen.

Task hand-out is position-independent: agent k receives pool entries
k, k+n, k+2n, ... cyclically, so assignment never depends on where agents
ended up.

Per-step compute budgets come in two modes: a deterministic iteration budget
for the improver (the default for reproducible runs), or a wall-clock budget
where overrunning the allotment by s whole seconds freezes the whole fleet
for s logged all-wait timesteps (the budget does not carry over).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from math import ceil, inf
from random import Random

from .distance import DistanceCache, EdgeWeights
from .grid import AgentState, GridMap, Scenario
from .lns import LnsBudget, LnsStats, improve
from .planner import Planner, SolverConfig, inherit_ops


class InternalCollisionError(RuntimeError):
    """A planned transition collided; indicates a planner bug."""


@dataclass
class SimConfig:
    """One lifelong run: scenario, solver, budgets, and the seed."""

    scenario: Scenario
    solver: SolverConfig
    lns: LnsBudget | None = None
    step_budget_s: float | None = None
    horizon: int | None = None
    seed: int = 0
    weights: EdgeWeights | None = None
    cache_capacity: int | None = None


@dataclass
class SimMetrics:
    """Aggregated outcome of a run."""

    goals_completed: int
    horizon: int
    throughput: float
    plan_seconds: list[float]
    step_seconds: list[float]
    wait_heatmap: list[int]
    action_log: list[str]
    delay_steps: int = 0
    select_calls: list[int] = field(default_factory=list)
    lns_stats: list[LnsStats] = field(default_factory=list)

    @property
    def mean_plan_seconds(self) -> float:
        return sum(self.plan_seconds) / len(self.plan_seconds) if self.plan_seconds else 0.0

    @property
    def max_plan_seconds(self) -> float:
        return max(self.plan_seconds) if self.plan_seconds else 0.0


def assign_next_task(agent: int, pool: list[int], counters: list[int], n_agents: int) -> int:
    """Agent's j-th task is pool[(agent + j*n) mod len(pool)]; bumps j."""
    j = counters[agent]
    counters[agent] = j + 1
    return pool[(agent + j * n_agents) % len(pool)]


def _check_transition(t: int, old: list[AgentState], new: list[AgentState]) -> None:
    seen: dict[int, int] = {}
    for k, st in enumerate(new):
        other = seen.get(st.cell)
        if other is not None:
            raise InternalCollisionError(
                f"timestep {t}: agents {other} and {k} both occupy cell {st.cell}"
            )
        seen[st.cell] = k
    moved: dict[tuple[int, int], int] = {}
    for k in range(len(new)):
        u, v = old[k].cell, new[k].cell
        if u != v:
            moved[(u, v)] = k
    for (u, v), k in moved.items():
        other = moved.get((v, u))
        if other is not None and other != k:
            raise InternalCollisionError(
                f"timestep {t}: agents {k} and {other} swap cells {u} and {v}"
            )


def run_lifelong(grid: GridMap, sim: SimConfig) -> SimMetrics:
    """Drive the online loop for the configured horizon."""
    scenario = sim.scenario
    solver = sim.solver
    if scenario.model != solver.model:
        raise ValueError(
            f"scenario model {scenario.model!r} does not match solver model {solver.model!r}"
        )
    n = scenario.n_agents
    if len({a.cell for a in scenario.agents}) != n:
        raise ValueError("agent start cells must be pairwise distinct")
    horizon = sim.horizon if sim.horizon is not None else scenario.horizon
    if horizon < 1:
        raise ValueError("horizon must be at least 1")

    capacity = sim.cache_capacity if sim.cache_capacity is not None else max(2, 2 * n)
    dcache = DistanceCache(grid, solver.model, sim.weights, capacity=capacity)
    planner = Planner(grid, solver, dcache)
    opset = planner.opset

    states = list(scenario.agents)
    pool = scenario.tasks
    counters = [0] * n
    goals = [assign_next_task(k, pool, counters, n) for k in range(n)]

    completed = 0
    heatmap = [0] * grid.n_cells
    log: list[str] = []
    plan_secs: list[float] = []
    step_secs: list[float] = []
    select_calls: list[int] = []
    lns_stats: list[LnsStats] = []
    delay_total = 0
    inherited: list[int] | None = None

    t = 0
    while t < horizon:
        deadline = None
        if sim.step_budget_s is None:
            # Deterministic mode: distance maps are built outside the timed
            # window (they depend on goals, not on the step).
            for g in goals:
                dcache.get(g)
            t_start = time.perf_counter()
        else:
            t_start = time.perf_counter()
            deadline = t_start + sim.step_budget_s

        ps = planner.plan_step(states, goals, inherited, timestep=t, deadline=deadline)
        if sim.lns is not None:
            rng = Random(sim.seed * 0x100000000 + t * 2 + 1)
            lns_stats.append(improve(planner, ps, sim.lns, rng))
        elapsed = time.perf_counter() - t_start
        plan_secs.append(ps.plan_seconds)
        step_secs.append(elapsed)
        select_calls.append(ps.plan_select_calls)

        # Execute first actions only.
        neigh = grid.neighbor_table
        letters = []
        new_states = []
        for k in range(n):
            op = opset.operations[ps.chosen[k]]
            cell, orient = states[k]
            d = op.moves[orient][0]
            a = op.actions[0]
            if a == "W":
                heatmap[cell] += 1
            new_states.append(
                AgentState(cell if d < 0 else neigh[cell][d], op.headings[orient][0])
            )
            letters.append(a)
        _check_transition(t, states, new_states)
        log.append("".join(letters))
        states = new_states
        t += 1
        for k in range(n):
            if states[k].cell == goals[k]:
                completed += 1
                goals[k] = assign_next_task(k, pool, counters, n)

        if planner.inheritance:
            inherited = inherit_ops(opset, grid, ps.table.paths, states)
        else:
            inherited = None

        # Wall-clock overruns freeze the fleet for whole extra seconds. The
        # planned suffixes stay executable afterward: everyone pauses in
        # lockstep, so the one-step shift above remains jointly valid.
        if sim.step_budget_s is not None and elapsed > sim.step_budget_s:
            delay = ceil(elapsed - sim.step_budget_s)
            while delay > 0 and t < horizon:
                for k in range(n):
                    heatmap[states[k].cell] += 1
                log.append("W" * n)
                t += 1
                delay -= 1
                delay_total += 1
                for k in range(n):
                    if states[k].cell == goals[k]:
                        completed += 1
                        goals[k] = assign_next_task(k, pool, counters, n)

    return SimMetrics(
        goals_completed=completed,
        horizon=horizon,
        throughput=completed / horizon,
        plan_seconds=plan_secs,
        step_seconds=step_secs,
        wait_heatmap=heatmap,
        action_log=log,
        delay_steps=delay_total,
        select_calls=select_calls,
        lns_stats=lns_stats,
    )


def format_action_log(metrics: SimMetrics) -> str:
    """One line per timestep, one action letter per agent, agent order."""
    return "\n".join(metrics.action_log) + "\n"


def metrics_summary(metrics: SimMetrics) -> dict:
    out = {
        "goals_completed": metrics.goals_completed,
        "horizon": metrics.horizon,
        "throughput": metrics.throughput,
        "mean_plan_seconds": metrics.mean_plan_seconds,
        "max_plan_seconds": metrics.max_plan_seconds,
        "delay_steps": metrics.delay_steps,
        "total_waits": sum(metrics.wait_heatmap),
    }
    if metrics.lns_stats:
        out["lns_iterations"] = sum(s.iterations for s in metrics.lns_stats)
        out["lns_accepted"] = sum(s.accepted for s in metrics.lns_stats)
    return out


def format_metrics_text(metrics: SimMetrics) -> str:
    return "".join(f"{k}={v}\n" for k, v in metrics_summary(metrics).items())


def format_metrics_json(metrics: SimMetrics) -> str:
    doc = metrics_summary(metrics)
    doc["plan_seconds"] = metrics.plan_seconds
    return json.dumps(doc, indent=2) + "\n"


def format_heatmap_csv(metrics: SimMetrics, grid: GridMap) -> str:
    """Wait counts as a height x width integer grid; blocked cells are -1."""
    rows = []
    for i in range(grid.height):
        row = []
        for j in range(grid.width):
            cid = grid.cell_ids[i * grid.width + j]
            row.append(str(metrics.wait_heatmap[cid]) if cid >= 0 else "-1")
        rows.append(",".join(row))
    return "\n".join(rows) + "\n"


def format_heatmap_pgm(metrics: SimMetrics, grid: GridMap) -> str:
    """Plain (P2) graymap: blocked 0, passable 32 plus scaled wait mass."""
    peak = max(metrics.wait_heatmap) if metrics.wait_heatmap else 0
    lines = ["P2", f"{grid.width} {grid.height}", "255"]
    for i in range(grid.height):
        vals = []
        for j in range(grid.width):
            cid = grid.cell_ids[i * grid.width + j]
            if cid < 0:
                vals.append("0")
            elif peak == 0:
                vals.append("32")
            else:
                vals.append(str(32 + (223 * metrics.wait_heatmap[cid]) // peak))
        lines.append(" ".join(vals))
    return "\n".join(lines) + "\n"
