"""Anytime destroy/repair improvement of a step's joint assignment.

Each iteration removes one uniformly random agent's operation and path and
re-runs operation selection for it at a priority strictly above everyone
(sentinel below every real distance value), so it may override others. A
complete valid reassignment is accepted only if the metric
sum(w_op(a_k) * p_k) strictly decreases; otherwise every mutation of the
iteration is rolled back from a journal. Wall-clock budgets are checked
between iterations only, so the table is never left mid-mutation.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from random import Random

from .planner import Planner, PlanState

# Strictly below every real priority (distances are >= 0), so the repaired
# agent can displace anyone, reusing the selection procedure unchanged.
TOP_PRIORITY = -1.0


@dataclass
class LnsBudget:
    """Either a fixed iteration count (deterministic) or wall-clock millis."""

    iterations: int | None = None
    wall_ms: float | None = None

    def validate(self) -> None:
        if (self.iterations is None) == (self.wall_ms is None):
            raise ValueError("set exactly one of iterations or wall_ms")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.wall_ms is not None and self.wall_ms <= 0:
            raise ValueError("wall_ms must be positive")


@dataclass
class LnsStats:
    """Outcome of one improve call; accepted_metrics is non-increasing."""

    iterations: int = 0
    accepted: int = 0
    metric_before: float = 0.0
    metric_after: float = 0.0
    accepted_metrics: list[float] = field(default_factory=list)


def lns_metric(ps: PlanState) -> float:
    """sum over agents of chosen-operation weight times priority."""
    w_of = ps.w_of
    chosen = ps.chosen
    prio = ps.priorities
    return sum(w_of[k][chosen[k]] * prio[k] for k in range(ps.n))


def _rollback(ps: PlanState, journal: list) -> None:
    table = ps.table
    owner = table.owner
    paths = table.paths
    ncells = table.n_cells
    chosen = ps.chosen
    success = ps.success
    for kind, agent, a, b in reversed(journal):
        if kind == "reg":
            base = 0
            for cl in paths.pop(agent):
                owner[base + cl] = -1
                base += ncells
        elif kind == "unreg":
            paths[agent] = a
            base = 0
            for cl in a:
                owner[base + cl] = agent
                base += ncells
        elif kind == "op":
            chosen[agent] = a
            success[agent] = b


def improve(planner: Planner, ps: PlanState, budget: LnsBudget, rng: Random) -> LnsStats:
    """Run destroy/repair iterations on a valid plan state, in place.

    The output stays collision-free and the metric never increases; with an
    iteration budget and a seeded rng the result is bit-deterministic.
    """
    budget.validate()
    n = ps.n
    for k in range(n):
        if ps.cand[k] is None:
            planner._candidates(ps, k)
    stats = LnsStats()
    stats.metric_before = stats.metric_after = lns_metric(ps)
    metric = stats.metric_before

    visited = ps.visited
    for k in range(n):
        visited[k] = 0

    table = ps.table
    paths = table.paths
    chosen = ps.chosen
    w_of = ps.w_of
    prio = ps.priorities

    remaining = budget.iterations
    end = None if budget.wall_ms is None else time.perf_counter() + budget.wall_ms / 1000.0

    owner = table.owner
    ncells = table.n_cells
    randrange = rng.randrange
    select = planner._select
    journal: list = []
    while True:
        if remaining is not None:
            if remaining <= 0:
                break
            remaining -= 1
        elif time.perf_counter() >= end:
            break
        k = randrange(n)
        cells = paths.pop(k)
        journal.append(("unreg", k, cells, False))
        base = 0
        for cl in cells:
            owner[base + cl] = -1
            base += ncells
        ok = select(k, TOP_PRIORITY, ps, journal)
        stats.iterations += 1

        accept = False
        if ok:
            # First journal record per agent holds its pre-iteration op.
            orig: dict[int, int] = {}
            for entry in journal:
                if entry[0] == "op" and entry[1] not in orig:
                    orig[entry[1]] = entry[2]
            delta = 0.0
            for a, old_op in orig.items():
                delta += (w_of[a][chosen[a]] - w_of[a][old_op]) * prio[a]
            if delta < 0.0:
                accept = True
                metric += delta
                stats.accepted += 1
                stats.accepted_metrics.append(metric)
        if not accept:
            _rollback(ps, journal)
        # Fresh revisit budget for the next iteration.
        for entry in journal:
            if entry[0] == "vis":
                visited[entry[1]] = 0
        journal.clear()

    stats.metric_after = metric
    return stats
