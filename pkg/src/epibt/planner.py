"""Single-step joint operation planner.

Each timestep every agent picks one multi-action operation. Agents plan in
priority order (closer to goal first); an agent whose preferred operation
conflicts with exactly one other agent may displace it, letting the blocked
agent re-plan under the initiator's priority, with backtracking when the
chain fails. Agents may be re-selected up to the revisit limit per step.
Operations conflicting with two or more agents are skipped outright.

Each step starts from inherited operations: last step's choices shifted by
the executed action and padded with a wait, which stay jointly collision
free. Failed agents keep executing their inherited operation.

The displacement recursion runs on an explicit stack: chains can get as long
as the number of agents, which would overflow the interpreter's call stack
on large instances.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from random import Random

from .distance import DistanceCache, DistanceMap
from .grid import AgentState, GridMap
from .operations import Operation, OperationSet, enumerate_operations, pibt5_operation_set
from .reservation import ReservationTable

TIEBREAKS = ("FRW", "FWR", "WRF", "RWF", "WFR", "RFW", "RND", "NONE")
MODES = ("epibt", "pibt5")

# Weight of one h unit; strictly larger than any tie-break value spread so
# the distance term always dominates.
DEFAULT_ALPHA = 1024
RND_BETA_RANGE = 1024


@dataclass
class SolverConfig:
    """Planner parameters.

    ``mode="pibt5"`` selects the adapted single-visit baseline: the
    restricted five-operation catalog, revisit limit forced to 1, and
    all-wait initialization instead of operation inheritance. It requires
    op_len=3 under the rotation model.
    """

    op_len: int = 3
    revisit_limit: int = 10
    alpha: int = DEFAULT_ALPHA
    tiebreak: str = "FRW"
    model: str = "rotation"
    mode: str = "epibt"
    inheritance: bool = True
    seed: int = 0

    def validate(self) -> None:
        if not 1 <= self.op_len <= 5:
            raise ValueError(f"op_len must be in 1..5, got {self.op_len}")
        if self.revisit_limit < 1:
            raise ValueError("revisit_limit must be at least 1")
        if self.alpha < DEFAULT_ALPHA:
            raise ValueError(f"alpha must be >= {DEFAULT_ALPHA} to dominate tie-break values")
        if self.tiebreak not in TIEBREAKS:
            raise ValueError(f"tiebreak must be one of {TIEBREAKS}")
        if self.model not in ("rotation", "omnidirectional"):
            raise ValueError(f"unknown action model {self.model!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "pibt5":
            if self.op_len != 3:
                raise ValueError("pibt5 baseline is defined for op_len 3 only")
            if self.model != "rotation":
                raise ValueError("pibt5 baseline is defined for the rotation model only")


def beta_values(opset: OperationSet, scheme: str) -> list[int] | None:
    """Per-operation tie-break values, or None when drawn per step (RND).

    Rank schemes read as most-to-least preferred action classes; the value is
    the base-3 encoding of per-position ranks, so ordering by it compares the
    canonical strings position by position. Clockwise and counterclockwise
    rotations rank equally; remaining ties fall back to catalog order via the
    stable sort.
    """
    if scheme == "RND":
        return None
    if scheme == "NONE":
        return list(range(len(opset)))
    ranks: dict[str, int] = {"W": scheme.index("W")}
    if opset.model == "omnidirectional":
        for ch in "UDLR":
            ranks[ch] = scheme.index("F")
    else:
        ranks["F"] = scheme.index("F")
        ranks["R"] = ranks["C"] = scheme.index("R")
    out = []
    for op in opset.operations:
        val = 0
        for ch in op.actions:
            val = val * 3 + ranks[ch]
        out.append(val)
    return out


def order_operations(
    opset: OperationSet,
    state: AgentState,
    dmap: DistanceMap,
    cfg: SolverConfig,
    grid: GridMap,
    rng: Random | None = None,
) -> list[tuple[Operation, float]]:
    """All operations with their weights, ascending.

    Out-of-grid operations are retained (weighted infinite, so they sort
    last); the selection procedure filters them.
    """
    betas = beta_values(opset, cfg.tiebreak)
    if betas is None:
        rng = rng or Random(cfg.seed)
        betas = [rng.randrange(RND_BETA_RANGE) for _ in opset.operations]
    cell, orient = state
    neigh = grid.neighbor_table
    cost = dmap.cost
    scored = []
    for op in opset.operations:
        c = cell
        for d in op.moves[orient]:
            if d >= 0:
                c = neigh[c][d]
                if c < 0:
                    break
        if c < 0:
            w = float("inf")
        else:
            base = c * 4
            h = min(cost[base + ((orient + r) & 3)] for r in op.terminal_rots)
            w = h * cfg.alpha + betas[op.index]
        scored.append((op, w))
    scored.sort(key=lambda e: (e[1], e[0].index))
    return scored


class PlanState:
    """Mutable state of one planning step, shared with the improver.

    ``cand[k]`` holds agent k's in-bounds operations as (weight, op index,
    cell trace) ascending by weight; it is computed once per agent per step
    (states and goals do not change within a step, so revisits reuse it).
    """

    def __init__(self, n: int, table: ReservationTable):
        self.n = n
        self.table = table
        self.states: list[AgentState] = []
        self.goals: list[int] = []
        self.dmaps: list[DistanceMap] = []
        self.priorities: list[float] = [0.0] * n
        self.chosen: list[int] = [0] * n
        self.inherited: list[int] = [0] * n
        self.success: list[bool] = [False] * n
        self.visited: list[int] = [0] * n
        self.hit: list[int] = [0] * n
        self.cand: list[list[tuple[float, int, tuple[int, ...]]] | None] = [None] * n
        self.w_of: list[dict[int, float]] = [dict() for _ in range(n)]
        self.step_rng: Random | None = None
        self.select_calls = 0
        self.plan_select_calls = 0
        self.plan_seconds = 0.0
        self.deadline_hit = False


@dataclass
class StepResult:
    """Joint outcome of one planning step."""

    ops: list[Operation]
    success: list[bool]
    plan_seconds: float

    @property
    def n(self) -> int:
        return len(self.ops)


class Planner:
    """Per-map planner instance; owns the catalogs and distance cache."""

    def __init__(self, grid: GridMap, cfg: SolverConfig, dcache: DistanceCache):
        cfg.validate()
        if dcache.model != cfg.model:
            raise ValueError("distance cache model does not match solver model")
        self.grid = grid
        self.cfg = cfg
        self.dcache = dcache
        if cfg.mode == "pibt5":
            self.opset = pibt5_operation_set()
            self.revisit_limit = 1
            self.inheritance = False
        else:
            self.opset = enumerate_operations(cfg.model, cfg.op_len)
            self.revisit_limit = cfg.revisit_limit
            self.inheritance = cfg.inheritance
        self._betas = beta_values(self.opset, cfg.tiebreak)
        # Per-orientation parallel arrays for the hot candidate builder.
        nops = len(self.opset)
        self._moves = [[self.opset.operations[i].moves[o] for i in range(nops)] for o in range(4)]
        self._trots = [self.opset.operations[i].terminal_rots for i in range(nops)]

    def all_wait_inherited(self, n: int) -> list[int]:
        return [self.opset.all_wait_index] * n

    def plan_step(
        self,
        states: list[AgentState],
        goals: list[int],
        inherited: list[int] | None = None,
        timestep: int = 0,
        deadline: float | None = None,
    ) -> PlanState:
        """One full planning pass; every agent ends registered exactly once.

        ``inherited`` holds per-agent operation indexes whose joint paths are
        collision-free (all-wait when absent). If ``deadline`` (a
        perf_counter value) passes mid-step, remaining agents simply keep
        their inherited operations, which stay valid.
        """
        t0 = time.perf_counter()
        n = len(states)
        if inherited is None:
            inherited = self.all_wait_inherited(n)

        ps = PlanState(n, ReservationTable(self.grid.n_cells, self.opset.op_len))
        ps.states = list(states)
        ps.goals = list(goals)
        ps.dmaps = [self.dcache.get(g) for g in goals]
        ps.inherited = list(inherited)
        ps.chosen = list(inherited)
        if self._betas is None:
            ps.step_rng = Random(self.cfg.seed * 0x100000000 + timestep)

        table = ps.table
        for k in range(n):
            table.register(k, self._trace(states[k], inherited[k]))

        prio = ps.priorities
        for k in range(n):
            cell, o = states[k]
            prio[k] = ps.dmaps[k].cost[cell * 4 + o]

        order = sorted(range(n), key=lambda k: (prio[k], k))
        visited = ps.visited
        for k in order:
            if visited[k]:
                continue
            if deadline is not None and time.perf_counter() > deadline:
                ps.deadline_hit = True
                break
            table.remove_path(k)
            if not self._select(k, prio[k], ps):
                # chosen[k] was reset to the inherited operation on failure.
                table.register(k, self._trace(states[k], inherited[k]))
        ps.plan_select_calls = ps.select_calls
        ps.plan_seconds = time.perf_counter() - t0
        return ps

    def _trace(self, state: AgentState, op_index: int) -> tuple[int, ...]:
        """Cell sequence of an operation known to stay on the grid."""
        cell, orient = state
        neigh = self.grid.neighbor_table
        cells = [cell]
        for d in self._moves[orient][op_index]:
            if d >= 0:
                cell = neigh[cell][d]
            cells.append(cell)
        return tuple(cells)

    def _candidates(self, ps: PlanState, k: int) -> list[tuple[float, int, tuple[int, ...]]]:
        """Sorted in-bounds candidates for agent k, cached for the step."""
        cell, orient = ps.states[k]
        neigh = self.grid.neighbor_table
        cost = ps.dmaps[k].cost
        alpha = self.cfg.alpha
        betas = self._betas
        if betas is None:
            rng = ps.step_rng
            betas = [rng.randrange(RND_BETA_RANGE) for _ in range(len(self.opset))]
        out = []
        for idx, (mv, tr, beta) in enumerate(zip(self._moves[orient], self._trots, betas)):
            c = cell
            cells = [cell]
            for d in mv:
                if d >= 0:
                    c = neigh[c][d]
                    if c < 0:
                        break
                cells.append(c)
            if c < 0:
                continue
            base = c * 4
            h = cost[base + ((orient + tr[0]) & 3)]
            for r in tr[1:]:
                v = cost[base + ((orient + r) & 3)]
                if v < h:
                    h = v
            out.append((h * alpha + beta, idx, tuple(cells)))
        # Plain tuple comparison: op indexes are unique, so the trace field
        # never gets compared.
        out.sort()
        ps.cand[k] = out
        ps.w_of[k] = {idx: w for w, idx, _ in out}
        return out

    def _select(self, k0: int, p: float, ps: PlanState, journal: list | None = None) -> bool:
        """Operation selection with displacement and backtracking for k0.

        Scans k0's operations in weight order; adopts the first conflict-free
        one; for a single blocker, tentatively displaces it and re-plans it
        under priority ``p``; restores the exact pre-call table state when a
        displacement chain fails. Returns False (and resets k0 to its
        inherited operation) when every option fails. ``journal`` records
        every table/assignment mutation for the improver's rollback.
        """
        table = ps.table
        owner = table.owner
        ncells = table.n_cells
        paths = table.paths
        all_cand = ps.cand
        visited = ps.visited
        hit = ps.hit
        chosen = ps.chosen
        success = ps.success
        prio = ps.priorities
        inherited = ps.inherited
        limit = self.revisit_limit
        w1 = self.opset.op_len + 1

        # frame: [agent, next candidate index,
        #         displaced agent, its trace, its op, its success flag]
        visited[k0] += 1
        hit[k0] = 1
        ps.select_calls += 1
        if journal is not None:
            journal.append(("vis", k0, 0, False))
        if all_cand[k0] is None:
            self._candidates(ps, k0)
        stack: list[list] = [[k0, 0, -1, None, -1, False]]
        returning = False
        ok = False
        while stack:
            frame = stack[-1]
            agent = frame[0]
            if returning:
                if ok:
                    # The displaced agent re-planned; our adoption stands.
                    success[agent] = True
                    hit[agent] = 0
                    stack.pop()
                    continue
                # Chain failed: undo the tentative displacement exactly.
                returning = False
                disp = frame[2]
                mine = paths.pop(agent)
                dcells = frame[3]
                if journal is not None:
                    journal.append(("unreg", agent, mine, False))
                    journal.append(("reg", disp, dcells, False))
                    journal.append(("op", disp, chosen[disp], success[disp]))
                base = 0
                for cl in mine:
                    owner[base + cl] = -1
                    base += ncells
                paths[disp] = dcells
                base = 0
                for cl in dcells:
                    owner[base + cl] = disp
                    base += ncells
                chosen[disp] = frame[4]
                success[disp] = frame[5]

            cand = all_cand[agent]
            ncand = len(cand)
            i = frame[1]
            progressed = False
            while i < ncand:
                w, op_idx, cells = cand[i]
                i += 1
                # Conflict probe: vertex hits at t>=1 plus opposite-direction
                # edge use, stopping at the second distinct blocker.
                first = -1
                many = False
                base = ncells
                for t in range(1, w1):
                    v = cells[t]
                    holder = owner[base + v]
                    if holder >= 0 and holder != first:
                        if first < 0:
                            first = holder
                        else:
                            many = True
                            break
                    u = cells[t - 1]
                    if u != v:
                        l = owner[base - ncells + v]
                        if l >= 0 and l != first and owner[base + u] == l:
                            if first < 0:
                                first = l
                            else:
                                many = True
                                break
                    base += ncells
                if first < 0:
                    if journal is not None:
                        journal.append(("op", agent, chosen[agent], success[agent]))
                        journal.append(("reg", agent, cells, False))
                    chosen[agent] = op_idx
                    success[agent] = True
                    paths[agent] = cells
                    base = 0
                    for cl in cells:
                        owner[base + cl] = agent
                        base += ncells
                    hit[agent] = 0
                    stack.pop()
                    returning = True
                    ok = True
                    progressed = True
                    break
                if many:
                    continue
                l = first
                if hit[l] or visited[l] >= limit or prio[l] <= p:
                    continue
                # Tentative displacement: swap reservations, re-plan l under p.
                lcells = paths.pop(l)
                frame[1] = i
                frame[2] = l
                frame[3] = lcells
                frame[4] = chosen[l]
                frame[5] = success[l]
                if journal is not None:
                    journal.append(("unreg", l, lcells, False))
                    journal.append(("op", agent, chosen[agent], success[agent]))
                    journal.append(("reg", agent, cells, False))
                base = 0
                for cl in lcells:
                    owner[base + cl] = -1
                    base += ncells
                chosen[agent] = op_idx
                paths[agent] = cells
                base = 0
                for cl in cells:
                    owner[base + cl] = agent
                    base += ncells
                visited[l] += 1
                hit[l] = 1
                ps.select_calls += 1
                if journal is not None:
                    journal.append(("vis", l, 0, False))
                if all_cand[l] is None:
                    self._candidates(ps, l)
                stack.append([l, 0, -1, None, -1, False])
                progressed = True
                break
            if progressed:
                continue
            # Every operation failed; fall back to the inherited one.
            if journal is not None:
                journal.append(("op", agent, chosen[agent], success[agent]))
            chosen[agent] = inherited[agent]
            success[agent] = False
            hit[agent] = 0
            stack.pop()
            returning = True
            ok = False
        return ok

    def result(self, ps: PlanState) -> StepResult:
        ops = [self.opset.operations[i] for i in ps.chosen]
        return StepResult(ops=ops, success=list(ps.success), plan_seconds=ps.plan_seconds)


def inherit_ops(
    opset: OperationSet,
    grid: GridMap,
    prev_paths: dict[int, tuple[int, ...]],
    new_states: list[AgentState],
    shift: int = 1,
) -> list[int]:
    """Re-express last step's paths, shifted by the executed actions.

    Dropping the first ``shift`` cells and padding with stays keeps the joint
    paths collision-free (a uniform time shift preserves pairwise
    non-conflict); the shifted trace is looked up in the catalog to find its
    canonical operation.
    """
    w = opset.op_len
    n = len(new_states)
    if shift >= w:
        return [opset.all_wait_index] * n
    out = []
    cells_of = grid.cells
    for k in range(n):
        cells = prev_paths[k]
        state = new_states[k]
        if cells[shift] != state.cell:
            raise RuntimeError(f"agent {k} is not where its executed path says")
        tail = cells[shift + 1 :] + (cells[w],) * shift
        bi, bj = cells_of[state.cell]
        offs = tuple((cells_of[c][0] - bi, cells_of[c][1] - bj) for c in tail)
        idx = opset.sig_index[state.orientation].get(offs)
        if idx is None:
            raise RuntimeError(f"shifted path of agent {k} has no catalog operation")
        out.append(idx)
    return out
