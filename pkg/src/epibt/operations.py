"""Multi-action operation catalogs.

An operation is a fixed-length action sequence treated as one planning
choice. Operations are deduplicated by their *signature*: the sequence of
cells occupied at t+1..t+len. Distinct action strings sharing a signature
are merged into a single operation whose terminal states record every final
orientation any of those strings can reach; the stored action string is a
canonical representative (rotations only where a later forward move uses
them, minimal rotation count, rotations before waits, trailing steps all
waits).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .grid import DIR_DELTAS, AgentState, GridMap

ROTATION_MODEL = "rotation"
OMNI_MODEL = "omnidirectional"

# Base enumeration order doubles as the lexicographic order for canonical
# representatives (forward < clockwise < counterclockwise < wait).
ROTATION_ACTIONS = "FRCW"
OMNI_ACTIONS = "UDLRW"
OMNI_MOVES = {"U": 0, "R": 1, "D": 2, "L": 3}

Offset = tuple[int, int]


def _rot_cw(offset: Offset, quarter_turns: int) -> Offset:
    di, dj = offset
    for _ in range(quarter_turns & 3):
        di, dj = dj, -di
    return di, dj


def _simulate_rotation(actions: str) -> tuple[tuple[Offset, ...], int]:
    """Cell trace (north frame, relative offsets) and final heading."""
    di = dj = heading = 0
    trace = []
    for a in actions:
        if a == "F":
            ddi, ddj = DIR_DELTAS[heading]
            di, dj = di + ddi, dj + ddj
        elif a == "R":
            heading = (heading + 1) & 3
        elif a == "C":
            heading = (heading - 1) & 3
        trace.append((di, dj))
    return tuple(trace), heading


def _simulate_omni(actions: str) -> tuple[Offset, ...]:
    di = dj = 0
    trace = []
    for a in actions:
        if a != "W":
            ddi, ddj = DIR_DELTAS[OMNI_MOVES[a]]
            di, dj = di + ddi, dj + ddj
        trace.append((di, dj))
    return tuple(trace)


def _canonical_rotation_string(trace: tuple[Offset, ...]) -> str:
    """Rebuild the canonical action string realizing a rotation-model trace."""
    out: list[str] = []
    heading = 0
    pos = (0, 0)
    pending = 0  # stay steps since the last move
    for cell in trace:
        if cell == pos:
            pending += 1
            continue
        delta = (cell[0] - pos[0], cell[1] - pos[1])
        target = DIR_DELTAS.index(delta)
        turn = (target - heading) & 3
        rots = {0: "", 1: "R", 2: "RR", 3: "C"}[turn]
        out.append(rots + "W" * (pending - len(rots)) + "F")
        heading = target
        pos = cell
        pending = 0
    out.append("W" * pending)
    return "".join(out)


@dataclass(frozen=True)
class Operation:
    """One merged multi-action operation.

    ``offsets``, ``moves`` and ``headings`` are indexed by start orientation;
    the omnidirectional model shares one entry across all four. ``moves``
    holds a direction index (0..3) or -1 (stay) per step, which is what the
    planner uses to walk neighbor tables. ``terminal_rots`` are the relative
    final rotations reachable by any raw action string with this signature.
    """

    index: int
    actions: str
    offsets: tuple[tuple[Offset, ...], ...]
    moves: tuple[tuple[int, ...], ...]
    headings: tuple[tuple[int, ...], ...]
    terminal_rots: tuple[int, ...]

    def signature(self, orientation: int) -> tuple[Offset, ...]:
        return self.offsets[orientation]

    def terminal_states(self, orientation: int) -> set[tuple[Offset, int]]:
        end = self.offsets[orientation][-1]
        return {(end, (orientation + r) & 3) for r in self.terminal_rots}

    def __str__(self) -> str:
        return self.actions


def _moves_from_trace(trace: tuple[Offset, ...]) -> tuple[int, ...]:
    moves = []
    pos = (0, 0)
    for cell in trace:
        if cell == pos:
            moves.append(-1)
        else:
            moves.append(DIR_DELTAS.index((cell[0] - pos[0], cell[1] - pos[1])))
            pos = cell
    return tuple(moves)


def _headings_of(actions: str, model: str) -> tuple[int, ...]:
    heading = 0
    out = []
    for a in actions:
        if model == ROTATION_MODEL:
            if a == "R":
                heading = (heading + 1) & 3
            elif a == "C":
                heading = (heading - 1) & 3
        out.append(heading)
    return tuple(out)


def _build_rotation_operation(
    index: int, trace: tuple[Offset, ...], terminal_rots: tuple[int, ...]
) -> Operation:
    actions = _canonical_rotation_string(trace)
    offsets = []
    moves = []
    headings = []
    base_headings = _headings_of(actions, ROTATION_MODEL)
    for o in range(4):
        rotated = tuple(_rot_cw(c, o) for c in trace)
        offsets.append(rotated)
        moves.append(_moves_from_trace(rotated))
        headings.append(tuple((h + o) & 3 for h in base_headings))
    return Operation(
        index=index,
        actions=actions,
        offsets=tuple(offsets),
        moves=tuple(moves),
        headings=tuple(headings),
        terminal_rots=terminal_rots,
    )


def _build_omni_operation(index: int, actions: str) -> Operation:
    trace = _simulate_omni(actions)
    mv = _moves_from_trace(trace)
    return Operation(
        index=index,
        actions=actions,
        offsets=(trace,) * 4,
        moves=(mv,) * 4,
        headings=tuple(tuple(o for _ in actions) for o in range(4)),
        terminal_rots=(0,),
    )


class OperationSet:
    """Canonical, stably indexed operations for one model and length."""

    def __init__(self, model: str, op_len: int, operations: list[Operation],
                 stats: tuple[int, int, int]):
        self.model = model
        self.op_len = op_len
        self.operations = operations
        self.stats = stats
        # Signature lookup per start orientation, used to re-canonicalize
        # shifted operations during inheritance.
        self.sig_index: tuple[dict[tuple[Offset, ...], int], ...] = tuple(
            {op.offsets[o]: op.index for op in operations} for o in range(4)
        )
        self.all_wait_index = self.sig_index[0][((0, 0),) * op_len]

    def __len__(self) -> int:
        return len(self.operations)

    def __iter__(self):
        return iter(self.operations)


def enumerate_operations(model: str, op_len: int) -> OperationSet:
    """Build the full operation catalog for a model and operation length."""
    if not 1 <= op_len <= 5:
        raise ValueError(f"op_len must be in 1..5, got {op_len}")
    if model == ROTATION_MODEL:
        groups: dict[tuple[Offset, ...], set[int]] = {}
        order: list[tuple[Offset, ...]] = []
        final_cells: set[Offset] = set()
        final_states: set[tuple[Offset, int]] = set()
        for combo in product(ROTATION_ACTIONS, repeat=op_len):
            trace, heading = _simulate_rotation("".join(combo))
            if trace not in groups:
                groups[trace] = set()
                order.append(trace)
            groups[trace].add(heading)
            final_cells.add(trace[-1])
            final_states.add((trace[-1], heading))
        ops = [
            _build_rotation_operation(i, trace, tuple(sorted(groups[trace])))
            for i, trace in enumerate(order)
        ]
        stats = (len(final_cells), len(final_states), len(ops))
        return OperationSet(model, op_len, ops, stats)
    if model == OMNI_MODEL:
        # Every action string yields a distinct cell sequence here (the step
        # from one cell to the next pins the action), so nothing merges.
        ops = []
        final_cells = set()
        for i, combo in enumerate(product(OMNI_ACTIONS, repeat=op_len)):
            op = _build_omni_operation(i, "".join(combo))
            ops.append(op)
            final_cells.add(op.offsets[0][-1])
        stats = (len(final_cells), len(final_cells), len(ops))
        return OperationSet(model, op_len, ops, stats)
    raise ValueError(f"unknown action model {model!r}")


def reachable_stats(model: str, op_len: int) -> tuple[int, int, int]:
    """(reachable cells, reachable states, unique cell sequences)."""
    return enumerate_operations(model, op_len).stats


PIBT5_STRINGS = ("FWW", "RFW", "CFW", "RRF", "WWW")


def pibt5_operation_set() -> OperationSet:
    """The restricted five-operation catalog of the adapted-PIBT baseline.

    Each entry is a literal action string (no merging): its terminal state is
    the one the string actually reaches, mimicking an omnidirectional move
    that takes 1-3 timesteps under the rotation model.
    """
    ops = []
    for i, actions in enumerate(PIBT5_STRINGS):
        trace, heading = _simulate_rotation(actions)
        offsets = []
        moves = []
        headings = []
        base_headings = _headings_of(actions, ROTATION_MODEL)
        for o in range(4):
            rotated = tuple(_rot_cw(c, o) for c in trace)
            offsets.append(rotated)
            moves.append(_moves_from_trace(rotated))
            headings.append(tuple((h + o) & 3 for h in base_headings))
        ops.append(
            Operation(
                index=i,
                actions=actions,
                offsets=tuple(offsets),
                moves=tuple(moves),
                headings=tuple(headings),
                terminal_rots=(heading,),
            )
        )
    final_cells = {op.offsets[0][-1] for op in ops}
    final_states = {(op.offsets[0][-1], op.terminal_rots[0]) for op in ops}
    return OperationSet(ROTATION_MODEL, 3, ops, (len(final_cells), len(final_states), len(ops)))


def apply_operation(op: Operation, start: AgentState, grid: GridMap) -> list[AgentState] | None:
    """States visited executing ``op`` from ``start`` (index 0 = start).

    Returns None if any visited cell is blocked or outside the grid; callers
    treat that as the out-of-grid marker, not an error.
    """
    cell, orient = start
    neigh = grid.neighbor_table
    path = [AgentState(cell, orient)]
    for d, h in zip(op.moves[orient], op.headings[orient]):
        if d >= 0:
            cell = neigh[cell][d]
            if cell < 0:
                return None
        path.append(AgentState(cell, h))
    return path


def format_operations(opset: OperationSet) -> str:
    """One line per operation: index, canonical string, north signature."""
    lines = []
    for op in opset.operations:
        sig = "".join(f"({di},{dj})" for di, dj in op.offsets[0])
        ends = ",".join("NESW"[(0 + r) & 3] for r in op.terminal_rots)
        lines.append(f"{op.index:4d}  {op.actions:<6s} {sig}  ends {ends}")
    return "\n".join(lines) + "\n"
