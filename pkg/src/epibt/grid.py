"""Grid maps, agent states, and scenario files.

The world is a 4-connected grid. Traversable cells get dense ids (row-major
order) so that planner-side tables can be flat lists indexed by cell id.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple


class MapParseError(ValueError):
    """Raised when a map file does not follow the benchmark grid format."""


class ScenarioParseError(ValueError):
    """Raised when a scenario file is malformed or references invalid cells."""


class Orientation(IntEnum):
    """Agent heading. Values are chosen so clockwise rotation is +1 mod 4."""

    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    def clockwise(self) -> "Orientation":
        return Orientation((self + 1) & 3)

    def counterclockwise(self) -> "Orientation":
        return Orientation((self - 1) & 3)

    @classmethod
    def from_letter(cls, letter: str) -> "Orientation":
        try:
            return cls("NESW".index(letter))
        except ValueError:
            raise ValueError(f"unknown orientation letter {letter!r}") from None

    @property
    def letter(self) -> str:
        return "NESW"[self]


# Row/col deltas in Orientation order: north, east, south, west.
DIR_DELTAS: tuple[tuple[int, int], ...] = ((-1, 0), (0, 1), (1, 0), (0, -1))

PASSABLE_GLYPHS = frozenset(".G")
BLOCKED_GLYPHS = frozenset("@T")


class AgentState(NamedTuple):
    """Cell id plus heading; the unit of planning."""

    cell: int
    orientation: int


class GridMap:
    """Immutable 4-connected grid with dense ids over passable cells.

    Attributes:
        width, height: grid dimensions.
        passable: row-major bool per cell.
        cell_ids: row-major dense id per cell, -1 where blocked.
        cells: (row, col) per dense id; inverse of cell_ids.
        neighbor_table: per cell id, the 4 neighbor ids in N/E/S/W order,
            -1 where blocked or out of bounds.
    """

    def __init__(self, width: int, height: int, passable: list[bool]):
        if width <= 0 or height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(passable) != width * height:
            raise ValueError("passable mask length does not match dimensions")
        self.width = width
        self.height = height
        self.passable = list(passable)

        self.cell_ids: list[int] = [-1] * (width * height)
        self.cells: list[tuple[int, int]] = []
        for i in range(height):
            for j in range(width):
                if passable[i * width + j]:
                    self.cell_ids[i * width + j] = len(self.cells)
                    self.cells.append((i, j))

        self.neighbor_table: list[tuple[int, int, int, int]] = []
        for i, j in self.cells:
            row = []
            for di, dj in DIR_DELTAS:
                ni, nj = i + di, j + dj
                if 0 <= ni < height and 0 <= nj < width:
                    row.append(self.cell_ids[ni * width + nj])
                else:
                    row.append(-1)
            self.neighbor_table.append((row[0], row[1], row[2], row[3]))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def is_passable(self, row: int, col: int) -> bool:
        if not (0 <= row < self.height and 0 <= col < self.width):
            return False
        return self.passable[row * self.width + col]

    def cell_id(self, row: int, col: int) -> int:
        """Dense id of a passable cell; raises for blocked/out-of-bounds."""
        if not self.is_passable(row, col):
            raise ValueError(f"cell ({row},{col}) is blocked or out of bounds")
        return self.cell_ids[row * self.width + col]

    def coord(self, cell: int) -> tuple[int, int]:
        return self.cells[cell]

    def neighbors(self, cell: int) -> list[int]:
        """Passable 4-neighbors of a passable cell, in N/E/S/W order."""
        return [c for c in self.neighbor_table[cell] if c >= 0]

    def edges(self) -> list[tuple[int, int]]:
        """All undirected edges as (a, b) cell-id pairs with a < b."""
        out = []
        for a, row in enumerate(self.neighbor_table):
            for b in row:
                if b > a:
                    out.append((a, b))
        return out

    def to_text(self) -> str:
        """Serialize back to the benchmark map format."""
        lines = ["type octile", f"height {self.height}", f"width {self.width}", "map"]
        for i in range(self.height):
            lines.append(
                "".join(
                    "." if self.passable[i * self.width + j] else "@"
                    for j in range(self.width)
                )
            )
        return "\n".join(lines) + "\n"


def load_map(text: str) -> GridMap:
    """Parse benchmark map format: header (type/height/width), 'map', H rows.

    Glyphs: '.' and 'G' passable, '@' and 'T' blocked. Errors carry the
    offending line (1-based) and column.
    """
    lines = text.splitlines()
    height = width = None
    body_start = None
    for idx, raw in enumerate(lines):
        line = raw.strip()
        if line == "map":
            body_start = idx + 1
            break
        if not line:
            continue
        parts = line.split()
        if parts[0] == "type":
            continue
        if parts[0] in ("height", "width"):
            if len(parts) != 2 or not parts[1].isdigit():
                raise MapParseError(f"line {idx + 1}: malformed {parts[0]} header")
            if parts[0] == "height":
                height = int(parts[1])
            else:
                width = int(parts[1])
        else:
            raise MapParseError(f"line {idx + 1}: unexpected header {parts[0]!r}")
    if body_start is None:
        raise MapParseError("missing 'map' separator line")
    if height is None or width is None:
        raise MapParseError("header must define both height and width")

    rows = lines[body_start : body_start + height]
    if len(rows) < height:
        raise MapParseError(f"expected {height} map rows, found {len(rows)}")

    passable = [False] * (width * height)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(
                f"line {body_start + r + 1}: row length {len(row)} != width {width}"
            )
        for c, glyph in enumerate(row):
            if glyph in PASSABLE_GLYPHS:
                passable[r * width + c] = True
            elif glyph in BLOCKED_GLYPHS:
                pass
            else:
                raise MapParseError(
                    f"line {body_start + r + 1}, column {c + 1}: unknown glyph {glyph!r}"
                )
    return GridMap(width, height, passable)


def check_cycle_condition(grid: GridMap) -> list[tuple[int, int]]:
    """Edges of the traversability graph not on any simple cycle of length >= 3.

    In a simple graph an edge lies on a simple cycle (necessarily length >= 3)
    iff it is not a bridge, so this returns the bridge set. Empty result means
    the reachability precondition of the priority-push guarantee holds on the
    whole map. Edges are (a, b) pairs with a < b, sorted.
    """
    n = grid.n_cells
    neigh = grid.neighbor_table
    disc = [-1] * n
    low = [0] * n
    bridges: list[tuple[int, int]] = []
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        # Iterative lowlink DFS; stack entries are (node, parent, neighbor pos).
        stack = [(root, -1, 0)]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            node, parent, pos = stack.pop()
            if pos < 4:
                stack.append((node, parent, pos + 1))
                nxt = neigh[node][pos]
                if nxt < 0 or nxt == parent:
                    continue
                if disc[nxt] == -1:
                    disc[nxt] = low[nxt] = timer
                    timer += 1
                    stack.append((nxt, node, 0))
                else:
                    low[node] = min(low[node], disc[nxt])
            elif parent >= 0:
                low[parent] = min(low[parent], low[node])
                if low[node] > disc[parent]:
                    bridges.append((min(parent, node), max(parent, node)))
    bridges.sort()
    return bridges


@dataclass
class Scenario:
    """Agents with start states, an ordered goal pool, and run parameters."""

    agents: list[AgentState]
    tasks: list[int]
    horizon: int
    model: str = "rotation"

    @property
    def n_agents(self) -> int:
        return len(self.agents)


def load_scenario(text: str, grid: GridMap) -> Scenario:
    """Parse the line-oriented scenario format.

    Header keys: ``horizon <int>``, ``model rotation|omnidirectional``.
    Agent lines: ``a <row> <col> [N|E|S|W]`` (orientation defaults to north).
    Task lines: ``t <row> <col>``.
    """
    horizon = None
    model = "rotation"
    agents: list[AgentState] = []
    tasks: list[int] = []
    seen_starts: set[int] = set()

    for idx, raw in enumerate(text.splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"line {idx + 1}"
        if parts[0] == "horizon":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ScenarioParseError(f"{where}: malformed horizon")
            horizon = int(parts[1])
        elif parts[0] == "model":
            if len(parts) != 2 or parts[1] not in ("rotation", "omnidirectional"):
                raise ScenarioParseError(f"{where}: model must be rotation or omnidirectional")
            model = parts[1]
        elif parts[0] == "a":
            if len(parts) not in (3, 4):
                raise ScenarioParseError(f"{where}: agent line needs row col [NESW]")
            row, col = _parse_coord(parts[1], parts[2], where)
            if not grid.is_passable(row, col):
                raise ScenarioParseError(f"{where}: start ({row},{col}) is blocked or outside the map")
            cell = grid.cell_id(row, col)
            if cell in seen_starts:
                raise ScenarioParseError(f"{where}: duplicate start cell ({row},{col})")
            seen_starts.add(cell)
            orient = Orientation.NORTH
            if len(parts) == 4:
                try:
                    orient = Orientation.from_letter(parts[3])
                except ValueError as exc:
                    raise ScenarioParseError(f"{where}: {exc}") from None
            agents.append(AgentState(cell, int(orient)))
        elif parts[0] == "t":
            if len(parts) != 3:
                raise ScenarioParseError(f"{where}: task line needs row col")
            row, col = _parse_coord(parts[1], parts[2], where)
            if not grid.is_passable(row, col):
                raise ScenarioParseError(f"{where}: task goal ({row},{col}) is blocked or outside the map")
            tasks.append(grid.cell_id(row, col))
        else:
            raise ScenarioParseError(f"{where}: unknown record {parts[0]!r}")

    if horizon is None or horizon < 1:
        raise ScenarioParseError("scenario must declare horizon >= 1")
    if not agents:
        raise ScenarioParseError("scenario declares no agents")
    if not tasks:
        raise ScenarioParseError("scenario task pool is empty")
    return Scenario(agents=agents, tasks=tasks, horizon=horizon, model=model)


def format_scenario(scenario: Scenario, grid: GridMap) -> str:
    """Serialize a Scenario to the line format load_scenario reads."""
    lines = [f"horizon {scenario.horizon}", f"model {scenario.model}"]
    for state in scenario.agents:
        i, j = grid.coord(state.cell)
        lines.append(f"a {i} {j} {Orientation(state.orientation).letter}")
    for goal in scenario.tasks:
        i, j = grid.coord(goal)
        lines.append(f"t {i} {j}")
    return "\n".join(lines) + "\n"


def _parse_coord(a: str, b: str, where: str) -> tuple[int, int]:
    try:
        return int(a), int(b)
    except ValueError:
        raise ScenarioParseError(f"{where}: coordinates must be integers") from None
