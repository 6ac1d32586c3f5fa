"""Goal-distance matrices over oriented states, with optional edge guidance.

A distance map stores, for one goal cell, the minimal cost to reach that
cell (any final orientation) from every (cell, orientation) state. Under the
rotation model a forward move costs the traversed edge's weight and each
rotation costs 1; under the omnidirectional model moves cost the edge weight
and orientation is ignored. Costs are computed backward from the goal, by
breadth-first search when all weights are 1 and by Dijkstra otherwise.

Guidance weights bias distances (and therefore operation preferences); they
never affect collision legality.
"""
from __future__ import annotations

import math
from collections import OrderedDict, deque
from heapq import heappop, heappush

from .grid import DIR_DELTAS, GridMap

INFINITY = math.inf

DEFAULT_LANE_GAMMA = 1.8


class WeightsParseError(ValueError):
    """Raised when an edge-weights file is malformed."""


class EdgeWeights:
    """Positive cost multipliers on the directed edges of a grid.

    Unlisted edges weigh 1.0. Keys are (cell_id, direction) with direction
    in N/E/S/W order; every key must name an existing edge.
    """

    def __init__(self, grid: GridMap, overrides: dict[tuple[int, int], float] | None = None):
        self.grid = grid
        self.overrides: dict[tuple[int, int], float] = {}
        for (cell, direction), w in (overrides or {}).items():
            if w <= 0:
                raise ValueError(f"edge weight must be positive, got {w}")
            if not 0 <= cell < grid.n_cells or grid.neighbor_table[cell][direction] < 0:
                raise ValueError(f"({cell}, dir {direction}) is not an edge of the grid")
            if w != 1.0:
                self.overrides[(cell, direction)] = w

    @property
    def is_unit(self) -> bool:
        return not self.overrides

    def weight(self, cell: int, direction: int) -> float:
        return self.overrides.get((cell, direction), 1.0)

    def dense(self) -> list[float]:
        """Flat weight table indexed by cell*4+direction (non-edges get 1)."""
        table = [1.0] * (self.grid.n_cells * 4)
        for (cell, direction), w in self.overrides.items():
            table[cell * 4 + direction] = w
        return table


def generate_lane_weights(grid: GridMap, gamma: float = DEFAULT_LANE_GAMMA) -> EdgeWeights:
    """Direction-biased default guidance: alternating preferred lanes.

    Even rows penalize westward edges by ``gamma`` (eastbound lanes), odd
    rows penalize eastward; even columns penalize northward (southbound
    lanes), odd columns penalize southward. gamma=1 is the identity.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    overrides: dict[tuple[int, int], float] = {}
    for cell, (i, j) in enumerate(grid.cells):
        north, east, south, west = grid.neighbor_table[cell]
        if east >= 0 and i % 2 == 1:
            overrides[(cell, 1)] = gamma
        if west >= 0 and i % 2 == 0:
            overrides[(cell, 3)] = gamma
        if north >= 0 and j % 2 == 0:
            overrides[(cell, 0)] = gamma
        if south >= 0 and j % 2 == 1:
            overrides[(cell, 2)] = gamma
    return EdgeWeights(grid, overrides)


def parse_edge_weights(text: str, grid: GridMap) -> EdgeWeights:
    """Parse lines of ``(<row>,<col>) <N|E|S|W> <weight>``; rest default 1."""
    overrides: dict[tuple[int, int], float] = {}
    for idx, raw in enumerate(text.splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"line {idx + 1}"
        if len(parts) != 3 or not (parts[0].startswith("(") and parts[0].endswith(")")):
            raise WeightsParseError(f"{where}: expected '(<row>,<col>) <dir> <weight>'")
        try:
            row_s, col_s = parts[0][1:-1].split(",")
            row, col = int(row_s), int(col_s)
        except ValueError:
            raise WeightsParseError(f"{where}: malformed cell coordinates") from None
        if parts[1] not in "NESW" or len(parts[1]) != 1:
            raise WeightsParseError(f"{where}: direction must be one of N E S W")
        direction = "NESW".index(parts[1])
        try:
            weight = float(parts[2])
        except ValueError:
            raise WeightsParseError(f"{where}: malformed weight") from None
        if weight <= 0:
            raise WeightsParseError(f"{where}: weight must be positive")
        if not grid.is_passable(row, col):
            raise WeightsParseError(f"{where}: cell ({row},{col}) is blocked or outside the map")
        cell = grid.cell_id(row, col)
        if grid.neighbor_table[cell][direction] < 0:
            raise WeightsParseError(f"{where}: no edge from ({row},{col}) toward {parts[1]}")
        overrides[(cell, direction)] = weight
    return EdgeWeights(grid, overrides)


class DistanceMap:
    """Single-goal cost table over (cell, orientation) states.

    ``cost`` is a flat list indexed by cell*4+orientation; unreachable states
    hold math.inf. Immutable after construction.
    """

    def __init__(self, goal: int, model: str, cost: list[float]):
        self.goal = goal
        self.model = model
        self.cost = cost

    def state_cost(self, cell: int, orientation: int) -> float:
        return self.cost[cell * 4 + orientation]


def build_distance_map(
    grid: GridMap,
    goal: int,
    model: str = "rotation",
    weights: EdgeWeights | None = None,
) -> DistanceMap:
    """Exact shortest-path costs to ``goal`` from every oriented state."""
    if weights is None:
        weights = EdgeWeights(grid)
    n = grid.n_cells
    cost = [INFINITY] * (n * 4)
    neigh = grid.neighbor_table
    unit = weights.is_unit
    wt = None if unit else weights.dense()

    if model == "rotation":
        # Predecessors of (c, o): same cell rotated one step either way
        # (cost 1), and the cell behind o whose forward move lands on c
        # (cost = that edge's weight).
        seeds = [goal * 4 + o for o in range(4)]
        if unit:
            queue = deque()
            for s in seeds:
                cost[s] = 0.0
                queue.append(s)
            popleft = queue.popleft
            append = queue.append
            while queue:
                s = popleft()
                d = cost[s] + 1.0
                o = s & 3
                base = s - o
                p = base + ((o + 1) & 3)
                if cost[p] == INFINITY:
                    cost[p] = d
                    append(p)
                p = base + ((o - 1) & 3)
                if cost[p] == INFINITY:
                    cost[p] = d
                    append(p)
                back = neigh[s >> 2][(o + 2) & 3]
                if back >= 0:
                    p = (back << 2) + o
                    if cost[p] == INFINITY:
                        cost[p] = d
                        append(p)
        else:
            heap = []
            for s in seeds:
                cost[s] = 0.0
                heappush(heap, (0.0, s))
            while heap:
                d, s = heappop(heap)
                if d > cost[s]:
                    continue
                o = s & 3
                base = s - o
                nd = d + 1.0
                for p in (base + ((o + 1) & 3), base + ((o - 1) & 3)):
                    if nd < cost[p]:
                        cost[p] = nd
                        heappush(heap, (nd, p))
                back = neigh[s >> 2][(o + 2) & 3]
                if back >= 0:
                    p = (back << 2) + o
                    nd = d + wt[p]
                    if nd < cost[p]:
                        cost[p] = nd
                        heappush(heap, (nd, p))
    elif model == "omnidirectional":
        cell_cost = [INFINITY] * n
        cell_cost[goal] = 0.0
        if unit:
            queue = deque([goal])
            while queue:
                c = queue.popleft()
                d = cell_cost[c] + 1.0
                for direction in range(4):
                    p = neigh[c][(direction + 2) & 3]
                    if p >= 0 and cell_cost[p] == INFINITY:
                        cell_cost[p] = d
                        queue.append(p)
        else:
            heap = [(0.0, goal)]
            while heap:
                d, c = heappop(heap)
                if d > cell_cost[c]:
                    continue
                for direction in range(4):
                    p = neigh[c][direction]
                    if p < 0:
                        continue
                    # p moves toward c along the opposite direction.
                    nd = d + wt[p * 4 + ((direction + 2) & 3)]
                    if nd < cell_cost[p]:
                        cell_cost[p] = nd
                        heappush(heap, (nd, p))
        for c in range(n):
            v = cell_cost[c]
            base = c * 4
            cost[base] = cost[base + 1] = cost[base + 2] = cost[base + 3] = v
    else:
        raise ValueError(f"unknown action model {model!r}")
    return DistanceMap(goal, model, cost)


def h_after(state, op, dmap: DistanceMap, grid: GridMap) -> float:
    """Distance to goal after performing ``op``, best reachable heading.

    Raises ValueError if the operation leaves the grid; callers are expected
    to pre-filter with apply_operation.
    """
    cell, orient = state
    neigh = grid.neighbor_table
    for d in op.moves[orient]:
        if d >= 0:
            cell = neigh[cell][d]
            if cell < 0:
                raise ValueError("operation leaves the grid from this state")
    cost = dmap.cost
    base = cell * 4
    return min(cost[base + ((orient + r) & 3)] for r in op.terminal_rots)


class DistanceCache:
    """Bounded LRU map from goal cell to its DistanceMap.

    Lookups for cached goals return the identical object. Insertions are
    serialized by the single-threaded planner; reads are safe to share.
    """

    def __init__(self, grid: GridMap, model: str, weights: EdgeWeights | None = None,
                 capacity: int = 256):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.grid = grid
        self.model = model
        self.weights = weights
        self.capacity = capacity
        self._maps: OrderedDict[int, DistanceMap] = OrderedDict()
        self.builds = 0

    def get(self, goal: int) -> DistanceMap:
        dmap = self._maps.get(goal)
        if dmap is None:
            dmap = build_distance_map(self.grid, goal, self.model, self.weights)
            self._maps[goal] = dmap
            self.builds += 1
            if len(self._maps) > self.capacity:
                self._maps.popitem(last=False)
        else:
            self._maps.move_to_end(goal)
        return dmap
