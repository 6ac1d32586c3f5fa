"""Shared fixtures, builders, and independent oracles.

The oracles here deliberately re-derive semantics from first principles
(coordinates and action letters, not the package's tables) so they stay
meaningful checks of the implementation.
"""
from __future__ import annotations

import random
from pathlib import Path

import pytest

from epibt.grid import AgentState, GridMap, Scenario, load_map

DATA_DIR = Path(__file__).resolve().parents[1] / "data"

DELTAS = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}
ORDER = "NESW"


def open_grid(height: int, width: int) -> GridMap:
    return GridMap(width, height, [True] * (width * height))


def grid_from_rows(rows: list[str]) -> GridMap:
    height = len(rows)
    width = len(rows[0])
    passable = []
    for row in rows:
        assert len(row) == width
        passable.extend(ch == "." for ch in row)
    return GridMap(width, height, passable)


def map_text(rows: list[str]) -> str:
    return (
        f"type octile\nheight {len(rows)}\nwidth {len(rows[0])}\nmap\n"
        + "\n".join(rows)
        + "\n"
    )


def largest_component_grid(height: int, width: int, passable: list[bool]) -> GridMap | None:
    """Keep only the largest 4-connected passable component."""
    grid = GridMap(width, height, passable)
    if grid.n_cells == 0:
        return None
    seen: set[int] = set()
    best: list[int] = []
    for s in range(grid.n_cells):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        queue = [s]
        while queue:
            c = queue.pop()
            for nb in grid.neighbors(c):
                if nb not in seen:
                    seen.add(nb)
                    comp.append(nb)
                    queue.append(nb)
        if len(comp) > len(best):
            best = comp
    mask = [False] * (width * height)
    for c in best:
        i, j = grid.coord(c)
        mask[i * width + j] = True
    return GridMap(width, height, mask)


def random_connected_grid(rng: random.Random, height: int, width: int,
                          block: float = 0.2, min_cells: int = 4) -> GridMap:
    while True:
        passable = [rng.random() > block for _ in range(height * width)]
        grid = largest_component_grid(height, width, passable)
        if grid is not None and grid.n_cells >= min_cells:
            return grid


def random_scenario(rng: random.Random, grid: GridMap, n_agents: int, horizon: int,
                    model: str = "rotation", pool_size: int | None = None) -> Scenario:
    starts = rng.sample(range(grid.n_cells), n_agents)
    agents = [AgentState(c, rng.randrange(4)) for c in starts]
    pool_size = pool_size or max(8, 2 * n_agents)
    tasks = [rng.randrange(grid.n_cells) for _ in range(pool_size)]
    return Scenario(agents=agents, tasks=tasks, horizon=horizon, model=model)


@pytest.fixture(scope="session")
def bench_grid() -> GridMap:
    return load_map((DATA_DIR / "random-32-32-20.map").read_text())


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def bridge_oracle(grid: GridMap) -> list[tuple[int, int]]:
    """Bridges by deletion: remove the edge, test endpoint reachability."""
    bridges = []
    for a, b in grid.edges():
        seen = {a}
        queue = [a]
        found = False
        while queue and not found:
            c = queue.pop()
            for nb in grid.neighbors(c):
                if (c, nb) in ((a, b), (b, a)):
                    continue
                if nb == b:
                    found = True
                    break
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        if not found:
            bridges.append((a, b))
    return bridges


def simulate_raw(actions: str, row: int, col: int, heading: str, grid: GridMap,
                 model: str = "rotation"):
    """Trace of a raw action string in plain coordinates, or None if it
    leaves the grid. Returns (list of (row, col), final heading letter)."""
    trace = []
    h = heading
    for a in actions:
        if model == "rotation":
            if a == "F":
                dr, dc = DELTAS[h]
                row, col = row + dr, col + dc
                if not grid.is_passable(row, col):
                    return None
            elif a == "R":
                h = ORDER[(ORDER.index(h) + 1) % 4]
            elif a == "C":
                h = ORDER[(ORDER.index(h) - 1) % 4]
        else:
            if a != "W":
                dr, dc = DELTAS[{"U": "N", "R": "E", "D": "S", "L": "W"}[a]]
                row, col = row + dr, col + dc
                if not grid.is_passable(row, col):
                    return None
        trace.append((row, col))
    return trace, h


def dist_oracle(grid: GridMap, goal: int, model: str = "rotation",
                weights=None) -> list[float]:
    """Fixed-point relaxation over d(s) = min over actions of cost + d(next).

    Completely separate route from the package's backward search; O(V^2)
    sweeps are fine at oracle scale.
    """
    inf = float("inf")
    n = grid.n_cells

    def w(cell: int, direction: int) -> float:
        return weights.weight(cell, direction) if weights is not None else 1.0

    if model == "rotation":
        cost = [inf] * (n * 4)
        for o in range(4):
            cost[goal * 4 + o] = 0.0
        changed = True
        while changed:
            changed = False
            for c in range(n):
                for o in range(4):
                    s = c * 4 + o
                    best = cost[s]
                    nb = grid.neighbor_table[c][o]
                    if nb >= 0 and w(c, o) + cost[nb * 4 + o] < best:
                        best = w(c, o) + cost[nb * 4 + o]
                    for no in ((o + 1) & 3, (o - 1) & 3):
                        if 1.0 + cost[c * 4 + no] < best:
                            best = 1.0 + cost[c * 4 + no]
                    if best < cost[s]:
                        cost[s] = best
                        changed = True
        return cost
    cost = [inf] * n
    cost[goal] = 0.0
    changed = True
    while changed:
        changed = False
        for c in range(n):
            for d in range(4):
                nb = grid.neighbor_table[c][d]
                if nb >= 0 and w(c, d) + cost[nb] < cost[c]:
                    cost[c] = w(c, d) + cost[nb]
                    changed = True
    return cost


def paths_conflict(pa, pb) -> bool:
    """Pairwise conflict between two equal-length cell paths (index 0 = now)."""
    assert len(pa) == len(pb)
    for t in range(1, len(pa)):
        if pa[t] == pb[t]:
            return True
        if pa[t] == pb[t - 1] and pb[t] == pa[t - 1] and pa[t] != pa[t - 1]:
            return True
    return False


def joint_paths_valid(paths) -> bool:
    items = list(paths)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if paths_conflict(items[i], items[j]):
                return False
    return True
