#!/usr/bin/env python3
"""Regenerate data/random-32-32-20.map.

The original benchmark file is not redistributable here, so we build a
seeded stand-in with the same documented shape: 32x32, exactly 819 passable
cells (20% blocked), all passable cells in one connected component, and at
least one bridge edge (dead ends exist, as on the original map).
"""
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from epibt.grid import GridMap, check_cycle_condition  # noqa: E402

SIZE = 32
TARGET_PASSABLE = 819
SEED = 20


def components(grid: GridMap) -> list[list[int]]:
    seen: set[int] = set()
    comps = []
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
        comps.append(comp)
    return comps


def build(seed: int) -> GridMap:
    rng = random.Random(seed)
    cells = list(range(SIZE * SIZE))
    blocked = set(rng.sample(cells, SIZE * SIZE - TARGET_PASSABLE))
    mask = [idx not in blocked for idx in cells]
    grid = GridMap(SIZE, SIZE, mask)
    # Swap isolated pockets against blocked cells adjacent to the main
    # component until everything is connected; the count stays exact.
    while True:
        comps = sorted(components(grid), key=len)
        if len(comps) == 1:
            return grid
        main = set(comps[-1])
        frontier = []
        for c in main:
            i, j = grid.coord(c)
            for di, dj in ((-1, 0), (0, 1), (1, 0), (0, -1)):
                ni, nj = i + di, j + dj
                if 0 <= ni < SIZE and 0 <= nj < SIZE and not mask[ni * SIZE + nj]:
                    frontier.append(ni * SIZE + nj)
        victim = comps[0][0]
        vi, vj = grid.coord(victim)
        mask[vi * SIZE + vj] = False
        mask[rng.choice(sorted(frontier))] = True
        grid = GridMap(SIZE, SIZE, mask)


def main() -> None:
    grid = build(SEED)
    assert grid.n_cells == TARGET_PASSABLE, grid.n_cells
    assert len(components(grid)) == 1
    assert check_cycle_condition(grid), "stand-in should contain bridge edges"
    out = Path(__file__).resolve().parents[1] / "data" / "random-32-32-20.map"
    out.parent.mkdir(exist_ok=True)
    out.write_text(grid.to_text())
    print(f"wrote {out}: |V|={grid.n_cells}, bridges={len(check_cycle_condition(grid))}")


if __name__ == "__main__":
    main()
