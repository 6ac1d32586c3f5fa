"""Space-time reservation table for the shared path set.

Holds every registered agent's planned path over the planning window and
answers conflict queries: same vertex at the same time (t = 1..window), or
the same edge traversed in opposite directions at the same step. Vertex
occupancy at t=0 is recorded (it anchors swap detection) but is not itself a
conflict: starts are pairwise distinct and every path begins at its agent's
own cell.

Edge conflicts are detected from consecutive vertex reservations plus owner
lookups rather than a separate edge table; with windows of at most 5 steps
the recomputation is cheaper than maintaining a second index. Ownership
lives in one flat list indexed by t*n_cells+cell, sized for the per-step
query volume (every candidate operation of every selection probes it).
"""
from __future__ import annotations

from typing import Sequence


class ReservationConflictError(ValueError):
    """Raised when a path is inserted without querying for conflicts first."""


class ReservationTable:
    """Time-indexed vertex ownership for paths of a fixed window length.

    ``owner[t*n_cells + cell]`` is the registering agent id or -1, for
    t = 0..window. Mutation is single-threaded: the planner and the improver
    own the table exclusively during a step.
    """

    def __init__(self, n_cells: int, window: int):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.n_cells = n_cells
        self.window = window
        self.owner: list[int] = [-1] * (n_cells * (window + 1))
        self.paths: dict[int, tuple[int, ...]] = {}

    def get_used(self, cells: Sequence[int]) -> set[int]:
        """Ids of registered agents conflicting with a candidate path.

        ``cells`` is the candidate's full cell sequence including the current
        cell at index 0 (length window+1). The querying agent must not be
        registered while it queries.
        """
        if len(cells) != self.window + 1:
            raise ValueError(f"candidate path must have length {self.window + 1}")
        owner = self.owner
        n = self.n_cells
        used: set[int] = set()
        base = n
        for t in range(1, self.window + 1):
            v = cells[t]
            holder = owner[base + v]
            if holder >= 0:
                used.add(holder)
            u = cells[t - 1]
            if u != v:
                # Swap: some agent moved v -> u exactly when we move u -> v.
                l = owner[base - n + v]
                if l >= 0 and owner[base + u] == l:
                    used.add(l)
            base += n
        return used

    def insert_path(self, agent: int, cells: Sequence[int]) -> None:
        """Register a conflict-free path; callers must query first."""
        if agent in self.paths:
            raise ReservationConflictError(f"agent {agent} is already registered")
        used = self.get_used(cells)
        if used:
            raise ReservationConflictError(
                f"path for agent {agent} conflicts with agents {sorted(used)}"
            )
        self.register(agent, tuple(cells))

    def remove_path(self, agent: int) -> None:
        """Clear an agent's reservations; exact inverse of insertion."""
        cells = self.paths.pop(agent)
        owner = self.owner
        n = self.n_cells
        base = 0
        for t in range(self.window + 1):
            owner[base + cells[t]] = -1
            base += n

    def register(self, agent: int, cells: tuple[int, ...]) -> None:
        """Record reservations without the conflict check (planner internal)."""
        self.paths[agent] = cells
        owner = self.owner
        n = self.n_cells
        base = 0
        for t in range(self.window + 1):
            owner[base + cells[t]] = agent
            base += n

    def registered(self, agent: int) -> bool:
        return agent in self.paths
