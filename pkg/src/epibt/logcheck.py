"""Independent action-log validation by re-simulation.

Replays a recorded action log from the scenario's start states, checking
per-step action legality (model semantics, bounds, passability) and both
collision types. Deliberately shares nothing with the planner's reservation
machinery: positions are tracked as raw (row, col) coordinates and collisions
found by per-step dictionaries, so this is a genuinely separate oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

from .grid import DIR_DELTAS, GridMap, Scenario


class LogParseError(ValueError):
    """Raised when an action-log file is structurally malformed."""


@dataclass(frozen=True)
class Violation:
    kind: str  # "illegal" | "vertex" | "swap"
    timestep: int
    agents: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        who = ",".join(str(a) for a in self.agents)
        return f"t={self.timestep} {self.kind} agents={who}: {self.detail}"


ROTATION_LETTERS = frozenset("FRCW")
OMNI_LETTERS = frozenset("UDLRW")
OMNI_DIRS = {"U": 0, "R": 1, "D": 2, "L": 3}


def parse_action_log(text: str, n_agents: int) -> list[str]:
    """Split a log file into per-timestep lines of exactly one letter per agent."""
    lines = [line for line in text.splitlines() if line.strip()]
    for idx, line in enumerate(lines):
        if len(line) != n_agents:
            raise LogParseError(
                f"line {idx + 1}: expected {n_agents} action letters, found {len(line)}"
            )
    return lines


def validate_log(log: list[str], grid: GridMap, scenario: Scenario) -> list[Violation]:
    """Re-simulate a log; returns all violations (empty means the log is valid)."""
    n = scenario.n_agents
    model = scenario.model
    legal = ROTATION_LETTERS if model == "rotation" else OMNI_LETTERS
    # (row, col, heading) per agent, tracked in plain coordinates.
    pose: list[tuple[int, int, int]] = [
        (*grid.coord(a.cell), a.orientation) for a in scenario.agents
    ]
    violations: list[Violation] = []

    for t, line in enumerate(log):
        new_pose: list[tuple[int, int, int]] = []
        for k, letter in enumerate(line):
            r, c, h = pose[k]
            if letter not in legal:
                violations.append(
                    Violation("illegal", t, (k,), f"letter {letter!r} not in {model} model")
                )
                new_pose.append((r, c, h))
                continue
            if model == "rotation":
                if letter == "F":
                    dr, dc = DIR_DELTAS[h]
                    nr, nc = r + dr, c + dc
                    if not grid.is_passable(nr, nc):
                        violations.append(
                            Violation("illegal", t, (k,), f"forward into blocked cell ({nr},{nc})")
                        )
                        new_pose.append((r, c, h))
                    else:
                        new_pose.append((nr, nc, h))
                elif letter == "R":
                    new_pose.append((r, c, (h + 1) & 3))
                elif letter == "C":
                    new_pose.append((r, c, (h - 1) & 3))
                else:
                    new_pose.append((r, c, h))
            else:
                if letter == "W":
                    new_pose.append((r, c, h))
                else:
                    dr, dc = DIR_DELTAS[OMNI_DIRS[letter]]
                    nr, nc = r + dr, c + dc
                    if not grid.is_passable(nr, nc):
                        violations.append(
                            Violation("illegal", t, (k,), f"move into blocked cell ({nr},{nc})")
                        )
                        new_pose.append((r, c, h))
                    else:
                        new_pose.append((nr, nc, h))

        occupied: dict[tuple[int, int], int] = {}
        for k, (r, c, _h) in enumerate(new_pose):
            other = occupied.get((r, c))
            if other is not None:
                violations.append(
                    Violation("vertex", t, (other, k), f"both occupy cell ({r},{c})")
                )
            else:
                occupied[(r, c)] = k
        moved: dict[tuple[int, int, int, int], int] = {}
        for k in range(n):
            r0, c0 = pose[k][0], pose[k][1]
            r1, c1 = new_pose[k][0], new_pose[k][1]
            if (r0, c0) != (r1, c1):
                moved[(r0, c0, r1, c1)] = k
        for (r0, c0, r1, c1), k in moved.items():
            other = moved.get((r1, c1, r0, c0))
            if other is not None and other > k:
                violations.append(
                    Violation(
                        "swap", t, (k, other),
                        f"opposite traversal of edge ({r0},{c0})-({r1},{c1})",
                    )
                )
        pose = new_pose
    return violations
