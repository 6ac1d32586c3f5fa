import random
from itertools import product

import pytest

from epibt.grid import AgentState, Orientation
from epibt.operations import (
    apply_operation,
    enumerate_operations,
    format_operations,
    pibt5_operation_set,
    reachable_stats,
)

from conftest import open_grid, simulate_raw

# (cells, states, sequences) per operation length for the rotation model.
ROTATION_TABLE = {
    1: (2, 4, 2),
    2: (5, 10, 6),
    3: (11, 23, 17),
    4: (21, 48, 48),
    5: (35, 88, 136),
}


def raw_groups(op_len: int, grid, row: int, col: int, heading: str):
    """Signature classes from plain brute force over all 4^len strings."""
    groups: dict[tuple, set[str]] = {}
    finals: dict[tuple, set[str]] = {}
    for combo in product("FRCW", repeat=op_len):
        s = "".join(combo)
        result = simulate_raw(s, row, col, heading, grid)
        assert result is not None
        trace, final = result
        key = tuple(trace)
        groups.setdefault(key, set()).add(s)
        finals.setdefault(key, set()).add(final)
    return groups, finals


class TestRotationCatalog:
    @pytest.mark.parametrize("op_len", [1, 2, 3, 4, 5])
    def test_reference_counts(self, op_len):
        assert reachable_stats("rotation", op_len) == ROTATION_TABLE[op_len]

    @pytest.mark.parametrize("op_len", [1, 2, 3, 4])
    def test_signatures_match_brute_force(self, op_len):
        grid = open_grid(13, 13)
        groups, _ = raw_groups(op_len, grid, 6, 6, "N")
        opset = enumerate_operations("rotation", op_len)
        catalog = set()
        for op in opset.operations:
            sig = tuple((6 + di, 6 + dj) for di, dj in op.offsets[int(Orientation.NORTH)])
            catalog.add(sig)
        assert catalog == set(groups)

    @pytest.mark.parametrize("op_len", [1, 2, 3, 4])
    def test_terminal_states_match_brute_force(self, op_len):
        grid = open_grid(13, 13)
        _, finals = raw_groups(op_len, grid, 6, 6, "N")
        opset = enumerate_operations("rotation", op_len)
        for op in opset.operations:
            sig = tuple((6 + di, 6 + dj) for di, dj in op.offsets[int(Orientation.NORTH)])
            got = {"NESW"[r] for r in op.terminal_rots}
            assert got == finals[sig], op.actions

    def test_no_trailing_rotation(self):
        for op_len in range(1, 6):
            for op in enumerate_operations("rotation", op_len):
                assert op.actions[-1] not in "RC"

    def test_signature_steps_adjacent_or_equal(self):
        for op in enumerate_operations("rotation", 5):
            for o in range(4):
                prev = (0, 0)
                for cur in op.offsets[o]:
                    step = abs(cur[0] - prev[0]) + abs(cur[1] - prev[1])
                    assert step in (0, 1)
                    prev = cur

    def test_signatures_distinct_per_orientation(self):
        for op_len in range(1, 6):
            opset = enumerate_operations("rotation", op_len)
            for o in range(4):
                sigs = [op.offsets[o] for op in opset]
                assert len(set(sigs)) == len(sigs)

    def test_equivariance_under_rotation(self):
        def rot_cw(offset):
            return (offset[1], -offset[0])

        for op in enumerate_operations("rotation", 4):
            for o in range(4):
                expect = tuple(rot_cw(c) for c in op.offsets[o])
                assert op.offsets[(o + 1) & 3] == expect

    def test_canonical_strings_include_push_set(self):
        names = {op.actions for op in enumerate_operations("rotation", 3)}
        # The four single-final-move operations that reach each neighbor.
        assert {"WWF", "CWF", "RWF", "RRF"} <= names

    def test_bad_lengths_rejected(self):
        with pytest.raises(ValueError):
            enumerate_operations("rotation", 0)
        with pytest.raises(ValueError):
            enumerate_operations("rotation", 6)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError):
            enumerate_operations("hex", 3)


class TestOmnidirectionalCatalog:
    @pytest.mark.parametrize("op_len,count", [(1, 5), (2, 25), (3, 125)])
    def test_counts_are_five_to_the_length(self, op_len, count):
        cells, states, seqs = reachable_stats("omnidirectional", op_len)
        assert seqs == count
        assert cells == states  # no orientation in this model

    def test_signatures_all_distinct(self):
        opset = enumerate_operations("omnidirectional", 2)
        sigs = [op.offsets[0] for op in opset]
        assert len(set(sigs)) == len(sigs) == 25

    def test_reachable_cells_manhattan_ball(self):
        cells, _, _ = reachable_stats("omnidirectional", 2)
        assert cells == 13  # 2*2^2 + 2*2 + 1


class TestApply:
    def test_all_wait_is_identity(self):
        grid = open_grid(4, 4)
        opset = enumerate_operations("rotation", 3)
        op = opset.operations[opset.all_wait_index]
        start = AgentState(grid.cell_id(2, 1), int(Orientation.EAST))
        path = apply_operation(op, start, grid)
        assert path == [start] * 4

    def test_forward_into_wall_is_out_of_bounds(self):
        grid = open_grid(4, 4)
        opset = enumerate_operations("rotation", 3)
        fff = next(op for op in opset if op.actions == "FFF")
        start = AgentState(grid.cell_id(2, 2), int(Orientation.EAST))
        assert apply_operation(fff, start, grid) is None

    def test_ffw_trace_facing_east(self):
        grid = open_grid(5, 5)
        opset = enumerate_operations("rotation", 3)
        ffw = next(op for op in opset if op.actions == "FFW")
        start = AgentState(grid.cell_id(2, 1), int(Orientation.EAST))
        path = apply_operation(ffw, start, grid)
        cells = [grid.coord(s.cell) for s in path]
        assert cells == [(2, 1), (2, 2), (2, 3), (2, 3)]

    def test_trace_matches_signature(self):
        grid = open_grid(11, 11)
        rng = random.Random(17)
        opset = enumerate_operations("rotation", 4)
        for _ in range(200):
            op = opset.operations[rng.randrange(len(opset))]
            start = AgentState(grid.cell_id(rng.randrange(3, 8), rng.randrange(3, 8)),
                               rng.randrange(4))
            path = apply_operation(op, start, grid)
            assert path is not None
            si, sj = grid.coord(start.cell)
            for state, (di, dj) in zip(path[1:], op.offsets[start.orientation]):
                assert grid.coord(state.cell) == (si + di, sj + dj)

    def test_omni_moves_keep_orientation(self):
        grid = open_grid(5, 5)
        opset = enumerate_operations("omnidirectional", 2)
        op = next(o for o in opset if o.actions == "UR")
        start = AgentState(grid.cell_id(2, 2), int(Orientation.SOUTH))
        path = apply_operation(op, start, grid)
        assert [grid.coord(s.cell) for s in path] == [(2, 2), (1, 2), (1, 3)]
        assert all(s.orientation == start.orientation for s in path)


class TestPibt5:
    def test_exactly_five(self):
        opset = pibt5_operation_set()
        assert [op.actions for op in opset] == ["FWW", "RFW", "CFW", "RRF", "WWW"]

    def test_signatures_subset_of_full_catalog(self):
        full = {op.offsets[0] for op in enumerate_operations("rotation", 3)}
        assert all(op.offsets[0] in full for op in pibt5_operation_set())

    def test_rrf_reaches_cell_behind_reversed(self):
        opset = pibt5_operation_set()
        rrf = next(op for op in opset if op.actions == "RRF")
        assert rrf.offsets[int(Orientation.NORTH)][-1] == (1, 0)
        assert rrf.terminal_states(int(Orientation.NORTH)) == {((1, 0), int(Orientation.SOUTH))}

    def test_literal_terminals(self):
        opset = pibt5_operation_set()
        fww = next(op for op in opset if op.actions == "FWW")
        assert fww.terminal_rots == (0,)


def test_format_operations_lists_every_op():
    opset = enumerate_operations("rotation", 2)
    text = format_operations(opset)
    assert len(text.strip().splitlines()) == 6
    assert "FF" in text
