import math
import random

import pytest

from epibt.distance import (
    DistanceCache,
    EdgeWeights,
    WeightsParseError,
    build_distance_map,
    generate_lane_weights,
    h_after,
    parse_edge_weights,
)
from epibt.grid import AgentState, Orientation
from epibt.operations import enumerate_operations

from conftest import dist_oracle, open_grid, random_connected_grid, simulate_raw

N, E, S, W = (int(o) for o in Orientation)


class TestBuildDistanceMap:
    def test_zero_at_goal_any_orientation(self):
        grid = open_grid(4, 4)
        dmap = build_distance_map(grid, grid.cell_id(1, 2))
        assert [dmap.state_cost(dmap.goal, o) for o in range(4)] == [0, 0, 0, 0]

    def test_one_step_when_facing_goal(self):
        grid = open_grid(5, 5)
        dmap = build_distance_map(grid, grid.cell_id(2, 3))
        assert dmap.state_cost(grid.cell_id(2, 2), E) == 1

    def test_three_steps_when_facing_away(self):
        # Goal directly behind: turn around (2 rotations) plus one move.
        grid = open_grid(5, 5)
        dmap = build_distance_map(grid, grid.cell_id(3, 2))
        assert dmap.state_cost(grid.cell_id(2, 2), N) == 3

    def test_two_steps_when_goal_to_the_right(self):
        grid = open_grid(5, 5)
        dmap = build_distance_map(grid, grid.cell_id(2, 3))
        assert dmap.state_cost(grid.cell_id(2, 2), N) == 2

    def test_unreachable_is_infinite(self):
        from conftest import grid_from_rows

        grid = grid_from_rows(["..@..", "..@.."])  # two components
        goal = grid.cell_id(0, 0)
        dmap = build_distance_map(grid, goal)
        assert math.isinf(dmap.state_cost(grid.cell_id(0, 3), 0))
        assert math.isfinite(dmap.state_cost(grid.cell_id(1, 1), 2))

    def test_connected_grid_all_finite(self):
        grid = random_connected_grid(random.Random(1), 4, 4, 0.2)
        dmap = build_distance_map(grid, 0)
        assert all(math.isfinite(dmap.state_cost(c, o))
                   for c in range(grid.n_cells) for o in range(4))

    @pytest.mark.parametrize("model", ["rotation", "omnidirectional"])
    def test_matches_oracle_on_random_maps(self, model):
        for seed in range(30):
            rng = random.Random(seed)
            grid = random_connected_grid(rng, rng.randrange(3, 13), rng.randrange(3, 13), 0.3)
            goal = rng.randrange(grid.n_cells)
            if seed % 2:
                overrides = {}
                for c in range(grid.n_cells):
                    for d in range(4):
                        if grid.neighbor_table[c][d] >= 0 and rng.random() < 0.5:
                            overrides[(c, d)] = rng.choice([0.5, 1.0, 1.7, 3.0])
                weights = EdgeWeights(grid, overrides)
            else:
                weights = None
            dmap = build_distance_map(grid, goal, model, weights)
            oracle = dist_oracle(grid, goal, model, weights)
            if model == "rotation":
                got = dmap.cost
            else:
                got = [dmap.state_cost(c, 0) for c in range(grid.n_cells)]
            assert len(got) in (len(oracle), 4 * len(oracle))
            for s, expect in enumerate(oracle):
                mine = dmap.cost[s] if model == "rotation" else dmap.state_cost(s, 0)
                assert mine == pytest.approx(expect), (seed, s)

    def test_one_sided_triangle_bound_unit_weights(self):
        # cost(s) <= cost(next(s)) + 1 for every action edge. (The two-sided
        # version fails under rotations: stepping forward past the goal can
        # raise the cost by 3.)
        rng = random.Random(23)
        for _ in range(10):
            grid = random_connected_grid(rng, 6, 6, 0.25)
            goal = rng.randrange(grid.n_cells)
            dmap = build_distance_map(grid, goal)
            for c in range(grid.n_cells):
                for o in range(4):
                    here = dmap.state_cost(c, o)
                    succs = [(c, (o + 1) & 3), (c, (o - 1) & 3)]
                    nb = grid.neighbor_table[c][o]
                    if nb >= 0:
                        succs.append((nb, o))
                    for sc, so in succs:
                        assert here <= dmap.state_cost(sc, so) + 1


class TestHAfter:
    def test_all_wait_reaches_best_orientation(self):
        grid = open_grid(5, 5)
        opset = enumerate_operations("rotation", 3)
        www = opset.operations[opset.all_wait_index]
        dmap = build_distance_map(grid, grid.cell_id(2, 3))
        s = AgentState(grid.cell_id(2, 2), E)
        # Facing the goal already: folded rotations cannot beat dist(s).
        assert h_after(s, www, dmap, grid) == dmap.state_cost(s.cell, E) == 1

    def test_ffw_landing_on_goal(self):
        grid = open_grid(5, 5)
        opset = enumerate_operations("rotation", 3)
        ffw = next(op for op in opset if op.actions == "FFW")
        dmap = build_distance_map(grid, grid.cell_id(2, 4))
        s = AgentState(grid.cell_id(2, 2), E)
        assert h_after(s, ffw, dmap, grid) == 0

    def test_out_of_bounds_operation_raises(self):
        grid = open_grid(3, 3)
        opset = enumerate_operations("rotation", 3)
        fff = next(op for op in opset if op.actions == "FFF")
        dmap = build_distance_map(grid, 0)
        with pytest.raises(ValueError):
            h_after(AgentState(grid.cell_id(1, 1), E), fff, dmap, grid)

    @pytest.mark.parametrize("op_len", [1, 2, 3, 4])
    def test_merged_h_equals_min_over_raw_strings(self, op_len):
        from itertools import product as iproduct

        rng = random.Random(31)
        grid = random_connected_grid(rng, 9, 9, 0.2)
        opset = enumerate_operations("rotation", op_len)
        for _ in range(6):
            goal = rng.randrange(grid.n_cells)
            dmap = build_distance_map(grid, goal)
            cell = rng.randrange(grid.n_cells)
            orient = rng.randrange(4)
            row, col = grid.coord(cell)
            # Best final-state cost per trace, from plain string simulation.
            best: dict[tuple, float] = {}
            for combo in iproduct("FRCW", repeat=op_len):
                res = simulate_raw("".join(combo), row, col, "NESW"[orient], grid)
                if res is None:
                    continue
                trace, final = res
                end = trace[-1]
                v = dmap.state_cost(grid.cell_id(*end), "NESW".index(final))
                key = tuple(trace)
                if key not in best or v < best[key]:
                    best[key] = v
            s = AgentState(cell, orient)
            for op in opset:
                sig = tuple((row + di, col + dj) for di, dj in op.offsets[orient])
                if sig not in best:
                    continue
                assert h_after(s, op, dmap, grid) == pytest.approx(best[sig])

    def test_lower_bound_and_omni_upper_bound(self):
        rng = random.Random(47)
        for model in ("rotation", "omnidirectional"):
            grid = random_connected_grid(rng, 8, 8, 0.2)
            opset = enumerate_operations(model, 3)
            goal = rng.randrange(grid.n_cells)
            dmap = build_distance_map(grid, goal, model)
            for _ in range(120):
                s = AgentState(rng.randrange(grid.n_cells), rng.randrange(4))
                op = opset.operations[rng.randrange(len(opset))]
                cell = s.cell
                ok = True
                for d in op.moves[s.orientation]:
                    if d >= 0:
                        cell = grid.neighbor_table[cell][d]
                        if cell < 0:
                            ok = False
                            break
                if not ok:
                    continue
                h = h_after(s, op, dmap, grid)
                floor = min(dmap.state_cost(cell, o) for o in range(4))
                assert h >= floor
                if model == "omnidirectional":
                    assert h <= dmap.state_cost(s.cell, s.orientation) + opset.op_len


class TestLaneWeights:
    def test_gamma_one_is_identity(self):
        grid = open_grid(4, 4)
        weights = generate_lane_weights(grid, 1.0)
        assert weights.is_unit

    def test_row0_example(self):
        grid = open_grid(4, 4)
        weights = generate_lane_weights(grid, 2.0)
        cell = grid.cell_id(0, 1)
        assert weights.weight(cell, E) == 1.0
        assert weights.weight(cell, W) == 2.0

    def test_all_positive_any_map(self):
        grid = random_connected_grid(random.Random(3), 7, 7, 0.3)
        weights = generate_lane_weights(grid)
        for c in range(grid.n_cells):
            for d in range(4):
                assert weights.weight(c, d) > 0

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            generate_lane_weights(open_grid(2, 2), 0.0)


class TestEdgeWeightsFile:
    def test_parse(self):
        grid = open_grid(3, 3)
        w = parse_edge_weights("(0,0) E 1.5\n(1,1) N 2\n# comment\n", grid)
        assert w.weight(grid.cell_id(0, 0), E) == 1.5
        assert w.weight(grid.cell_id(1, 1), N) == 2.0
        assert w.weight(grid.cell_id(0, 0), S) == 1.0

    def test_bad_direction(self):
        with pytest.raises(WeightsParseError, match="direction"):
            parse_edge_weights("(0,0) X 1.5\n", open_grid(3, 3))

    def test_nonexistent_edge(self):
        with pytest.raises(WeightsParseError, match="no edge"):
            parse_edge_weights("(0,0) N 1.5\n", open_grid(3, 3))

    def test_blocked_cell(self):
        grid = open_grid(3, 3)
        with pytest.raises(WeightsParseError, match="blocked"):
            parse_edge_weights("(9,9) N 1.5\n", grid)

    def test_nonpositive_weight(self):
        with pytest.raises(WeightsParseError, match="positive"):
            parse_edge_weights("(0,0) E 0\n", open_grid(3, 3))

    def test_weights_bias_distances_not_legality(self):
        grid = open_grid(1, 4)
        heavy = EdgeWeights(grid, {(grid.cell_id(0, 1), E): 9.0})
        plain = build_distance_map(grid, grid.cell_id(0, 3), "omnidirectional")
        biased = build_distance_map(grid, grid.cell_id(0, 3), "omnidirectional", heavy)
        assert biased.state_cost(grid.cell_id(0, 1), 0) > plain.state_cost(grid.cell_id(0, 1), 0)


class TestDistanceCache:
    def test_hit_returns_identical_object(self):
        grid = open_grid(4, 4)
        cache = DistanceCache(grid, "rotation", capacity=4)
        first = cache.get(3)
        assert cache.get(3) is first
        assert cache.builds == 1

    def test_lru_eviction_keeps_recent(self):
        grid = open_grid(4, 4)
        cache = DistanceCache(grid, "rotation", capacity=2)
        a = cache.get(0)
        cache.get(1)
        cache.get(0)  # refresh 0
        cache.get(2)  # evicts 1
        assert cache.get(0) is a
        assert cache.builds == 3
        cache.get(1)  # rebuilt
        assert cache.builds == 4

    def test_capacity_validation(self):
        with pytest.raises(ValueError):
            DistanceCache(open_grid(2, 2), "rotation", capacity=0)
