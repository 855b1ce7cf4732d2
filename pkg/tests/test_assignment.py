from itertools import product

import numpy as np
import pytest

from reactnav.assignment import (
    AssignmentResult,
    GridProblem,
    RoundingCollisionError,
    align_and_discretize,
    build_network,
    inverse_linear_index,
    linear_index,
    solve_assignment,
    solve_grid_problem,
    solve_mcmf,
    transition_instance,
    validate_conflict_free,
)

from oracles import grid_schedule_optimum


def make_problem(robots, targets, width, height, cell_size=1.0):
    return GridProblem(
        robots=np.asarray(robots, dtype=np.int64),
        targets=np.asarray(targets, dtype=np.int64),
        grid_width=width,
        grid_height=height,
        cell_size=cell_size,
        offset=np.zeros(2),
        target_shift_x=0.0,
    )


class TestLinearIndex:
    def test_examples(self):
        assert linear_index((2, 1), 4) == 6
        assert linear_index((0, 0), 17) == 0
        assert inverse_linear_index(6, 4) == (2, 1)

    def test_round_trip(self):
        for x, y in product(range(5), range(4)):
            assert inverse_linear_index(linear_index((x, y), 5), 5) == (x, y)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            linear_index((4, 0), 4)
        with pytest.raises(ValueError):
            linear_index((-1, 0), 4)


class TestAlignAndDiscretize:
    def test_targets_shifted_to_robot_min_x(self):
        prob = align_and_discretize([(0.0, 0.0), (0.0, 1.0)], [(5.0, 0.0), (5.0, 1.0)], 1.0)
        assert prob.target_shift_x == pytest.approx(-5.0)
        np.testing.assert_array_equal(prob.robots, prob.targets)

    def test_identical_cells_after_alignment(self):
        prob = align_and_discretize([(0, 0), (0, 1)], [(2, 0), (2, 1)], 1.0)
        np.testing.assert_array_equal(sorted(map(tuple, prob.robots)), sorted(map(tuple, prob.targets)))

    def test_rounding_collision(self):
        with pytest.raises(RoundingCollisionError) as err:
            align_and_discretize([(0.0, 0.0), (0.1, 0.0)], [(1.0, 0.0), (2.0, 0.0)], 1.0)
        assert err.value.kind == "robots"
        assert err.value.indices == (0, 1)

    def test_nonnegative_coordinates(self):
        prob = align_and_discretize([(-3.0, -2.0), (-3.0, 1.0)], [(4.0, -2.0), (4.0, 1.0)], 0.5)
        assert prob.robots.min() >= 0
        assert prob.targets.min() >= 0


class TestBuildNetwork:
    def test_zero_horizon_feasible_iff_sets_equal(self):
        prob = make_problem([(0, 0), (1, 0)], [(1, 0), (0, 0)], 2, 1)
        sol = solve_mcmf(build_network(prob, 0), 2)
        assert sol.feasible and sol.cost == 0
        prob2 = make_problem([(0, 0)], [(1, 0)], 2, 1)
        assert not solve_mcmf(build_network(prob2, 0), 1).feasible

    def test_arc_count_linear_in_horizon(self):
        prob = make_problem([(0, 0)], [(2, 1)], 3, 2)
        sizes = [build_network(prob, T).tail.size for T in (1, 2, 3, 4)]
        diffs = np.diff(sizes)
        assert len(set(diffs.tolist())) == 1

    def test_gadget_admits_single_crossing(self):
        # Exhaustive enumeration of integral flows on a one-edge network:
        # a unit may cross in either direction, but no feasible flow swaps
        # the two robots or parks them on the same vertex.
        prob = make_problem([(0, 0), (1, 0)], [(0, 0), (1, 0)], 2, 1)
        net = build_network(prob, 1)
        m = net.tail.size
        internal = [i for i in range(m) if net.cost[i] > 0]
        assert len(internal) == 1  # single costed arc per edge gadget per step

        def end_vertex(flow, start_vertex):
            succ = {int(net.tail[i]): int(net.head[i]) for i in range(m) if flow[i]}
            node = net.out_node(0, start_vertex)
            if node not in succ:
                return None
            nxt = succ[node]
            base = net.in_node(1, 0)
            while not base <= nxt < base + net.n_vertices:
                nxt = succ[nxt]
            return nxt - base

        end_pairs = []
        for bits in product([0, 1], repeat=m):
            flow = np.array(bits)
            balance = np.zeros(net.n_nodes, dtype=int)
            np.add.at(balance, net.tail, flow)
            np.add.at(balance, net.head, -flow)
            interior = np.ones(net.n_nodes, dtype=bool)
            interior[[net.source, net.sink]] = False
            if not np.all(balance[interior] == 0):
                continue
            ends = (end_vertex(flow, 0), end_vertex(flow, 1))
            end_pairs.append(ends)
        # A genuine crossing is reachable for either single robot.
        assert (1, None) in end_pairs
        assert (None, 0) in end_pairs
        # Two-robot flows never swap and never share a vertex.
        for a, b in end_pairs:
            if a is not None and b is not None:
                assert (a, b) != (1, 0)
                assert a != b


class TestSolveMcmf:
    def test_straight_paths_no_column_change(self):
        prob = make_problem([(0, 0), (0, 1)], [(2, 0), (2, 1)], 3, 2)
        sol = solve_mcmf(build_network(prob, 2), 2)
        assert sol.feasible
        assert sol.cost == 4

    def test_single_lateral_move_priced_dx_max(self):
        prob = make_problem([(0, 0)], [(0, 1)], 1, 2)
        sol = solve_mcmf(build_network(prob, 1, dx_max=3), 1)
        assert sol.feasible
        assert sol.cost == 3

    def test_infeasible_is_normal_return(self):
        prob = make_problem([(0, 0)], [(3, 0)], 4, 1)
        sol = solve_mcmf(build_network(prob, 2), 1)
        assert not sol.feasible


class TestSolveAssignment:
    def test_already_at_targets(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
        res = solve_assignment(pts, list(reversed(pts)), 1.0)
        assert res.makespan == 0
        assert res.total_cost == 0
        assert sorted(res.assignment) == [0, 1, 2]

    def test_four_robot_transition_matches_brute_force(self):
        robots, targets = transition_instance(4, from_columns=4, to_columns=2)
        res = solve_assignment(robots, targets, 1.0)
        prob = res.problem
        for horizon in range(res.makespan + 1):
            oracle = grid_schedule_optimum(
                [tuple(c) for c in prob.robots.tolist()],
                [tuple(c) for c in prob.targets.tolist()],
                prob.grid_width,
                prob.grid_height,
                prob.grid_width,
                horizon,
            )
            if horizon < res.makespan:
                assert oracle is None
            else:
                assert oracle == res.total_cost
        ok, violations = validate_conflict_free(res)
        assert ok, violations

    def test_randomized_against_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            width = int(rng.integers(2, 5))
            height = int(rng.integers(1, 4))
            n = int(rng.integers(1, min(4, width * height // 2) + 1))
            cells = rng.permutation(width * height)
            robots = [(int(c % width), int(c // width)) for c in cells[:n]]
            targets = [(int(c % width), int(c // width)) for c in cells[n : 2 * n]]
            prob = make_problem(robots, targets, width, height)
            res = solve_grid_problem(prob)
            ok, violations = validate_conflict_free(res)
            assert ok, violations
            oracle = grid_schedule_optimum(
                robots, targets, width, height, width, res.makespan
            )
            assert oracle == res.total_cost
            if res.makespan > 0:
                assert (
                    grid_schedule_optimum(
                        robots, targets, width, height, width, res.makespan - 1
                    )
                    is None
                )
                assert not solve_mcmf(build_network(prob, res.makespan - 1), n).feasible

    def test_translation_invariance(self):
        robots = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]
        targets = [(3.0, 1.0), (4.0, 0.0), (5.0, 1.0)]
        base = solve_assignment(robots, targets, 1.0)
        shift = np.array([7.0, 3.0])
        moved = solve_assignment(
            [tuple(np.add(r, shift)) for r in robots],
            [tuple(np.add(t, shift)) for t in targets],
            1.0,
        )
        assert base.assignment == moved.assignment
        assert base.total_cost == moved.total_cost
        assert base.makespan == moved.makespan

    def test_world_path_endpoints(self):
        robots = [(0.0, 0.0), (0.0, 1.0)]
        targets = [(3.0, 0.0), (3.0, 1.0)]
        res = solve_assignment(robots, targets, 1.0)
        for r in range(2):
            path = res.world_path(r)
            np.testing.assert_allclose(path[0], robots[r], atol=1e-9)
            np.testing.assert_allclose(path[-1], targets[res.assignment[r]], atol=1e-9)


class TestValidateConflictFree:
    def make_result(self, trajectories):
        prob = make_problem([t[0] for t in trajectories], [t[-1] for t in trajectories], 5, 5)
        return AssignmentResult(
            assignment=list(range(len(trajectories))),
            grid_trajectories=trajectories,
            makespan=len(trajectories[0]) - 1,
            total_cost=0,
            problem=prob,
        )

    def test_vertex_conflict_detected(self):
        res = self.make_result(
            [[(0, 0), (1, 0), (2, 0)], [(2, 1), (2, 1), (2, 0)]]
        )
        ok, violations = validate_conflict_free(res)
        assert not ok
        assert any(v["kind"] == "vertex" and v["step"] == 2 for v in violations)

    def test_edge_conflict_detected(self):
        res = self.make_result([[(0, 0), (1, 0)], [(1, 0), (0, 0)]])
        ok, violations = validate_conflict_free(res)
        assert not ok
        assert violations[0]["kind"] == "edge"
        assert violations[0]["step"] == 1

    def test_clean_trajectories_pass(self):
        res = self.make_result([[(0, 0), (1, 0)], [(0, 1), (1, 1)]])
        ok, violations = validate_conflict_free(res)
        assert ok and violations == []
