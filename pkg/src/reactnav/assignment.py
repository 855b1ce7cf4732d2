"""Conflict-free robot-to-target assignment on a time-expanded flow network.

Robot and target positions are aligned longitudinally, snapped to a grid,
and the anonymous assignment problem is solved as a min-cost max-flow over
a time-expanded copy of the 4-neighbor grid graph. Unit capacities make the
resulting grid schedules conflict-free by construction; lateral (column
changing) moves are priced far above longitudinal ones so transitions keep
robots in their lanes whenever possible. The horizon is grown from the
smallest candidate makespan until a full flow exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._flow import min_cost_flow
from .formation import positions_array


class RoundingCollisionError(ValueError):
    """Two robots or two targets land on the same grid cell."""

    def __init__(self, kind: str, index_a: int, index_b: int, cell: tuple[int, int]):
        super().__init__(f"{kind} {index_a} and {index_b} both round to cell {cell}")
        self.kind = kind
        self.indices = (index_a, index_b)
        self.cell = cell


class AssignmentInfeasibleError(RuntimeError):
    """Horizon bound exhausted without a feasible flow (internal consistency error)."""


def linear_index(cell, grid_width: int) -> int:
    """index = x + y * grid_width; the inverse of inverse_linear_index."""
    x, y = int(cell[0]), int(cell[1])
    if not 0 <= x < grid_width:
        raise ValueError(f"x={x} outside [0, {grid_width})")
    return x + y * grid_width

def inverse_linear_index(index: int, grid_width: int) -> tuple[int, int]:
    return index % grid_width, index // grid_width


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5).astype(np.int64)


@dataclass(frozen=True)
class GridProblem:
    """Aligned, discretized assignment instance plus decode metadata."""

    robots: np.ndarray
    targets: np.ndarray
    grid_width: int
    grid_height: int
    cell_size: float
    offset: np.ndarray  # grid offset applied after rounding (cells)
    target_shift_x: float  # longitudinal shift applied to targets before rounding (meters)

    @property
    def n(self) -> int:
        return self.robots.shape[0]

    def cell_to_world(self, cell) -> np.ndarray:
        return (np.asarray(cell, dtype=float) + self.offset) * self.cell_size


def align_and_discretize(robot_positions, target_positions, cell_size: float) -> GridProblem:
    """Longitudinally align targets with robots and snap both to grid cells.

    Translation along x preserves the optimal assignment, so the target set
    is shifted so both sets share the same minimum x before rounding; both
    are then shifted to nonnegative integer coordinates.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    robots = positions_array(robot_positions)
    targets = positions_array(target_positions)
    if robots.shape[0] != targets.shape[0]:
        raise ValueError(f"{robots.shape[0]} robots vs {targets.shape[0]} targets")
    if robots.shape[0] < 1:
        raise ValueError("need at least one robot")
    shift_x = float(robots[:, 0].min() - targets[:, 0].min())
    shifted_targets = targets + np.array([shift_x, 0.0])
    robot_cells = _round_half_up(robots / cell_size)
    target_cells = _round_half_up(shifted_targets / cell_size)
    offset = np.minimum(robot_cells.min(axis=0), target_cells.min(axis=0))
    robot_cells = robot_cells - offset
    target_cells = target_cells - offset
    for kind, cells in (("robots", robot_cells), ("targets", target_cells)):
        seen: dict[tuple[int, int], int] = {}
        for i, cell in enumerate(map(tuple, cells.tolist())):
            if cell in seen:
                raise RoundingCollisionError(kind, seen[cell], i, cell)
            seen[cell] = i
    width = int(max(robot_cells[:, 0].max(), target_cells[:, 0].max())) + 1
    height = int(max(robot_cells[:, 1].max(), target_cells[:, 1].max())) + 1
    return GridProblem(
        robots=robot_cells,
        targets=target_cells,
        grid_width=width,
        grid_height=height,
        cell_size=float(cell_size),
        offset=offset.astype(float),
        target_shift_x=shift_x,
    )


@dataclass(frozen=True)
class TimeExpandedNetwork:
    """T-step time-expanded network over the 4-neighbor grid graph.

    Vertices are duplicated into layers {0 out} + {t in, t out} for t=1..T.
    Each grid edge contributes, per step, a merge-split gadget whose single
    internal unit arc carries the move cost and admits at most one crossing
    in either direction (no edge conflicts); each vertex contributes a unit
    in->out arc through which both movers and waiters must pass (no vertex
    conflicts).
    """

    horizon: int
    grid_width: int
    grid_height: int
    n_nodes: int
    tail: np.ndarray
    head: np.ndarray
    cap: np.ndarray
    cost: np.ndarray
    robot_cells: np.ndarray
    target_cells: np.ndarray
    dx_max: int

    source: int = 0
    sink: int = 1

    @property
    def n_vertices(self) -> int:
        return self.grid_width * self.grid_height

    def out_node(self, t: int, vertex: int) -> int:
        if t == 0:
            return 2 + vertex
        return self._block(t) + self.n_vertices + vertex

    def in_node(self, t: int, vertex: int) -> int:
        return self._block(t) + vertex

    def _block(self, t: int) -> int:
        V = self.n_vertices
        E = self._n_edges()
        return 2 + V + (t - 1) * (2 * V + 2 * E)

    def _n_edges(self) -> int:
        W, H = self.grid_width, self.grid_height
        return (W - 1) * H + W * (H - 1)


def _grid_edges(width: int, height: int, dx_max: int):
    """(tails, heads, costs) of the 4-neighbor grid edges in deterministic order."""
    v = np.arange(width * height, dtype=np.int64)
    x = v % width
    y = v // width
    right = x < width - 1
    up = y < height - 1
    tails = np.concatenate([v[right], v[up]])
    heads = np.concatenate([v[right] + 1, v[up] + width])
    costs = np.concatenate(
        [np.ones(int(right.sum()), np.int64), np.full(int(up.sum()), dx_max, np.int64)]
    )
    order = np.argsort(tails, kind="stable")
    return tails[order], heads[order], costs[order]


def build_network(problem: GridProblem, horizon: int, dx_max: int | None = None) -> TimeExpandedNetwork:
    """Construct the unit-capacity time-expanded network for the given horizon."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if dx_max is None:
        dx_max = problem.grid_width
    W, H = problem.grid_width, problem.grid_height
    V = W * H
    eu, ev, ecost = _grid_edges(W, H, dx_max)
    E = eu.size
    robot_idx = problem.robots[:, 0] + problem.robots[:, 1] * W
    target_idx = problem.targets[:, 0] + problem.targets[:, 1] * W

    def out_id(t, v):
        return 2 + v if t == 0 else 2 + V + (t - 1) * (2 * V + 2 * E) + V + v

    def in_id(t, v):
        return 2 + V + (t - 1) * (2 * V + 2 * E) + v

    def aux_id(t, e, second):
        return 2 + V + (t - 1) * (2 * V + 2 * E) + 2 * V + (E if second else 0) + e

    all_v = np.arange(V, dtype=np.int64)
    all_e = np.arange(E, dtype=np.int64)
    zeros_v = np.zeros(V, np.int64)
    ones_v = np.ones(V, np.int64)
    tails = [np.full(robot_idx.size, 0, np.int64)]
    heads = [out_id(0, robot_idx)]
    caps = [np.ones(robot_idx.size, np.int64)]
    costs = [np.zeros(robot_idx.size, np.int64)]
    for t in range(1, horizon + 1):
        # wait arcs, then the per-vertex occupancy arcs, then the edge gadgets
        tails.append(out_id(t - 1, all_v))
        heads.append(in_id(t, all_v))
        caps.append(ones_v)
        costs.append(zeros_v)
        tails.append(in_id(t, all_v))
        heads.append(out_id(t, all_v))
        caps.append(ones_v)
        costs.append(zeros_v)
        a1 = aux_id(t, all_e, False)
        a2 = aux_id(t, all_e, True)
        gadget_tails = np.stack(
            [out_id(t - 1, eu), out_id(t - 1, ev), a1, a2, a2], axis=1
        ).reshape(-1)
        gadget_heads = np.stack([a1, a1, a2, in_id(t, eu), in_id(t, ev)], axis=1).reshape(-1)
        gadget_costs = np.stack(
            [np.zeros(E, np.int64), np.zeros(E, np.int64), ecost, np.zeros(E, np.int64), np.zeros(E, np.int64)],
            axis=1,
        ).reshape(-1)
        tails.append(gadget_tails)
        heads.append(gadget_heads)
        caps.append(np.ones(5 * E, np.int64))
        costs.append(gadget_costs)
    tails.append(out_id(horizon, target_idx))
    heads.append(np.full(target_idx.size, 1, np.int64))
    caps.append(np.ones(target_idx.size, np.int64))
    costs.append(np.zeros(target_idx.size, np.int64))

    n_nodes = 2 + V + horizon * (2 * V + 2 * E)
    return TimeExpandedNetwork(
        horizon=horizon,
        grid_width=W,
        grid_height=H,
        n_nodes=n_nodes,
        tail=np.concatenate(tails),
        head=np.concatenate(heads),
        cap=np.concatenate(caps),
        cost=np.concatenate(costs),
        robot_cells=problem.robots.copy(),
        target_cells=problem.targets.copy(),
        dx_max=int(dx_max),
    )


@dataclass(frozen=True)
class FlowSolution:
    feasible: bool
    flow: int
    cost: int
    flows: np.ndarray


def solve_mcmf(network: TimeExpandedNetwork, required_flow: int) -> FlowSolution:
    """Exact min-cost flow of the required value, or an infeasible marker."""
    flow, cost, flows = min_cost_flow(
        network.n_nodes,
        network.tail,
        network.head,
        network.cap,
        network.cost,
        network.source,
        network.sink,
        required_flow,
    )
    return FlowSolution(feasible=flow >= required_flow, flow=flow, cost=cost, flows=flows)


@dataclass(frozen=True)
class AssignmentResult:
    """Optimal assignment plus per-robot conflict-free grid trajectories."""

    assignment: list[int]
    grid_trajectories: list[list[tuple[int, int]]]
    makespan: int
    total_cost: int
    problem: GridProblem = field(repr=False)

    def world_path(self, robot: int) -> np.ndarray:
        """Grid trajectory decoded to world coordinates.

        The longitudinal alignment shift applied to the targets is blended
        back in along the path, so step 0 sits at the (rounded) robot
        position and the final step at the true target position. The blend
        is a common time-varying translation of all paths, which preserves
        their conflict-free geometry.
        """
        cells = np.asarray(self.grid_trajectories[robot], dtype=float)
        world = (cells + self.problem.offset) * self.problem.cell_size
        steps = cells.shape[0] - 1
        if steps > 0:
            frac = np.arange(steps + 1) / steps
            world[:, 0] -= frac * self.problem.target_shift_x
        elif abs(self.problem.target_shift_x) > 1e-12:
            # Aligned start and target coincide: the whole move is the
            # longitudinal alignment shift.
            end = world[0] - np.array([self.problem.target_shift_x, 0.0])
            world = np.vstack([world, end[None, :]])
        return world


def _decode(network: TimeExpandedNetwork, flows: np.ndarray, problem: GridProblem):
    """Follow unit flows through the layers to per-robot cell sequences."""
    W = network.grid_width
    flow_out: dict[int, list[int]] = {}
    for arc in np.flatnonzero(flows > 0):
        flow_out.setdefault(int(network.tail[arc]), []).append(int(network.head[arc]))

    trajectories = []
    target_lookup = {
        (int(c[0]), int(c[1])): i for i, c in enumerate(problem.targets)
    }
    assignment = []
    for cell in problem.robots:
        vertex = linear_index(cell, W)
        cells = [inverse_linear_index(vertex, W)]
        node = network.out_node(0, vertex)
        for t in range(1, network.horizon + 1):
            nxt = flow_out[node][0]
            while nxt < network.in_node(t, 0) or nxt >= network.in_node(t, 0) + network.n_vertices:
                nxt = flow_out[nxt][0]  # traverse gadget aux nodes
            vertex = nxt - network.in_node(t, 0)
            cells.append(inverse_linear_index(vertex, W))
            node = network.out_node(t, vertex)
        trajectories.append(cells)
        assignment.append(target_lookup[cells[-1]])
    return assignment, trajectories


def _pairwise_manhattan(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)


def solve_grid_problem(
    problem: GridProblem, t_min: int = 0, dx_max: int | None = None
) -> AssignmentResult:
    """Minimum-makespan, minimum-cost solve of a discretized instance.

    Iterates the horizon upward from t_min, solving the time-expanded
    network at each candidate, and returns the decoded result at the first
    feasible horizon. Horizons below the largest nearest-neighbor grid
    distance are provably infeasible and skipped without a solve. The
    iteration is bounded by N + l - 1 with l the maximum pairwise grid
    distance.
    """
    n = problem.n
    dists = _pairwise_manhattan(problem.robots, problem.targets)
    l_max = int(dists.max())
    lower_bound = max(int(dists.min(axis=0).max()), int(dists.min(axis=1).max()))
    t_max = n + l_max - 1
    for horizon in range(max(t_min, lower_bound), max(t_max, lower_bound) + 1):
        network = build_network(problem, horizon, dx_max)
        sol = solve_mcmf(network, n)
        if sol.feasible:
            assignment, trajectories = _decode(network, sol.flows, problem)
            return AssignmentResult(
                assignment=assignment,
                grid_trajectories=trajectories,
                makespan=horizon,
                total_cost=sol.cost,
                problem=problem,
            )
    raise AssignmentInfeasibleError(
        f"no feasible schedule up to horizon {t_max} for {n} robots"
    )


def solve_assignment(
    robots,
    targets,
    cell_size: float,
    t_min: int = 0,
    dx_max: int | None = None,
) -> AssignmentResult:
    """Align, discretize and solve; see solve_grid_problem."""
    problem = align_and_discretize(robots, targets, cell_size)
    return solve_grid_problem(problem, t_min, dx_max)


def validate_conflict_free(result: AssignmentResult):
    """Check vertex conflicts (shared cell per step) and edge conflicts (swaps).

    Returns (ok, violations); each violation is a dict with kind, step and
    the two robot indices involved.
    """
    violations = []
    trajs = result.grid_trajectories
    n = len(trajs)
    steps = max(len(t) for t in trajs) if trajs else 0
    for step in range(steps):
        seen: dict[tuple[int, int], int] = {}
        for r in range(n):
            cell = trajs[r][step]
            if cell in seen:
                violations.append(
                    {"kind": "vertex", "step": step, "robots": (seen[cell], r), "cell": cell}
                )
            else:
                seen[cell] = r
    for step in range(steps - 1):
        for r1 in range(n):
            for r2 in range(r1 + 1, n):
                if (
                    trajs[r1][step] == trajs[r2][step + 1]
                    and trajs[r2][step] == trajs[r1][step + 1]
                    and trajs[r1][step] != trajs[r1][step + 1]
                ):
                    violations.append(
                        {"kind": "edge", "step": step + 1, "robots": (r1, r2)}
                    )
    return len(violations) == 0, violations


def transition_instance(n_robots: int, from_columns: int = 4, to_columns: int = 2):
    """Start/target position sets of a column-count transition scenario.

    Robots stand in `from_columns` interlaced columns and must reform into
    `to_columns` columns; spacing is one unit in both axes so a unit grid
    cell discretizes the instance exactly.
    """
    from .formation import StructureConfig, generate_structure

    cfg = StructureConfig(lane_width=1.0, column_spacing=1.0, row_spacing=1.0)
    start = generate_structure(n_robots, from_columns + 0.5, cfg)
    goal = generate_structure(n_robots, to_columns + 0.5, cfg)
    return start.relative_positions, goal.relative_positions
