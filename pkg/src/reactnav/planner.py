"""Joint spatio-temporal trajectory optimization for distributed formation keeping.

Each robot minimizes a weighted sum of six penalties over the waypoint and
duration parameters of its own trajectory: inter-robot clearance, obstacle
clearance, dynamical feasibility, formation error, control effort (jerk),
and total travel time. Clearance and feasibility penalties are cubed hinge
terms accumulated with trapezoidal weights over constraint points sampled
uniformly within each piece; neighbors and dynamic obstacles are queried at
the global timestamp of each sample, so duration changes shift those
queries and the gradients account for it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .formation import FormationSpec, batch_error_and_grads, positions_array
from .trajectory import (
    BoundaryState,
    PiecewiseQuintic,
    WaypointParam,
    backpropagate,
    basis_many,
    construct,
    jerk_cost,
)

log = logging.getLogger(__name__)

EPS_SPEED = 1e-3  # below this speed the curvature penalty is switched off

TERM_NAMES = ("inter", "obs", "dyn", "form", "ctrl", "time")


@dataclass(frozen=True)
class LBFGSConfig:
    memory: int = 8
    max_iterations: int = 60
    grad_tolerance: float = 1e-4
    relative_cost_tolerance: float = 1e-9


@dataclass(frozen=True)
class PlannerConfig:
    """Weights, thresholds and limits of the joint trajectory optimization."""

    weights: tuple = (1e4, 1e4, 1e2, 1e2, 1e0, 1e1)  # inter, obs, dyn, form, ctrl, time
    d_thr_obs: float = 0.55
    d_thr_wmr: float = 0.75
    b: float = 0.5
    a: float = 1.0
    v_max: float = 1.0
    a_max: float = 2.0
    delta_max: float = 0.7
    wheelbase: float = 0.144
    samples_per_piece: int = 6
    pieces: int = 3
    replan_hz: float = 20.0
    lbfgs: LBFGSConfig = field(default_factory=LBFGSConfig)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (6,) or np.any(w < 0):
            raise ValueError("need 6 nonnegative weights [inter, obs, dyn, form, ctrl, time]")
        if not 0 < self.b < 1:
            raise ValueError("lateral inter-robot weight b must lie in (0, 1)")
        if self.a <= 0:
            raise ValueError("formation weight a must be positive")
        if min(self.v_max, self.a_max, self.wheelbase) <= 0:
            raise ValueError("v_max, a_max and wheelbase must be positive")
        if not 0 < self.delta_max < math.pi / 2:
            raise ValueError("delta_max must lie in (0, pi/2)")
        if self.samples_per_piece < 2:
            raise ValueError("need at least 2 samples per piece")
        others = np.concatenate([w[2:]])
        if w[0] > 0 and w[1] > 0 and others.max() > 0:
            if min(w[0], w[1]) < 10.0 * others.max():
                raise ValueError("collision weights must be >= 10x every other weight")

    @property
    def kappa_max(self) -> float:
        return math.tan(self.delta_max) / self.wheelbase

    @property
    def v_ref(self) -> float:
        return 0.7 * self.v_max


@dataclass(frozen=True)
class ObstacleModel:
    """Static or scripted dynamic obstacle; beyond its horizon the position clamps."""

    kind: str
    radius: float
    times: np.ndarray
    points: np.ndarray

    @classmethod
    def static(cls, center, radius: float) -> "ObstacleModel":
        center = np.asarray(center, dtype=float).reshape(1, 2)
        return cls(kind="static", radius=float(radius), times=np.zeros(1), points=center)

    @classmethod
    def dynamic(cls, times, points, radius: float) -> "ObstacleModel":
        times = np.asarray(times, dtype=float).reshape(-1)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if times.size != points.shape[0] or times.size < 1:
            raise ValueError("dynamic obstacle needs matching times and points")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("dynamic obstacle times must be strictly increasing")
        return cls(kind="dynamic", radius=float(radius), times=times, points=points)

    def position_at(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if self.points.shape[0] == 1:
            return np.broadcast_to(self.points[0], tau.shape + (2,)).copy()
        x = np.interp(tau, self.times, self.points[:, 0])
        y = np.interp(tau, self.times, self.points[:, 1])
        return np.stack([x, y], axis=-1)

    def velocity_at(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape + (2,))
        if self.points.shape[0] == 1:
            return out
        seg = np.clip(np.searchsorted(self.times, tau, side="right") - 1, 0, self.times.size - 2)
        dt = self.times[seg + 1] - self.times[seg]
        slope = (self.points[seg + 1] - self.points[seg]) / dt[..., None]
        inside = (tau >= self.times[0]) & (tau < self.times[-1])
        out[inside] = slope[inside]
        return out


@dataclass(frozen=True)
class NeighborPlan:
    """Latest broadcast trajectory of another robot plus its global start time."""

    robot: int
    traj: PiecewiseQuintic
    start_time: float

    def position_at(self, tau) -> np.ndarray:
        return self.traj.sample(np.asarray(tau) - self.start_time, 0, clamp=True)

    def velocity_at(self, tau) -> np.ndarray:
        return self.traj.sample(np.asarray(tau) - self.start_time, 1, clamp=True)


@dataclass(frozen=True)
class PlanningScene:
    """Immutable world snapshot one robot plans against."""

    static_obstacles: tuple = ()
    dynamic_obstacles: tuple = ()
    neighbors: tuple = ()
    desired_adjacency: np.ndarray | None = None  # (N, N), robot-index order
    ego_index: int = 0
    ego_start_time: float = 0.0

    @classmethod
    def from_formation(
        cls, spec: FormationSpec, slot_of_robot, ego_index: int, **kwargs
    ) -> "PlanningScene":
        """Desired adjacency in robot-index order given a robot->slot map."""
        slots = spec.relative_positions[np.asarray(slot_of_robot, dtype=int)]
        from .formation import pairwise_weights

        adj = pairwise_weights(slots, spec.params.a)
        np.fill_diagonal(adj, 0.0)
        return cls(desired_adjacency=adj, ego_index=ego_index, **kwargs)


@dataclass(frozen=True)
class CostReport:
    """Cost breakdown, pulled-back gradients and per-sample diagnostics."""

    total: float
    terms: np.ndarray  # raw values [P_inter, P_obs, P_dyn, P_form, P_ctrl, P_time]
    grad_q: np.ndarray
    grad_T: np.ndarray
    worst_obstacle_clearance: float = math.inf
    worst_inter_clearance: float = math.inf
    max_curvature: float = 0.0
    max_speed: float = 0.0
    warnings: tuple = ()


def sample_times(T, samples_per_piece: int):
    """Relative and global constraint-point times t_j = j T_i / K.

    Returns (t_local (M, K+1), tau (M, K+1), weights (K+1,)) where tau is
    the prefix-sum global timestamp and weights are the trapezoidal ones.
    """
    T = np.asarray(T, dtype=float).reshape(-1)
    K = int(samples_per_piece)
    if K < 2:
        raise ValueError("samples_per_piece must be >= 2")
    j = np.arange(K + 1)
    t_local = T[:, None] * (j[None, :] / K)
    starts = np.cumsum(T) - T
    tau = starts[:, None] + t_local
    weights = np.ones(K + 1)
    weights[0] = weights[-1] = 0.5
    return t_local, tau, weights


def penalty_obs(p, p_obs, d_thr: float) -> float:
    """Pointwise hinge: max(d_thr^2 - ||p - p_obs||^2, 0)."""
    d = np.asarray(p, dtype=float) - np.asarray(p_obs, dtype=float)
    return float(max(d_thr**2 - float(d @ d), 0.0))


def penalty_inter(p, p_l, d_thr: float, b: float) -> float:
    """Laterally weighted hinge: max(d_thr^2 - ||E (p - p_l)||^2, 0), E = diag(1, b)."""
    d = np.asarray(p, dtype=float) - np.asarray(p_l, dtype=float)
    return float(max(d_thr**2 - (d[0] ** 2 + (b * d[1]) ** 2), 0.0))


def penalty_dyn(vel, acc, config: PlannerConfig) -> tuple[float, float, float]:
    """Speed, acceleration and curvature hinge penalties at one sample."""
    vel = np.asarray(vel, dtype=float)
    acc = np.asarray(acc, dtype=float)
    g_v = max(float(vel @ vel) - config.v_max**2, 0.0)
    g_a = max(float(acc @ acc) - config.a_max**2, 0.0)
    speed = float(np.hypot(vel[0], vel[1]))
    if speed < EPS_SPEED:
        g_delta = 0.0
    else:
        kappa = float(vel[0] * acc[1] - vel[1] * acc[0]) / speed**3
        g_delta = max(kappa**2 - config.kappa_max**2, 0.0)
    return g_v, g_a, g_delta


def penalty_form(ego_p, neighbor_ps, desired: FormationSpec, ego_index: int = 0) -> float:
    """Instantaneous formation error with the ego inserted among the neighbors."""
    neighbor_ps = positions_array(neighbor_ps) if len(neighbor_ps) else np.zeros((0, 2))
    pts = np.insert(neighbor_ps, ego_index, np.asarray(ego_p, dtype=float), axis=0)
    errors, _ = batch_error_and_grads(
        pts[None], desired.desired_laplacian.adjacency, desired.params.a
    )
    return float(errors[0])


class _SampledTerms:
    """Shared sample data and gradient accumulation for the sampled penalties."""

    def __init__(self, traj: PiecewiseQuintic, config: PlannerConfig):
        self.traj = traj
        self.config = config
        self.K = config.samples_per_piece
        self.t_local, self.tau, self.w = sample_times(traj.durations, self.K)
        M = traj.pieces
        self.B = [
            basis_many(self.t_local.reshape(-1), order).reshape(M, self.K + 1, 6)
            for order in range(4)
        ]
        self.pos, self.vel, self.acc, self.jerk = (
            np.einsum("mkc,mcd->mkd", self.B[o], traj.coeffs) for o in range(4)
        )
        self.j_frac = np.arange(self.K + 1) / self.K
        self.duration_weight = traj.durations[:, None] / self.K * self.w[None, :]
        self.grad_c = np.zeros_like(traj.coeffs)
        self.grad_T = np.zeros(M)

    def add(self, weight, G, dGdpos=None, dGdvel=None, dGdacc=None, dGdtau=None) -> float:
        """Accumulate one sampled term; returns its raw (unweighted) value."""
        value = float((self.duration_weight * G).sum())
        if weight == 0.0 or not G.any():
            # Hinge terms have identically zero gradients wherever they vanish.
            return value
        C = weight * self.duration_weight
        dGdt = np.zeros_like(G)
        if dGdpos is not None:
            self.grad_c += np.einsum("mkc,mkd->mcd", self.B[0], C[..., None] * dGdpos)
            dGdt += (dGdpos * self.vel).sum(-1)
        if dGdvel is not None:
            self.grad_c += np.einsum("mkc,mkd->mcd", self.B[1], C[..., None] * dGdvel)
            dGdt += (dGdvel * self.acc).sum(-1)
        if dGdacc is not None:
            self.grad_c += np.einsum("mkc,mkd->mcd", self.B[2], C[..., None] * dGdacc)
            dGdt += (dGdacc * self.jerk).sum(-1)
        # d/dT_i of the T_i/K prefactor plus the sample-time chain t_j = j T_i / K.
        self.grad_T += weight / self.K * (self.w[None, :] * G).sum(1)
        own = C * dGdt * self.j_frac[None, :]
        if dGdtau is not None:
            own = own + C * dGdtau * self.j_frac[None, :]
            # tau_j also depends on every earlier duration with coefficient 1.
            per_piece = (C * dGdtau).sum(1)
            suffix = np.cumsum(per_piece[::-1])[::-1]
            self.grad_T += np.concatenate([suffix[1:], [0.0]])
        self.grad_T += own.sum(1)
        return value


def total_cost(traj: PiecewiseQuintic, scene: PlanningScene, config: PlannerConfig) -> CostReport:
    """Weighted six-term cost with gradients pulled back to (q, T)."""
    weights = np.asarray(config.weights, dtype=float)
    st = _SampledTerms(traj, config)
    terms = np.zeros(6)
    worst_obs = math.inf
    worst_inter = math.inf

    tau_abs = scene.ego_start_time + st.tau

    # Neighbor samples are shared by the inter-robot and formation terms.
    neighbor_pos = [n.position_at(tau_abs) for n in scene.neighbors]
    neighbor_vel = [n.velocity_at(tau_abs) for n in scene.neighbors]

    if scene.neighbors:
        b2 = config.b**2
        G = np.zeros_like(st.t_local)
        dGdpos = np.zeros_like(st.pos)
        dGdtau = np.zeros_like(st.t_local)
        thr2 = config.d_thr_wmr**2
        for p_l, v_l in zip(neighbor_pos, neighbor_vel):
            u = st.pos - p_l
            metric = u[..., 0] ** 2 + b2 * u[..., 1] ** 2
            g = np.maximum(thr2 - metric, 0.0)
            worst_inter = min(worst_inter, float(np.min(np.linalg.norm(u, axis=-1))))
            active = g > 0.0
            if not active.any():
                continue
            g2 = 3.0 * g**2
            G += g**3
            eu = np.stack([u[..., 0], b2 * u[..., 1]], axis=-1)
            dGdpos += (-2.0 * g2)[..., None] * eu
            dGdtau += g2 * 2.0 * (eu * v_l).sum(-1)
        terms[0] = st.add(weights[0], G, dGdpos=dGdpos, dGdtau=dGdtau)

    if scene.static_obstacles or scene.dynamic_obstacles:
        G = np.zeros_like(st.t_local)
        dGdpos = np.zeros_like(st.pos)
        dGdtau = np.zeros_like(st.t_local)
        if scene.static_obstacles:
            centers = np.array([o.points[0] for o in scene.static_obstacles])
            radii = np.array([o.radius for o in scene.static_obstacles])
            diff = st.pos[:, :, None, :] - centers[None, None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            surface = dist - radii[None, None, :]
            nearest = np.argmin(surface, axis=-1)
            worst_obs = min(worst_obs, float(surface.min()))
            take = np.take_along_axis
            d_sel = take(dist, nearest[..., None], axis=-1)[..., 0]
            u_sel = take(diff, nearest[..., None, None], axis=-2)[..., 0, :]
            thr = config.d_thr_obs + radii[nearest]
            g = np.maximum(thr**2 - d_sel**2, 0.0)
            g2 = 3.0 * g**2
            G += g**3
            dGdpos += (-2.0 * g2)[..., None] * u_sel
        for obs in scene.dynamic_obstacles:
            p_o = obs.position_at(tau_abs)
            v_o = obs.velocity_at(tau_abs)
            u = st.pos - p_o
            dist2 = (u**2).sum(-1)
            worst_obs = min(worst_obs, float(np.min(np.sqrt(dist2)) - obs.radius))
            thr = config.d_thr_obs + obs.radius
            g = np.maximum(thr**2 - dist2, 0.0)
            g2 = 3.0 * g**2
            G += g**3
            dGdpos += (-2.0 * g2)[..., None] * u
            dGdtau += g2 * 2.0 * (u * v_o).sum(-1)
        terms[1] = st.add(weights[1], G, dGdpos=dGdpos, dGdtau=dGdtau)

    # Dynamical feasibility: hinge on speed, acceleration and curvature.
    speed2 = (st.vel**2).sum(-1)
    speed = np.sqrt(speed2)
    g_v = np.maximum(speed2 - config.v_max**2, 0.0)
    g_a = np.maximum((st.acc**2).sum(-1) - config.a_max**2, 0.0)
    moving = speed >= EPS_SPEED
    safe_speed = np.where(moving, speed, 1.0)
    cross = st.vel[..., 0] * st.acc[..., 1] - st.vel[..., 1] * st.acc[..., 0]
    kappa = np.where(moving, cross / safe_speed**3, 0.0)
    g_d = np.where(moving, np.maximum(kappa**2 - config.kappa_max**2, 0.0), 0.0)
    g_sum = g_v + g_a + g_d
    G = g_sum**3
    g2 = 3.0 * g_sum**2
    dkdv = np.stack([st.acc[..., 1], -st.acc[..., 0]], axis=-1) / safe_speed[..., None] ** 3
    dkdv -= 3.0 * cross[..., None] * st.vel / safe_speed[..., None] ** 5
    dkda = np.stack([-st.vel[..., 1], st.vel[..., 0]], axis=-1) / safe_speed[..., None] ** 3
    active_d = (moving & (g_d > 0.0))[..., None]
    dGdvel = g2[..., None] * (
        2.0 * st.vel * (g_v > 0.0)[..., None] + np.where(active_d, 2.0 * kappa[..., None] * dkdv, 0.0)
    )
    dGdacc = g2[..., None] * (
        2.0 * st.acc * (g_a > 0.0)[..., None] + np.where(active_d, 2.0 * kappa[..., None] * dkda, 0.0)
    )
    terms[2] = st.add(weights[2], G, dGdvel=dGdvel, dGdacc=dGdacc)

    if scene.desired_adjacency is not None and scene.neighbors:
        n_total = scene.desired_adjacency.shape[0]
        if len(scene.neighbors) != n_total - 1:
            raise ValueError("formation term needs all N-1 neighbor trajectories")
        M, Kp1 = st.t_local.shape
        P = np.empty((M, Kp1, n_total, 2))
        P[:, :, scene.ego_index, :] = st.pos
        order = [scene.ego_index] + [n.robot for n in scene.neighbors]
        for p_l, n in zip(neighbor_pos, scene.neighbors):
            P[:, :, n.robot, :] = p_l
        if sorted(order) != list(range(n_total)):
            raise ValueError("neighbor robot indices must cover 0..N-1 minus the ego")
        errors, grads = batch_error_and_grads(
            P.reshape(-1, n_total, 2), scene.desired_adjacency, config.a
        )
        G = errors.reshape(M, Kp1)
        dGdpos = grads.reshape(M, Kp1, n_total, 2)[:, :, scene.ego_index, :]
        dGdtau = np.zeros_like(G)
        for v_l, n in zip(neighbor_vel, scene.neighbors):
            dGdtau += (grads.reshape(M, Kp1, n_total, 2)[:, :, n.robot, :] * v_l).sum(-1)
        terms[3] = st.add(weights[3], G, dGdpos=dGdpos, dGdtau=dGdtau)

    ctrl_value, ctrl_grad_c, ctrl_grad_T = jerk_cost(traj)
    terms[4] = ctrl_value
    terms[5] = float(traj.durations.sum())

    grad_c = st.grad_c + weights[4] * ctrl_grad_c
    grad_T_partial = st.grad_T + weights[4] * ctrl_grad_T + weights[5]
    grad_q, grad_T = backpropagate(traj, grad_c, grad_T_partial)

    return CostReport(
        total=float(weights @ terms),
        terms=terms,
        grad_q=grad_q,
        grad_T=grad_T,
        worst_obstacle_clearance=worst_obs,
        worst_inter_clearance=worst_inter,
        max_curvature=float(np.max(np.abs(kappa))),
        max_speed=float(np.max(speed)),
    )


_LOG_T_MIN = math.log(1e-2)
_LOG_T_MAX = math.log(1e2)


def optimize(
    initial: WaypointParam,
    scene: PlanningScene,
    config: PlannerConfig,
    mode: str = "full",
) -> tuple[PiecewiseQuintic, CostReport]:
    """Quasi-Newton minimization of the total cost over (q, T).

    Durations stay positive through the substitution T = exp(tau); in
    "spatial" mode the durations are frozen and only the waypoints move.
    The returned trajectory is the best iterate seen, so its cost never
    exceeds the initial cost.
    """
    if mode not in ("full", "spatial"):
        raise ValueError(f"unknown mode {mode!r}")
    M = initial.pieces
    nq = 2 * (M - 1)
    T_fixed = initial.T.copy()

    def z_to_param(z):
        q = z[:nq].reshape(M - 1, 2)
        T = np.exp(z[nq:]) if mode == "full" else T_fixed
        return WaypointParam(q=q, T=T, start=initial.start, end=initial.end)

    best = {"cost": math.inf, "z": None, "report": None, "traj": None}

    def objective(z):
        param = z_to_param(z)
        traj = construct(param)
        report = total_cost(traj, scene, config)
        if report.total < best["cost"]:
            best.update(cost=report.total, z=z.copy(), report=report, traj=traj)
        if mode == "full":
            grad = np.concatenate([report.grad_q.ravel(), report.grad_T * param.T])
        else:
            grad = report.grad_q.ravel()
        return report.total, grad

    z0 = initial.q.ravel()
    if mode == "full":
        z0 = np.concatenate([z0, np.log(np.clip(T_fixed, 1.5e-2, 0.9e2))])
    if z0.size == 0:
        traj = construct(initial)
        return traj, total_cost(traj, scene, config)

    bounds = [(None, None)] * nq
    if mode == "full":
        bounds += [(_LOG_T_MIN, _LOG_T_MAX)] * M
    result = minimize(
        objective,
        z0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={
            "maxiter": config.lbfgs.max_iterations,
            "maxcor": config.lbfgs.memory,
            "ftol": config.lbfgs.relative_cost_tolerance,
            "gtol": config.lbfgs.grad_tolerance,
        },
    )
    report = best["report"]
    if result.status == 2:
        report = replace(report, warnings=report.warnings + ("line_search_failure",))
        log.debug("optimizer stopped early: %s", result.message)
    return best["traj"], report


def _polyline_resample(points: np.ndarray, count: int) -> np.ndarray:
    """Resample a polyline at `count` points uniformly spaced by arc length."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    total = seg.sum()
    if total <= 1e-12:
        return np.repeat(points[-1][None, :], count, axis=0)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    want = np.linspace(0.0, total, count)
    x = np.interp(want, s, points[:, 0])
    y = np.interp(want, s, points[:, 1])
    return np.stack([x, y], axis=1)


def initial_guess(
    state: BoundaryState,
    goal: BoundaryState,
    config: PlannerConfig,
    previous: PiecewiseQuintic | None = None,
    grid_path: np.ndarray | None = None,
) -> WaypointParam:
    """Warm start for one planning cycle.

    Right after a formation transition the conflict-free grid path is
    resampled uniformly by arc length (durations from the reference speed);
    otherwise the previous plan is shifted by one control period. With
    neither, the straight segment to the goal is used.
    """
    M = config.pieces
    min_T = 0.08
    if grid_path is not None and len(grid_path) >= 2:
        pts = _polyline_resample(np.asarray(grid_path, dtype=float), M + 1)
        seg_len = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if seg_len.sum() > 1e-9:
            T = np.maximum(seg_len / config.v_ref, min_T)
            return WaypointParam(q=pts[1:-1], T=T, start=state, end=goal)
    if previous is not None:
        dt = 1.0 / config.replan_hz
        T = previous.durations.copy()
        ends = dt + np.cumsum(T)
        q = previous.sample(ends[:-1], 0, clamp=True)
        return WaypointParam(q=q, T=np.maximum(T, min_T), start=state, end=goal)
    span = np.linalg.norm(goal.position - state.position)
    fractions = np.linspace(0.0, 1.0, M + 1)[1:-1, None]
    q = state.position[None, :] + fractions * (goal.position - state.position)[None, :]
    T_each = max(span / M / config.v_ref, 4 * min_T)
    return WaypointParam(q=q, T=np.full(M, T_each), start=state, end=goal)


def plan_cycle(
    state: BoundaryState,
    goal: BoundaryState,
    scene: PlanningScene,
    config: PlannerConfig,
    previous: PiecewiseQuintic | None = None,
    grid_path: np.ndarray | None = None,
    mode: str = "full",
) -> tuple[PiecewiseQuintic, CostReport]:
    """One distributed planning cycle: warm start, optimize, return the broadcast plan."""
    warnings = ()
    speed = float(np.linalg.norm(state.velocity))
    if speed > config.v_max:
        state = BoundaryState(
            state.position, state.velocity * (config.v_max / speed), state.acceleration
        )
        warnings = ("boundary_speed_clamped",)
        log.debug("boundary speed %.3f clamped to v_max", speed)
    guess = initial_guess(state, goal, config, previous=previous, grid_path=grid_path)
    traj, report = optimize(guess, scene, config, mode=mode)
    if warnings:
        report = replace(report, warnings=report.warnings + warnings)
    return traj, report
