"""Graph-based formation description and environment-adaptive structure generation.

A formation of N robots is described by the weighted Laplacian of the
complete graph over their positions, where the weight of edge (u, v) is the
squared weighted Euclidean distance ``||W (p_u - p_v)||^2`` with
``W = diag(a, 1)``.  The formation error between a current and a desired
configuration is the squared Frobenius distance of their Laplacians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NoFeasibleStructureError(ValueError):
    """Raised when the navigable width cannot host even a single column."""


@dataclass(frozen=True)
class Position2D:
    """Planar position; x is longitudinal (forward), y lateral."""

    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class WeightParams:
    """Parameters of the distance weighting and Laplacian normalization.

    a: lateral-vs-longitudinal weight in W = diag(a, 1); must be positive.
    normalize: if True, matrices built with these params carry the
        symmetrically normalized Laplacian D^(-1/2) L D^(-1/2) (used for
        evaluation metrics, not for optimization).
    """

    a: float = 1.0
    normalize: bool = False

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"weight parameter a must be positive, got {self.a}")


@dataclass(frozen=True)
class FormationMatrices:
    """Adjacency, degree and Laplacian matrices of one robot configuration."""

    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


def positions_array(positions) -> np.ndarray:
    """Coerce a list of Position2D / pairs / an (N, 2) array to an (N, 2) float array."""
    if isinstance(positions, np.ndarray):
        arr = positions.astype(float, copy=False)
    else:
        arr = np.array(
            [p.as_array() if isinstance(p, Position2D) else np.asarray(p, dtype=float) for p in positions],
            dtype=float,
        )
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("positions must be finite")
    return arr


def edge_weight(p_u, p_v, params: WeightParams) -> float:
    """Squared weighted distance ||W (p_u - p_v)||^2 with W = diag(a, 1)."""
    u = p_u.as_array() if isinstance(p_u, Position2D) else np.asarray(p_u, dtype=float)
    v = p_v.as_array() if isinstance(p_v, Position2D) else np.asarray(p_v, dtype=float)
    d = u - v
    return float((params.a * d[0]) ** 2 + d[1] ** 2)


def pairwise_weights(positions: np.ndarray, a: float) -> np.ndarray:
    """(N, N) matrix of edge weights w_ij for an (N, 2) position array."""
    dx = positions[:, 0:1] - positions[:, 0:1].T
    dy = positions[:, 1:2] - positions[:, 1:2].T
    return (a * dx) ** 2 + dy**2


def build_matrices(positions, params: WeightParams) -> FormationMatrices:
    """Adjacency/degree/Laplacian of the complete weighted graph over positions.

    With ``params.normalize`` the Laplacian is symmetrically normalized;
    rows and columns of isolated (zero-degree) vertices are left untouched.
    """
    pts = positions_array(positions)
    adj = pairwise_weights(pts, params.a)
    np.fill_diagonal(adj, 0.0)
    deg_vec = adj.sum(axis=1)
    degree = np.diag(deg_vec)
    laplacian = degree - adj
    if params.normalize:
        scale = np.where(deg_vec > 0.0, 1.0 / np.sqrt(np.where(deg_vec > 0.0, deg_vec, 1.0)), 1.0)
        laplacian = laplacian * scale[:, None] * scale[None, :]
    return FormationMatrices(adjacency=adj, degree=degree, laplacian=laplacian)


def formation_error(current: FormationMatrices, desired: FormationMatrices) -> float:
    """Squared Frobenius distance between the two Laplacians."""
    if current.laplacian.shape != desired.laplacian.shape:
        raise ValueError(
            f"dimension mismatch: {current.laplacian.shape} vs {desired.laplacian.shape}"
        )
    diff = current.laplacian - desired.laplacian
    return float(np.sum(diff * diff))


def batch_error_and_grads(
    stacked_positions: np.ndarray, desired_adjacency: np.ndarray, a: float
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized formation error and its position gradients, batched.

    stacked_positions: (S, N, 2) array of S instantaneous configurations.
    Returns (errors (S,), gradients (S, N, 2)) where gradients[s, u] is
    d f_e / d p_u for configuration s.

    With dw_ij = w_ij - w*_ij and row sums r_i = sum_j dw_ij the error is
    ``sum_{i != j} dw_ij^2 + sum_i r_i^2`` and

        d f_e / d w_uv = 4 dw_uv + 2 (r_u + r_v),
        d w_uv / d p_u = 2 diag(a^2, 1) (p_u - p_v).
    """
    P = np.asarray(stacked_positions, dtype=float)
    if P.ndim == 2:
        P = P[None]
    dx = P[:, :, None, 0] - P[:, None, :, 0]
    dy = P[:, :, None, 1] - P[:, None, :, 1]
    w = (a * dx) ** 2 + dy**2
    dw = w - desired_adjacency[None]
    idx = np.arange(P.shape[1])
    dw[:, idx, idx] = 0.0
    rows = dw.sum(axis=2)
    errors = (dw**2).sum(axis=(1, 2)) + (rows**2).sum(axis=1)
    # coeff_uv = d f_e / d w_uv, then chain through the weighted distance.
    coeff = 4.0 * dw + 2.0 * (rows[:, :, None] + rows[:, None, :])
    coeff[:, idx, idx] = 0.0
    grads = np.empty_like(P)
    grads[:, :, 0] = 2.0 * a * a * (coeff * dx).sum(axis=2)
    grads[:, :, 1] = 2.0 * (coeff * dy).sum(axis=2)
    return errors, grads


def formation_error_gradient(
    positions, desired: FormationMatrices, params: WeightParams
) -> tuple[float, np.ndarray]:
    """Formation error of `positions` against `desired` plus its gradient.

    Uses the unnormalized Laplacian; `desired` must be unnormalized too.
    """
    pts = positions_array(positions)
    if pts.shape[0] != desired.n:
        raise ValueError(f"dimension mismatch: {pts.shape[0]} robots vs {desired.n}")
    errors, grads = batch_error_and_grads(pts[None], desired.adjacency, params.a)
    return float(errors[0]), grads[0]


def normalized_formation_error(positions, desired_positions, params: WeightParams) -> float:
    """Formation error on symmetrically normalized Laplacians (scale-free metric)."""
    norm_params = WeightParams(a=params.a, normalize=True)
    cur = build_matrices(positions, norm_params)
    des = build_matrices(desired_positions, norm_params)
    return formation_error(cur, des)


@dataclass(frozen=True)
class FormationSpec:
    """A formation geometry: anchor-relative target positions plus the desired Laplacian.

    Positions are relative to the formation anchor at the front-center of the
    structure (row 0, lateral center).
    """

    relative_positions: np.ndarray
    desired_laplacian: FormationMatrices
    column_count: int
    column_spacing: float
    row_spacing: float
    params: WeightParams = field(default=WeightParams())

    @classmethod
    def from_positions(
        cls,
        positions,
        params: WeightParams = WeightParams(),
        column_count: int = 1,
        column_spacing: float = 1.0,
        row_spacing: float = 1.0,
    ) -> "FormationSpec":
        pts = positions_array(positions)
        if pts.shape[0] < 1:
            raise ValueError("a formation needs at least one robot")
        if column_count < 1:
            raise ValueError("column_count must be >= 1")
        return cls(
            relative_positions=pts,
            desired_laplacian=build_matrices(pts, WeightParams(a=params.a, normalize=False)),
            column_count=column_count,
            column_spacing=column_spacing,
            row_spacing=row_spacing,
            params=params,
        )

    @property
    def n(self) -> int:
        return self.relative_positions.shape[0]


@dataclass(frozen=True)
class StructureConfig:
    """Parameters of structure generation.

    lane_width maps navigable width to a column count (width // lane_width);
    it should be at least the robot lateral footprint plus safety margin.
    """

    lane_width: float = 1.0
    column_spacing: float = 1.0
    row_spacing: float = 1.0
    params: WeightParams = field(default=WeightParams())


def column_occupancies(n_robots: int, columns: int) -> list[int]:
    """Distribute robots over columns as uniformly and symmetrically as possible.

    Leftover robots beyond the uniform base go to the center column first and
    then to column pairs mirrored about the center, so mirrored occupancies
    differ only when parity makes that unavoidable.
    """
    base, extra = divmod(n_robots, columns)
    occ = [base] * columns
    pairs = [
        (columns // 2 - 1 - k, (columns + 1) // 2 + k)
        for k in range((columns - columns % 2) // 2)
    ]
    for left, right in pairs[: extra // 2]:
        occ[left] += 1
        occ[right] += 1
    if extra % 2 == 1:
        if columns % 2 == 1:
            occ[(columns - 1) // 2] += 1
        else:
            # No center column exists; put the unpaired robot in the
            # innermost column not already holding an extra.
            occ[pairs[extra // 2][0]] += 1
    return occ


def generate_structure(
    n_robots: int, navigable_width: float, config: StructureConfig
) -> FormationSpec:
    """Interlaced column structure fitting the navigable width.

    Columns are placed symmetrically about y = 0; robots fill rows backward
    (x <= 0) from the front, and odd-indexed columns are staggered by half a
    row spacing so neighboring columns interlock.
    """
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1")
    if navigable_width < config.lane_width:
        raise NoFeasibleStructureError(
            f"navigable width {navigable_width} m admits no column of {config.lane_width} m"
        )
    columns = int(math.floor(navigable_width / config.lane_width + 1e-9))
    columns = max(1, min(columns, n_robots))
    occ = column_occupancies(n_robots, columns)
    pts = []
    for k in range(columns):
        y = (k - (columns - 1) / 2.0) * config.column_spacing
        stagger = -config.row_spacing / 2.0 if k % 2 == 1 else 0.0
        for row in range(occ[k]):
            pts.append((-row * config.row_spacing + stagger, y))
    return FormationSpec.from_positions(
        pts,
        params=config.params,
        column_count=columns,
        column_spacing=config.column_spacing,
        row_spacing=config.row_spacing,
    )
