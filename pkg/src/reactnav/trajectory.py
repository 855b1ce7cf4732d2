"""Minimum-jerk piecewise-quintic trajectories parameterized by waypoints and durations.

A trajectory with M pieces is determined either by the stacked polynomial
coefficients ``c`` (one 6x2 block per piece, natural basis [1, t, ..., t^5])
or by the waypoint parameterization ``(q, T)``: boundary position/velocity/
acceleration at both ends, M-1 interior waypoints and M piece durations.
Both directions of the conversion, and the pullback of cost gradients from
(c, T) to (q, T), are linear in M via one banded linear system.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

_BAND = 8  # half-bandwidth of the construction system for M >= 2


def basis(t: float, order: int) -> np.ndarray:
    """beta^(order)(t) for the natural quintic basis, orders 0..5."""
    b = np.zeros(6)
    for n in range(order, 6):
        b[n] = math.perm(n, order) * t ** (n - order)
    return b


def basis_many(t: np.ndarray, order: int) -> np.ndarray:
    """(len(t), 6) matrix of basis derivatives."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (6,))
    for n in range(order, 6):
        out[..., n] = math.perm(n, order) * t ** (n - order)
    return out


@dataclass(frozen=True)
class BoundaryState:
    """Full boundary condition: position, velocity, acceleration (2-vectors)."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(2)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"boundary {name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def at_rest(cls, position) -> "BoundaryState":
        return cls(np.asarray(position, dtype=float), np.zeros(2), np.zeros(2))


@dataclass(frozen=True)
class WaypointParam:
    """Waypoint/duration parameterization: M-1 interior points, M durations, boundaries."""

    q: np.ndarray
    T: np.ndarray
    start: BoundaryState
    end: BoundaryState

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1, 2)
        T = np.asarray(self.T, dtype=float).reshape(-1)
        if T.size < 1:
            raise ValueError("need at least one piece")
        if q.shape[0] != T.size - 1:
            raise ValueError(f"expected {T.size - 1} interior waypoints, got {q.shape[0]}")
        if not np.all(T > 0):
            raise ValueError("piece durations must be positive")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "T", T)

    @property
    def pieces(self) -> int:
        return self.T.size


@dataclass(frozen=True)
class PiecewiseQuintic:
    """Immutable piecewise-quintic trajectory: (M, 6, 2) coefficients, (M,) durations."""

    coeffs: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        T = np.asarray(self.durations, dtype=float).reshape(-1)
        if c.shape != (T.size, 6, 2):
            raise ValueError(f"coefficient shape {c.shape} inconsistent with {T.size} pieces")
        if not np.all(T > 0):
            raise ValueError("piece durations must be positive")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "durations", T)
        object.__setattr__(self, "_cum", np.cumsum(T))

    @property
    def pieces(self) -> int:
        return self.durations.size

    @property
    def total_duration(self) -> float:
        return float(self._cum[-1])

    def piece_index(self, t: float) -> int:
        """Piece containing t; intervals are right-open, the final instant maps to the last piece."""
        idx = int(np.searchsorted(self._cum, t, side="right"))
        return min(idx, self.pieces - 1)

    def evaluate(self, t: float, order: int = 0) -> np.ndarray:
        """Derivative of the given order (0..3) at global time t in [0, total_duration]."""
        if t < -1e-9 or t > self.total_duration + 1e-9:
            raise ValueError(f"t={t} outside [0, {self.total_duration}]")
        t = min(max(t, 0.0), self.total_duration)
        i = self.piece_index(t)
        local = t - (self._cum[i] - self.durations[i])
        return basis(local, order) @ self.coeffs[i]

    def sample(self, times, order: int = 0, clamp: bool = False) -> np.ndarray:
        """Vectorized evaluation at an array of global times.

        With clamp=True, times outside [0, total_duration] are held at the
        nearest endpoint: positions freeze at the boundary point and all
        derivatives vanish there.
        """
        times = np.asarray(times, dtype=float)
        flat = times.reshape(-1)
        if clamp:
            outside_lo = flat < 0.0
            outside_hi = flat > self.total_duration
            query = np.clip(flat, 0.0, self.total_duration)
        else:
            if flat.size and (flat.min() < -1e-9 or flat.max() > self.total_duration + 1e-9):
                raise ValueError("sample times outside trajectory domain")
            query = np.clip(flat, 0.0, self.total_duration)
        idx = np.minimum(np.searchsorted(self._cum, query, side="right"), self.pieces - 1)
        starts = self._cum - self.durations
        local = query - starts[idx]
        B = basis_many(local, order)
        vals = np.einsum("kc,kcd->kd", B, self.coeffs[idx])
        if clamp and order >= 1:
            vals[outside_lo | outside_hi] = 0.0
        return vals.reshape(times.shape + (2,))

    def end_state(self) -> BoundaryState:
        T = self.total_duration
        return BoundaryState(self.evaluate(T, 0), self.evaluate(T, 1), self.evaluate(T, 2))

    def state_at(self, t: float, clamp: bool = False) -> BoundaryState:
        if clamp:
            if t <= 0.0:
                return BoundaryState(self.evaluate(0.0, 0), self.evaluate(0.0, 1), self.evaluate(0.0, 2))
            if t >= self.total_duration:
                end = self.evaluate(self.total_duration, 0)
                return BoundaryState(end, np.zeros(2), np.zeros(2))
        return BoundaryState(self.evaluate(t, 0), self.evaluate(t, 1), self.evaluate(t, 2))


def _assemble_rows(T: np.ndarray):
    """Row descriptors of the 6M x 6M construction system for durations T.

    Yields (row, piece, order, at_end, sign) tuples: the row has coefficients
    sign * beta^(order)(T_piece if at_end else 0) in the block of `piece`.
    """
    M = T.size
    rows = []
    for k in range(3):  # initial p, v, a on piece 0
        rows.append((k, 0, k, False, 1.0))
    for j in range(1, M):  # interior joint j between pieces j-1 and j
        base = 3 + 6 * (j - 1)
        rows.append((base, j - 1, 0, True, 1.0))  # waypoint row: p_{j-1}(T) = q_j
        for k in range(5):  # continuity of orders 0..4
            rows.append((base + 1 + k, j - 1, k, True, 1.0))
            rows.append((base + 1 + k, j, k, False, -1.0))
    for k in range(3):  # terminal p, v, a on the last piece
        rows.append((6 * M - 3 + k, M - 1, k, True, 1.0))
    return rows


def _banded_system(T: np.ndarray):
    """Banded storage of the construction matrix and of its transpose."""
    M = T.size
    n = 6 * M
    band = _BAND if M > 1 else 5
    ab = np.zeros((2 * band + 1, n))
    ab_t = np.zeros((2 * band + 1, n))
    for row, piece, order, at_end, sign in _assemble_rows(T):
        t = T[piece] if at_end else 0.0
        vals = sign * basis(t, order)
        cols = np.arange(6 * piece, 6 * piece + 6)
        ab[band + row - cols, cols] = vals
        ab_t[band + cols - row, row] = vals
    return band, ab, ab_t


def construct(param: WaypointParam) -> PiecewiseQuintic:
    """Unique minimum-jerk quintic through (q, T) with the given boundary states.

    The 6M conditions per axis (boundary position/velocity/acceleration,
    interior waypoint interpolation, continuity of derivative orders 0..4)
    are solved as one banded linear system.
    """
    M = param.pieces
    band, ab, _ = _banded_system(param.T)
    b = np.zeros((6 * M, 2))
    b[0] = param.start.position
    b[1] = param.start.velocity
    b[2] = param.start.acceleration
    for j in range(1, M):
        b[3 + 6 * (j - 1)] = param.q[j - 1]
    b[6 * M - 3] = param.end.position
    b[6 * M - 2] = param.end.velocity
    b[6 * M - 1] = param.end.acceleration
    c = solve_banded((band, band), ab, b)
    if not np.all(np.isfinite(c)):
        raise ArithmeticError("construction system is singular (internal error)")
    return PiecewiseQuintic(coeffs=c.reshape(M, 6, 2), durations=param.T.copy())


def waypoints_of(traj: PiecewiseQuintic) -> WaypointParam:
    """Read the (q, T) parameterization back off the polynomial pieces."""
    M = traj.pieces
    q = np.array([basis(traj.durations[i], 0) @ traj.coeffs[i] for i in range(M - 1)]).reshape(
        M - 1, 2
    )
    start = BoundaryState(
        basis(0.0, 0) @ traj.coeffs[0],
        basis(0.0, 1) @ traj.coeffs[0],
        basis(0.0, 2) @ traj.coeffs[0],
    )
    Tm = traj.durations[M - 1]
    end = BoundaryState(
        basis(Tm, 0) @ traj.coeffs[M - 1],
        basis(Tm, 1) @ traj.coeffs[M - 1],
        basis(Tm, 2) @ traj.coeffs[M - 1],
    )
    return WaypointParam(q=q, T=traj.durations.copy(), start=start, end=end)


def backpropagate(
    traj: PiecewiseQuintic, grad_c: np.ndarray, grad_T_partial: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pull (dJ/dc, dJ/dT at fixed c) back to (dJ/dq, dJ/dT).

    Solves the transposed construction system for the adjoint and subtracts
    the sensitivity of the system matrix to each duration:
    dJ/dT_i -= sum over T_i-dependent rows r of lambda_r . p^(order_r + 1)(T_i).
    """
    M = traj.pieces
    grad_c = np.asarray(grad_c, dtype=float).reshape(6 * M, 2)
    band, _, ab_t = _banded_system(traj.durations)
    lam = solve_banded((band, band), ab_t, grad_c)
    grad_q = np.array([lam[3 + 6 * j] for j in range(M - 1)]).reshape(M - 1, 2)
    grad_T = np.asarray(grad_T_partial, dtype=float).copy()
    for row, piece, order, at_end, sign in _assemble_rows(traj.durations):
        if not at_end:
            continue
        dvec = sign * basis(traj.durations[piece], order + 1) @ traj.coeffs[piece]
        grad_T[piece] -= float(lam[row] @ dvec)
    return grad_q, grad_T


def jerk_cost(traj: PiecewiseQuintic) -> tuple[float, np.ndarray, np.ndarray]:
    """Integral of squared jerk with closed-form gradients.

    Returns (value, dJ/dc with shape (M, 6, 2), dJ/dT at fixed c with shape (M,)).
    """
    value = 0.0
    grad_c = np.zeros_like(traj.coeffs)
    grad_T = np.zeros(traj.pieces)
    for i, T in enumerate(traj.durations):
        Q = np.array(
            [
                [36 * T, 72 * T**2, 120 * T**3],
                [72 * T**2, 192 * T**3, 360 * T**4],
                [120 * T**3, 360 * T**4, 720 * T**5],
            ]
        )
        tail = traj.coeffs[i, 3:6, :]
        value += float(np.einsum("rd,rs,sd->", tail, Q, tail))
        grad_c[i, 3:6, :] = 2.0 * Q @ tail
        grad_T[i] = float(np.sum((basis(T, 3) @ traj.coeffs[i]) ** 2))
    return value, grad_c, grad_T


def to_dict(traj: PiecewiseQuintic) -> dict:
    """Serializable record: piece count, durations, 6x2 row-major coefficients."""
    return {
        "pieces": traj.pieces,
        "durations": traj.durations.tolist(),
        "coefficients": traj.coeffs.tolist(),
    }


def from_dict(data: dict) -> PiecewiseQuintic:
    coeffs = np.asarray(data["coefficients"], dtype=float)
    durations = np.asarray(data["durations"], dtype=float)
    if coeffs.shape != (int(data["pieces"]), 6, 2):
        raise ValueError("coefficient block shape mismatch")
    return PiecewiseQuintic(coeffs=coeffs, durations=durations)


def dumps(traj: PiecewiseQuintic) -> str:
    return json.dumps(to_dict(traj))


def loads(text: str) -> PiecewiseQuintic:
    return from_dict(json.loads(text))
