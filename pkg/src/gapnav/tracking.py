"""Gap point association and rotating-frame state estimation.

Gap endpoints are matched across consecutive scans by solving a rectangular
assignment problem on point-to-point distances; matches farther apart than
an association gate become births and deaths instead.  Each tracked point
carries a Kalman filter over its body-frame relative position and velocity.
Because the body frame translates and rotates with the robot, the constant
velocity dynamics pick up ego coupling terms:

    d(p_rel)/dt = v_rel - omega x p_rel
    d(v_rel)/dt = -a_ego - omega x v_rel

The discrete transition uses the exact rotation for the omega coupling and a
zero-order hold on the ego acceleration, which keeps world-static points
static in the estimate even under fast ego yaw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment


class EstimationError(RuntimeError):
    """Numerical failure inside the estimator (e.g. singular innovation)."""


@dataclass(frozen=True)
class EgoMotion:
    """Robot body-frame motion inputs for one estimation step."""

    v: np.ndarray          # linear velocity, m/s
    a: np.ndarray          # linear acceleration, m/s^2
    omega: float = 0.0     # yaw rate, rad/s

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))

    @staticmethod
    def still() -> "EgoMotion":
        return EgoMotion(v=np.zeros(2), a=np.zeros(2), omega=0.0)


@dataclass(frozen=True)
class GapPointModel:
    """Kalman state for one gap side: body-relative position and velocity."""

    model_id: int
    x: np.ndarray          # state [px, py, vx, vy]
    P: np.ndarray          # 4x4 covariance
    last_update: float = 0.0
    last_innovation: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))

    @property
    def position(self) -> np.ndarray:
        return self.x[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[2:]


@dataclass(frozen=True)
class Association:
    """Outcome of matching previous models against current gap points."""

    pairs: list            # (model_id, current point index)
    births: list           # unmatched current point indices
    deaths: list           # unmatched previous model ids


def solve_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one matching on a rectangular cost matrix.

    Returns min(rows, cols) (row, col) pairs sorted by row.  Costs must be
    finite and nonnegative.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.size == 0:
        return []
    if cost.ndim != 2:
        raise ValueError("cost must be a 2D matrix")
    if not np.all(np.isfinite(cost)) or np.any(cost < 0):
        raise ValueError("costs must be finite and nonnegative")
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def associate(prev: list[GapPointModel], curr: list[np.ndarray],
              tau_assoc: float) -> Association:
    """Match tracked models to current points, gating on distance.

    Pairs farther apart than ``tau_assoc`` are discarded: the current point
    becomes a birth and the previous model a death.
    """
    if tau_assoc <= 0:
        raise ValueError("tau_assoc must be positive")
    if not prev or not curr:
        return Association(pairs=[], births=list(range(len(curr))),
                           deaths=[m.model_id for m in prev])
    pts = np.asarray(curr, dtype=float)
    pred = np.stack([m.position for m in prev])
    cost = np.linalg.norm(pred[:, None, :] - pts[None, :, :], axis=2)
    pairs = []
    matched_rows, matched_cols = set(), set()
    for r, c in solve_assignment(cost):
        if cost[r, c] <= tau_assoc:
            pairs.append((prev[r].model_id, c))
            matched_rows.add(r)
            matched_cols.add(c)
    births = [c for c in range(len(curr)) if c not in matched_cols]
    deaths = [prev[r].model_id for r in range(len(prev)) if r not in matched_rows]
    return Association(pairs=pairs, births=births, deaths=deaths)


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _transition(omega: float, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact discrete transition for the rotating-frame dynamics.

    Returns (Phi, G1, G2) with state update
        p+ = R (p + dt v) - G2 a,   v+ = R v - G1 a,
    where R rotates by -omega*dt and G1, G2 are the zero-order-hold input
    integrals of R over the step.
    """
    th = omega * dt
    R = _rot(-th)
    if abs(th) < 1e-8:
        # Series limits of the rotation integrals.
        G1 = dt * np.eye(2)
        G2 = 0.5 * dt * dt * np.eye(2)
    else:
        c, s = math.cos(th), math.sin(th)
        w = omega
        # int_0^dt rot(-w u) du
        G1 = np.array([[s / w, (1 - c) / w], [-(1 - c) / w, s / w]])
        # int_0^dt u * rot(-w u) du
        a_ = (c + th * s - 1) / (w * w)
        b_ = (s - th * c) / (w * w)
        G2 = np.array([[a_, b_], [-b_, a_]])
    Phi = np.zeros((4, 4))
    Phi[:2, :2] = R
    Phi[:2, 2:] = dt * R
    Phi[2:, 2:] = R
    return Phi, G1, G2


def predict(model: GapPointModel, ego: EgoMotion, dt: float,
            sigma_p: float = 0.01, sigma_v: float = 0.015) -> GapPointModel:
    """Propagate one model through the rotating-frame dynamics over dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    Phi, G1, G2 = _transition(ego.omega, dt)
    x = Phi @ model.x
    x[:2] -= G2 @ ego.a
    x[2:] -= G1 @ ego.a
    Q = np.diag([sigma_p**2, sigma_p**2, sigma_v**2, sigma_v**2])
    P = Phi @ model.P @ Phi.T + Q
    return replace(model, x=x, P=0.5 * (P + P.T))


def update(model: GapPointModel, measured_point: np.ndarray,
           R: np.ndarray) -> GapPointModel:
    """Position-only Kalman correction with Joseph-form covariance update."""
    z = np.asarray(measured_point, dtype=float)
    R = np.asarray(R, dtype=float)
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    S = H @ model.P @ H.T + R
    try:
        S_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("singular innovation covariance") from exc
    if np.linalg.cond(S) > 1e12:
        raise EstimationError("ill-conditioned innovation covariance")
    innov = z - model.x[:2]
    K = model.P @ H.T @ S_inv
    x = model.x + K @ innov
    IKH = np.eye(4) - K @ H
    P = IKH @ model.P @ IKH.T + K @ R @ K.T
    return replace(model, x=x, P=0.5 * (P + P.T), last_innovation=innov)


def gap_only_velocity(model: GapPointModel, ego: EgoMotion) -> np.ndarray:
    """Point velocity with the ego motion removed: v_rel plus ego velocity."""
    return model.velocity + ego.v


class GapPointTracker:
    """Stateful bank of gap point models maintained across scans.

    Model ids are allocated from a monotonic counter, so a dead id is never
    reused.  New models start with the world-static velocity prior (relative
    velocity equal to minus the ego velocity) and an inflated velocity
    covariance.
    """

    def __init__(self, *, tau_assoc: float = 0.7, sigma_p: float = 0.01,
                 sigma_v: float = 0.015, meas_sigma: float = 0.01,
                 newborn_vel_sigma: float = 0.5):
        self.tau_assoc = tau_assoc
        self.sigma_p = sigma_p
        self.sigma_v = sigma_v
        self.meas_R = meas_sigma**2 * np.eye(2)
        self.newborn_vel_sigma = newborn_vel_sigma
        self.models: dict[int, GapPointModel] = {}
        self._next_id = 0

    def _new_model(self, point: np.ndarray, ego: EgoMotion, t: float) -> GapPointModel:
        x = np.concatenate([point, -ego.v])
        P = np.diag([self.meas_R[0, 0], self.meas_R[1, 1],
                     self.newborn_vel_sigma**2, self.newborn_vel_sigma**2])
        m = GapPointModel(model_id=self._next_id, x=x, P=P, last_update=t)
        self._next_id += 1
        return m

    def step(self, points: list[np.ndarray], ego: EgoMotion, dt: float,
             t: float) -> tuple[Association, list[int]]:
        """Predict, associate, and update against one scan's gap points.

        Returns the association and, aligned with ``points``, the model id
        now tracking each point.
        """
        predicted = []
        for m in self.models.values():
            predicted.append(predict(m, ego, dt, self.sigma_p, self.sigma_v)
                             if dt > 0 else m)
        assoc = associate(predicted, points, self.tau_assoc)
        by_id = {m.model_id: m for m in predicted}

        new_models: dict[int, GapPointModel] = {}
        ids_for_points: list[int | None] = [None] * len(points)
        for model_id, idx in assoc.pairs:
            upd = update(by_id[model_id], points[idx], self.meas_R)
            new_models[model_id] = replace(upd, last_update=t)
            ids_for_points[idx] = model_id
        for idx in assoc.births:
            m = self._new_model(np.asarray(points[idx], dtype=float), ego, t)
            new_models[m.model_id] = m
            ids_for_points[idx] = m.model_id
        self.models = new_models
        return assoc, ids_for_points

    def get(self, model_id: int) -> GapPointModel | None:
        return self.models.get(model_id)
