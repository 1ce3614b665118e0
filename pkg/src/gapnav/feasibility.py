"""Gap categorization, forward propagation, and passage feasibility.

Whether a gap is worth planning through depends on how it evolves.  Gap
points are labeled static, expanding, or shrinking from their bearing rate;
a whole gap takes the sign of the difference of its side rates.  Shrinking
gaps are the only ones that can shut, which shows up as the left and right
bearings swapping past the gap center.  Propagation integrates the
ego-compensated (gap-only) point motion over a local horizon, terminating
early when the gap closes or when a receding point first becomes reachable
by the robot, and a cubic Hermite speed test decides whether the robot can
make the terminal gap in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class SingularityError(ValueError):
    """Geometry too close to the origin for a bearing computation."""


class Category(Enum):
    STATIC = "static"
    EXPANDING = "expanding"
    SHRINKING = "shrinking"


class GapEvent(Enum):
    HORIZON_END = "horizon_end"
    CROSSED = "crossed"
    CLOSED = "closed"
    REACHABLE_EXPANSION = "reachable_expansion"


def bearing_rate(p: np.ndarray, v: np.ndarray) -> float:
    """Angular rate of the bearing to a point moving with velocity v."""
    p = np.asarray(p, float)
    v = np.asarray(v, float)
    r2 = float(p[0] * p[0] + p[1] * p[1])
    if r2 <= 1e-12:
        raise SingularityError("point too close to the origin")
    return (p[0] * v[1] - p[1] * v[0]) / r2


def _sign_category(value: float, eps: float) -> int:
    if value > eps:
        return 1
    if value < -eps:
        return -1
    return 0


def categorize_point(p: np.ndarray, v: np.ndarray, side: str,
                     eps_beta: float = 1e-3) -> Category:
    """Label one gap side from its bearing rate.

    A left point opens the gap by rotating counterclockwise, a right point by
    rotating clockwise, so the expanding sign convention flips between sides.
    """
    rate = bearing_rate(p, v)
    s = _sign_category(rate, eps_beta)
    if s == 0:
        return Category.STATIC
    if side == "left":
        return Category.EXPANDING if s > 0 else Category.SHRINKING
    if side == "right":
        return Category.EXPANDING if s < 0 else Category.SHRINKING
    raise ValueError("side must be 'left' or 'right'")


@dataclass(frozen=True)
class GapCategories:
    left: Category
    right: Category
    gap: Category
    beta_dot_left: float
    beta_dot_right: float


def categorize(p_left, v_left, p_right, v_right,
               eps_beta: float = 1e-3) -> GapCategories:
    """Categorize both sides and the whole gap from gap-only velocities."""
    bl = bearing_rate(p_left, v_left)
    br = bearing_rate(p_right, v_right)
    alpha_dot = bl - br
    s = _sign_category(alpha_dot, eps_beta)
    gap = Category.STATIC if s == 0 else (Category.EXPANDING if s > 0 else Category.SHRINKING)
    return GapCategories(
        left=categorize_point(p_left, v_left, "left", eps_beta),
        right=categorize_point(p_right, v_right, "right", eps_beta),
        gap=gap,
        beta_dot_left=bl,
        beta_dot_right=br,
    )


def _unit(p: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(p)
    if n <= 1e-9:
        raise SingularityError("cannot normalize a near-zero vector")
    return p / n


def signed_gap_angle(p_left: np.ndarray, p_right: np.ndarray) -> float:
    """Signed angle swept from the right bearing to the left bearing.

    Positive while the gap is open the normal way around (left
    counterclockwise of right, span under a half turn); flips negative once
    the bearings swap.
    """
    el, er = _unit(np.asarray(p_left, float)), _unit(np.asarray(p_right, float))
    cross = er[0] * el[1] - er[1] * el[0]
    dot = er[0] * el[0] + er[1] * el[1]
    return math.atan2(cross, dot)


def check_crossing(prev_left, prev_right, curr_left, curr_right,
                   prev_center_bearing: np.ndarray) -> bool:
    """Did the gap bearings swap past the gap center between two steps?

    Requires both the signed gap angle flipping from positive to negative and
    both current bearings lying on the previous gap-center side (positive dot
    with the previous center direction).
    """
    a_prev = signed_gap_angle(prev_left, prev_right)
    a_curr = signed_gap_angle(curr_left, curr_right)
    if not (a_prev > 0.0 and a_curr < 0.0):
        return False
    ec = np.asarray(prev_center_bearing, float)
    el, er = _unit(np.asarray(curr_left, float)), _unit(np.asarray(curr_right, float))
    return bool(el @ ec > 0.0 and er @ ec > 0.0)


def check_closing(p_left, p_right, r_infl: float) -> bool:
    """Inflated robot no longer fits between the points (strict)."""
    if r_infl <= 0:
        raise ValueError("r_infl must be positive")
    return bool(np.linalg.norm(np.asarray(p_left, float) - np.asarray(p_right, float))
                < 2.0 * r_infl)


def check_reachable(p: np.ndarray, t: float, v_max: float) -> bool:
    """Could the robot, moving straight at v_max, have reached this point by t?"""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return bool(np.linalg.norm(np.asarray(p, float)) < v_max * t)


@dataclass(frozen=True)
class PropagationResult:
    """Terminal state of a gap integrated over the local horizon."""

    terminal_left: np.ndarray
    terminal_right: np.ndarray
    t_terminal: float
    event: GapEvent
    left_track: np.ndarray      # (k+1, 2) sampled left positions up to t_terminal
    right_track: np.ndarray
    v_left: np.ndarray          # constant gap-only side velocities used
    v_right: np.ndarray
    dt: float
    crossing_point: np.ndarray | None = None   # midpoint at bearing-swap time
    crossing_time: float | None = None
    categories: GapCategories | None = None


def _center_bearings(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Unit bisector directions for per-step gap centers, rows (k, 2).

    Valid while the gap angle stays under a half turn, which is the only
    regime in which the crossing test consults them.
    """
    el = left / np.linalg.norm(left, axis=1, keepdims=True)
    er = right / np.linalg.norm(right, axis=1, keepdims=True)
    mid = el + er
    norms = np.linalg.norm(mid, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return mid / norms


def propagate_gap(p_left, v_left, p_right, v_right, *, horizon: float = 5.0,
                  dt: float = 0.01, r_infl: float = 0.25, v_max: float = 0.6,
                  eps_beta: float = 1e-3,
                  v_point_eps: float = 0.02) -> PropagationResult:
    """Integrate constant-velocity gap point motion over the horizon.

    Early termination, first trigger wins per step:

    * shrinking gaps only: a bearing crossing, refined into CLOSED when the
      points pass closer than the inflated diameter, or a direct proximity
      trigger once the robot no longer fits between the points even before
      the bearings swap.  CLOSED terminal points are rolled back to the last
      step at which the robot still fits;
    * opening or receding points: the first step at which the point becomes
      reachable by the robot (REACHABLE_EXPANSION).

    Otherwise the gap runs to HORIZON_END.
    """
    if not (0 < dt <= 0.05):
        raise ValueError("dt must be in (0, 0.05]")
    if not (0.1 <= horizon <= 20.0):
        raise ValueError("horizon out of range")
    p_left = np.asarray(p_left, float)
    p_right = np.asarray(p_right, float)
    v_left = np.asarray(v_left, float)
    v_right = np.asarray(v_right, float)

    cats = categorize(p_left, v_left, p_right, v_right, eps_beta)

    n_steps = int(round(horizon / dt))
    ts = np.arange(n_steps + 1) * dt
    left = p_left[None, :] + ts[:, None] * v_left[None, :]
    right = p_right[None, :] + ts[:, None] * v_right[None, :]

    def result(idx: int, event: GapEvent, crossing_point=None, crossing_time=None):
        return PropagationResult(
            terminal_left=left[idx].copy(),
            terminal_right=right[idx].copy(),
            t_terminal=float(ts[idx]),
            event=event,
            left_track=left[: idx + 1].copy(),
            right_track=right[: idx + 1].copy(),
            v_left=v_left.copy(),
            v_right=v_right.copy(),
            dt=dt,
            crossing_point=crossing_point,
            crossing_time=crossing_time,
            categories=cats,
        )

    cross_idx = None
    prox_idx = None
    separations = None
    if cats.gap is Category.SHRINKING:
        el = left / np.linalg.norm(left, axis=1, keepdims=True)
        er = right / np.linalg.norm(right, axis=1, keepdims=True)
        cross_z = er[:, 0] * el[:, 1] - er[:, 1] * el[:, 0]
        dot = np.einsum("ij,ij->i", er, el)
        alpha = np.arctan2(cross_z, dot)
        centers = _center_bearings(left, right)
        flip = (alpha[:-1] > 0.0) & (alpha[1:] < 0.0)
        passed = (np.einsum("ij,ij->i", el[1:], centers[:-1]) > 0.0) & \
                 (np.einsum("ij,ij->i", er[1:], centers[:-1]) > 0.0)
        hits = np.flatnonzero(flip & passed)
        if hits.size:
            cross_idx = int(hits[0]) + 1
        separations = np.linalg.norm(left - right, axis=1)
        close = np.flatnonzero(separations < 2.0 * r_infl)
        if close.size:
            prox_idx = int(close[0])

    reach_idx = None
    for track, point_cat, v in ((left, cats.left, v_left), (right, cats.right, v_right)):
        speed = float(np.linalg.norm(v))
        receding = point_cat is Category.STATIC and speed > v_point_eps and \
            float(track[0] @ v) > 0.0
        if not (point_cat is Category.EXPANDING or receding):
            continue
        dists = np.linalg.norm(track, axis=1)
        hits = np.flatnonzero(dists < v_max * ts)
        if hits.size:
            idx = int(hits[0])
            if reach_idx is None or idx < reach_idx:
                reach_idx = idx

    shut_idx = None
    if cross_idx is not None or prox_idx is not None:
        shut_idx = min(i for i in (cross_idx, prox_idx) if i is not None)
    if shut_idx is not None and (reach_idx is None or shut_idx <= reach_idx):
        crossing_point = 0.5 * (left[shut_idx] + right[shut_idx])
        crossing_time = float(ts[shut_idx])
        if separations[shut_idx] < 2.0 * r_infl:
            fits = np.flatnonzero(separations[: shut_idx + 1] >= 2.0 * r_infl)
            last_fit = int(fits[-1]) if fits.size else 0
            return result(last_fit, GapEvent.CLOSED, crossing_point, crossing_time)
        # Crossed but still wide enough: the gap stops being a bearing gap at
        # the swap, so terminate at the last pre-crossing step.
        return result(max(shut_idx - 1, 0), GapEvent.CROSSED, crossing_point,
                      crossing_time)
    if reach_idx is not None:
        return result(reach_idx, GapEvent.REACHABLE_EXPANSION)
    return result(n_steps, GapEvent.HORIZON_END)


def hermite_max_speed(p0, v0, p1, v1, duration: float, samples: int = 100) -> float:
    """Max sampled speed along the cubic Hermite between two timed states."""
    if duration <= 0:
        return math.inf
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    v0 = np.asarray(v0, float) * duration
    v1 = np.asarray(v1, float) * duration
    s = np.linspace(0.0, 1.0, samples)
    # Derivatives of the Hermite basis on [0, 1].
    dh00 = 6 * s * s - 6 * s
    dh10 = 3 * s * s - 4 * s + 1
    dh01 = -6 * s * s + 6 * s
    dh11 = 3 * s * s - 2 * s
    deriv = (dh00[:, None] * p0 + dh10[:, None] * v0
             + dh01[:, None] * p1 + dh11[:, None] * v1) / duration
    return float(np.max(np.linalg.norm(deriv, axis=1)))


def feasibility_test(robot_pos, robot_vel, prop: PropagationResult,
                     v_max: float) -> bool:
    """Can the robot make the terminal gap midpoint within its speed limit?

    Builds a cubic Hermite from the robot state at time zero to the terminal
    gap midpoint moving at the mean gap-only side velocity, and accepts the
    gap if the max speed along the spline stays within v_max.
    """
    if prop.t_terminal <= 0:
        return False
    midpoint = 0.5 * (prop.terminal_left + prop.terminal_right)
    mid_vel = 0.5 * (prop.v_left + prop.v_right)
    vmax_spline = hermite_max_speed(robot_pos, robot_vel, midpoint, mid_vel,
                                    prop.t_terminal)
    return vmax_spline <= v_max * (1.0 + 1e-6)


def passage_feasible(robot_pos, robot_vel, prop: PropagationResult,
                     v_max: float, r_infl: float) -> bool:
    """Planner-level gap acceptance.

    Only gaps that shut impose a deadline: for CLOSED and CROSSED events the
    robot must beat the terminal time, which is the cubic-spline speed test.
    Gaps that survive the horizon (or merely get truncated by reachability)
    persist beyond it, so arrival time is not binding; they just need to
    stay wide enough for the inflated robot.
    """
    if prop.event in (GapEvent.CLOSED, GapEvent.CROSSED):
        return feasibility_test(robot_pos, robot_vel, prop, v_max)
    sep = float(np.linalg.norm(prop.terminal_left - prop.terminal_right))
    return sep >= 2.0 * r_infl
