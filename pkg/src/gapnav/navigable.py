"""Navigable gap construction: inflation, weighted Bezier sides, goal placement.

A feasible gap is turned into a bounded region the robot can commit to.
Each endpoint is inflated: its bearing moves toward the gap center by the
arc of one inflated robot radius and its range grows by two radii, so the
region keeps clearance from whatever the gap is attached to while passage
still means moving fully beyond it.  The region's sides are quadratic Bezier
curves from the robot position to the inflated terminal points, with the
middle control point scaled by the gap point's speed ratio; slow gaps give
nearly straight sides, fast gaps bow the side along the point's track.  The
far end is closed by a straight terminal cap between the side endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .egocircle import Gap, GapPoint, TWO_PI
from .feasibility import GapEvent, PropagationResult


class GapTooNarrowError(ValueError):
    """Gap cannot absorb the angular inflation and is discarded."""


def _wrap_width(beta_left: float, beta_right: float) -> float:
    w = beta_left - beta_right
    while w < 0.0:
        w += TWO_PI
    while w > TWO_PI:
        w -= TWO_PI
    return w


def _polar(bearing: float, r: float) -> np.ndarray:
    return np.array([r * math.cos(bearing), r * math.sin(bearing)])


def inflate_pair(p_left: np.ndarray, p_right: np.ndarray, r_infl: float,
                 *, radial_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Inflate a left/right point pair in polar coordinates.

    Bearings move toward the pair center by ``r_infl / range`` (one inflated
    radius of arc length) and ranges grow by ``2 * r_infl``.  With
    ``radial_only`` the bearing shift is skipped, which is the fallback for
    degenerate pairs whose bearings have already met.
    """
    if r_infl <= 0:
        raise ValueError("r_infl must be positive")
    p_left = np.asarray(p_left, float)
    p_right = np.asarray(p_right, float)
    r_l = float(np.linalg.norm(p_left))
    r_r = float(np.linalg.norm(p_right))
    if min(r_l, r_r) <= 1e-9:
        raise GapTooNarrowError("gap point at the origin")
    b_l = math.atan2(p_left[1], p_left[0])
    b_r = math.atan2(p_right[1], p_right[0])
    d_l = r_infl / r_l
    d_r = r_infl / r_r
    if radial_only:
        return _polar(b_l, r_l + 2 * r_infl), _polar(b_r, r_r + 2 * r_infl)
    width = _wrap_width(b_l, b_r)
    if width <= d_l + d_r:
        raise GapTooNarrowError(
            f"angular width {width:.4f} rad cannot absorb inflation {d_l + d_r:.4f} rad")
    return (_polar(b_l - d_l, r_l + 2 * r_infl),
            _polar(b_r + d_r, r_r + 2 * r_infl))


def inflate_gap(gap: Gap, r_infl: float) -> Gap:
    """Inflated copy of a detected gap; raises GapTooNarrowError if it cannot fit."""
    new_left, new_right = inflate_pair(gap.left.point, gap.right.point, r_infl)
    return replace(
        gap,
        left=GapPoint(beam=gap.left.beam,
                      bearing=math.atan2(new_left[1], new_left[0]),
                      range=float(np.linalg.norm(new_left))),
        right=GapPoint(beam=gap.right.beam,
                       bearing=math.atan2(new_right[1], new_right[0]),
                       range=float(np.linalg.norm(new_right))),
    )


@dataclass(frozen=True)
class BezierSide:
    """Quadratic Bezier side of a navigable gap.

    Control points are the curve origin, the weighted initial gap point, and
    the terminal gap point.  The weight is the gap point's speed as a
    fraction of the robot's speed limit, clamped away from zero so the
    middle control point never collapses onto the origin.
    """

    origin: np.ndarray
    p0: np.ndarray        # initial gap point (inflated)
    p1: np.ndarray        # terminal gap point (inflated)
    w0: float
    printed_variant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, float))
        object.__setattr__(self, "p0", np.asarray(self.p0, float))
        object.__setattr__(self, "p1", np.asarray(self.p1, float))

    @property
    def control_points(self) -> np.ndarray:
        return np.stack([self.origin, self.w0 * self.p0, self.p1])

    def point(self, u) -> np.ndarray:
        scalar = np.ndim(u) == 0
        uu = np.atleast_1d(np.asarray(u, float))[:, None]
        c0, c1, c2 = self.control_points
        if self.printed_variant:
            first = 1.0 - uu * uu
        else:
            first = (1.0 - uu) ** 2
        out = first * c0 + 2 * uu * (1 - uu) * c1 + uu * uu * c2
        return out[0] if scalar else out

    def tangent(self, u) -> np.ndarray:
        scalar = np.ndim(u) == 0
        uu = np.atleast_1d(np.asarray(u, float))[:, None]
        c0, c1, c2 = self.control_points
        if self.printed_variant:
            out = -2 * uu * c0 + (2 - 4 * uu) * c1 + 2 * uu * c2
        else:
            out = 2 * (1 - uu) * (c1 - c0) + 2 * uu * (c2 - c1)
        return out[0] if scalar else out


def side_weight(v_side: np.ndarray, v_max: float, w0_min: float = 0.05) -> float:
    """Speed-ratio weight for the middle control point, clamped to [w0_min, 1]."""
    w = float(np.linalg.norm(v_side)) / v_max
    return min(1.0, max(w0_min, w))


@dataclass(frozen=True)
class NavigableGap:
    """Region bounded by two Bezier sides and a straight terminal cap."""

    left: BezierSide
    right: BezierSide
    goal: np.ndarray
    horizon: float
    gap_id: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "goal", np.asarray(self.goal, float))

    def boundary_polyline(self, samples_per_side: int = 64) -> np.ndarray:
        """Closed boundary polygon: left side out, cap across, right side back."""
        u = np.linspace(0.0, 1.0, samples_per_side)
        left_pts = self.left.point(u)
        right_pts = self.right.point(u)[::-1]
        return np.concatenate([left_pts, right_pts])

    def contains(self, p: np.ndarray, samples_per_side: int = 64) -> bool:
        return bool(self.contains_many(np.asarray(p, float)[None, :],
                                       samples_per_side)[0])

    def contains_many(self, pts: np.ndarray, samples_per_side: int = 64) -> np.ndarray:
        """Even-odd ray-crossing membership test against the polyline boundary."""
        poly = self.boundary_polyline(samples_per_side)
        x0, y0 = poly[:, 0], poly[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        px = pts[:, 0][:, None]
        py = pts[:, 1][:, None]
        straddles = (y0[None, :] > py) != (y1[None, :] > py)
        dy = y1 - y0
        dy = np.where(np.abs(dy) < 1e-30, 1e-30, dy)
        x_int = x0[None, :] + (py - y0[None, :]) * (x1 - x0)[None, :] / dy[None, :]
        crossings = np.sum(straddles & (x_int > px), axis=1)
        return crossings % 2 == 1

    def cap_segment(self) -> tuple[np.ndarray, np.ndarray]:
        return self.left.p1, self.right.p1


def build_navigable_gap(p0_left, p0_right, prop: PropagationResult,
                        v_left, v_right, v_max: float, *, r_infl: float = 0.25,
                        origin=(0.0, 0.0), w0_min: float = 0.05,
                        printed_variant: bool = False,
                        gap_id: tuple | None = None) -> NavigableGap:
    """Assemble the navigable gap from inflated initial points and a propagation.

    ``p0_left``/``p0_right`` are the already inflated current gap points;
    terminal points from the propagation are inflated here (falling back to
    radial-only inflation when their bearings have effectively met).  The
    goal defaults to the cap midpoint until :func:`place_goal` refines it.
    """
    origin = np.asarray(origin, float)
    t_l = np.asarray(prop.terminal_left, float)
    t_r = np.asarray(prop.terminal_right, float)
    try:
        p1_left, p1_right = inflate_pair(t_l, t_r, r_infl)
    except GapTooNarrowError:
        p1_left, p1_right = inflate_pair(t_l, t_r, r_infl, radial_only=True)
    left = BezierSide(origin=origin, p0=np.asarray(p0_left, float), p1=p1_left,
                      w0=side_weight(v_left, v_max, w0_min),
                      printed_variant=printed_variant)
    right = BezierSide(origin=origin, p0=np.asarray(p0_right, float), p1=p1_right,
                       w0=side_weight(v_right, v_max, w0_min),
                       printed_variant=printed_variant)
    goal = 0.5 * (p1_left + p1_right)
    return NavigableGap(left=left, right=right, goal=goal,
                        horizon=prop.t_terminal, gap_id=gap_id)


def _ray_chord_param(a: np.ndarray, b: np.ndarray, bearing: float) -> float:
    """Parameter s of the intersection of the bearing ray with segment a->b."""
    d = np.array([math.cos(bearing), math.sin(bearing)])
    ca = a[0] * d[1] - a[1] * d[0]
    cb = b[0] * d[1] - b[1] * d[0]
    denom = ca - cb
    if abs(denom) < 1e-12:
        return 0.5
    return min(1.0, max(0.0, ca / denom))


def place_goal(navgap: NavigableGap, prop: PropagationResult,
               waypoint: np.ndarray, r_infl: float = 0.25,
               cap_inset: float = 0.12) -> np.ndarray:
    """Choose the gap goal within the terminal bearing span.

    Gaps that cross or close put the goal beyond the crossing point on its
    bearing, so reaching the goal means having passed the pinch before it
    shuts.  Otherwise the goal is the waypoint's projection onto the
    terminal cap, with the bearing clamped inside the span by the angular
    inflation margin, then pulled off the cap toward the region interior by
    ``cap_inset``: the field's goal sink must sit strictly inside its own
    domain, or the flow at the cap around it would have no inward component.
    """
    waypoint = np.asarray(waypoint, float)
    if prop.event in (GapEvent.CLOSED, GapEvent.CROSSED) and prop.crossing_point is not None:
        c = prop.crossing_point
        bearing = math.atan2(c[1], c[0])
        return _polar(bearing, float(np.linalg.norm(c)) + 2.0 * r_infl)

    # A waypoint already inside the region is its own best goal.
    if np.linalg.norm(waypoint) > 1e-9 and navgap.contains(waypoint):
        return waypoint.copy()

    a, b = navgap.cap_segment()
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-12:
        return 0.5 * (a + b)
    s = float(np.clip((waypoint - a) @ ab / denom, 0.0, 1.0))
    candidate = a + s * ab

    b_l = math.atan2(a[1], a[0])       # cap runs left endpoint -> right endpoint
    b_r = math.atan2(b[1], b[0])
    width = _wrap_width(b_l, b_r)
    m_l = r_infl / max(1e-9, float(np.linalg.norm(a)))
    m_r = r_infl / max(1e-9, float(np.linalg.norm(b)))
    if width > m_l + m_r:
        cand_bearing = math.atan2(candidate[1], candidate[0])
        off = _wrap_width(b_l, cand_bearing)    # 0 at left edge, width at right edge
        if off < m_l:
            clamped = b_l - m_l
        elif off > width - m_r:
            clamped = b_r + m_r
        else:
            clamped = None
        if clamped is not None:
            s2 = _ray_chord_param(a, b, clamped)
            candidate = a + s2 * ab

    # Pull the goal inside: toward the curve origin, halving on failure.
    # Wider caps need a deeper inset or the goal pull at the far cap
    # corners degenerates to a near-tangent.
    inward = navgap.left.origin - candidate
    n = float(np.linalg.norm(inward))
    if n < 1e-9:
        return candidate
    inward /= n
    cap_len = float(np.linalg.norm(ab))
    inset = min(max(cap_inset, 0.15 * cap_len), 0.45, 0.45 * n)
    while inset > 1e-3:
        goal = candidate + inset * inward
        if navgap.contains(goal):
            return goal
        inset *= 0.5
    return candidate


def with_goal(navgap: NavigableGap, goal: np.ndarray) -> NavigableGap:
    return replace(navgap, goal=np.asarray(goal, float))
