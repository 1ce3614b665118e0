"""Per-scan planning pipeline: detect, track, propagate, synthesize, switch.

Each scan runs detection and simplification, associates gap endpoints with
the tracked models, refreshes every gap's propagation and feasibility
verdict, and re-validates the currently executing trajectory.  Candidate
trajectories are only synthesized when a switch trigger fires: the current
trajectory is colliding under updated predictions, its gap went infeasible,
its models died in association, or it has ended.  Absent a trigger the
current trajectory keeps executing even if a fresh candidate would score
better, which keeps the robot from dithering between equivalent gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import PlannerConfig
from .egocircle import EgoCircle, Gap, GapKind, GapPoint, detect_raw_gaps, simplify_gaps
from .feasibility import (Category, GapEvent, PropagationResult, categorize,
                          passage_feasible, propagate_gap, SingularityError)
from .harmonic import FieldSynthesisError, HarmonicField, synthesize_field, velocity_command
from .navigable import (GapTooNarrowError, NavigableGap, build_navigable_gap,
                        inflate_pair, place_goal, with_goal)
from .tracking import EgoMotion, GapPointTracker, gap_only_velocity


class TrajectoryExitError(RuntimeError):
    """A rolled-out pose left the navigable region."""


@dataclass(frozen=True)
class Trajectory:
    """Timed pose/command sequence integrated from a harmonic field."""

    ts: np.ndarray
    ps: np.ndarray
    us: np.ndarray
    gap_key: tuple
    goal: np.ndarray
    deadline: float | None = None    # closure time for gaps that shut

    @property
    def duration(self) -> float:
        return float(self.ts[-1])

    def command_at(self, tau: float) -> np.ndarray:
        idx = int(round(tau / (self.ts[1] - self.ts[0]))) if len(self.ts) > 1 else 0
        idx = min(max(idx, 0), len(self.us) - 1)
        return self.us[idx]

    def ended(self, tau: float) -> bool:
        return tau >= self.duration - 1e-9


def synthesize_trajectory(fieldv: HarmonicField, navgap: NavigableGap, start,
                          horizon: float, dt: float, *, gain: float = 2.0,
                          v_max: float = 0.6, eps_goal: float = 0.05,
                          gap_key: tuple = (None, None),
                          containment_tol: float = 0.02,
                          start_zone: float = 0.25) -> Trajectory:
    """Explicit-Euler rollout of the field from ``start``.

    Integration stops at the horizon or on reaching the goal.  Every pose
    must stay inside the navigable region; poses within ``start_zone`` of
    the curve origin (the robot's own starting footprint, where the region
    pinches to a point) or within ``containment_tol`` of the boundary are
    tolerated.  A genuine exit aborts synthesis.
    """
    p = np.asarray(start, float).copy()
    origin = navgap.left.origin
    # The shared corner is a harmonic singularity; ease off it toward the goal.
    if np.linalg.norm(p - origin) < 1e-6:
        direction = fieldv.goal - p
        n = np.linalg.norm(direction)
        if n > 1e-9:
            p = p + 1e-3 * direction / n
    ts = [0.0]
    ps = [p.copy()]
    us = []
    n_steps = int(round(horizon / dt))
    reached = False
    for k in range(n_steps):
        u = velocity_command(p, fieldv, gain=gain, v_max=v_max)
        us.append(u)
        p = p + u * dt
        ts.append((k + 1) * dt)
        ps.append(p.copy())
        if np.linalg.norm(p - fieldv.goal) < eps_goal:
            reached = True
            break
    us.append(np.zeros(2))

    ps_arr = np.asarray(ps)
    inside = navgap.contains_many(ps_arr, 128)
    if not np.all(inside):
        suspect = ps_arr[~inside]
        near_start = np.linalg.norm(suspect - origin[None, :], axis=1) <= start_zone
        if not np.all(near_start):
            poly = navgap.boundary_polyline(256)
            far = suspect[~near_start]
            d = np.min(np.linalg.norm(poly[None, :, :] - far[:, None, :], axis=2), axis=1)
            if np.any(d > containment_tol):
                raise TrajectoryExitError(
                    f"rollout left the navigable region by {d.max():.4f} m")
    return Trajectory(ts=np.asarray(ts), ps=ps_arr, us=np.asarray(us),
                      gap_key=gap_key, goal=fieldv.goal.copy())


def scale_to_deadline(traj: Trajectory, deadline: float,
                      v_max: float) -> Trajectory | None:
    """Compress a trajectory in time so it completes before ``deadline``.

    Positions are kept; timestamps shrink uniformly and commands scale up
    accordingly.  Returns None when the needed speed-up would break the
    velocity limit.
    """
    if traj.duration <= deadline:
        return replace(traj, deadline=deadline)
    s = deadline / traj.duration
    us = traj.us / s
    speeds = np.linalg.norm(us, axis=1)
    if speeds.max() > v_max * (1.0 + 1e-6):
        return None
    return Trajectory(ts=traj.ts * s, ps=traj.ps, us=us, gap_key=traj.gap_key,
                      goal=traj.goal, deadline=deadline)


@dataclass(frozen=True)
class AgentObservation:
    """Body-frame odometry of one dynamic agent: disc plus velocity."""

    center: np.ndarray
    radius: float
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, float))


def extract_static_points(scan: EgoCircle, agents: list[AgentObservation],
                          *, sentinel_tol: float = 1e-6,
                          attribution_tol: float = 0.2) -> np.ndarray:
    """Scan points not attributable to a dynamic agent's silhouette.

    A beam belongs to an agent when its hit lies on that agent's disc, i.e.
    the measured range matches the analytic ray-disc distance within
    ``attribution_tol``.  Everything else (walls, clutter) is static.
    """
    n = scan.n_beams - 1 if scan.is_full_circle else scan.n_beams
    free = scan.free_mask(sentinel_tol)[:n]
    pts = scan.points()[:n]
    hit = ~free
    if not np.any(hit):
        return np.zeros((0, 2))
    angles = scan.angles()[:n]
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    dynamic = np.zeros(n, dtype=bool)
    for ag in agents:
        b = dirs @ ag.center
        c = float(ag.center @ ag.center) - ag.radius**2
        disc = b * b - c
        ok = disc >= 0
        t_near = b - np.sqrt(np.where(ok, disc, 0.0))
        match = ok & (t_near > 0) & (np.abs(t_near - scan.ranges[:n]) < attribution_tol)
        dynamic |= match
    return pts[hit & ~dynamic]


def score_trajectory(traj_ps: np.ndarray, traj_ts: np.ndarray,
                     static_points: np.ndarray, agents: list[AgentObservation],
                     waypoint: np.ndarray, *, r_infl: float = 0.25,
                     d_max: float = 1.5, lam: float = 1.0) -> float:
    """Cumulative pose-wise obstacle cost plus terminal waypoint distance.

    Obstacle distance per pose is taken against the scan advanced to the
    pose's timestamp: static points stay put, agent discs translate along
    their propagated odometry.  Any pose closer than the inflated radius
    makes the trajectory colliding (infinite cost).
    """
    n = len(traj_ps)
    d = np.full(n, np.inf)
    if static_points.size:
        diff = traj_ps[:, None, :] - static_points[None, :, :]
        d = np.minimum(d, np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1))
    for ag in agents:
        centers = ag.center[None, :] + traj_ts[:, None] * ag.velocity[None, :]
        d = np.minimum(d, np.linalg.norm(traj_ps - centers, axis=1) - ag.radius)

    if np.any(d < r_infl):
        return math.inf
    with np.errstate(divide="ignore"):
        c = np.where(d >= d_max, 0.0, (d_max / np.maximum(d, 1e-12) - 1.0) ** 2)
    return float(c.sum() + lam * np.linalg.norm(traj_ps[-1] - waypoint))


@dataclass(frozen=True)
class Candidate:
    trajectory: Trajectory
    cost: float
    gap_key: tuple
    event: str


@dataclass(frozen=True)
class SwitchDecision:
    action: str                   # "keep" | "switch" | "stop"
    reason: str
    target: tuple | None = None


def should_switch(current_ok: bool, current_reason: str,
                  candidates: list[Candidate]) -> SwitchDecision:
    """Switching policy: stay on a healthy trajectory, else take the best.

    A healthy current trajectory is kept even when a candidate scores
    lower.  On a trigger the lowest-cost non-colliding candidate wins; with
    none available the obstacle-avoidance fallback engages.
    """
    if current_ok:
        return SwitchDecision(action="keep", reason="current trajectory healthy")
    valid = [c for c in candidates if math.isfinite(c.cost)]
    if not valid:
        return SwitchDecision(action="stop", reason=current_reason)
    best = min(valid, key=lambda c: c.cost)
    return SwitchDecision(action="switch", reason=current_reason, target=best.gap_key)


@dataclass
class _Frame:
    """Rigid transform from the adoption body frame to the current one."""

    R: np.ndarray = field(default_factory=lambda: np.eye(2))
    t: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def advance(self, v: np.ndarray, omega: float, dt: float) -> None:
        dtheta = omega * dt
        c, s = math.cos(dtheta), math.sin(dtheta)
        R_step = np.array([[c, s], [-s, c]])     # rotate by -dtheta
        d = np.asarray(v, float) * dt
        self.R = R_step @ self.R
        self.t = R_step @ (self.t - d)

    def point(self, p: np.ndarray) -> np.ndarray:
        return self.R @ np.asarray(p, float) + self.t

    def points(self, ps: np.ndarray) -> np.ndarray:
        return ps @ self.R.T + self.t

    def vector(self, v: np.ndarray) -> np.ndarray:
        return self.R @ np.asarray(v, float)


@dataclass
class PlannerState:
    tracker: GapPointTracker
    trajectory: Trajectory | None = None
    adoption_time: float = 0.0
    frame: _Frame = field(default_factory=_Frame)
    last_t: float | None = None
    switch_log: list = field(default_factory=list)
    infeasible_streak: int = 0


@dataclass(frozen=True)
class TrackedGap:
    gap: Gap
    key: tuple                 # (left model id | None, right model id | None)
    p_left: np.ndarray
    p_right: np.ndarray
    v_left: np.ndarray         # gap-only side velocities
    v_right: np.ndarray
    prop: PropagationResult | None
    feasible: bool


class Planner:
    """Stateful per-scan planner; one instance per robot."""

    def __init__(self, cfg: PlannerConfig | None = None):
        self.cfg = cfg or PlannerConfig()
        c = self.cfg
        self.state = PlannerState(
            tracker=GapPointTracker(
                tau_assoc=c.tau_assoc, sigma_p=c.sigma_p, sigma_v=c.sigma_v,
                meas_sigma=c.meas_sigma, newborn_vel_sigma=c.newborn_vel_sigma))

    # -- gap preparation -------------------------------------------------

    def _window_gap(self, gap: Gap, scan: EgoCircle, waypoint: np.ndarray,
                    key: tuple) -> tuple[Gap, tuple]:
        """Clamp over-wide gaps to a span facing the waypoint.

        The navigable-gap region is only well formed for spans under half a
        turn; a wider free span is windowed to ``max_gap_span`` with virtual
        static endpoints on the scan, keeping a real tracked endpoint when
        the window leans against one.
        """
        cfg = self.cfg
        width = gap.width()
        if width <= cfg.max_gap_span:
            return gap, key
        wp_bearing = math.atan2(waypoint[1], waypoint[0])
        off = (wp_bearing - gap.right.bearing) % (2 * math.pi)
        half = cfg.max_gap_span / 2
        lo = min(max(off - half, 0.0), width - cfg.max_gap_span)
        hi = lo + cfg.max_gap_span

        def virtual_point(offset: float) -> GapPoint:
            bearing = gap.right.bearing + offset
            inc = scan.angle_increment
            beam = int(round(((bearing - scan.angle_min) % (2 * math.pi)) / inc))
            beam = min(max(beam, 0), scan.n_beams - 1)
            rng = float(scan.ranges[beam])
            return GapPoint(beam=beam, bearing=bearing, range=rng)

        right = gap.right if lo <= 1e-12 else virtual_point(lo)
        left = gap.left if hi >= width - 1e-12 else virtual_point(hi)
        new_key = (key[0] if left is gap.left else None,
                   key[1] if right is gap.right else None)
        return replace(gap, left=left, right=right), new_key

    def _prepare_gaps(self, gaps: list[Gap], keys: list[tuple], scan: EgoCircle,
                      ego: EgoMotion, waypoint: np.ndarray) -> list[TrackedGap]:
        cfg = self.cfg
        tracked = []
        for gap, key in zip(gaps, keys):
            gap, key = self._window_gap(gap, scan, waypoint, key)
            sides = []
            for side_key, point in ((key[0], gap.left), (key[1], gap.right)):
                model = self.state.tracker.get(side_key) if side_key is not None else None
                if model is not None:
                    sides.append((model.position.copy(), gap_only_velocity(model, ego)))
                else:
                    sides.append((point.point, np.zeros(2)))
            (p_l, v_l), (p_r, v_r) = sides
            try:
                prop = propagate_gap(
                    p_l, v_l, p_r, v_r, horizon=cfg.horizon, dt=cfg.dt_propagate,
                    r_infl=cfg.r_infl, v_max=cfg.v_max, eps_beta=cfg.eps_beta,
                    v_point_eps=cfg.v_point_eps)
                feasible = passage_feasible((0.0, 0.0), ego.v, prop,
                                            cfg.v_max, cfg.r_infl)
            except SingularityError:
                prop, feasible = None, False
            tracked.append(TrackedGap(gap=gap, key=key, p_left=p_l, p_right=p_r,
                                      v_left=v_l, v_right=v_r, prop=prop,
                                      feasible=feasible))
        return tracked

    # -- candidate synthesis ----------------------------------------------

    def _synthesize_candidate(self, tg: TrackedGap, waypoint: np.ndarray,
                              static_pts: np.ndarray,
                              agents: list[AgentObservation]) -> tuple[Candidate | None, dict]:
        cfg = self.cfg
        diag: dict = {"gap": list(tg.key), "event": tg.prop.event.value if tg.prop else None}
        if tg.prop is None or not tg.feasible:
            diag["skip"] = "infeasible"
            return None, diag
        try:
            p0l, p0r = inflate_pair(tg.p_left, tg.p_right, cfg.r_infl)
            navgap = build_navigable_gap(
                p0l, p0r, tg.prop, tg.v_left, tg.v_right, cfg.v_max,
                r_infl=cfg.r_infl, w0_min=cfg.w0_min,
                printed_variant=cfg.bezier_printed_variant, gap_id=tg.key)
            goal = place_goal(navgap, tg.prop, waypoint, cfg.r_infl)
            navgap = with_goal(navgap, goal)
            fieldv = synthesize_field(
                navgap, n_per_side=cfg.n_centers_per_side, eps_flow=cfg.eps_flow,
                goal_weight=cfg.goal_weight, qp_tol=cfg.qp_tol,
                membership_samples=cfg.boundary_polyline_samples)
            traj = synthesize_trajectory(
                fieldv, navgap, (0.0, 0.0), cfg.horizon, cfg.dt_traj,
                gain=cfg.kappa, v_max=cfg.v_max, eps_goal=cfg.eps_goal,
                gap_key=tg.key, start_zone=cfg.r_infl)
        except (GapTooNarrowError, FieldSynthesisError, TrajectoryExitError) as exc:
            diag["skip"] = f"{type(exc).__name__}: {exc}"
            return None, diag

        if tg.prop.event is GapEvent.CLOSED:
            reached = np.linalg.norm(traj.ps[-1] - fieldv.goal) < cfg.eps_goal * 1.5
            deadline = tg.prop.crossing_time
            if not reached or deadline is None:
                diag["skip"] = "cannot beat closure"
                return None, diag
            scaled = scale_to_deadline(traj, deadline, cfg.v_max)
            if scaled is None:
                diag["skip"] = "closure timescale exceeds speed limit"
                return None, diag
            traj = scaled

        # A candidate that ends farther from the waypoint than it started is
        # flight, not progress; retreating from threats is the fallback's
        # job, and adopting such trajectories can lock into a pursuit-speed
        # limit cycle that never rejoins the route.
        if (np.linalg.norm(traj.ps[-1] - waypoint) >= np.linalg.norm(waypoint)
                and np.linalg.norm(waypoint) > cfg.eps_goal):
            diag["skip"] = "no waypoint progress"
            return None, diag

        cost = score_trajectory(traj.ps, traj.ts, static_pts, agents, waypoint,
                                r_infl=cfg.r_infl, d_max=cfg.d_max,
                                lam=cfg.lambda_waypoint)
        diag["cost"] = cost if math.isfinite(cost) else "inf"
        diag["field"] = fieldv.to_dict()
        diag["navgap"] = {
            "left": navgap.left.control_points.tolist(),
            "right": navgap.right.control_points.tolist(),
            "goal": navgap.goal.tolist(),
            "w0": [navgap.left.w0, navgap.right.w0],
            "horizon": navgap.horizon,
        }
        return Candidate(trajectory=traj, cost=cost, gap_key=tg.key,
                         event=tg.prop.event.value), diag

    # -- current trajectory health ----------------------------------------

    def _current_status(self, t: float, tracked: list[TrackedGap],
                        static_pts: np.ndarray, agents: list[AgentObservation],
                        waypoint: np.ndarray, dead_ids: set) -> tuple[bool, str]:
        st = self.state
        traj = st.trajectory
        if traj is None:
            return False, "no current trajectory"
        tau = t - st.adoption_time
        if traj.ended(tau):
            return False, "trajectory ended"
        if traj.deadline is not None and tau > traj.deadline:
            return False, "closure deadline passed"
        real_ids = {k for k in traj.gap_key if k is not None}
        if real_ids & dead_ids:
            return False, "gap models discarded"
        if real_ids:
            matches = [tg for tg in tracked if set(tg.key) & real_ids]
            if not matches:
                return False, "gap no longer detected"
            # Hysteresis: the verdict can flicker while edge estimates
            # settle, so require two consecutive infeasible scans.
            if not any(tg.feasible for tg in matches):
                st.infeasible_streak += 1
                if st.infeasible_streak >= 2:
                    return False, "gap became infeasible"
            else:
                st.infeasible_streak = 0
        keep = traj.ts >= tau - 1e-9
        if keep.sum() >= 2:
            ps_now = st.frame.points(traj.ps[keep])
            ts_now = traj.ts[keep] - tau
            cost = score_trajectory(ps_now, ts_now, static_pts, agents, waypoint,
                                    r_infl=self.cfg.r_infl, d_max=self.cfg.d_max,
                                    lam=self.cfg.lambda_waypoint)
            if not math.isfinite(cost):
                return False, "future collision on current trajectory"
        return True, "healthy"

    # -- fallback ----------------------------------------------------------

    def _fallback_command(self, scan: EgoCircle,
                          agents: list[AgentObservation]) -> np.ndarray:
        """Obstacle-avoidance command when no candidate trajectory exists.

        Against static surroundings: back away from the nearest scan point
        at half speed.  Against an approaching agent: fleeing along the
        pursuit line loses to anything faster, so step off the agent's
        track line laterally at full speed instead.
        """
        cfg = self.cfg
        hits = scan.ranges < scan.max_range - cfg.sentinel_tol
        if not np.any(hits):
            return np.zeros(2)
        i = int(np.argmin(np.where(hits, scan.ranges, np.inf)))
        p = scan.point(i)
        n = float(np.linalg.norm(p))
        if n < 1e-9:
            return np.zeros(2)

        pursuer = None
        best_threat = 0.0
        for ag in agents:
            speed = float(np.linalg.norm(ag.velocity))
            if speed < cfg.v_dyn_threshold:
                continue
            d = float(np.linalg.norm(ag.center)) - ag.radius
            closing = float(ag.velocity @ (-ag.center)) / max(np.linalg.norm(ag.center), 1e-9)
            if closing > 0.05 and d < 2.5:
                threat = closing / max(d, 0.3)
                if threat > best_threat:
                    best_threat = threat
                    pursuer = (ag.center, ag.velocity / speed)
        if pursuer is not None:
            pos, v_hat = pursuer
            off_line = -pos - float((-pos) @ v_hat) * v_hat
            n_off = float(np.linalg.norm(off_line))
            if n_off > 1e-6:
                return cfg.v_max * off_line / n_off
            perp = np.array([-v_hat[1], v_hat[0]])
            if perp @ (-p) < 0:
                perp = -perp
            return cfg.v_max * perp
        return -0.5 * cfg.v_max * p / n

    # -- main entry ---------------------------------------------------------

    def plan_step(self, scan: EgoCircle, ego: EgoMotion, waypoint: np.ndarray,
                  t: float,
                  agents: list[AgentObservation] = ()) -> tuple[np.ndarray, dict]:
        """Run one full planning cycle; returns (velocity command, record).

        ``agents`` carries the body-frame odometry of known dynamic agents,
        used to advance the egocircle in time when scoring trajectories.
        Gap detection, tracking, and feasibility rely on the scan alone.
        """
        cfg = self.cfg
        st = self.state
        waypoint = np.asarray(waypoint, float)
        agents = list(agents)
        dt = 0.0 if st.last_t is None else t - st.last_t
        if dt > 0:
            st.frame.advance(ego.v, ego.omega, dt)
        st.last_t = t

        raw = detect_raw_gaps(scan, cfg.radial_jump_threshold, cfg.sentinel_tol)
        gaps = simplify_gaps(raw, scan, r_infl=cfg.r_infl,
                             merge_tol_beams=cfg.merge_tol_beams,
                             coverage_tol=cfg.coverage_tol)

        points = []
        owners = []
        for gi, g in enumerate(gaps):
            points.append(g.left.point)
            owners.append((gi, "left"))
            points.append(g.right.point)
            owners.append((gi, "right"))
        assoc, ids = st.tracker.step(points, ego, dt, t)
        keys: list[tuple] = [(None, None)] * len(gaps)
        for (gi, side), mid in zip(owners, ids):
            l, r = keys[gi]
            keys[gi] = (mid, r) if side == "left" else (l, mid)
        dead = set(assoc.deaths)

        tracked = self._prepare_gaps(gaps, keys, scan, ego, waypoint)

        moving_agents = [ag for ag in agents
                         if np.linalg.norm(ag.velocity) > cfg.v_dyn_threshold]
        static_pts = extract_static_points(scan, moving_agents,
                                           sentinel_tol=cfg.sentinel_tol)

        current_ok, reason = self._current_status(t, tracked, static_pts,
                                                  moving_agents, waypoint, dead)

        candidates: list[Candidate] = []
        diags: list[dict] = []
        decision = SwitchDecision(action="keep", reason=reason)
        if not current_ok:
            for tg in tracked:
                cand, diag = self._synthesize_candidate(tg, waypoint, static_pts,
                                                        moving_agents)
                diags.append(diag)
                if cand is not None:
                    candidates.append(cand)
            decision = should_switch(False, reason, candidates)
            if decision.action == "switch":
                best = min((c for c in candidates if math.isfinite(c.cost)),
                           key=lambda c: c.cost)
                st.trajectory = best.trajectory
                st.adoption_time = t
                st.frame = _Frame()
                st.infeasible_streak = 0
                st.switch_log.append((t, reason, best.gap_key))
            else:
                st.trajectory = None
                st.infeasible_streak = 0

        if st.trajectory is not None:
            tau = t - st.adoption_time
            command = st.frame.vector(st.trajectory.command_at(tau))
        else:
            command = self._fallback_command(scan, moving_agents)
        speed = float(np.linalg.norm(command))
        if speed > cfg.v_max:
            command = command * (cfg.v_max / speed)

        record = {
            "t": t,
            "ego": {"v": ego.v.tolist(), "a": ego.a.tolist(), "omega": ego.omega},
            "n_gaps": len(gaps),
            "gaps": [
                {
                    "key": list(tg.key),
                    "kind": tg.gap.kind.value,
                    "left": tg.p_left.tolist(),
                    "right": tg.p_right.tolist(),
                    "v_left": tg.v_left.tolist(),
                    "v_right": tg.v_right.tolist(),
                    "event": tg.prop.event.value if tg.prop else None,
                    "t_terminal": tg.prop.t_terminal if tg.prop else None,
                    "feasible": tg.feasible,
                }
                for tg in tracked
            ],
            "models": [
                {
                    "id": m.model_id,
                    "x": m.x.tolist(),
                    "innovation": None if m.last_innovation is None
                    else m.last_innovation.tolist(),
                }
                for m in sorted(st.tracker.models.values(), key=lambda m: m.model_id)
            ],
            "births": assoc.births,
            "deaths": assoc.deaths,
            "decision": {"action": decision.action, "reason": decision.reason,
                         "target": list(decision.target) if decision.target else None},
            "candidates": diags,
            "command": command.tolist(),
            "waypoint": waypoint.tolist(),
        }
        return command, record
