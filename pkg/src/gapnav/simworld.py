"""Deterministic 2D world: disc agents, wall segments, lidar, benchmark trials.

The ego robot is a first-order holonomic point mass whose body frame stays
world-aligned (zero yaw rate), so commands are world-frame velocities and
scans are cast from the robot position with beam zero pointing along the
world x axis offset by the field of view.  Everything is seeded and stepped
in fixed order, so a trial is a pure function of its config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import PlannerConfig, SimConfig
from .egocircle import EgoCircle, scan_record
from .planner import AgentObservation, Planner
from .tracking import EgoMotion


@dataclass
class Agent:
    """Circular agent moving at constant velocity or between waypoints."""

    center: np.ndarray
    radius: float
    velocity: np.ndarray
    waypoints: list | None = None
    speed: float = 0.0
    _wp_index: int = 0

    def advance(self, dt: float) -> None:
        if self.waypoints:
            target = np.asarray(self.waypoints[self._wp_index], float)
            delta = target - self.center
            dist = float(np.linalg.norm(delta))
            if dist < max(self.speed * dt, 1e-6):
                self.center = target.copy()
                self._wp_index = (self._wp_index + 1) % len(self.waypoints)
                return
            self.velocity = self.speed * delta / dist
        self.center = self.center + self.velocity * dt


@dataclass
class WorldState:
    agents: list
    walls: list                      # segments as (a, b) point pairs
    ego_pos: np.ndarray
    ego_vel: np.ndarray
    t: float = 0.0
    clamp_warnings: int = 0


def raycast_scan(world: WorldState, fov: float, n_beams: int,
                 max_range: float) -> EgoCircle:
    """Exact analytic lidar: nearest ray-circle / ray-segment hit per beam."""
    if n_beams < 2:
        raise ValueError("need at least two beams")
    angle_min = -fov / 2.0
    angle_max = fov / 2.0
    angles = angle_min + np.arange(n_beams) * (fov / (n_beams - 1))
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    o = world.ego_pos
    best = np.full(n_beams, max_range)

    for ag in world.agents:
        oc = ag.center - o
        b = dirs @ oc
        c = float(oc @ oc) - ag.radius**2
        disc = b * b - c
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t_near = b - sq
        t_far = b + sq
        t_hit = np.where(t_near > 1e-9, t_near, np.where(t_far > 1e-9, t_far, np.inf))
        t_hit = np.where(ok, t_hit, np.inf)
        best = np.minimum(best, t_hit)

    for a, bpt in world.walls:
        a = np.asarray(a, float)
        bpt = np.asarray(bpt, float)
        seg = bpt - a
        ao = a - o
        denom = dirs[:, 0] * (-seg[1]) - dirs[:, 1] * (-seg[0])
        safe = np.abs(denom) > 1e-12
        t_ray = np.where(safe, (ao[0] * (-seg[1]) - ao[1] * (-seg[0])) / denom, np.inf)
        s_seg = np.where(safe, (dirs[:, 0] * ao[1] - dirs[:, 1] * ao[0]) / denom, -1.0)
        hit = safe & (t_ray > 1e-9) & (s_seg >= 0.0) & (s_seg <= 1.0)
        best = np.minimum(best, np.where(hit, t_ray, np.inf))

    return EgoCircle(ranges=np.clip(best, 1e-6, max_range),
                     angle_min=angle_min, angle_max=angle_max, max_range=max_range)


def step_world(world: WorldState, command: np.ndarray, dt: float,
               v_max: float) -> WorldState:
    """Advance ego (first-order holonomic) and agents by dt."""
    cmd = np.asarray(command, float)
    speed = float(np.linalg.norm(cmd))
    warnings = world.clamp_warnings
    if speed > v_max + 1e-9:
        cmd = cmd * (v_max / speed)
        warnings += 1
    agents = []
    for ag in world.agents:
        ag2 = Agent(center=ag.center.copy(), radius=ag.radius,
                    velocity=ag.velocity.copy(), waypoints=ag.waypoints,
                    speed=ag.speed, _wp_index=ag._wp_index)
        ag2.advance(dt)
        agents.append(ag2)
    return WorldState(agents=agents, walls=world.walls,
                      ego_pos=world.ego_pos + cmd * dt, ego_vel=cmd.copy(),
                      t=world.t + dt, clamp_warnings=warnings)


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return float(np.linalg.norm(p - a))
    s = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + s * ab)))


def check_collision(world: WorldState, robot_radius: float) -> str | None:
    """Returns "dynamic", "static", or None.  Tangency does not collide."""
    for ag in world.agents:
        if np.linalg.norm(world.ego_pos - ag.center) < ag.radius + robot_radius:
            return "dynamic"
    for a, b in world.walls:
        if _point_segment_distance(world.ego_pos, np.asarray(a, float),
                                   np.asarray(b, float)) < robot_radius:
            return "static"
    return None


CATEGORIES = ("static", "shrinking", "expanding")
SPEEDS = (0.15, 0.30, 0.45)
FOVS = (180.0, 270.0, 360.0)


@dataclass(frozen=True)
class TrialConfig:
    seed: int
    category: str = "static"
    speed: float = 0.30
    fov_deg: float = 360.0

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if not any(abs(self.speed - s) < 1e-9 for s in SPEEDS):
            raise ValueError(f"speed must be one of {SPEEDS}")
        if not any(abs(self.fov_deg - f) < 1e-9 for f in FOVS):
            raise ValueError(f"fov must be one of {FOVS}")

    def to_dict(self) -> dict:
        return {"seed": self.seed, "category": self.category,
                "speed": self.speed, "fov_deg": self.fov_deg}


@dataclass(frozen=True)
class TrialResult:
    outcome: str                    # success | dynamic_collision | static_collision | timeout | error
    t_end: float
    min_agent_clearance: float
    n_switches: int
    passed_before_closure: bool | None
    config: TrialConfig
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "t_end": self.t_end,
            "min_agent_clearance": self.min_agent_clearance,
            "n_switches": self.n_switches,
            "passed_before_closure": self.passed_before_closure,
            "detail": self.detail,
            **self.config.to_dict(),
        }


def spawn_single_gap_world(cfg: TrialConfig, sim: SimConfig,
                           rng: np.random.Generator) -> tuple[WorldState, np.ndarray, dict]:
    """Agent pair realizing the trial's gap category ahead of the robot."""
    D = rng.uniform(3.0, 4.5)
    W = rng.uniform(1.6, 2.6)
    y0 = rng.uniform(-0.5, 0.5)
    R = sim.agent_radius
    up = np.array([D, y0 + W / 2 + R])
    dn = np.array([D, y0 - W / 2 - R])
    if cfg.category == "static":
        v_up = np.zeros(2)
        v_dn = np.zeros(2)
    elif cfg.category == "shrinking":
        v_up = np.array([0.0, -cfg.speed])
        v_dn = np.array([0.0, cfg.speed])
    else:
        v_up = np.array([0.0, cfg.speed])
        v_dn = np.array([0.0, -cfg.speed])
    agents = [Agent(center=up, radius=R, velocity=v_up),
              Agent(center=dn, radius=R, velocity=v_dn)]
    world = WorldState(agents=agents, walls=[], ego_pos=np.zeros(2),
                       ego_vel=np.zeros(2))
    goal = np.array([D + 2.5, y0])
    geometry = {"D": D, "W": W, "y0": y0}
    return world, goal, geometry


def run_trial(cfg: TrialConfig, planner_cfg: PlannerConfig | None = None,
              sim_cfg: SimConfig | None = None,
              record_sink=None) -> TrialResult:
    """Run one seeded scan-plan-step trial to success, collision, or timeout.

    ``record_sink`` receives serializable dicts (scan, plan, world, result)
    in a deterministic order when given.
    """
    planner_cfg = planner_cfg or PlannerConfig()
    sim_cfg = sim_cfg or SimConfig()
    rng = np.random.default_rng(cfg.seed)
    world, goal, geometry = spawn_single_gap_world(cfg, sim_cfg, rng)

    if record_sink is not None:
        record_sink({"type": "trial_config", **cfg.to_dict(),
                     "geometry": geometry, "goal": goal.tolist()})

    planner = Planner(planner_cfg)
    fov = math.radians(cfg.fov_deg)
    control_dt = 1.0 / sim_cfg.control_rate
    steps_per_scan = max(1, int(round(sim_cfg.control_rate / sim_cfg.scan_rate)))
    n_steps = int(round(sim_cfg.timeout / control_dt))

    command = np.zeros(2)
    prev_scan_vel = np.zeros(2)
    scan_dt = steps_per_scan * control_dt
    min_clear = math.inf
    crossed_x_at = None
    outcome = "timeout"
    detail = ""

    # Closure reference for shrinking trials: time at which the agent pair
    # stops fitting the inflated robot.
    closure_time = None
    if cfg.category == "shrinking":
        gap_w = geometry["W"]
        closure_time = max(0.0, (gap_w - 2 * planner_cfg.r_infl) / (2 * cfg.speed))

    try:
        for k in range(n_steps):
            if k % steps_per_scan == 0:
                scan_world = raycast_scan(world, fov, sim_cfg.n_beams,
                                          sim_cfg.max_range)
                accel = (world.ego_vel - prev_scan_vel) / scan_dt if k else np.zeros(2)
                ego = EgoMotion(v=world.ego_vel.copy(), a=accel, omega=0.0)
                prev_scan_vel = world.ego_vel.copy()
                to_goal = goal - world.ego_pos
                dist_goal = float(np.linalg.norm(to_goal))
                if dist_goal > planner_cfg.waypoint_lookahead:
                    wp = to_goal * (planner_cfg.waypoint_lookahead / dist_goal)
                else:
                    wp = to_goal
                observations = [
                    AgentObservation(center=ag.center - world.ego_pos,
                                     radius=ag.radius, velocity=ag.velocity)
                    for ag in world.agents
                ]
                command, record = planner.plan_step(scan_world, ego, wp, world.t,
                                                    observations)
                if record_sink is not None:
                    record_sink({"type": "scan", **scan_record(world.t, scan_world)})
                    record["type"] = "plan"
                    record_sink(record)
                    record_sink({
                        "type": "world", "t": world.t,
                        "ego": world.ego_pos.tolist(),
                        "ego_vel": world.ego_vel.tolist(),
                        "agents": [[ag.center.tolist(), ag.radius,
                                    ag.velocity.tolist()] for ag in world.agents],
                    })

            world = step_world(world, command, control_dt, planner_cfg.v_max)
            for ag in world.agents:
                clear = float(np.linalg.norm(world.ego_pos - ag.center)
                              - ag.radius - planner_cfg.robot_radius)
                min_clear = min(min_clear, clear)
            hit = check_collision(world, planner_cfg.robot_radius)
            if hit is not None:
                outcome = f"{hit}_collision"
                break
            if crossed_x_at is None and world.ego_pos[0] > geometry["D"]:
                crossed_x_at = world.t
            if np.linalg.norm(world.ego_pos - goal) < sim_cfg.goal_tol:
                outcome = "success"
                break
    except Exception as exc:  # a planner bug must not kill the batch
        outcome = "error"
        detail = f"{type(exc).__name__}: {exc}"

    passed = None
    if closure_time is not None and crossed_x_at is not None:
        passed = crossed_x_at <= closure_time
    result = TrialResult(outcome=outcome, t_end=world.t,
                         min_agent_clearance=min_clear,
                         n_switches=len(planner.state.switch_log),
                         passed_before_closure=passed, config=cfg,
                         detail=detail)
    if record_sink is not None:
        record_sink({"type": "result", **result.to_dict()})
    return result


def corridor_world(rng: np.random.Generator, sim: SimConfig, *,
                   length: float = 20.0, width: float = 10.0,
                   agent_density: float = 0.035) -> tuple[WorldState, np.ndarray, int]:
    """Procedural corridor with waypoint agents at the given areal density."""
    area = length * width
    n_agents = int(round(agent_density * area))
    walls = [
        ((0.0, -width / 2), (length, -width / 2)),
        ((0.0, width / 2), (length, width / 2)),
    ]
    agents = []
    for _ in range(n_agents):
        start = np.array([rng.uniform(2.0, length - 1.0),
                          rng.uniform(-width / 2 + 1.0, width / 2 - 1.0)])
        dest = np.array([rng.uniform(1.0, length - 1.0),
                         rng.uniform(-width / 2 + 1.0, width / 2 - 1.0)])
        speed = float(rng.choice(SPEEDS))
        agents.append(Agent(center=start, radius=sim.agent_radius,
                            velocity=np.zeros(2), waypoints=[dest, start],
                            speed=speed))
    world = WorldState(agents=agents, walls=walls,
                       ego_pos=np.array([0.7, 0.0]), ego_vel=np.zeros(2))
    goal = np.array([length - 0.7, 0.0])
    return world, goal, n_agents


def run_benchmark(trials: int = 100, fovs=(360.0,), base_seed: int = 0,
                  planner_cfg: PlannerConfig | None = None,
                  sim_cfg: SimConfig | None = None,
                  jobs: int = 1, trial_runner=None) -> dict:
    """Trial batch spanning all category/speed combinations per field of view.

    Seeds are assigned deterministically from ``base_seed``; rerunning with
    the same arguments reproduces the summary exactly.
    """
    trial_runner = trial_runner or run_trial
    configs = []
    for fov in fovs:
        for i in range(trials):
            cat = CATEGORIES[i % 3]
            speed = SPEEDS[(i // 3) % 3]
            configs.append(TrialConfig(seed=base_seed + i, category=cat,
                                       speed=speed, fov_deg=fov))
    if jobs > 1:
        import multiprocessing as mp
        with mp.Pool(jobs) as pool:
            results = pool.starmap(
                trial_runner, [(c, planner_cfg, sim_cfg) for c in configs])
    else:
        results = [trial_runner(c, planner_cfg, sim_cfg) for c in configs]

    summary: dict = {"trials": len(results), "by_combo": {}, "outcomes": {}}
    for res in results:
        combo = f"fov{int(res.config.fov_deg)}/{res.config.category}/{res.config.speed}"
        bucket = summary["by_combo"].setdefault(
            combo, {o: 0 for o in ("success", "dynamic_collision",
                                   "static_collision", "timeout", "error")})
        bucket[res.outcome] += 1
        summary["outcomes"][res.outcome] = summary["outcomes"].get(res.outcome, 0) + 1
    summary["collision_rate"] = (
        (summary["outcomes"].get("dynamic_collision", 0)
         + summary["outcomes"].get("static_collision", 0)) / max(1, len(results)))
    summary["results"] = [r.to_dict() for r in results]
    return summary
