"""Planner and simulator configuration.

All tunables live in one flat dataclass so that trial configs, traces, and
replays can serialize a single dict and reproduce a run exactly.  Values
marked "engineering default" have no principled source; they were tuned on
the benchmark suite and are safe to override.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass(frozen=True)
class PlannerConfig:
    # --- gap detection / simplification ---
    radial_jump_threshold: float = 1.0      # m, range discontinuity that opens a radial gap
    sentinel_tol: float = 1e-6              # m, tolerance on the max-range free sentinel
    merge_tol_beams: int = 2                # beam adjacency for merging gaps
    coverage_tol: float = 1e-3              # m, island depth slack allowed when merging

    # --- robot geometry / kinematics ---
    robot_radius: float = 0.2               # m, physical disc radius
    r_infl: float = 0.25                    # m, inflated radius for gap tests
    v_max: float = 0.6                      # m/s, linear speed limit

    # --- gap point estimation ---
    tau_assoc: float = 0.7                  # m, association gate
    sigma_p: float = 0.01                   # m, per-step position process noise (50 Hz)
    sigma_v: float = 0.015                  # m/s, per-step velocity process noise (50 Hz)
    meas_sigma: float = 0.01                # m, measurement std for the position update
    newborn_vel_sigma: float = 0.5          # m/s, velocity prior std for new models

    # --- categorization / propagation ---
    eps_beta: float = 1e-3                  # rad/s, bearing-rate dead zone
    horizon: float = 5.0                    # s, local propagation horizon
    dt_propagate: float = 0.01              # s, propagation step
    v_point_eps: float = 0.02               # m/s, below this a gap point counts as static

    # --- navigable gap construction ---
    w0_min: float = 0.05                    # lower clamp on the Bezier mid-control weight
    bezier_printed_variant: bool = False    # use the non-Bernstein first basis term
    max_gap_span: float = 2.6               # rad, wider gaps are windowed toward the waypoint

    # --- harmonic field synthesis ---
    n_centers_per_side: int = 25            # harmonic term centers per Bezier side
    eps_flow: float = 0.05                  # inward-flow margin at boundary samples
    goal_weight: float = 1.0                # fixed sink strength at the gap goal
    qp_tol: float = 1e-8                    # post-solve constraint residual tolerance
    boundary_polyline_samples: int = 64     # samples per side for interior membership

    # --- trajectory synthesis / scoring / switching ---
    kappa: float = 2.0                      # field-to-velocity gain before clamping
    eps_goal: float = 0.05                  # m, rollout termination radius at the goal
    dt_traj: float = 0.02                   # s, trajectory pose step (matches control rate)
    lambda_waypoint: float = 1.0            # terminal waypoint-distance weight
    d_max: float = 1.5                      # m, obstacle cost cutoff distance
    v_dyn_threshold: float = 0.1            # m/s, tracked points faster than this are dynamic
    waypoint_lookahead: float = 3.5         # m, straight-line global-plan carrot distance

    def replace(self, **kw) -> "PlannerConfig":
        d = asdict(self)
        d.update(kw)
        return PlannerConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown planner config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SimConfig:
    """World-level knobs for the benchmark simulator."""

    scan_rate: float = 25.0                 # Hz
    control_rate: float = 50.0              # Hz
    n_beams: int = 256
    max_range: float = 6.0                  # m
    fov_deg: float = 360.0
    agent_radius: float = 0.3               # m
    timeout: float = 60.0                   # s
    goal_tol: float = 0.2                   # m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sim config keys: {sorted(unknown)}")
        return cls(**d)
