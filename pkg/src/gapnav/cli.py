"""Command-line interface: trials, benchmarks, replay, field grids, rendering.

Exit codes: 0 success, 1 usage error, 2 config error, 3 at least one trial
or replay failure (completed work is preserved).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import PlannerConfig, SimConfig
from .egocircle import EgoCircle
from .harmonic import HarmonicField, potential_grid
from .planner import AgentObservation, Planner
from .simworld import FOVS, TrialConfig, run_benchmark, run_trial
from .svg import render_benchmark_chart, render_trace
from .trace import TraceWriter, read_trace
from .tracking import EgoMotion

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_FAILURE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ConfigError(Exception):
    pass


def load_configs(path: str | None) -> tuple[PlannerConfig, SimConfig]:
    """Planner/sim configs from a YAML file with line-precise errors."""
    if path is None:
        return PlannerConfig(), SimConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        planner = PlannerConfig.from_dict(data.get("planner", {}))
        sim = SimConfig.from_dict(data.get("sim", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return planner, sim


def _parse_seeds(args) -> list[int]:
    if args.seeds:
        lo, _, hi = args.seeds.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad --seeds range {args.seeds!r}")
        if hi_i < lo_i:
            raise ConfigError("--seeds range is empty")
        return list(range(lo_i, hi_i + 1))
    return [args.seed]


def cmd_trial(args) -> int:
    planner_cfg, sim_cfg = load_configs(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for seed in _parse_seeds(args):
        cfg = TrialConfig(seed=seed, category=args.category, speed=args.speed,
                          fov_deg=float(args.fov))
        trace_path = out_dir / f"trial_{seed:04d}.jsonl"
        with TraceWriter(trace_path, config={
            "trial": cfg.to_dict(),
            "planner": planner_cfg.to_dict(),
            "sim": sim_cfg.to_dict(),
        }) as writer:
            result = run_trial(cfg, planner_cfg, sim_cfg,
                               record_sink=writer.write)
        print(f"seed {seed}: {result.outcome} (t={result.t_end:.2f}s, "
              f"clearance={result.min_agent_clearance:.3f} m) -> {trace_path}")
        if result.outcome != "success":
            failures += 1
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_benchmark(args) -> int:
    planner_cfg, sim_cfg = load_configs(args.config)
    if args.suite != "single-gap":
        raise ConfigError(f"unknown suite {args.suite!r}")
    fovs = [float(args.fov)] if args.fov else list(FOVS)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = run_benchmark(trials=args.trials, fovs=fovs,
                            base_seed=args.seed, planner_cfg=planner_cfg,
                            sim_cfg=sim_cfg, jobs=args.jobs)
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    chart_path = out_dir / "outcomes.svg"
    render_benchmark_chart(summary, chart_path)
    n_fail = sum(v for k, v in summary["outcomes"].items() if k != "success")
    print(f"{summary['trials']} trials, outcomes: {summary['outcomes']}, "
          f"collision rate {summary['collision_rate']:.3f}")
    print(f"wrote {summary_path} and {chart_path}")
    return EXIT_FAILURE if n_fail else EXIT_OK


def replay_trace(header: dict, records: list[dict]) -> tuple[int, list[dict]]:
    """Re-plan a recorded run and diff the decision stream.

    Returns (number of differing steps, per-step diff records).
    """
    planner = Planner(PlannerConfig.from_dict(header["config"]["planner"]))
    scans = {r["t"]: r for r in records if r.get("type") == "scan"}
    worlds = {r["t"]: r for r in records if r.get("type") == "world"}
    diffs = []
    n = 0
    for rec in records:
        if rec.get("type") != "plan":
            continue
        t = rec["t"]
        scan_rec = scans.get(t)
        world_rec = worlds.get(t)
        if scan_rec is None or world_rec is None:
            raise ValueError(f"trace lacks scan/world records at t={t}")
        scan = EgoCircle(ranges=np.asarray(scan_rec["ranges"], float),
                         angle_min=scan_rec["angle_min"],
                         angle_max=scan_rec["angle_max"],
                         max_range=scan_rec["max_range"])
        ego = EgoMotion(v=np.asarray(rec["ego"]["v"], float),
                        a=np.asarray(rec["ego"]["a"], float),
                        omega=rec["ego"]["omega"])
        ego_pos = np.asarray(world_rec["ego"], float)
        agents = [AgentObservation(center=np.asarray(c, float) - ego_pos,
                                   radius=r, velocity=np.asarray(v, float))
                  for c, r, v in world_rec["agents"]]
        command, new_rec = planner.plan_step(
            scan, ego, np.asarray(rec["waypoint"], float), t, agents)
        fields = ("command", "decision", "n_gaps")
        delta = {f: {"recorded": rec[f], "replayed": new_rec[f]}
                 for f in fields if rec[f] != new_rec[f]}
        if delta:
            n += 1
            diffs.append({"t": t, **delta})
    return n, diffs


def cmd_replay(args) -> int:
    header, records = read_trace(args.trace)
    n, diffs = replay_trace(header, records)
    n_steps = sum(1 for r in records if r.get("type") == "plan")
    print(f"replayed {n_steps} steps: {n} decision diffs")
    if args.out:
        Path(args.out).write_text(json.dumps(diffs, indent=2, sort_keys=True))
        print(f"wrote {args.out}")
    return EXIT_FAILURE if n else EXIT_OK


def cmd_field_grid(args) -> int:
    header, records = read_trace(args.trace)
    fields = []
    for rec in records:
        if rec.get("type") != "plan":
            continue
        for cand in rec.get("candidates", []):
            if "field" in cand:
                fields.append((rec["t"], cand["field"]))
    if not fields:
        raise ConfigError("trace holds no synthesized fields")
    idx = min(max(args.index, 0), len(fields) - 1)
    t, field_dict = fields[idx]
    field = HarmonicField.from_dict(field_dict)

    centers = field.centers
    lo = centers.min(axis=0) - 0.5
    hi = centers.max(axis=0) + 0.5
    res = args.resolution
    # Anchor the lattice on the goal so one sample lands exactly there.
    xs = field.goal[0] + np.arange(math_floor((lo[0] - field.goal[0]) / res),
                                   math_ceil((hi[0] - field.goal[0]) / res) + 1) * res
    ys = field.goal[1] + np.arange(math_floor((lo[1] - field.goal[1]) / res),
                                   math_ceil((hi[1] - field.goal[1]) / res) + 1) * res
    phi, ux, uy = potential_grid(xs, ys, field)
    out = {
        "t": t,
        "index": idx,
        "goal": field.goal.tolist(),
        "xs": xs.tolist(),
        "ys": ys.tolist(),
        "phi": phi.tolist(),
        "ux": ux.tolist(),
        "uy": uy.tolist(),
    }
    Path(args.out).write_text(json.dumps(out, sort_keys=True))
    print(f"wrote {args.out} ({len(xs)}x{len(ys)} grid at t={t:.2f})")
    return EXIT_OK


def math_floor(x: float) -> int:
    import math
    return math.floor(x)


def math_ceil(x: float) -> int:
    import math
    return math.ceil(x)


def cmd_render(args) -> int:
    if args.summary:
        summary = json.loads(Path(args.summary).read_text())
        render_benchmark_chart(summary, args.out)
    else:
        if not args.trace:
            raise ConfigError("render needs --trace or --summary")
        header, records = read_trace(args.trace)
        render_trace(header, records, args.out, step=args.step)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="gapnav",
                     description="Gap-based local planner benchmark tools")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("trial", help="run one or more seeded trials")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", help="inclusive seed range a..b")
    p.add_argument("--category", choices=["static", "shrinking", "expanding"],
                   default="static")
    p.add_argument("--speed", type=float, default=0.30)
    p.add_argument("--fov", choices=["180", "270", "360"], default="360")
    p.add_argument("--out", default="out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("benchmark", help="run a trial suite and summarize")
    p.add_argument("--suite", default="single-gap")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--fov", choices=["180", "270", "360"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("replay", help="re-plan a recorded trace and diff")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("field-grid", help="rasterize a recorded field")
    p.add_argument("--trace", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--resolution", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_field_grid)

    p = sub.add_parser("render", help="render a trace overlay or summary chart")
    p.add_argument("--trace")
    p.add_argument("--summary")
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
