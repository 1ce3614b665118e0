"""Dependency-free SVG rendering of traces and benchmark summaries.

Overlays follow one visual convention: the ego robot is a blue dot, agents
are red discs with fading future ghosts, instantaneous gaps are magenta
arcs, navigable-gap Bezier sides are green, gap goals orange, and candidate
and executed trajectories blue.  Charts are plain stacked bars per
field-of-view / category / speed combination.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


class SvgCanvas:
    """Tiny SVG writer with a world-to-screen transform (y up)."""

    def __init__(self, x_range, y_range, width: int = 800):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.scale = width / (self.x1 - self.x0)
        self.width = width
        self.height = int((self.y1 - self.y0) * self.scale)
        self._elems: list[str] = []

    def _pt(self, p) -> tuple[float, float]:
        return ((p[0] - self.x0) * self.scale,
                (self.y1 - p[1]) * self.scale)

    def circle(self, center, radius, *, fill="none", stroke="black",
               width=1.0, opacity=1.0) -> None:
        cx, cy = self._pt(center)
        self._elems.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius * self.scale:.2f}" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="{width}" '
            f'opacity="{opacity:.3f}"/>')

    def dot(self, center, px: float, *, fill="black", opacity=1.0) -> None:
        cx, cy = self._pt(center)
        self._elems.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{px:.2f}" fill="{fill}" '
            f'opacity="{opacity:.3f}"/>')

    def polyline(self, points, *, stroke="blue", width=1.5, dash=None,
                 opacity=1.0) -> None:
        if len(points) < 2:
            return
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(self._pt, points))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self._elems.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}"{dash_attr} opacity="{opacity:.3f}"/>')

    def arc(self, radius, bearing_from, bearing_to, *, stroke="magenta",
            width=2.0, center=(0.0, 0.0)) -> None:
        while bearing_to < bearing_from:
            bearing_to += 2 * math.pi
        thetas = np.linspace(bearing_from, bearing_to, 32)
        pts = [(center[0] + radius * math.cos(a), center[1] + radius * math.sin(a))
               for a in thetas]
        self.polyline(pts, stroke=stroke, width=width)

    def text(self, p, s, *, size=12, fill="black") -> None:
        x, y = self._pt(p)
        self._elems.append(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
                           f'fill="{fill}" font-family="sans-serif">{s}</text>')

    def rect_px(self, x, y, w, h, *, fill="steelblue") -> None:
        self._elems.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" '
                           f'height="{h:.1f}" fill="{fill}"/>')

    def text_px(self, x, y, s, *, size=12, fill="black", anchor="start") -> None:
        self._elems.append(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
                           f'fill="{fill}" text-anchor="{anchor}" '
                           f'font-family="sans-serif">{s}</text>')

    def to_string(self) -> str:
        body = "\n".join(self._elems)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')

    def save(self, path) -> None:
        Path(path).write_text(self.to_string())


def _bezier_points(controls, n=48) -> list:
    c0, c1, c2 = [np.asarray(c, float) for c in controls]
    u = np.linspace(0, 1, n)[:, None]
    pts = (1 - u) ** 2 * c0 + 2 * u * (1 - u) * c1 + u * u * c2
    return pts.tolist()


def render_trace(header: dict, records: list[dict], out_path, *,
                 step: int | None = None, ghost_horizon: float = 3.0) -> None:
    """Overlay of one planning step plus the executed path so far."""
    plans = [r for r in records if r.get("type") == "plan"]
    worlds = [r for r in records if r.get("type") == "world"]
    if not plans or not worlds:
        raise ValueError("trace holds no plan/world records to render")
    if step is None:
        step = max(range(len(plans)),
                   key=lambda i: len(plans[i].get("candidates", [])))
    step = min(max(step, 0), len(plans) - 1)
    plan = plans[step]
    world = min(worlds, key=lambda w: abs(w["t"] - plan["t"]))
    ego = np.asarray(world["ego"], float)

    pts = [ego]
    for c, r, v in world["agents"]:
        pts.append(np.asarray(c, float))
    span = max(6.0, float(np.max(np.abs(np.asarray(pts) - ego))) + 2.0)
    canvas = SvgCanvas((ego[0] - span, ego[0] + span),
                       (ego[1] - span, ego[1] + span), width=800)

    path = np.asarray([w["ego"] for w in worlds if w["t"] <= plan["t"]])
    if len(path) > 1:
        canvas.polyline(path.tolist(), stroke="royalblue", width=1.2, opacity=0.8)

    for c, r, v in world["agents"]:
        c = np.asarray(c, float)
        v = np.asarray(v, float)
        canvas.circle(c, r, fill="crimson", stroke="none", opacity=0.9)
        for f in (0.25, 0.5, 0.75, 1.0):
            canvas.circle(c + v * ghost_horizon * f, r, fill="crimson",
                          stroke="none", opacity=0.25 * (1 - f) + 0.05)

    for g in plan.get("gaps", []):
        left = np.asarray(g["left"], float) + ego
        right = np.asarray(g["right"], float) + ego
        r_arc = 0.5 * (np.linalg.norm(left - ego) + np.linalg.norm(right - ego))
        b0 = math.atan2(right[1] - ego[1], right[0] - ego[0])
        b1 = math.atan2(left[1] - ego[1], left[0] - ego[0])
        canvas.arc(r_arc, b0, b1, center=ego, stroke="magenta", width=2.0)
        canvas.dot(left, 3, fill="magenta")
        canvas.dot(right, 3, fill="magenta")

    for cand in plan.get("candidates", []):
        ng = cand.get("navgap")
        if not ng:
            continue
        for sidename in ("left", "right"):
            pts_b = [np.asarray(p) + ego for p in
                     _bezier_points(ng[sidename])]
            canvas.polyline(pts_b, stroke="seagreen", width=2.0)
        canvas.dot(np.asarray(ng["goal"]) + ego, 4, fill="orange")

    canvas.dot(ego, 5, fill="royalblue")
    canvas.text((ego[0] - span + 0.2, ego[1] + span - 0.4),
                f"t={plan['t']:.2f}s step={step}", size=14)
    canvas.save(out_path)


def render_benchmark_chart(summary: dict, out_path) -> None:
    """Stacked outcome bars per fov/category/speed combination."""
    combos = sorted(summary.get("by_combo", {}).items())
    if not combos:
        raise ValueError("summary holds no combos to chart")
    colors = {
        "success": "#4caf50",
        "dynamic_collision": "#e53935",
        "static_collision": "#8e24aa",
        "timeout": "#fbc02d",
        "error": "#616161",
    }
    bar_w = 34
    gap = 14
    left_pad, top_pad, bottom_pad = 60, 30, 120
    height = 360
    width = left_pad + len(combos) * (bar_w + gap) + 40
    canvas = SvgCanvas((0, 1), (0, 1), width=width)
    canvas.height = height + top_pad + bottom_pad
    canvas._elems.clear()
    canvas.rect_px(0, 0, width, canvas.height, fill="white")

    for i, (name, bucket) in enumerate(combos):
        total = max(1, sum(bucket.values()))
        x = left_pad + i * (bar_w + gap)
        y = top_pad + height
        for outcome in ("success", "timeout", "dynamic_collision",
                        "static_collision", "error"):
            n = bucket.get(outcome, 0)
            if not n:
                continue
            h = height * n / total
            y -= h
            canvas.rect_px(x, y, bar_w, h, fill=colors[outcome])
        canvas.text_px(x + bar_w / 2, top_pad + height + 14, name, size=9,
                       anchor="middle")
    for frac in (0.0, 0.5, 1.0):
        y = top_pad + height * (1 - frac)
        canvas.text_px(left_pad - 8, y + 4, f"{int(frac * 100)}%", size=10,
                       anchor="end")
    ly = top_pad + height + 40
    lx = left_pad
    for outcome, color in colors.items():
        canvas.rect_px(lx, ly, 12, 12, fill=color)
        canvas.text_px(lx + 16, ly + 10, outcome, size=10)
        lx += 150
    Path(out_path).write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{canvas.height}" viewBox="0 0 {width} {canvas.height}">\n'
        + "\n".join(canvas._elems) + "\n</svg>\n")
