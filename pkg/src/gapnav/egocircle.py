"""Body-frame range scans and instantaneous gap extraction.

The egocircle is the planner's only perception input: a fixed-resolution 1D
range scan in the robot body frame.  Free space shows up either as a run of
beams at the sensor's max range (a swept gap) or as a large range jump
between neighboring beams (a radial gap).  Swept gaps have good line-of-sight
properties, so simplification absorbs radial gaps into adjacent swept regions
where possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

import numpy as np

TWO_PI = 2.0 * math.pi


class InvalidScanError(ValueError):
    """Raised for scans that violate the egocircle contract."""


@dataclass(frozen=True)
class EgoCircle:
    """Uniformly spaced 1D range scan in the robot body frame.

    Beam i points along ``angle_min + i * (angle_max - angle_min) / (n - 1)``.
    Ranges equal to ``max_range`` (within a small tolerance) are the
    sensed-free sentinel.  A scan whose field of view reaches a full turn is
    treated as circular: the last beam duplicates the first direction.
    """

    ranges: np.ndarray
    angle_min: float
    angle_max: float
    max_range: float

    def __post_init__(self):
        r = np.asarray(self.ranges, dtype=float)
        object.__setattr__(self, "ranges", r)
        if r.ndim != 1 or r.size < 2:
            raise InvalidScanError("scan needs at least two beams")
        if not np.all(np.isfinite(r)):
            raise InvalidScanError("scan contains non-finite ranges")
        if np.any(r <= 0.0) or np.any(r > self.max_range * (1 + 1e-12)):
            raise InvalidScanError("ranges must lie in (0, max_range]")
        if not self.angle_max > self.angle_min:
            raise InvalidScanError("angle_max must exceed angle_min")

    @property
    def n_beams(self) -> int:
        return int(self.ranges.size)

    @property
    def fov(self) -> float:
        return self.angle_max - self.angle_min

    @property
    def is_full_circle(self) -> bool:
        return self.fov >= TWO_PI - 1e-9

    @property
    def angle_increment(self) -> float:
        return self.fov / (self.n_beams - 1)

    def angles(self) -> np.ndarray:
        return self.angle_min + np.arange(self.n_beams) * self.angle_increment

    def beam_angle(self, i: int) -> float:
        return self.angle_min + i * self.angle_increment

    def point(self, i: int) -> np.ndarray:
        a = self.beam_angle(i)
        r = float(self.ranges[i])
        return np.array([r * math.cos(a), r * math.sin(a)])

    def points(self) -> np.ndarray:
        a = self.angles()
        return np.stack([self.ranges * np.cos(a), self.ranges * np.sin(a)], axis=1)

    def free_mask(self, tol: float = 1e-6) -> np.ndarray:
        return self.ranges >= self.max_range - tol


class GapKind(Enum):
    RADIAL = "radial"
    SWEPT = "swept"


@dataclass(frozen=True)
class GapPoint:
    """One side of a gap: a beam index with polar and Cartesian coordinates."""

    beam: int
    bearing: float
    range: float

    @property
    def point(self) -> np.ndarray:
        return np.array(
            [self.range * math.cos(self.bearing), self.range * math.sin(self.bearing)]
        )

    @staticmethod
    def from_scan(scan: EgoCircle, beam: int) -> "GapPoint":
        return GapPoint(beam=beam, bearing=scan.beam_angle(beam), range=float(scan.ranges[beam]))


@dataclass(frozen=True)
class Gap:
    """A free span bounded by a right and a left point.

    Sweeping counterclockwise from the right bearing crosses the free span
    and reaches the left bearing.  For circular scans the span may wrap, so
    the left bearing can be numerically smaller than the right one; use
    :meth:`width` for the unwrapped angular extent.
    """

    left: GapPoint
    right: GapPoint
    kind: GapKind

    def width(self) -> float:
        w = self.left.bearing - self.right.bearing
        while w < 0.0:
            w += TWO_PI
        return w

    def chord(self) -> float:
        return float(np.linalg.norm(self.left.point - self.right.point))

    def center_bearing(self) -> float:
        return self.right.bearing + 0.5 * self.width()


def _unique_beam_count(scan: EgoCircle) -> int:
    # On a full circle the last beam repeats the first direction.
    return scan.n_beams - 1 if scan.is_full_circle else scan.n_beams


def _free_runs(free: np.ndarray, circular: bool) -> list[tuple[int, int]]:
    """Maximal runs of True values as (start, stop) inclusive index pairs.

    Circular runs may wrap, in which case start > stop.
    """
    n = free.size
    if not np.any(free):
        return []
    if np.all(free):
        return [(0, n - 1)]
    starts = np.flatnonzero(free & ~np.roll(free, 1))
    stops = np.flatnonzero(free & ~np.roll(free, -1))
    if not circular:
        if free[0]:
            starts = np.concatenate([[0], starts[starts != 0]])
        if free[-1]:
            stops = np.concatenate([stops[stops != n - 1], [n - 1]])
        starts.sort()
        stops.sort()
        return list(zip(starts.tolist(), stops.tolist()))
    # Circular: pair each start with the first stop at or after it (mod n).
    runs = []
    stops_sorted = sorted(stops.tolist())
    for s in sorted(starts.tolist()):
        candidates = [e for e in stops_sorted if e >= s]
        e = candidates[0] if candidates else stops_sorted[0]
        runs.append((s, e))
    return runs


def detect_raw_gaps(scan: EgoCircle, radial_jump_threshold: float = 1.0,
                    sentinel_tol: float = 1e-6) -> list[Gap]:
    """Extract instantaneous gaps from one scan.

    Swept gaps cover each maximal run of beams at max range; their endpoints
    are the bounding obstacle beams (or the run's own boundary beam at a scan
    edge).  Radial gaps arise where neighboring non-free beams differ in
    range by at least ``radial_jump_threshold``.  The right point always
    carries the lower bearing of the free span; on circular scans a run
    crossing the seam yields a single gap.

    Returned gaps never share interior free beams.
    """
    if radial_jump_threshold <= 0:
        raise ValueError("radial_jump_threshold must be positive")
    n = _unique_beam_count(scan)
    if n < 2:
        raise InvalidScanError("scan needs at least two unique beams")
    circular = scan.is_full_circle
    free = scan.free_mask(sentinel_tol)[:n]
    ranges = scan.ranges[:n]

    gaps: list[Gap] = []
    for start, stop in _free_runs(free, circular):
        if circular and np.all(free):
            right_beam, left_beam = 0, n - 1
        else:
            if circular:
                right_beam = (start - 1) % n
                left_beam = (stop + 1) % n
            else:
                right_beam = start - 1 if start > 0 else start
                left_beam = stop + 1 if stop < n - 1 else stop
        gaps.append(
            Gap(
                left=GapPoint.from_scan(scan, left_beam),
                right=GapPoint.from_scan(scan, right_beam),
                kind=GapKind.SWEPT,
            )
        )

    pair_count = n if circular else n - 1
    for i in range(pair_count):
        j = (i + 1) % n
        if free[i] or free[j]:
            continue  # jumps into free space belong to the swept gap
        if abs(ranges[j] - ranges[i]) >= radial_jump_threshold:
            gaps.append(
                Gap(
                    left=GapPoint.from_scan(scan, j),
                    right=GapPoint.from_scan(scan, i),
                    kind=GapKind.RADIAL,
                )
            )

    gaps.sort(key=lambda g: (g.right.beam, g.left.beam))
    return gaps


def _interior_beams(gap: Gap, n: int, circular: bool) -> set[int]:
    """Free beams strictly between the gap endpoints (empty for radial gaps)."""
    r, l = gap.right.beam, gap.left.beam
    if gap.kind is GapKind.RADIAL:
        return set()
    if circular:
        if r == 0 and l == n - 1 and gap.width() > TWO_PI - 0.5:
            return set(range(n))
        beams = set()
        i = (r + 1) % n
        while i != l:
            beams.add(i)
            i = (i + 1) % n
        return beams
    return set(range(r + 1, l))


def _beam_distance(a: int, b: int, n: int, circular: bool) -> int:
    d = abs(a - b)
    if circular:
        d = min(d, n - d)
    return d


def _min_passable(gap: Gap, r_infl: float) -> bool:
    """Can the inflated robot fit through this gap at all?

    The chord between the endpoints must exceed the inflated diameter.
    Swept gaps additionally need enough angular width at the nearer
    endpoint range, which is the binding constraint when both endpoints
    sit at similar ranges.  A span of half a turn or more is not a passage
    between two obstacle edges but open space around one; it is always
    passable.
    """
    if gap.width() >= math.pi:
        return True
    if gap.chord() < 2.0 * r_infl:
        return False
    if gap.kind is GapKind.SWEPT:
        r_near = min(gap.left.range, gap.right.range)
        if r_near <= r_infl:
            return False
        if gap.width() < 2.0 * math.asin(min(1.0, r_infl / r_near)):
            return False
    return True


def simplify_gaps(raw: list[Gap], scan: EgoCircle, *, r_infl: float = 0.25,
                  merge_tol_beams: int = 2, coverage_tol: float = 1e-3) -> list[Gap]:
    """Merge radial gaps into neighboring swept regions and drop tight gaps.

    A radial gap within ``merge_tol_beams`` of a swept gap extends that swept
    gap to the union of their beam spans.  Two swept gaps separated by a
    short obstacle island merge only when the island is at least as deep as
    the would-be endpoints, so real obstacles are never swallowed.  Gaps the
    robot cannot fit through (inflated radius ``r_infl``) are dropped.
    """
    if not raw:
        return []
    n = _unique_beam_count(scan)
    circular = scan.is_full_circle

    swept = [g for g in raw if g.kind is GapKind.SWEPT]
    radial = [g for g in raw if g.kind is GapKind.RADIAL]

    # Absorb radial gaps into adjacent swept gaps (union of beam spans).
    for rg in radial:
        merged = False
        for k, sg in enumerate(swept):
            if _beam_distance(rg.left.beam, sg.right.beam, n, circular) <= merge_tol_beams:
                swept[k] = replace(sg, right=rg.right)
                merged = True
                break
            if _beam_distance(rg.right.beam, sg.left.beam, n, circular) <= merge_tol_beams:
                swept[k] = replace(sg, left=rg.left)
                merged = True
                break
        if not merged:
            swept.append(rg)  # standalone radial gap survives as-is

    swept.sort(key=lambda g: (g.right.beam, g.left.beam))

    # Merge swept gaps across short, deep-enough islands.
    merged_out: list[Gap] = []
    for g in swept:
        if merged_out:
            prev = merged_out[-1]
            d = _beam_distance(g.right.beam, prev.left.beam, n, circular)
            if prev.kind is GapKind.SWEPT and g.kind is GapKind.SWEPT and d <= merge_tol_beams:
                lo, hi = prev.left.beam, g.right.beam
                island = range(lo, hi + 1) if lo <= hi else \
                    list(range(lo, n)) + list(range(0, hi + 1))
                depth_ok = all(
                    scan.ranges[i % n] >= min(prev.right.range, g.left.range) - coverage_tol
                    for i in island
                )
                if depth_ok:
                    merged_out[-1] = replace(prev, left=g.left)
                    continue
        merged_out.append(g)

    return [g for g in merged_out if _min_passable(g, r_infl)]


def load_scan_log(path) -> Iterator[tuple[float, EgoCircle]]:
    """Iterate (timestamp, scan) pairs from a JSON-lines scan log.

    Each line holds one scan: ``{"t": ..., "angle_min": ..., "angle_max": ...,
    "max_range": ..., "ranges": [...]}``.
    """
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                scan = EgoCircle(
                    ranges=np.asarray(rec["ranges"], dtype=float),
                    angle_min=float(rec["angle_min"]),
                    angle_max=float(rec["angle_max"]),
                    max_range=float(rec["max_range"]),
                )
                yield float(rec["t"]), scan
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidScanError(f"{path}:{line_no}: bad scan record: {exc}") from exc


def scan_record(t: float, scan: EgoCircle) -> dict:
    """Serializable form of one scan for logs and traces."""
    return {
        "t": t,
        "angle_min": scan.angle_min,
        "angle_max": scan.angle_max,
        "max_range": scan.max_range,
        "ranges": scan.ranges.tolist(),
    }
