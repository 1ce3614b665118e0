"""Harmonic potential field synthesis over a navigable gap.

The field is a weighted sum of logarithmic terms, one centered at the gap
goal (an attractive sink with fixed weight) and the rest at discrete points
along the two Bezier sides.  Being a linear combination of harmonic
functions, the potential is harmonic, so it has no interior minima other
than the goal sink: the robot cannot get stuck.

Boundary weights are chosen by a minimum-norm quadratic program that forces
the negative gradient to point into the region, with a positive margin, at
constraint samples placed between the boundary centers and along the
terminal cap.  The resulting flow cannot exit through a side or the cap, and
descending the field with the quadratic goal prefactor of the velocity law
yields trajectories that settle exactly at the goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .navigable import NavigableGap


class FieldSynthesisError(RuntimeError):
    """The inward-flow program is infeasible or failed verification."""


class CenterSingularityError(ValueError):
    """Potential or gradient evaluated on top of a harmonic center."""


@dataclass(frozen=True)
class BoundaryDiscretization:
    """Harmonic centers and inward-flow constraint samples for one gap."""

    centers: np.ndarray         # (K, 2) boundary term centers
    samples: np.ndarray         # (M, 2) constraint sample points
    normals: np.ndarray         # (M, 2) unit inward normals at the samples


@dataclass(frozen=True)
class HarmonicField:
    """Synthesized navigation field: centers, weights, and the goal sink.

    ``centers[0]`` is the goal with ``weights[0] > 0``; the remaining rows
    are boundary centers.  The boundary samples and normals used by the
    synthesis are kept for verification and diagnostics.
    """

    centers: np.ndarray
    weights: np.ndarray
    goal: np.ndarray
    samples: np.ndarray
    normals: np.ndarray

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "weights": self.weights.tolist(),
            "goal": self.goal.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HarmonicField":
        centers = np.asarray(d["centers"], float)
        return cls(centers=centers, weights=np.asarray(d["weights"], float),
                   goal=np.asarray(d["goal"], float),
                   samples=np.zeros((0, 2)), normals=np.zeros((0, 2)))


def _dedupe(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    keep = []
    for p in points:
        if not any(np.linalg.norm(p - q) < tol for q in keep):
            keep.append(p)
    return np.asarray(keep)


def discretize_boundary(navgap: NavigableGap, n_per_side: int = 25,
                        membership_samples: int = 64,
                        corner_exclusion: float = 0.05) -> BoundaryDiscretization:
    """Place harmonic centers and constraint samples on the gap boundary.

    Centers sit at uniform parameter values on each Bezier side, except at
    the shared curve origin: that corner is where the robot starts and the
    flow must be free to depart from it, so it carries no term.  Constraint
    samples sit at the parameter midpoints between consecutive grid values
    (including the origin-adjacent midpoint), plus midpoints of a uniform
    subdivision of the terminal cap, which carries samples but no centers.
    Inward normals are unit normals of the local tangent, oriented by the
    region membership test.

    Samples closer than ``corner_exclusion`` to the curve origin are
    dropped: the wedge there is thinner than any probe can resolve and lies
    inside the robot's own starting footprint.
    """
    if n_per_side < 2:
        raise ValueError("need at least two centers per side")
    u_grid = np.linspace(0.0, 1.0, n_per_side)
    u_centers = u_grid[1:]
    u_mid = 0.5 * (u_grid[:-1] + u_grid[1:])
    # The first interval meets the corner where the two sides join; the flow
    # varies fastest there, so it gets extra constraint samples.
    h0 = u_grid[1]
    u_samples = np.sort(np.concatenate([u_mid, h0 * np.array([0.125, 0.25, 0.75])]))

    centers_list = []
    samples_list = []
    normals_raw = []
    for side in (navgap.left, navgap.right):
        span = np.linalg.norm(side.point(1.0) - side.origin)
        if span < 1e-9:
            centers_list.append(side.point(1.0)[None, :])
            continue
        centers_list.append(side.point(u_centers))
        pts = side.point(u_samples)
        tans = side.tangent(u_samples)
        samples_list.append(pts)
        normals_raw.append(tans)

    cap_a, cap_b = navgap.cap_segment()
    cap_len = np.linalg.norm(cap_b - cap_a)
    if cap_len > 1e-9:
        s = (np.arange(n_per_side) + 0.5) / n_per_side
        cap_pts = cap_a[None, :] + s[:, None] * (cap_b - cap_a)[None, :]
        samples_list.append(cap_pts)
        normals_raw.append(np.tile(cap_b - cap_a, (len(cap_pts), 1)))

    centers = _dedupe(np.concatenate(centers_list))
    samples = np.concatenate(samples_list)
    tangents = np.concatenate(normals_raw)
    far_enough = np.linalg.norm(samples - navgap.left.origin[None, :], axis=1) \
        >= corner_exclusion
    samples = samples[far_enough]
    tangents = tangents[far_enough]

    # Orient each tangent normal toward the region interior.
    tn = tangents / np.linalg.norm(tangents, axis=1, keepdims=True)
    normals = np.stack([-tn[:, 1], tn[:, 0]], axis=1)
    for delta in (1e-3, 1e-2, 5e-2):
        probe_plus = navgap.contains_many(samples + delta * normals, membership_samples)
        probe_minus = navgap.contains_many(samples - delta * normals, membership_samples)
        decided = probe_plus != probe_minus
        normals[probe_minus & decided] *= -1.0
        if np.all(probe_plus | probe_minus):
            break
    return BoundaryDiscretization(centers=centers, samples=samples, normals=normals)


def potential(p: np.ndarray, field: HarmonicField) -> float:
    """Weighted log-distance potential at a point."""
    p = np.asarray(p, float)
    d = np.linalg.norm(field.centers - p[None, :], axis=1)
    if np.any(d < 1e-9):
        raise CenterSingularityError("point coincides with a harmonic center")
    return float(field.weights @ np.log(d))


def gradient(p: np.ndarray, field: HarmonicField) -> np.ndarray:
    """Analytic gradient of the potential."""
    p = np.asarray(p, float)
    diff = p[None, :] - field.centers
    d2 = np.einsum("ij,ij->i", diff, diff)
    if np.any(d2 < 1e-18):
        raise CenterSingularityError("point coincides with a harmonic center")
    return (field.weights / d2) @ diff


def laplacian(p: np.ndarray, field: HarmonicField, h: float = 1e-4) -> float:
    """Five-point-stencil numerical Laplacian of the potential."""
    p = np.asarray(p, float)
    e = np.array([h, 0.0])
    n = np.array([0.0, h])
    return (potential(p + e, field) + potential(p - e, field)
            + potential(p + n, field) + potential(p - n, field)
            - 4.0 * potential(p, field)) / (h * h)


def potential_grid(xs: np.ndarray, ys: np.ndarray, field: HarmonicField):
    """Potential and velocity command sampled on a grid (rows follow ys)."""
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    diff = pts[:, None, :] - field.centers[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    d2 = np.maximum(d2, 1e-18)
    phi = (0.5 * np.log(d2)) @ field.weights
    grad = np.einsum("j,ijk->ik", field.weights, diff / d2[:, :, None])
    pref = np.einsum("ij,ij->i", pts - field.goal, pts - field.goal)
    u = -pref[:, None] * grad
    shape = X.shape
    return phi.reshape(shape), u[:, 0].reshape(shape), u[:, 1].reshape(shape)


def min_norm_inward_weights(G: np.ndarray, h: np.ndarray) -> np.ndarray | None:
    """Least-norm x with G x >= h, or None when infeasible.

    Least-distance programming reduced to nonnegative least squares
    (Lawson & Hanson): solve NNLS on the stacked [G | h] system and read the
    primal solution off the residual.
    """
    m, n = G.shape
    # Row-normalize for conditioning; scaling rows preserves the feasible set.
    scale = np.linalg.norm(np.concatenate([G, h[:, None]], axis=1), axis=1)
    scale[scale < 1e-12] = 1.0
    Gs = G / scale[:, None]
    hs = h / scale
    E = np.concatenate([Gs, hs[:, None]], axis=1).T
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=30 * max(m, n, 10))
    r = E @ u - f
    if abs(r[-1]) < 1e-10:
        return None
    return -r[:-1] / r[-1]


def solve_weights(centers: np.ndarray, samples: np.ndarray, normals: np.ndarray,
                  goal: np.ndarray, *, eps_flow: float = 0.05,
                  goal_weight: float = 1.0, tol: float = 1e-8) -> np.ndarray:
    """Solve the minimum-norm inward-flow program for the boundary weights.

    The goal sink weight is fixed and positive; boundary terms are
    constrained to be repulsive (nonpositive weights), since an attractive
    boundary term would absorb nearby streamlines into the boundary itself.
    Subject to that, the boundary weight norm is minimized while the
    negative field gradient keeps at least ``eps_flow`` inward component at
    every constraint sample.

    The required margin at each sample is ``eps_flow`` capped at half the
    inward flow the goal term alone provides there.  A fixed margin would be
    unattainable: the field decays with distance from the goal, and on
    convex stretches of the boundary repulsive terms can only reduce the
    inward component, so no admissible weight vector can beat the goal-only
    flow by a fixed amount everywhere.  Samples where the goal flow points
    outward get a zero floor, which is exactly where the sources earn their
    keep.

    Returns the full weight vector, goal term first.  Raises
    FieldSynthesisError when the program is infeasible or the post-solve
    residual check fails.
    """
    centers = np.asarray(centers, float)
    samples = np.asarray(samples, float)
    normals = np.asarray(normals, float)
    goal = np.asarray(goal, float)

    diff_b = samples[:, None, :] - centers[None, :, :]
    d2_b = np.maximum(np.einsum("ijk,ijk->ij", diff_b, diff_b), 1e-18)
    # Inward flow of a unit boundary weight at each sample.
    A = -np.einsum("ijk,ik->ij", diff_b / d2_b[:, :, None], normals)
    diff_g = samples - goal[None, :]
    d2_g = np.maximum(np.einsum("ij,ij->i", diff_g, diff_g), 1e-18)
    g_flow = -goal_weight * np.einsum("ij,ij->i", diff_g / d2_g[:, None], normals)

    eps = np.minimum(eps_flow, 0.5 * np.maximum(g_flow, 0.0))

    b = eps - g_flow
    # Solve over source magnitudes m >= 0 with boundary weights -m.
    K = centers.shape[0]
    G = np.concatenate([-A, np.eye(K)])
    h = np.concatenate([b, np.zeros(K)])
    m = min_norm_inward_weights(G, h)
    if m is None:
        raise FieldSynthesisError("inward-flow program infeasible")
    w_boundary = -m
    residual = A @ w_boundary - b
    if residual.min() < -tol:
        raise FieldSynthesisError(
            f"inward-flow residual {residual.min():.2e} below tolerance")
    return np.concatenate([[goal_weight], w_boundary])


def synthesize_field(navgap: NavigableGap, *, n_per_side: int = 25,
                     eps_flow: float = 0.05, goal_weight: float = 1.0,
                     qp_tol: float = 1e-8,
                     membership_samples: int = 64) -> HarmonicField:
    """Discretize a navigable gap and solve for its harmonic field."""
    disc = discretize_boundary(navgap, n_per_side, membership_samples)
    weights = solve_weights(disc.centers, disc.samples, disc.normals,
                            navgap.goal, eps_flow=eps_flow,
                            goal_weight=goal_weight, tol=qp_tol)
    centers = np.concatenate([navgap.goal[None, :], disc.centers])
    return HarmonicField(centers=centers, weights=weights, goal=navgap.goal,
                         samples=disc.samples, normals=disc.normals)


def inward_flow(field: HarmonicField, points: np.ndarray,
                normals: np.ndarray) -> np.ndarray:
    """Inward component of the negative gradient at boundary points."""
    flows = np.empty(len(points))
    for i, (p, n) in enumerate(zip(points, normals)):
        flows[i] = float(-gradient(p, field) @ n)
    return flows


def velocity_command(p: np.ndarray, field: HarmonicField, *, gain: float = 2.0,
                     v_max: float = 0.6) -> np.ndarray:
    """Velocity from the field: goal-quadratic prefactor, gain, speed clamp."""
    p = np.asarray(p, float)
    r2 = float((p - field.goal) @ (p - field.goal))
    if r2 < 1e-18:
        return np.zeros(2)
    u = -gain * r2 * gradient(p, field)
    speed = float(np.linalg.norm(u))
    if speed > v_max:
        u *= v_max / speed
    return u
