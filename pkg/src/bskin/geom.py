"""Exact-contract 3D primitives shared by every module.

Vectors are float64 numpy arrays of shape (3,) or (..., 3). All functions
are pure; the batch helpers broadcast over leading axes so the per-point
kernels in encoder/deformer can run vectorized.

Tolerance policy: dimensionless thresholds are module constants, anything
length-like is scaled by the scene diagonal (see Tolerances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS_PARALLEL = 1e-9

_CANONICAL_AXES = np.eye(3)


def vec(x, y, z) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


def vdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise dot product, broadcasting over leading axes."""
    return (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
            + a[..., 2] * b[..., 2])


def vnorm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(vdot(a, a))


def vunit(a: np.ndarray, fallback: np.ndarray | None = None) -> np.ndarray:
    """Unit vector(s); degenerate rows become `fallback` (default: zeros)."""
    n = vnorm(a)
    safe = np.where(n > 0.0, n, 1.0)
    out = a / safe[..., None]
    if np.ndim(n) == 0:
        if n == 0.0:
            return np.zeros(3) if fallback is None else fallback.copy()
        return out
    bad = n == 0.0
    if np.any(bad):
        out = out.copy()
        out[bad] = 0.0 if fallback is None else fallback
    return out


def vcross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast_shapes(np.shape(a), np.shape(b)))
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def most_orthogonal_axis(u: np.ndarray) -> np.ndarray:
    """Canonical axis least aligned with u (deterministic frame seed)."""
    k = int(np.argmin(np.abs(u)))
    return _CANONICAL_AXES[k]


def plane_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed in-plane basis (e1, e2) with e1 x e2 = normal."""
    seed = most_orthogonal_axis(normal)
    e1 = vunit(seed - vdot(seed, normal) * normal)
    e2 = vcross(normal, e1)
    return e1, e2


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.remainder(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w) if np.ndim(a) else (np.pi if w == -np.pi else w)


@dataclass(frozen=True)
class Tolerances:
    """Scene-scaled tolerances, centralized so behavior is unit independent."""

    scene_diagonal: float
    parallel: float = EPS_PARALLEL

    @property
    def coplanar(self) -> float:
        return 1e-7 * self.scene_diagonal

    @property
    def tangency(self) -> float:
        return 1e-7 * self.scene_diagonal

    @property
    def surface(self) -> float:
        return 1e-7 * self.scene_diagonal

    @property
    def cylinder(self) -> float:
        return 1e-9 * self.scene_diagonal


@dataclass(frozen=True)
class Plane:
    """Plane through `point` with unit normal."""

    point: np.ndarray
    unit_normal: np.ndarray

    def __post_init__(self):
        n = float(vnorm(self.unit_normal))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"plane normal not unit length: |n|={n}")

    def signed_distance(self, p: np.ndarray) -> np.ndarray:
        return vdot(p - self.point, self.unit_normal)

    def project(self, p: np.ndarray) -> np.ndarray:
        return p - self.signed_distance(p)[..., None] * self.unit_normal \
            if np.ndim(p) > 1 else p - self.signed_distance(p) * self.unit_normal


@dataclass(frozen=True)
class Circle3:
    """Circle in 3D: center, radius, unit plane normal."""

    center: np.ndarray
    radius: float
    normal: np.ndarray
    tangent: bool = False  # set when produced by a tangential plane/sphere cut

    def frame(self) -> tuple[np.ndarray, np.ndarray]:
        return plane_frame(self.normal)

    def point_at(self, angle: float) -> np.ndarray:
        e1, e2 = self.frame()
        return self.center + self.radius * (math.cos(angle) * e1 + math.sin(angle) * e2)


@dataclass(frozen=True)
class Arc3:
    """Circular arc; angles live in the canonical frame of `plane_normal`.

    The traversal runs from start_angle to end_angle (either direction,
    |end - start| < 2*pi); sampling respects the signed sweep.
    """

    center: np.ndarray
    radius: float
    plane_normal: np.ndarray
    start_angle: float
    end_angle: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("arc radius must be positive")
        if abs(self.end_angle - self.start_angle) >= 2.0 * np.pi:
            raise ValueError("arc sweep must be a proper sub-arc")

    @property
    def sweep(self) -> float:
        return self.end_angle - self.start_angle

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def point_at(self, s: float) -> np.ndarray:
        """Point at normalized position s in [0, 1] along the arc."""
        e1, e2 = plane_frame(self.plane_normal)
        a = self.start_angle + s * self.sweep
        return self.center + self.radius * (math.cos(a) * e1 + math.sin(a) * e2)

    def tangent_at(self, s: float) -> np.ndarray:
        e1, e2 = plane_frame(self.plane_normal)
        a = self.start_angle + s * self.sweep
        t = -math.sin(a) * e1 + math.cos(a) * e2
        return t if self.sweep >= 0 else -t

    def sample(self, n: int) -> np.ndarray:
        e1, e2 = plane_frame(self.plane_normal)
        a = self.start_angle + np.linspace(0.0, 1.0, n) * self.sweep
        return self.center + self.radius * (np.cos(a)[:, None] * e1 + np.sin(a)[:, None] * e2)


@dataclass(frozen=True)
class AxisRotation:
    """Rigid rotation about the axis through axis_point along axis_dir."""

    axis_point: np.ndarray
    axis_dir: np.ndarray
    angle: float

    def __post_init__(self):
        n = float(vnorm(self.axis_dir))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"rotation axis not unit length: |d|={n}")


def rotate_about_axis(p: np.ndarray, r: AxisRotation) -> np.ndarray:
    """Rodrigues rotation of p (shape (3,) or (...,3)) about r."""
    return rotate_points(p, r.axis_point, r.axis_dir, r.angle)


def rotate_points(p: np.ndarray, axis_point: np.ndarray, axis_dir: np.ndarray, angle) -> np.ndarray:
    """Rodrigues rotation; `angle` may broadcast against p's leading axes."""
    if np.ndim(angle) == 0 and float(angle) == 0.0:
        return np.array(p, dtype=float, copy=True)
    v = p - axis_point
    c = np.cos(angle)
    s = np.sin(angle)
    if np.ndim(angle):
        c = np.asarray(c)[..., None]
        s = np.asarray(s)[..., None]
    kxv = vcross(np.broadcast_to(axis_dir, np.shape(v)), v)
    kdv = vdot(v, axis_dir)
    if np.ndim(kdv):
        kdv = kdv[..., None]
    rot = v * c + kxv * s + axis_dir * kdv * (1.0 - c)
    return axis_point + rot


def rotation_matrix(axis_dir: np.ndarray, angle: float) -> np.ndarray:
    """3x3 rotation matrix about a unit axis through the origin."""
    c, s = math.cos(angle), math.sin(angle)
    kx, ky, kz = axis_dir
    K = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return c * np.eye(3) + s * K + (1.0 - c) * np.outer(axis_dir, axis_dir)


def plane_sphere_intersection(pl: Plane, center: np.ndarray, radius: float,
                              eps_tangency: float = 0.0) -> Circle3 | None:
    """Circle cut by a plane from a sphere, None when disjoint.

    A cut within eps_tangency of grazing is returned with tangent=True and
    the geometric (possibly tiny) radius clamped at zero.
    """
    if radius <= 0.0:
        raise ValueError("sphere radius must be positive")
    d = float(pl.signed_distance(center))
    if abs(d) > radius + eps_tangency:
        return None
    c = center - d * pl.unit_normal
    rr = radius * radius - d * d
    tangent = abs(abs(d) - radius) <= eps_tangency
    r = math.sqrt(rr) if rr > 0.0 else 0.0
    if abs(d) > radius:  # grazing within tolerance
        r = 0.0
    return Circle3(center=c, radius=r, normal=pl.unit_normal, tangent=tangent)


def line_line_intersection_in_plane(l1: tuple[np.ndarray, np.ndarray],
                                    l2: tuple[np.ndarray, np.ndarray],
                                    plane: Plane,
                                    eps_parallel: float = EPS_PARALLEL) -> np.ndarray | None:
    """Intersection of two coplanar lines given as (point, direction).

    Returns None when the directions are parallel within eps_parallel.
    """
    p1, d1 = l1
    p2, d2 = l2
    d1 = vunit(np.asarray(d1, dtype=float))
    d2 = vunit(np.asarray(d2, dtype=float))
    n = plane.unit_normal
    # Solve p1 + t*d1 = p2 + u*d2 in the 2D in-plane coordinates.
    e1, e2 = plane_frame(n)
    a1 = np.array([vdot(d1, e1), vdot(d1, e2)])
    a2 = np.array([vdot(d2, e1), vdot(d2, e2)])
    rhs = np.array([vdot(p2 - p1, e1), vdot(p2 - p1, e2)])
    det = a1[0] * (-a2[1]) - (-a2[0]) * a1[1]
    if abs(det) < eps_parallel:
        return None
    t = (rhs[0] * (-a2[1]) - (-a2[0]) * rhs[1]) / det
    return p1 + t * d1


def intersect_line_pairs(P1: np.ndarray, D1: np.ndarray,
                         P2: np.ndarray, D2: np.ndarray,
                         eps_parallel: float = EPS_PARALLEL):
    """Batch nearest-point intersection of line pairs (closest approach midpoint).

    Lines are (point, direction) arrays of shape (..., 3). Returns
    (points, parallel_mask, t1, t2) where points = P1 + t1*D1 for valid rows
    (midpoint correction applied for slightly skew pairs).
    """
    d1d1 = vdot(D1, D1)
    d2d2 = vdot(D2, D2)
    d1d2 = vdot(D1, D2)
    dp = P2 - P1
    det = d1d1 * d2d2 - d1d2 * d1d2
    parallel = det < (eps_parallel * d1d1 * d2d2)
    det_safe = np.where(parallel, 1.0, det)
    b1 = vdot(dp, D1)
    b2 = vdot(dp, D2)
    t1 = (b1 * d2d2 - b2 * d1d2) / det_safe
    t2 = (b1 * d1d2 - b2 * d1d1) / det_safe
    q1 = P1 + t1[..., None] * D1
    q2 = P2 + t2[..., None] * D2
    return 0.5 * (q1 + q2), parallel, t1, t2


def circle_plane_intersection_angles(center: np.ndarray, e1: np.ndarray, e2: np.ndarray,
                                     radius, plane_point: np.ndarray, plane_normal: np.ndarray):
    """Angles where circle center + r(cos a e1 + sin a e2) meets a plane (batch).

    Solves A cos(a) + B sin(a) = E. Returns (a_plus, a_minus, valid) where the
    two solutions are base +/- acos(E/R) around the phase angle.
    """
    A = radius * vdot(e1, plane_normal)
    B = radius * vdot(e2, plane_normal)
    E = vdot(plane_point - center, plane_normal)
    R = np.hypot(A, B)
    valid = R > 0.0
    ratio = np.clip(np.divide(E, np.where(valid, R, 1.0)), -1.0, 1.0)
    inside = np.abs(np.divide(E, np.where(valid, R, 1.0))) <= 1.0
    valid = valid & inside
    base = np.arctan2(B, A)
    off = np.arccos(ratio)
    return base + off, base - off, valid
