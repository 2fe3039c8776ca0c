"""Convex domains, boundary curves and closed-form convex projections."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import BadCurveSpec, ContainmentViolation, ValidationError


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if not self.radius > 0:
            raise ValidationError("inner", "ball radius must be positive")


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValidationError("box", "upper corner must exceed lower corner on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo


Region = Union[Ball, Box]


@dataclass(frozen=True)
class Domain:
    """Container box ``outer_box`` holding the closed convex set ``inner_region``.

    ``eta0`` is the distance between the boundary of the inner region and the
    boundary of the container.
    """

    outer_box: Box
    inner_region: Region
    eta0: float


def make_domain(outer_box: Box, inner_region: Region) -> Domain:
    lo, hi = outer_box.lo, outer_box.hi
    if isinstance(inner_region, Ball):
        c, r = inner_region.center, inner_region.radius
        eta0 = float(min(np.min(c - lo), np.min(hi - c)) - r)
    elif isinstance(inner_region, Box):
        eta0 = float(min(np.min(inner_region.lo - lo), np.min(hi - inner_region.hi)))
    else:
        raise TypeError(f"unsupported region {type(inner_region).__name__}")
    if eta0 <= 0:
        raise ContainmentViolation(f"inner region not strictly inside outer box (eta0={eta0:g})")
    return Domain(outer_box, inner_region, eta0)


def project_into(region: Region, p: np.ndarray) -> np.ndarray:
    """Closest point of the closed region; works on a single point or an (N, 3) array."""
    p = np.asarray(p, dtype=float)
    if isinstance(region, Box):
        return np.clip(p, region.lo, region.hi)
    d = p - region.center
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    scale = np.where(norm > region.radius, region.radius / np.where(norm > 0, norm, 1.0), 1.0)
    return region.center + d * scale


def contains(region: Region, p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if isinstance(region, Box):
        return np.all((p >= region.lo - tol) & (p <= region.hi + tol), axis=-1)
    return np.linalg.norm(p - region.center, axis=-1) <= region.radius + tol


def on_boundary(region: Region, p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if isinstance(region, Ball):
        return np.abs(np.linalg.norm(p - region.center, axis=-1) - region.radius) <= tol
    gap = np.minimum(np.abs(p - region.lo), np.abs(region.hi - p)).min(axis=-1)
    return contains(region, p, tol) & (gap <= tol)


@dataclass(frozen=True)
class CircleCurve:
    center: np.ndarray
    radius: float
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        a = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if n == 0:
            raise BadCurveSpec("circle axis must be nonzero")
        object.__setattr__(self, "axis", a / n)


@dataclass(frozen=True)
class PolylineCurve:
    """Closed polyline; the last point connects back to the first."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
            raise BadCurveSpec("polyline needs at least 3 points in R^3")
        if np.allclose(pts[0], pts[-1]):
            raise BadCurveSpec("closed polyline must not repeat its first point")
        object.__setattr__(self, "points", pts)


Curve = Union[CircleCurve, PolylineCurve]


def circle_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis = np.asarray(axis, dtype=float)
    ref = np.eye(3)[int(np.argmin(np.abs(axis)))]
    e1 = ref - ref.dot(axis) * axis
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def sample_curve(curve: Curve, K: int) -> np.ndarray:
    """K points equally spaced in the curve parameter, returned as a (K, 3) ring.

    Circles are parametrized by angle (so samples are arc-length uniform);
    polylines by vertex index, so asking for as many samples as there are
    vertices returns the vertices themselves.
    """
    if K < 3:
        raise BadCurveSpec(f"need at least 3 samples, got {K}")
    if isinstance(curve, CircleCurve):
        if not curve.radius > 0:
            raise BadCurveSpec("circle radius must be positive")
        e1, e2 = circle_basis(curve.axis)
        theta = 2.0 * np.pi * np.arange(K) / K
        c, s = np.cos(theta), np.sin(theta)
        # exact quarter turns keep symmetric samples free of 1e-17 residue
        c[np.isclose(c, 0.0, atol=1e-15)] = 0.0
        s[np.isclose(s, 0.0, atol=1e-15)] = 0.0
        return curve.center + curve.radius * (c[:, None] * e1 + s[:, None] * e2)
    pts = curve.points
    n = len(pts)
    if K == n:
        return pts.copy()
    t = np.arange(K) * (n / K)
    i = np.floor(t).astype(int) % n
    f = (t - np.floor(t))[:, None]
    return (1.0 - f) * pts[i] + f * pts[(i + 1) % n]


def check_curve_pair(ring0: np.ndarray, ring1: np.ndarray, region: Region, tol: float = 1e-9) -> None:
    """Validate two sampled boundary curves against the inner region.

    Identical rings are accepted (the degenerate homotopy); otherwise rings
    that come within 1e-6 of each other are rejected.
    """
    for name, ring in (("gamma0", ring0), ("gamma1", ring1)):
        if not np.all(on_boundary(region, ring, tol)):
            raise BadCurveSpec(f"{name} does not lie on the boundary of the inner region")
    if ring0.shape == ring1.shape and np.array_equal(ring0, ring1):
        return
    from scipy.spatial import cKDTree

    d, _ = cKDTree(ring1).query(ring0)
    if np.min(d) < 1e-6:
        raise BadCurveSpec("boundary curves intersect or nearly touch")
