"""Discrete homotopy sheets: a periodic vertex grid between two boundary rings."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import OutsideC0, RingMismatch
from .geometry import Region, contains

DEGENERATE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class HomotopySheet:
    """Vertices ``(M+1, K, 3)``: row i is the ring at t = i/M, column j the angle 2*pi*j/K."""

    vertices: np.ndarray
    lambda_cap: float = float("inf")

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValueError("vertices must have shape (M+1, K, 3)")
        if v.shape[0] < 3 or v.shape[1] < 8:
            raise ValueError(f"sheet needs M >= 2 and K >= 8, got M={v.shape[0] - 1}, K={v.shape[1]}")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def M(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def K(self) -> int:
        return self.vertices.shape[1]

    @property
    def points(self) -> np.ndarray:
        """Vertices flattened in row-major order, shape ``((M+1)*K, 3)``."""
        return self.vertices.reshape(-1, 3)

    def with_vertices(self, vertices: np.ndarray) -> "HomotopySheet":
        return HomotopySheet(vertices, self.lambda_cap)


def init_sheet(
    ring0: np.ndarray,
    ring1: np.ndarray,
    M: int,
    mode: str = "linear",
    region: Optional[Region] = None,
    lambda_cap: float = float("inf"),
) -> HomotopySheet:
    ring0 = np.asarray(ring0, dtype=float)
    ring1 = np.asarray(ring1, dtype=float)
    if ring0.shape != ring1.shape:
        raise RingMismatch(f"ring sizes differ: {len(ring0)} vs {len(ring1)}")
    if mode != "linear":
        raise ValueError(f"unknown init mode {mode!r}")
    if region is not None:
        for name, ring in (("ring0", ring0), ("ring1", ring1)):
            if not np.all(contains(region, ring)):
                raise OutsideC0(f"{name} leaves the inner region")
    t = (np.arange(M + 1) / M)[:, None, None]
    verts = (1.0 - t) * ring0[None] + t * ring1[None]
    # exact pinning of the boundary rows
    verts[0], verts[-1] = ring0, ring1
    return HomotopySheet(verts, lambda_cap)


def parametric_sheet(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], M: int, K: int,
                     lambda_cap: float = float("inf")) -> HomotopySheet:
    """Sample ``fn(t, theta) -> (..., 3)`` on the (M+1) x K parameter grid."""
    t, th = np.meshgrid(np.arange(M + 1) / M, 2.0 * np.pi * np.arange(K) / K, indexing="ij")
    return HomotopySheet(np.asarray(fn(t, th), dtype=float), lambda_cap)


def triangulate(sheet: HomotopySheet) -> np.ndarray:
    """Split every grid cell along its shorter diagonal; returns ``(2*M*K, 3)`` indices."""
    M, K = sheet.M, sheet.K
    i, j = np.meshgrid(np.arange(M), np.arange(K), indexing="ij")
    jn = (j + 1) % K
    a = (i * K + j).ravel()
    b = (i * K + jn).ravel()
    c = ((i + 1) * K + jn).ravel()
    d = ((i + 1) * K + j).ravel()
    p = sheet.points
    ac = np.einsum("ij,ij->i", p[c] - p[a], p[c] - p[a])
    bd = np.einsum("ij,ij->i", p[d] - p[b], p[d] - p[b])
    use_ac = (ac <= bd)[:, None]
    t1 = np.where(use_ac, np.stack([a, b, c], 1), np.stack([a, b, d], 1))
    t2 = np.where(use_ac, np.stack([a, c, d], 1), np.stack([b, c, d], 1))
    tris = np.empty((2 * M * K, 3), dtype=np.int64)
    tris[0::2], tris[1::2] = t1, t2
    return tris


def triangle_areas(p: np.ndarray, tris: np.ndarray) -> np.ndarray:
    cr = np.cross(p[tris[:, 1]] - p[tris[:, 0]], p[tris[:, 2]] - p[tris[:, 0]])
    area = 0.5 * np.linalg.norm(cr, axis=1)
    area[area < DEGENERATE_AREA] = 0.0
    return area


def sheet_area(sheet: HomotopySheet) -> float:
    """Triangulated area (counts multiplicity where the sheet overlaps itself)."""
    return float(np.sum(triangle_areas(sheet.points, triangulate(sheet))))


def lipschitz_estimate(sheet: HomotopySheet) -> float:
    """Lipschitz constant of the piecewise-linear interpolant of the sheet.

    Each triangle uses one row difference (scaled by M) and one column
    difference (scaled by K / 2pi); the result is the largest singular value
    over all triangles.
    """
    v = sheet.vertices
    M, K = sheet.M, sheet.K
    dt = M * (v[1:] - v[:-1])                              # (M, K, 3) at columns j
    dth = (K / (2.0 * np.pi)) * (np.roll(v, -1, axis=1) - v)  # (M+1, K, 3) at rows i
    dt_next = np.roll(dt, -1, axis=1)                      # row differences at column j+1
    pairs = (
        (dth[:-1], dt_next),  # (a, b, c)
        (dth[1:], dt),        # (a, c, d)
        (dth[:-1], dt),       # (a, b, d)
        (dth[1:], dt_next),   # (b, c, d)
    )
    tris = triangulate(sheet)
    use_ac = (tris[0::2, 2] == tris[1::2, 1]).reshape(M, K)
    best = np.zeros((M, K))
    for n, (x, y) in enumerate(pairs):
        s = _max_singular(x, y)
        mask = use_ac if n < 2 else ~use_ac
        best = np.where(mask, np.maximum(best, s), best)
    return float(best.max())


def _max_singular(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Largest singular value of the 3x2 matrices with columns ``x`` and ``y``."""
    a = np.einsum("...i,...i", x, x)
    b = np.einsum("...i,...i", x, y)
    c = np.einsum("...i,...i", y, y)
    half_tr = 0.5 * (a + c)
    disc = np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    return np.sqrt(half_tr + disc)


# ---------------------------------------------------------------------------
# uniform 4-fold subdivision


@lru_cache(maxsize=None)
def subdivision_table(level: int) -> np.ndarray:
    """Barycentric (s, t) of the 4**level fragment centroids of a triangle.

    A point is ``a + s (b - a) + t (c - a)``; the table matches repeated
    midpoint subdivision.
    """
    n = 2 ** level
    up = [((i + 1 / 3) / n, (j + 1 / 3) / n) for i in range(n) for j in range(n - i)]
    down = [((i + 2 / 3) / n, (j + 2 / 3) / n) for i in range(n) for j in range(n - 1 - i)]
    tab = np.array(up + down, dtype=float)
    tab.setflags(write=False)
    return tab


def subdivision_levels(p: np.ndarray, tris: np.ndarray, max_diam: float) -> np.ndarray:
    """Smallest level per triangle such that fragment diameters drop below ``max_diam``."""
    a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
    diam = np.sqrt(np.max(np.stack([
        np.einsum("ij,ij->i", b - a, b - a),
        np.einsum("ij,ij->i", c - b, c - b),
        np.einsum("ij,ij->i", a - c, a - c),
    ]), axis=0))
    with np.errstate(divide="ignore"):
        lev = np.ceil(np.log2(np.maximum(diam, 1e-300) / max_diam) + 1e-12)
    lev = np.maximum(lev, 0).astype(np.int64)
    # guard rounding at exact powers of two
    lev += (diam / 2.0 ** lev >= max_diam)
    return lev


@dataclass(frozen=True)
class Fragments:
    """Fragments of a triangle list: centroid, area, parent triangle, barycentrics."""

    centroids: np.ndarray
    areas: np.ndarray
    parent: np.ndarray
    bary: np.ndarray  # (N, 2) -> weights (1-s-t, s, t) on the parent's vertices
    counts: np.ndarray  # fragments per parent triangle


def fragment(p: np.ndarray, tris: np.ndarray, max_diam: float,
             tri_area: Optional[np.ndarray] = None) -> Fragments:
    """Uniformly subdivide each triangle until fragments are smaller than ``max_diam``.

    Degenerate triangles are dropped. Fragment order is deterministic:
    grouped by subdivision level, then by triangle index.
    """
    if tri_area is None:
        tri_area = triangle_areas(p, tris)
    live = np.nonzero(tri_area > 0)[0]
    lev = subdivision_levels(p, tris[live], max_diam)
    cents, areas, parents, barys = [], [], [], []
    counts = np.zeros(len(tris), dtype=np.int64)
    for L in np.unique(lev):
        sel = live[lev == L]
        tab = subdivision_table(int(L))
        nf = len(tab)
        a, b, c = p[tris[sel, 0]], p[tris[sel, 1]], p[tris[sel, 2]]
        s, t = tab[:, 0], tab[:, 1]
        cen = a[:, None] + s[None, :, None] * (b - a)[:, None] + t[None, :, None] * (c - a)[:, None]
        cents.append(cen.reshape(-1, 3))
        areas.append(np.repeat(tri_area[sel] / nf, nf))
        parents.append(np.repeat(sel, nf))
        barys.append(np.tile(tab, (len(sel), 1)))
        counts[sel] = nf
    if not cents:
        z = np.zeros((0, 3))
        return Fragments(z, np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros((0, 2)), counts)
    return Fragments(np.concatenate(cents), np.concatenate(areas), np.concatenate(parents),
                     np.concatenate(barys), counts)


def sheet_fragments(sheet: HomotopySheet, max_diam: float) -> Fragments:
    return fragment(sheet.points, triangulate(sheet), max_diam)


def area_in_ball(sheet: HomotopySheet, center: np.ndarray, r: float, resolution: int = 64) -> float:
    """Triangulated area inside the closed ball B(center, r).

    Triangles whose bounding sphere lies inside the ball count in full; the
    ones straddling the sphere are cut into fragments of diameter below
    ``r / resolution`` and counted by fragment centroid.
    """
    center = np.asarray(center, dtype=float)
    p, tris = sheet.points, triangulate(sheet)
    area = triangle_areas(p, tris)
    a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
    cen = (a + b + c) / 3.0
    rad = np.sqrt(np.max(np.stack([np.sum((v - cen) ** 2, axis=1) for v in (a, b, c)]), axis=0))
    dist = np.linalg.norm(cen - center, axis=1)
    inside = dist + rad <= r
    cut = ~inside & (dist - rad <= r)
    total = float(np.sum(area[inside]))
    if np.any(cut):
        fr = fragment(p, tris[cut], r / resolution, area[cut])
        keep = np.linalg.norm(fr.centroids - center, axis=1) <= r
        total += float(np.sum(fr.areas[keep]))
    return total


# ---------------------------------------------------------------------------
# upper Ahlfors regularity


@dataclass(frozen=True)
class AhlforsReport:
    sup_ratio: float
    argmax_center: np.ndarray
    argmax_radius: float
    radii: np.ndarray
    per_radius_sup: np.ndarray
    per_radius_min: np.ndarray
    note: str = ("centers restricted to sheet vertices and radii to the given dyadic list; "
                 "the true supremum may be larger")


def dyadic_radii(sheet: HomotopySheet, levels: int = 4, start: int = 1) -> np.ndarray:
    p = sheet.points
    diam = float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))
    return diam * 2.0 ** -np.arange(start, start + levels)


def ahlfors_ratio(sheet: HomotopySheet, radii: Optional[np.ndarray] = None,
                  centers: Optional[np.ndarray] = None) -> AhlforsReport:
    """sup over vertex centers x and radii r of area(S cap B(x, r)) / (pi r^2)."""
    if radii is None:
        radii = dyadic_radii(sheet)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    if centers is None:
        centers = np.unique(sheet.points, axis=0)
    p, tris = sheet.points, triangulate(sheet)
    area = triangle_areas(p, tris)
    best = (-1.0, None, None)
    sups, mins = [], []
    for r in radii:
        fr = fragment(p, tris, r / 8.0, area)
        mass = _ball_masses(fr.centroids, fr.areas, centers, r)
        ratio = mass / (np.pi * r * r)
        k = int(np.argmax(ratio))
        sups.append(ratio[k])
        mins.append(ratio.min())
        if ratio[k] > best[0]:
            best = (float(ratio[k]), centers[k].copy(), float(r))
    return AhlforsReport(best[0], best[1], best[2], radii, np.array(sups), np.array(mins))


def _ball_masses(points: np.ndarray, weights: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Sum of ``weights`` of ``points`` inside each closed ball B(center, r)."""
    if len(points) == 0:
        return np.zeros(len(centers))
    pairs = cKDTree(centers).sparse_distance_matrix(cKDTree(points), r, output_type="ndarray")
    return np.bincount(pairs["i"], weights=weights[pairs["j"]], minlength=len(centers))
