"""Pure NumPy versions of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_ckernels`` extension. Results agree to rounding; each backend is
deterministic on its own.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _locate(pts, origin, h, ncell):
    """Cell index and fractional offset of each point, clamped onto the grid."""
    s = (pts - origin) / h
    idx = np.floor(s).astype(np.int64)
    idx = np.clip(idx, 0, np.asarray(ncell) - 1)
    return idx, s - idx


def splat(pts, mass, origin, h, shape):
    """Deposit ``mass`` at ``pts`` onto nodes of a grid with node ``shape``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    nx, ny, nz = shape
    idx, f = _locate(pts, origin, h, (nx - 1, ny - 1, nz - 1))
    out = np.zeros(nx * ny * nz)
    g = 1.0 - f
    for dx in (0, 1):
        wx = f[:, 0] if dx else g[:, 0]
        for dy in (0, 1):
            wy = f[:, 1] if dy else g[:, 1]
            for dz in (0, 1):
                wz = f[:, 2] if dz else g[:, 2]
                flat = ((idx[:, 0] + dx) * ny + idx[:, 1] + dy) * nz + idx[:, 2] + dz
                out += np.bincount(flat, weights=mass * (wx * wy * wz), minlength=out.size)
    return out.reshape(shape)


def trilinear(field, pts, origin, h):
    field = np.ascontiguousarray(field, dtype=np.float64)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    nx, ny, nz = field.shape
    idx, f = _locate(pts, origin, h, (nx - 1, ny - 1, nz - 1))
    i, j, k = idx.T
    fx, fy, fz = f.T
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    c = field
    return (
        gx * (gy * (gz * c[i, j, k] + fz * c[i, j, k + 1]) + fy * (gz * c[i, j + 1, k] + fz * c[i, j + 1, k + 1]))
        + fx * (gy * (gz * c[i + 1, j, k] + fz * c[i + 1, j, k + 1]) + fy * (gz * c[i + 1, j + 1, k] + fz * c[i + 1, j + 1, k + 1]))
    )


def trilinear_grad(field, pts, origin, h):
    """Interpolated values and their exact (cellwise) gradients."""
    field = np.ascontiguousarray(field, dtype=np.float64)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    nx, ny, nz = field.shape
    idx, f = _locate(pts, origin, h, (nx - 1, ny - 1, nz - 1))
    i, j, k = idx.T
    fx, fy, fz = f.T
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    c = field
    c000, c001 = c[i, j, k], c[i, j, k + 1]
    c010, c011 = c[i, j + 1, k], c[i, j + 1, k + 1]
    c100, c101 = c[i + 1, j, k], c[i + 1, j, k + 1]
    c110, c111 = c[i + 1, j + 1, k], c[i + 1, j + 1, k + 1]
    a00 = gz * c000 + fz * c001
    a01 = gz * c010 + fz * c011
    a10 = gz * c100 + fz * c101
    a11 = gz * c110 + fz * c111
    b0 = gy * a00 + fy * a01
    b1 = gy * a10 + fy * a11
    val = gx * b0 + fx * b1
    grad = np.empty((len(pts), 3))
    grad[:, 0] = (b1 - b0) / h
    grad[:, 1] = (gx * (a01 - a00) + fx * (a11 - a10)) / h
    dz0 = gy * (c001 - c000) + fy * (c011 - c010)
    dz1 = gy * (c101 - c100) + fy * (c111 - c110)
    grad[:, 2] = (gx * dz0 + fx * dz1) / h
    return val, grad


def stencil_apply(x, diag, lap, out):
    """``out = lap * (6 x - sum of 6 neighbours) + diag * x`` on interior nodes.

    ``x`` is a full node array whose boundary layer is zero; the boundary
    layer of ``out`` is set to zero.
    """
    c = x[1:-1, 1:-1, 1:-1]
    nb = (
        x[:-2, 1:-1, 1:-1] + x[2:, 1:-1, 1:-1]
        + x[1:-1, :-2, 1:-1] + x[1:-1, 2:, 1:-1]
        + x[1:-1, 1:-1, :-2] + x[1:-1, 1:-1, 2:]
    )
    out[...] = 0.0
    out[1:-1, 1:-1, 1:-1] = lap * (6.0 * c - nb) + diag[1:-1, 1:-1, 1:-1] * c
    return out


def _segment_dist2(p, a, b):
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", p - a, ab)
    t = np.clip(np.divide(t, den, out=np.zeros_like(t), where=den > 0), 0.0, 1.0)
    d = p - a - t[:, None] * ab
    return np.einsum("ij,ij->i", d, d)


def _pair_dist2(p, a, b, c):
    """Squared distance from ``p[n]`` to triangle ``(a[n], b[n], c[n])``.

    Closest-feature classification by Voronoi regions of the vertices,
    edges and face; triangles of (near) zero area fall back to their edges.
    """
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        den = va + vb + vc
        q = a + (vb / den)[:, None] * ab + (vc / den)[:, None] * ac
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        q = np.where(((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0))[:, None], b + w[:, None] * (c - b), q)
        w = d2 / (d2 - d6)
        q = np.where(((vb <= 0) & (d2 >= 0) & (d6 <= 0))[:, None], a + w[:, None] * ac, q)
        q = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, q)
        w = d1 / (d1 - d3)
        q = np.where(((vc <= 0) & (d1 >= 0) & (d3 <= 0))[:, None], a + w[:, None] * ab, q)
        q = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, q)
        q = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, q)
    diff = p - q
    out = np.einsum("ij,ij->i", diff, diff)
    cr = np.cross(ab, ac)
    scale = np.maximum(np.einsum("ij,ij->i", ab, ab), np.einsum("ij,ij->i", ac, ac))
    flat = np.einsum("ij,ij->i", cr, cr) <= 1e-24 * scale * scale
    flat |= ~np.isfinite(out)
    if np.any(flat):
        pf, af, bf, cf = p[flat], a[flat], b[flat], c[flat]
        out[flat] = np.minimum(np.minimum(_segment_dist2(pf, af, bf), _segment_dist2(pf, bf, cf)),
                               _segment_dist2(pf, cf, af))
    return out


def triangle_distance(points, a, b, c, start, chunk=256):
    """Distance from each point to the nearest of the triangles ``(a, b, c)``.

    ``start[n]`` is a triangle used to seed the search for point n; any
    triangle whose bounding sphere cannot beat the current best is skipped.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    a, b, c = (np.ascontiguousarray(x, dtype=np.float64) for x in (a, b, c))
    cen = (a + b + c) / 3.0
    rad = np.sqrt(np.max(np.stack([np.sum((v - cen) ** 2, axis=1) for v in (a, b, c)]), axis=0))
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        st = start[s:s + chunk]
        best = np.sqrt(_pair_dist2(p, a[st], b[st], c[st]))
        d = np.sqrt(((p[:, None, :] - cen[None]) ** 2).sum(-1))
        pi, ti = np.nonzero(d - rad[None] < best[:, None])
        if len(pi):
            cand = np.sqrt(_pair_dist2(p[pi], a[ti], b[ti], c[ti]))
            np.minimum.at(best, pi, cand)
        out[s:s + chunk] = best
    return out
