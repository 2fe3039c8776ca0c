# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND = "cython"


cdef inline void _locate(double x, double o, double h, Py_ssize_t ncell,
                         Py_ssize_t* i, double* f) noexcept nogil:
    cdef double s = (x - o) / h
    cdef Py_ssize_t k = <Py_ssize_t>floor(s)
    if k < 0:
        k = 0
    elif k > ncell - 1:
        k = ncell - 1
    i[0] = k
    f[0] = s - k


def splat(pts, mass, origin, double h, shape):
    cdef const double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef const double[::1] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef Py_ssize_t nx = shape[0], ny = shape[1], nz = shape[2]
    out_arr = np.zeros((nx, ny, nz))
    cdef double[:, :, ::1] out = out_arr
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef Py_ssize_t n = p.shape[0], q, i, j, k
    cdef double fx, fy, fz, gx, gy, gz, w
    for q in range(n):
        _locate(p[q, 0], ox, h, nx - 1, &i, &fx)
        _locate(p[q, 1], oy, h, ny - 1, &j, &fy)
        _locate(p[q, 2], oz, h, nz - 1, &k, &fz)
        gx = 1.0 - fx
        gy = 1.0 - fy
        gz = 1.0 - fz
        w = m[q]
        out[i, j, k] += w * gx * gy * gz
        out[i, j, k + 1] += w * gx * gy * fz
        out[i, j + 1, k] += w * gx * fy * gz
        out[i, j + 1, k + 1] += w * gx * fy * fz
        out[i + 1, j, k] += w * fx * gy * gz
        out[i + 1, j, k + 1] += w * fx * gy * fz
        out[i + 1, j + 1, k] += w * fx * fy * gz
        out[i + 1, j + 1, k + 1] += w * fx * fy * fz
    return out_arr


def trilinear(field, pts, origin, double h):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(field, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], nz = c.shape[2]
    cdef Py_ssize_t n = p.shape[0], q, i, j, k
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double fx, fy, fz, gx, gy, gz
    for q in range(n):
        _locate(p[q, 0], ox, h, nx - 1, &i, &fx)
        _locate(p[q, 1], oy, h, ny - 1, &j, &fy)
        _locate(p[q, 2], oz, h, nz - 1, &k, &fz)
        gx = 1.0 - fx
        gy = 1.0 - fy
        gz = 1.0 - fz
        out[q] = (
            gx * (gy * (gz * c[i, j, k] + fz * c[i, j, k + 1]) + fy * (gz * c[i, j + 1, k] + fz * c[i, j + 1, k + 1]))
            + fx * (gy * (gz * c[i + 1, j, k] + fz * c[i + 1, j, k + 1]) + fy * (gz * c[i + 1, j + 1, k] + fz * c[i + 1, j + 1, k + 1]))
        )
    return out_arr


def trilinear_grad(field, pts, origin, double h):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(field, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], nz = c.shape[2]
    cdef Py_ssize_t n = p.shape[0], q, i, j, k
    val_arr = np.empty(n)
    grad_arr = np.empty((n, 3))
    cdef double[::1] val = val_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double fx, fy, fz, gx, gy, gz
    cdef double c000, c001, c010, c011, c100, c101, c110, c111
    cdef double a00, a01, a10, a11, b0, b1, dz0, dz1
    for q in range(n):
        _locate(p[q, 0], ox, h, nx - 1, &i, &fx)
        _locate(p[q, 1], oy, h, ny - 1, &j, &fy)
        _locate(p[q, 2], oz, h, nz - 1, &k, &fz)
        gx = 1.0 - fx
        gy = 1.0 - fy
        gz = 1.0 - fz
        c000 = c[i, j, k]
        c001 = c[i, j, k + 1]
        c010 = c[i, j + 1, k]
        c011 = c[i, j + 1, k + 1]
        c100 = c[i + 1, j, k]
        c101 = c[i + 1, j, k + 1]
        c110 = c[i + 1, j + 1, k]
        c111 = c[i + 1, j + 1, k + 1]
        a00 = gz * c000 + fz * c001
        a01 = gz * c010 + fz * c011
        a10 = gz * c100 + fz * c101
        a11 = gz * c110 + fz * c111
        b0 = gy * a00 + fy * a01
        b1 = gy * a10 + fy * a11
        val[q] = gx * b0 + fx * b1
        grad[q, 0] = (b1 - b0) / h
        grad[q, 1] = (gx * (a01 - a00) + fx * (a11 - a10)) / h
        dz0 = gy * (c001 - c000) + fy * (c011 - c010)
        dz1 = gy * (c101 - c100) + fy * (c111 - c110)
        grad[q, 2] = (gx * dz0 + fx * dz1) / h
    return val_arr, grad_arr


def stencil_apply(x_arr, diag_arr, double lap, out_arr):
    cdef const double[:, :, ::1] x = x_arr
    cdef const double[:, :, ::1] d = diag_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], nz = x.shape[2], i, j, k
    cdef double c
    out_arr[...] = 0.0
    with nogil:
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                for k in range(1, nz - 1):
                    c = x[i, j, k]
                    out[i, j, k] = lap * (6.0 * c - x[i - 1, j, k] - x[i + 1, j, k]
                                          - x[i, j - 1, k] - x[i, j + 1, k]
                                          - x[i, j, k - 1] - x[i, j, k + 1]) + d[i, j, k] * c
    return out_arr


cdef inline double _dot(double x0, double x1, double x2, double y0, double y1, double y2) noexcept nogil:
    return x0 * y0 + x1 * y1 + x2 * y2


cdef inline double _seg_d2(const double* p, const double* a, const double* b) noexcept nogil:
    cdef double e0 = b[0] - a[0], e1 = b[1] - a[1], e2 = b[2] - a[2]
    cdef double den = _dot(e0, e1, e2, e0, e1, e2)
    cdef double t = 0.0
    if den > 0:
        t = _dot(p[0] - a[0], p[1] - a[1], p[2] - a[2], e0, e1, e2) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    cdef double q0 = p[0] - a[0] - t * e0, q1 = p[1] - a[1] - t * e1, q2 = p[2] - a[2] - t * e2
    return q0 * q0 + q1 * q1 + q2 * q2


cdef double _tri_d2(const double* p, const double* a, const double* b, const double* c) noexcept nogil:
    cdef double ab0 = b[0] - a[0], ab1 = b[1] - a[1], ab2 = b[2] - a[2]
    cdef double ac0 = c[0] - a[0], ac1 = c[1] - a[1], ac2 = c[2] - a[2]
    cdef double cr0 = ab1 * ac2 - ab2 * ac1, cr1 = ab2 * ac0 - ab0 * ac2, cr2 = ab0 * ac1 - ab1 * ac0
    cdef double sab = _dot(ab0, ab1, ab2, ab0, ab1, ab2), sac = _dot(ac0, ac1, ac2, ac0, ac1, ac2)
    cdef double scale = sab if sab > sac else sac
    cdef double d, e
    if _dot(cr0, cr1, cr2, cr0, cr1, cr2) <= 1e-24 * scale * scale:
        d = _seg_d2(p, a, b)
        e = _seg_d2(p, b, c)
        if e < d:
            d = e
        e = _seg_d2(p, c, a)
        return e if e < d else d
    cdef double d1 = _dot(ab0, ab1, ab2, p[0] - a[0], p[1] - a[1], p[2] - a[2])
    cdef double d2 = _dot(ac0, ac1, ac2, p[0] - a[0], p[1] - a[1], p[2] - a[2])
    cdef double q0, q1, q2, v, w, den
    if d1 <= 0 and d2 <= 0:
        q0, q1, q2 = a[0], a[1], a[2]
    else:
        d3 = _dot(ab0, ab1, ab2, p[0] - b[0], p[1] - b[1], p[2] - b[2])
        d4 = _dot(ac0, ac1, ac2, p[0] - b[0], p[1] - b[1], p[2] - b[2])
        d5 = _dot(ab0, ab1, ab2, p[0] - c[0], p[1] - c[1], p[2] - c[2])
        d6 = _dot(ac0, ac1, ac2, p[0] - c[0], p[1] - c[1], p[2] - c[2])
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if d3 >= 0 and d4 <= d3:
            q0, q1, q2 = b[0], b[1], b[2]
        elif vc <= 0 and d1 >= 0 and d3 <= 0:
            v = d1 / (d1 - d3)
            q0, q1, q2 = a[0] + v * ab0, a[1] + v * ab1, a[2] + v * ab2
        elif d6 >= 0 and d5 <= d6:
            q0, q1, q2 = c[0], c[1], c[2]
        elif vb <= 0 and d2 >= 0 and d6 <= 0:
            w = d2 / (d2 - d6)
            q0, q1, q2 = a[0] + w * ac0, a[1] + w * ac1, a[2] + w * ac2
        elif va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            q0, q1, q2 = b[0] + w * (c[0] - b[0]), b[1] + w * (c[1] - b[1]), b[2] + w * (c[2] - b[2])
        else:
            den = 1.0 / (va + vb + vc)
            v = vb * den
            w = vc * den
            q0 = a[0] + v * ab0 + w * ac0
            q1 = a[1] + v * ab1 + w * ac1
            q2 = a[2] + v * ab2 + w * ac2
    q0 = p[0] - q0
    q1 = p[1] - q1
    q2 = p[2] - q2
    return q0 * q0 + q1 * q1 + q2 * q2


def triangle_distance(points, a, b, c, start, chunk=256):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(c, dtype=np.float64)
    cdef const long long[::1] st = np.ascontiguousarray(start, dtype=np.int64)
    cen_arr = (np.asarray(A) + np.asarray(B) + np.asarray(C)) / 3.0
    rad_arr = np.sqrt(np.max(np.stack([np.sum((np.asarray(v) - cen_arr) ** 2, axis=1)
                                       for v in (A, B, C)]), axis=0))
    cdef const double[:, ::1] cen = np.ascontiguousarray(cen_arr)
    cdef const double[::1] rad = rad_arr
    cdef Py_ssize_t n = p.shape[0], nt = A.shape[0], q, t
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double best, best2, dx, dy, dz, lim, d2
    with nogil:
        for q in range(n):
            t = st[q]
            best2 = _tri_d2(&p[q, 0], &A[t, 0], &B[t, 0], &C[t, 0])
            best = best2 ** 0.5
            for t in range(nt):
                dx = p[q, 0] - cen[t, 0]
                dy = p[q, 1] - cen[t, 1]
                dz = p[q, 2] - cen[t, 2]
                lim = best + rad[t]
                if dx * dx + dy * dy + dz * dz >= lim * lim:
                    continue
                d2 = _tri_d2(&p[q, 0], &A[t, 0], &B[t, 0], &C[t, 0])
                if d2 < best2:
                    best2 = d2
                    best = best2 ** 0.5
            out[q] = best
    return out_arr
