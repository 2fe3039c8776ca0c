"""Numerical checks of the quantitative estimates: decay, gradient decay,
Hölder scaling, lower semicontinuity of area, density and disk coverage.

Every checker is report-only: it returns a ``LemmaReport`` and never raises
because an inequality failed. Randomized checkers take an explicit seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import BadSequence, HypothesisUnmet
from .field import Grid, PhaseField
from .geometry import circle_basis
from .params import SolverParams
from .sheet import (HomotopySheet, fragment, lipschitz_estimate, parametric_sheet, sheet_area,
                    triangle_areas, triangulate)

DECAY_RATE = 9.0 / 80.0
HARNESS_C = 3.0
C_NOTE = "C=3 is a harness choice standing in for an unnamed, point-dependent constant"

REPORT_COLUMNS = ("lemma", "tested", "violations", "worst_margin", "value", "params", "note")


@dataclass(frozen=True)
class LemmaReport:
    """Outcome of one check.

    ``worst_margin`` is signed: negative means the asserted inequality failed
    somewhere. For the decay checks it is a natural-log margin.
    """

    lemma: str
    tested: int
    violations: int
    worst_margin: float
    params: dict = field(default_factory=dict)
    value: float = float("nan")
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_row(self) -> tuple:
        params = ";".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return (self.lemma, self.tested, self.violations, _fmt(self.worst_margin), _fmt(self.value),
                params, self.note)

    def summary(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        line = (f"{self.lemma:<16} {verdict:<4} tested={self.tested} violations={self.violations} "
                f"worst_margin={_fmt(self.worst_margin)}")
        if not math.isnan(self.value):
            line += f" value={_fmt(self.value)}"
        return line


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# distance to the sheet


def distance_to_sheet(points: np.ndarray, sheet: Optional[HomotopySheet]) -> np.ndarray:
    """Exact Euclidean distance from each point to the triangulated sheet.

    Zero-area triangles still count through their edges, so a collapsed
    sheet reports the distance to its curve. ``sheet=None`` gives +inf.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if sheet is None:
        return np.full(len(points), np.inf)
    p, tris = sheet.points, triangulate(sheet)
    a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
    _, start = cKDTree((a + b + c) / 3.0).query(points)
    return kernels.triangle_distance(points, a, b, c, np.asarray(start, dtype=np.int64))


def node_distances(grid: Grid, sheet: Optional[HomotopySheet]) -> np.ndarray:
    """``distance_to_sheet`` at every grid node, shaped like the grid."""
    return distance_to_sheet(grid.nodes(), sheet).reshape(grid.shape)


# ---------------------------------------------------------------------------
# decay away from the sheet


def decay_profile(u: PhaseField, sheet: Optional[HomotopySheet], eps: float,
                  dist: Optional[np.ndarray] = None, slack: float = 1.1) -> LemmaReport:
    """Check 1 - u <= slack * exp(-9 d / (80 eps)) at every node with d >= 10 eps."""
    d = node_distances(u.grid, sheet) if dist is None else dist
    q = d >= 10.0 * eps * (1 - 1e-12)
    gap = 1.0 - u.values[q]
    bound = slack * np.exp(-DECAY_RATE * d[q] / eps)
    viol = int(np.count_nonzero(gap > bound))
    margin = _log_margin(gap, bound)
    return LemmaReport("decay", int(q.sum()), viol, margin,
                       {"eps": eps, "rate": DECAY_RATE, "slack": slack, "min_dist": 10.0 * eps})


def _log_margin(value: np.ndarray, bound: np.ndarray) -> float:
    if value.size == 0:
        return float("inf")
    pos = value > 0
    if not np.any(pos):
        return float("inf")
    with np.errstate(divide="ignore"):
        return float(np.min(np.log(bound[pos]) - np.log(value[pos])))


def gradient_decay(u: PhaseField, sheet: Optional[HomotopySheet], eps: float,
                   dist: Optional[np.ndarray] = None, slack: float = 1.1) -> LemmaReport:
    """Check |grad_h u| <= slack (K/eps) exp(-9 (d - 11 eps) / (80 eps)) for d >= 11 eps.

    The gradient is the central difference at interior nodes. K is fitted
    as eps * max |grad_h u| over the innermost shell of width sqrt(3) h
    (nominally d in [11 eps, 11 eps + sqrt(3) h)).
    """
    h = u.grid.h
    d = node_distances(u.grid, sheet) if dist is None else dist
    v = u.values
    g2 = np.zeros(tuple(n - 2 for n in v.shape))
    for ax in range(3):
        hi = [slice(1, -1)] * 3
        lo = [slice(1, -1)] * 3
        hi[ax], lo[ax] = slice(2, None), slice(None, -2)
        g2 += ((v[tuple(hi)] - v[tuple(lo)]) / (2.0 * h)) ** 2
    grad = np.sqrt(g2)
    di = d[1:-1, 1:-1, 1:-1]
    start = 11.0 * eps
    q = di >= start * (1 - 1e-12)
    params = {"eps": eps, "rate": DECAY_RATE, "slack": slack, "min_dist": start}
    if not np.any(q):
        return LemmaReport("gradient_decay", 0, 0, float("inf"), params, note="no node beyond 11 eps")
    inner = float(di[q].min())
    # without a sheet every distance is infinite and all tested nodes form the shell
    shell = q & (di < inner + math.sqrt(3.0) * h) if math.isfinite(inner) else q
    K = eps * float(grad[shell].max())
    params["K"] = K
    env = slack * (K / eps) * np.exp(-DECAY_RATE * (di[q] - start) / eps)
    gq = grad[q]
    viol = int(np.count_nonzero(gq > env))
    note = "" if inner < start + math.sqrt(3.0) * h else "shell moved out to the nearest tested node"
    return LemmaReport("gradient_decay", int(q.sum()), viol, _log_margin(gq, env), params, K, note)


# ---------------------------------------------------------------------------
# Hölder quotient


def holder_quotient(u: PhaseField, alpha: float, pairs: int = 100_000, seed: int = 0,
                    params: Optional[SolverParams] = None) -> LemmaReport:
    """Q = max |u(x) - u(y)| / |x - y|^alpha over random node pairs and all axis neighbours.

    When ``params`` is given the report also carries the normalized quotient
    Q eps^alpha / (1 + Lambda / c_eps) used by ``holder_scaling``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    v = u.values
    h = u.grid.h
    q_nn = 0.0
    n_nn = 0
    for ax in range(3):
        diff = np.abs(np.diff(v, axis=ax))
        n_nn += diff.size
        q_nn = max(q_nn, float(diff.max(initial=0.0)) / h ** alpha)
    rng = np.random.default_rng(seed)
    flat = v.ravel()
    i = rng.integers(flat.size, size=pairs)
    j = rng.integers(flat.size, size=pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    idx_i = np.stack(np.unravel_index(i, v.shape), axis=1)
    idx_j = np.stack(np.unravel_index(j, v.shape), axis=1)
    dist = h * np.linalg.norm((idx_i - idx_j).astype(float), axis=1)
    q_rand = float(np.max(np.abs(flat[i] - flat[j]) / dist ** alpha, initial=0.0))
    Q = max(q_nn, q_rand)
    info: dict = {"alpha": alpha, "pairs": int(len(i)), "seed": seed}
    if params is not None:
        info.update(eps=params.epsilon, c_eps=params.c_eps, lambda_cap=params.lambda_cap,
                    normalized=holder_normalized(Q, alpha, params))
    return LemmaReport("holder", int(len(i)) + n_nn, 0, float("nan"), info, Q)


def holder_normalized(Q: float, alpha: float, params: SolverParams) -> float:
    return Q * params.epsilon ** alpha / (1.0 + params.lambda_cap / params.c_eps)


def holder_scaling(coarse: LemmaReport, fine: LemmaReport, factor: float = 3.0) -> LemmaReport:
    """Compare normalized Hölder quotients of two solves (e.g. eps and eps/2)."""
    a = coarse.params.get("normalized")
    b = fine.params.get("normalized")
    if a is None or b is None:
        raise ValueError("both reports need the normalized quotient (pass params to holder_quotient)")
    if a == 0.0 and b == 0.0:
        ratio = 1.0
    elif a == 0.0 or b == 0.0:
        ratio = float("inf")
    else:
        ratio = max(a / b, b / a)
    margin = math.log(factor / ratio)
    return LemmaReport("holder_scaling", 2, int(ratio > factor), margin,
                       {"factor": factor, "coarse": a, "fine": b}, ratio)


# ---------------------------------------------------------------------------
# sequences of sheets and lower semicontinuity of area


@dataclass(frozen=True)
class SheetSequence:
    """Terms n = 1..N of a uniformly convergent sequence together with its limit."""

    generator: str
    sheets: tuple
    limit: HomotopySheet
    sup_dist: np.ndarray
    lambda_cap: float

    def __len__(self) -> int:
        return len(self.sheets)


def sequence_from_sheets(generator: str, sheets: Sequence[HomotopySheet], limit: HomotopySheet,
                         lambda_cap: Optional[float] = None) -> SheetSequence:
    """Wrap sheets, measuring the vertex sup-distance to the limit.

    ``lambda_cap`` defaults to the largest Lipschitz estimate among the
    terms and the limit, i.e. the tightest shared constant.
    """
    sd = np.array([float(np.max(np.linalg.norm(s.vertices - limit.vertices, axis=-1)))
                   for s in sheets])
    if lambda_cap is None:
        lambda_cap = max(lipschitz_estimate(s) for s in (*sheets, limit))
    return SheetSequence(generator, tuple(sheets), limit, sd, float(lambda_cap))


def _annulus(r_in: float, r_out: float, lift=None):
    def fn(t, th):
        rho = r_in + (r_out - r_in) * t
        z = np.zeros_like(t) if lift is None else lift(t, th, rho)
        return np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=-1)
    return fn


def flat_annulus(r_in: float = 0.5, r_out: float = 1.5, M: int = 32, K: int = 256) -> HomotopySheet:
    return parametric_sheet(_annulus(r_in, r_out), M, K)


def wrinkle_sequence(n_terms: int = 32, r_in: float = 0.5, r_out: float = 1.5,
                     M: int = 32, K: int = 256) -> SheetSequence:
    """Flat annulus lifted by (1/n) sin(n theta) sin(pi t).

    The factor sin(pi t) pins both boundary rings, so every term shares the
    limit's boundary. The wrinkles never flatten out, so the areas stay
    strictly above the limit area.
    """
    terms = []
    for n in range(1, n_terms + 1):
        lift = (lambda n_: lambda t, th, rho: np.sin(n_ * th) * np.sin(np.pi * t) / n_)(n)
        terms.append(parametric_sheet(_annulus(r_in, r_out, lift), M, K))
    return sequence_from_sheets("wrinkle", terms, flat_annulus(r_in, r_out, M, K))


def bump_sequence(n_terms: int = 32, r_in: float = 0.5, r_out: float = 1.5,
                  M: int = 32, K: int = 256, width: float = 0.25) -> SheetSequence:
    """Flat annulus plus a bump of height 1/n and support radius width/n.

    The bump sits on the middle ring at theta = 0 and has profile
    (1 - s^2)^2; its excess area shrinks like 1/n^2.
    """
    rho_mid = 0.5 * (r_in + r_out)
    if width > 0.5 * (r_out - r_in):
        raise ValueError("bump must stay inside the annulus")
    terms = []
    for n in range(1, n_terms + 1):
        def lift(t, th, rho, n_=n):
            x, y = rho * np.cos(th) - rho_mid, rho * np.sin(th)
            s2 = (x * x + y * y) * (n_ / width) ** 2
            return np.where(s2 < 1.0, (1.0 - s2) ** 2, 0.0) / n_
        terms.append(parametric_sheet(_annulus(r_in, r_out, lift), M, K))
    return sequence_from_sheets("bump", terms, flat_annulus(r_in, r_out, M, K))


def constant_sequence(n_terms: int = 8, r_in: float = 0.5, r_out: float = 1.5,
                      M: int = 32, K: int = 256) -> SheetSequence:
    flat = flat_annulus(r_in, r_out, M, K)
    return sequence_from_sheets("constant", [flat] * n_terms, flat)


GENERATORS = {"wrinkle": wrinkle_sequence, "bump": bump_sequence, "constant": constant_sequence}


def make_sequence(name: str, n_terms: int = 32, **kw) -> SheetSequence:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown sequence generator {name!r}; known: {sorted(GENERATORS)}") from None
    return gen(n_terms, **kw)


def validate_sequence(seq: SheetSequence, tol: float = 1e-12) -> None:
    """Raise BadSequence unless the sequence is admissible for the harness."""
    if len(seq) == 0:
        raise BadSequence("empty sequence")
    if np.any(np.diff(seq.sup_dist) > tol):
        raise BadSequence("sup-distance to the limit increases along the sequence")
    lv = seq.limit.vertices
    for n, s in enumerate(seq.sheets, 1):
        if s.vertices.shape != lv.shape:
            raise BadSequence(f"term {n} has a different vertex grid than the limit")
        if not (np.allclose(s.vertices[0], lv[0], atol=tol, rtol=0)
                and np.allclose(s.vertices[-1], lv[-1], atol=tol, rtol=0)):
            raise BadSequence(f"term {n} does not share the limit's boundary rings")
        if lipschitz_estimate(s) > seq.lambda_cap * (1 + 1e-9):
            raise BadSequence(f"term {n} exceeds the shared Lipschitz constant {seq.lambda_cap:g}")


def lsc_balls(limit: HomotopySheet, n_balls: int = 10, seed: int = 0) -> list[tuple[np.ndarray, float]]:
    """Deterministic family of balls centred on limit vertices, radii in [diam/16, diam/6]."""
    p = np.unique(limit.points, axis=0)
    diam = float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(p), size=min(n_balls, len(p)), replace=False)
    radii = rng.uniform(diam / 16.0, diam / 6.0, size=len(idx))
    return [(p[i].copy(), float(r)) for i, r in zip(idx, radii)]


def ball_areas(sheet: HomotopySheet, balls, resolution: int = 64) -> np.ndarray:
    """Area of the sheet inside each ball (same rule as ``sheet.area_in_ball``)."""
    p, tris = sheet.points, triangulate(sheet)
    area = triangle_areas(p, tris)
    a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
    cen = (a + b + c) / 3.0
    rad = np.sqrt(np.max(np.stack([np.sum((v - cen) ** 2, axis=1) for v in (a, b, c)]), axis=0))
    out = np.empty(len(balls))
    for k, (x, r) in enumerate(balls):
        dist = np.linalg.norm(cen - x, axis=1)
        inside = dist + rad <= r
        cut = ~inside & (dist - rad <= r)
        total = float(np.sum(area[inside]))
        if np.any(cut):
            fr = fragment(p, tris[cut], r / resolution, area[cut])
            total += float(np.sum(fr.areas[np.linalg.norm(fr.centroids - x, axis=1) <= r]))
        out[k] = total
    return out


LSC_COLUMNS = ("n", "sup_dist", "area", "lipschitz", "min_ball_ratio", "area_bound_ok")


def lsc_terms(seq: SheetSequence, balls) -> tuple[list[tuple], np.ndarray, np.ndarray]:
    """Per-term rows plus the (terms x sets) area matrix and the limit's areas.

    Set 0 is the whole sheet; sets 1.. are the balls.
    """
    lim = np.concatenate([[sheet_area(seq.limit)], ball_areas(seq.limit, balls)])
    bound = seq.lambda_cap ** 2 * math.pi
    rows, mat = [], []
    for n, (s, sd) in enumerate(zip(seq.sheets, seq.sup_dist), 1):
        areas = np.concatenate([[sheet_area(s)], ball_areas(s, balls)])
        mat.append(areas)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(lim[1:] > 0, areas[1:] / lim[1:], np.inf)
        rows.append((n, float(sd), float(areas[0]), lipschitz_estimate(s),
                     float(ratio.min(initial=np.inf)), bool(areas[0] <= bound)))
    return rows, np.array(mat), lim


def lsc_harness(seq: SheetSequence, n_balls: int = 10, seed: int = 0, slack: float = 0.005,
                balls=None) -> LemmaReport:
    """Lower semicontinuity of area along the sequence, globally and on test balls.

    Asserts min over the tail (second half) of area_n(A) >= (1 - slack)
    area_limit(A) for the whole sheet and every ball, and the uniform bound
    area_n <= Lambda^2 pi for every term. A violation is one failing set or
    one term breaking the bound.
    """
    validate_sequence(seq)
    if balls is None:
        balls = lsc_balls(seq.limit, n_balls, seed)
    _, mat, lim = lsc_terms(seq, balls)
    tail = mat[len(seq) // 2:]
    lows = tail.min(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(lim > 0, lows / lim, np.inf) - (1.0 - slack)
    bound = seq.lambda_cap ** 2 * math.pi
    over = int(np.count_nonzero(mat[:, 0] > bound))
    viol = int(np.count_nonzero(rel < 0)) + over
    margin = float(min(rel.min(), (bound - mat[:, 0].max()) / bound))
    params = {"generator": seq.generator, "terms": len(seq), "sets": len(lim),
              "lambda_cap": seq.lambda_cap, "slack": slack, "seed": seed}
    return LemmaReport("lsc", len(lim) + len(seq), viol, margin, params, float(rel.min()))


# ---------------------------------------------------------------------------
# density estimate and disk coverage


def density_estimate(seq: SheetSequence, term: int = -1, n_points: int = 20, C: float = HARNESS_C,
                     c_eta: float = 0.25, seed: int = 0, slack: float = 0.02) -> LemmaReport:
    """Ball densities of one term around tangent points of the flat limit.

    With eta r equal to the term's sup-distance and r chosen so that
    C eta = c_eta, checks
        area_n(B(x0, r (1 + C eta))) / (pi r^2) >= (1 - C eta)^2 - slack
    at ``n_points`` limit vertices whose enlarged balls stay clear of the
    boundary rings.
    """
    sheet = seq.sheets[term]
    sd = float(seq.sup_dist[term])
    lp = seq.limit.points
    diam = float(np.linalg.norm(lp.max(axis=0) - lp.min(axis=0)))
    r = C * sd / c_eta if sd > 0 else diam / 16.0
    eta = sd / r
    R = r * (1.0 + C * eta)
    rings = np.concatenate([seq.limit.vertices[0], seq.limit.vertices[-1]])
    clear, _ = cKDTree(rings).query(lp)
    cand = np.unique(lp[clear >= R], axis=0)
    if len(cand) < n_points:
        raise HypothesisUnmet(f"only {len(cand)} tangent points have balls of radius {R:.3g} "
                              "clear of the boundary")
    rng = np.random.default_rng(seed)
    pts = cand[np.sort(rng.choice(len(cand), size=n_points, replace=False))]
    ratios = ball_areas(sheet, [(x, R) for x in pts]) / (math.pi * r * r)
    bound = (1.0 - C * eta) ** 2 - slack
    viol = int(np.count_nonzero(ratios < bound))
    params = {"C": C, "eta": eta, "r": r, "term": term if term >= 0 else len(seq) + term + 1,
              "bound": bound, "seed": seed}
    return LemmaReport("density", n_points, viol, float(ratios.min() - bound), params,
                       float(ratios.min()), C_NOTE)


def disk_coverage(sheet: HomotopySheet, center, radius: float, normal, eta: float,
                  C: float = HARNESS_C, resolution: int = 256) -> float:
    """Fraction of the disk D(center, (1 - C eta) radius) covered by the projected sheet.

    The part of the sheet above the disk is the set of vertices whose
    projection falls in D(center, radius) within height ``radius`` of the
    plane. Those must lie within ``eta * radius`` of the plane, otherwise
    HypothesisUnmet is raised. Triangles with all vertices inside that slab
    are projected and rasterized at pixel size radius / resolution.
    """
    center = np.asarray(center, dtype=float)
    nrm = np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    e1, e2 = circle_basis(nrm)
    p = sheet.points
    rel = p - center
    height = rel @ nrm
    xy = np.stack([rel @ e1, rel @ e2], axis=1)
    slab = np.abs(height) <= radius
    above = slab & (np.linalg.norm(xy, axis=1) <= radius)
    if not np.any(above):
        raise HypothesisUnmet("no part of the sheet lies over the disk")
    if np.max(np.abs(height[above])) > eta * radius * (1 + 1e-12):
        raise HypothesisUnmet(f"sheet is not within eta*r = {eta * radius:.3g} of the disk")
    rho = (1.0 - C * eta) * radius
    if rho <= 0:
        return 1.0
    px = radius / resolution
    n = int(math.ceil(rho / px))
    axis = px * np.arange(-n, n + 1)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    disk = X * X + Y * Y < rho * rho
    covered = np.zeros_like(disk)
    tris = triangulate(sheet)
    tris = tris[np.all(slab[tris], axis=1)]
    for t in tris:
        a, b, c = xy[t[0]], xy[t[1]], xy[t[2]]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        if abs(det) < 1e-300:
            continue
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        i0, i1 = np.searchsorted(axis, lo[0] - 1e-12), np.searchsorted(axis, hi[0] + 1e-12, "right")
        j0, j1 = np.searchsorted(axis, lo[1] - 1e-12), np.searchsorted(axis, hi[1] + 1e-12, "right")
        if i0 >= i1 or j0 >= j1:
            continue
        sx, sy = X[i0:i1, j0:j1] - a[0], Y[i0:i1, j0:j1] - a[1]
        s = (sx * (c[1] - a[1]) - sy * (c[0] - a[0])) / det
        w = (sy * (b[0] - a[0]) - sx * (b[1] - a[1])) / det
        tol = 1e-12
        covered[i0:i1, j0:j1] |= (s >= -tol) & (w >= -tol) & (s + w <= 1 + tol)
    return float(np.count_nonzero(covered & disk)) / float(np.count_nonzero(disk))
