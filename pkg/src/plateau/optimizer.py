"""Constrained sheet descent and alternating minimization of the decoupled energy."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .coupling import (EnergyReport, fragments_on_grid, lumped_surface_energy, splat_measure,
                       surface_energy, total_energy)
from .errors import LambdaViolation
from .field import Grid, PhaseField, make_grid, solve_phase_field
from .geometry import Curve, Domain, Region, check_curve_pair, project_into, sample_curve
from .params import SolverParams
from .sheet import (HomotopySheet, ahlfors_ratio, dyadic_radii, init_sheet, lipschitz_estimate,
                    sheet_area, triangle_areas, triangulate)

logger = logging.getLogger(__name__)

__all__ = [
    "SolverParams", "RunResult", "TraceRow", "DescentResult",
    "sheet_gradient", "vertex_normals", "descend_sheet", "descend_sheet_reduced", "alternate_minimize",
    "LINE_SEARCHES",
]


def sheet_gradient(sheet: HomotopySheet, u: PhaseField, delta: float,
                   field_term: bool = True) -> np.ndarray:
    """Exact gradient of ``surface_energy`` with respect to the vertex positions.

    Returns an ``(M+1, K, 3)`` array; the two boundary rows are zero. With
    ``field_term=False`` only the area variation weighted by u^2 + delta is
    kept, dropping the transport of the sampled field along the sheet.
    """
    p = sheet.points
    tris = triangulate(sheet)
    fr = fragments_on_grid(sheet, u.grid)
    grad = np.zeros_like(p)
    if len(fr.areas) == 0:
        return grad.reshape(sheet.vertices.shape)
    ntri = len(tris)
    val, gu = kernels.trilinear_grad(u.values, fr.centroids, u.grid.origin, u.grid.h)

    # area term: dA_T * mean fragment weight
    area = triangle_areas(p, tris)
    wsum = np.bincount(fr.parent, weights=val * val + delta, minlength=ntri)
    live = area > 0
    wmean = np.zeros(ntri)
    wmean[live] = wsum[live] / fr.counts[live]
    a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
    nrm = np.cross(b - a, c - a)
    nlen = np.linalg.norm(nrm, axis=1)
    nhat = np.zeros_like(nrm)
    nhat[live] = nrm[live] / nlen[live, None]
    coef = (0.5 * wmean)[:, None]
    dA = (coef * np.cross(nhat, c - b), coef * np.cross(nhat, a - c), coef * np.cross(nhat, b - a))

    # chain rule through the sampled field: a_f * 2 u grad(u) at the centroid
    gf = (2.0 * fr.areas * val)[:, None] * gu if field_term else np.zeros_like(gu)
    s, t = fr.bary[:, 0], fr.bary[:, 1]
    bw = (1.0 - s - t, s, t)
    n = len(p)
    for k in range(3):
        idx_f = tris[fr.parent, k]
        for d in range(3):
            grad[:, d] += np.bincount(tris[:, k], weights=dA[k][:, d], minlength=n)
            grad[:, d] += np.bincount(idx_f, weights=gf[:, d] * bw[k], minlength=n)
    grad = grad.reshape(sheet.vertices.shape)
    grad[0] = 0.0
    grad[-1] = 0.0
    return grad


@dataclass(frozen=True)
class DescentResult:
    sheet: HomotopySheet
    energy: float
    initial_energy: float
    step: float
    accepted: bool
    reason: str = ""


def descend_sheet(
    sheet: HomotopySheet,
    u: PhaseField,
    params: SolverParams,
    region: Optional[Region] = None,
    initial_step: Optional[float] = None,
    max_tries: int = 60,
) -> DescentResult:
    """One projected-gradient step with Armijo backtracking on the weighted area.

    The trial step moves the vertex with the largest gradient by
    ``initial_step`` (default 0.1 h) and is halved until the step (a) keeps
    the Lipschitz estimate below ``params.lambda_cap`` and (b) satisfies the
    Armijo condition. Failing that, the input sheet is returned unchanged with
    ``accepted=False``.
    """
    cap = params.lambda_cap
    if lipschitz_estimate(sheet) > cap * (1 + 1e-9):
        raise LambdaViolation(f"sheet Lipschitz estimate exceeds lambda_cap={cap:g}")
    delta = params.delta_eps
    e0 = surface_energy(sheet, u, delta)
    g = sheet_gradient(sheet, u, delta)
    gmax = float(np.max(np.linalg.norm(g, axis=-1)))
    if gmax == 0.0:
        return DescentResult(sheet, e0, e0, 0.0, False, "zero gradient")
    step = (0.1 * u.grid.h if initial_step is None else initial_step) / gmax
    x0 = sheet.vertices
    lip_halvings = 0
    for _ in range(max_tries):
        trial = _constrained_trial(x0, g, step, region)
        cand = sheet.with_vertices(trial)
        if lipschitz_estimate(cand) > cap * (1 + 1e-9):
            lip_halvings += 1
            if lip_halvings > 30:
                break
            step *= 0.5
            continue
        e1 = surface_energy(cand, u, delta)
        decrease = float(np.sum(g * (x0 - trial)))
        if e1 <= e0 - params.armijo_slope * decrease and e1 < e0:
            return DescentResult(cand, e1, e0, step, True)
        step *= params.armijo_shrink
    return DescentResult(sheet, e0, e0, 0.0, False, "no admissible decreasing step")


def vertex_normals(sheet: HomotopySheet) -> np.ndarray:
    """Unit normals from centered differences along both parameter directions.

    Boundary rows use one-sided differences in t; a vanishing cross product
    (collapsed row) yields a zero normal.
    """
    v = sheet.vertices
    dt = np.empty_like(v)
    dt[1:-1] = v[2:] - v[:-2]
    dt[0], dt[-1] = v[1] - v[0], v[-1] - v[-2]
    ds = np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)
    n = np.cross(dt, ds)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)


def _lumped_vertex_area(sheet: HomotopySheet) -> np.ndarray:
    p = sheet.points
    tris = triangulate(sheet)
    third = triangle_areas(p, tris) / 3.0
    mass = sum(np.bincount(tris[:, k], weights=third, minlength=len(p)) for k in range(3))
    return mass.reshape(sheet.vertices.shape[:2])


def sobolev_smooth(v: np.ndarray, length: float, t_len: float = 1.0,
                   s_len: float = 2.0 * np.pi) -> np.ndarray:
    """Apply (I - length^2 Lap)^-1 to a field on the sheet's parameter grid.

    ``v`` has shape ``(M+1, K, ...)``; rows 0 and M are held at zero and the
    column direction is periodic. ``t_len`` and ``s_len`` are the nominal
    extents of the two parameter directions, setting the metric of Lap.
    The column direction is diagonalized by an FFT, leaving one tridiagonal
    solve per Fourier mode.
    """
    M = v.shape[0] - 1
    K = v.shape[1]
    if length <= 0 or M < 2:
        return v.copy()
    a = (length * M / t_len) ** 2
    b = (length * K / s_len) ** 2
    inner = np.fft.fft(v[1:-1], axis=1)
    lam = 1.0 + 2.0 * a + 2.0 * b * (1.0 - np.cos(2.0 * np.pi * np.fft.fftfreq(K)))
    n = M - 1
    out = np.empty_like(inner)
    flat_in = inner.reshape(n, K, -1)
    flat_out = out.reshape(n, K, -1)
    ab = np.empty((3, n))
    ab[0, 1:] = -a
    ab[0, 0] = 0.0
    ab[2, :-1] = -a
    ab[2, -1] = 0.0
    for k in range(K):
        ab[1] = lam[k]
        flat_out[:, k] = solve_banded((1, 1), ab, flat_in[:, k])
    res = np.zeros_like(v)
    res[1:-1] = np.fft.ifft(out, axis=1).real
    return res


def _constrained_trial(x0: np.ndarray, direction: np.ndarray, step: float,
                       region: Optional[Region]) -> np.ndarray:
    trial = x0 - step * direction
    if region is not None:
        trial = project_into(region, trial)
    trial[0], trial[-1] = x0[0], x0[-1]
    return trial


def descend_sheet_reduced(
    sheet: HomotopySheet,
    u: PhaseField,
    params: SolverParams,
    region: Optional[Region] = None,
    initial_step: Optional[float] = None,
    max_tries: int = 8,
    smoothing: float = 0.0,
) -> tuple[DescentResult, PhaseField]:
    """Descent step on the reduced energy  F(l) = min_u E(u, l).

    With u held fixed the sheet sits at the bottom of its own diffuse
    valley, and for grid-resolved eps the pull of that valley dominates the
    area force, so fixed-u steps stall next to the starting sheet. Here the
    direction is the normal part of the weighted-area gradient divided by
    the lumped vertex area, i.e. a weighted mean-curvature velocity (the
    field-transport term is odd across the valley and averages out as the
    valley moves with the sheet; tangential parts only reparametrize), and
    every trial is scored by re-solving u. The returned energy is the
    total of the joint energy, so accepted steps decrease the recorded trace.
    """
    cap = params.lambda_cap
    if lipschitz_estimate(sheet) > cap * (1 + 1e-9):
        raise LambdaViolation(f"sheet Lipschitz estimate exceeds lambda_cap={cap:g}")
    grid = u.grid
    e0 = total_energy(u, sheet, params).total
    graw = sheet_gradient(sheet, u, params.delta_eps, field_term=False)
    nrm = vertex_normals(sheet)
    g = np.sum(graw * nrm, axis=-1, keepdims=True) * nrm
    g /= np.maximum(_lumped_vertex_area(sheet), 1e-300)[..., None]
    if smoothing > 0:
        g = sobolev_smooth(g, smoothing)
    gmax = float(np.max(np.linalg.norm(g, axis=-1)))
    if gmax == 0.0:
        return DescentResult(sheet, e0, e0, 0.0, False, "zero gradient"), u
    step = (grid.h if initial_step is None else initial_step) / gmax
    x0 = sheet.vertices
    for _ in range(max_tries):
        trial = _constrained_trial(x0, g, step, region)
        cand = sheet.with_vertices(trial)
        if lipschitz_estimate(cand) > cap * (1 + 1e-9):
            step *= 0.5
            continue
        measure = splat_measure(cand, grid)
        u1 = solve_phase_field(grid, measure, params, initial=u)
        e1 = total_energy(u1, cand, params, measure).total
        decrease = max(float(np.sum(graw * (x0 - trial))), 0.0) / params.c_eps
        if e1 <= e0 - params.armijo_slope * decrease and e1 < e0:
            return DescentResult(cand, e1, e0, step * gmax, True), u1
        step *= params.armijo_shrink
    return DescentResult(sheet, e0, e0, 0.0, False, "no admissible decreasing step"), u


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    report: EnergyReport
    area: float
    lipschitz: float
    ahlfors_sup: float

    def as_row(self) -> tuple:
        r = self.report
        return (self.iteration, r.dirichlet, r.potential, r.surface, r.total,
                self.area, self.lipschitz, self.ahlfors_sup)


LINE_SEARCHES = ("fixed", "reduced")

TRACE_COLUMNS = ("iter", "dirichlet", "potential", "surface", "total", "area", "lipschitz", "ahlfors_sup")


@dataclass
class RunResult:
    u: PhaseField
    sheet: HomotopySheet
    trace: list[TraceRow]
    termination: str
    initial_sheet: HomotopySheet
    ahlfors_flags: list[int] = field(default_factory=list)
    rejected_sweeps: int = 0

    @property
    def totals(self) -> np.ndarray:
        return np.array([row.report.total for row in self.trace])


def _ahlfors_monitor(sheet: HomotopySheet, max_centers: int) -> float:
    if sheet_area(sheet) == 0.0:
        return 0.0
    pts = np.unique(sheet.points, axis=0)
    stride = max(1, int(np.ceil(len(pts) / max_centers)))
    return ahlfors_ratio(sheet, dyadic_radii(sheet), centers=pts[::stride]).sup_ratio


def alternate_minimize(
    domain: Domain,
    curves: Sequence[Curve],
    params: SolverParams,
    M: int = 64,
    K: int = 256,
    grid: Optional[Grid] = None,
    monitor_centers: int = 256,
    stall_tol: float = 1e-10,
    stall_count: int = 3,
    line_search: str = "fixed",
    smoothing: Optional[float] = None,
) -> RunResult:
    """Alternate exact phase-field solves with constrained sheet descent.

    Each outer iteration solves for u with the sheet fixed, then runs
    ``params.sheet_sweeps`` descent sweeps with u fixed. A sweep sequence is
    only kept up to the sweep of lowest energy in the same discrete form the
    field solver minimizes, so the recorded totals never increase beyond the
    CG tolerance.

    ``line_search="reduced"`` replaces the fixed-u sweeps by steps of
    ``descend_sheet_reduced``, which re-solve u for every trial sheet; its
    velocity is Sobolev-smoothed over ``smoothing`` (default 4 h).
    """
    if line_search not in LINE_SEARCHES:
        raise ValueError(f"line_search must be one of {LINE_SEARCHES}")
    if len(curves) != 2:
        raise ValueError("exactly two boundary curves are supported")
    ring0, ring1 = (sample_curve(c, K) for c in curves)
    check_curve_pair(ring0, ring1, domain.inner_region)
    region = domain.inner_region
    sheet = init_sheet(ring0, ring1, M, region=region, lambda_cap=params.lambda_cap)
    if lipschitz_estimate(sheet) > params.lambda_cap * (1 + 1e-9):
        raise LambdaViolation("initial sheet violates lambda_cap")
    grid = make_grid(domain, params.h) if grid is None else grid
    initial = sheet
    u: Optional[PhaseField] = None
    trace: list[TraceRow] = []
    flags: list[int] = []
    rejected = 0
    quiet = 0
    step_hint = grid.h
    smoothing = 4.0 * grid.h if smoothing is None else smoothing
    termination = "max_outer"

    def _record(it: int, report: EnergyReport) -> None:
        ahl = _ahlfors_monitor(sheet, monitor_centers)
        if ahl > params.lambda_cap:
            flags.append(it)
        trace.append(TraceRow(it, report, sheet_area(sheet), lipschitz_estimate(sheet), ahl))
        logger.info("outer %d: total=%.10g area=%.6f lip=%.4f", it, report.total, trace[-1].area,
                    trace[-1].lipschitz)

    def _stalled() -> bool:
        nonlocal quiet
        if len(trace) < 2:
            return False
        prev = trace[-2].report.total
        rel = (prev - trace[-1].report.total) / max(abs(prev), 1e-300)
        quiet = quiet + 1 if rel < stall_tol else 0
        return quiet >= stall_count

    for it in range(params.max_outer):
        measure = splat_measure(sheet, grid)
        u = solve_phase_field(grid, measure, params, initial=u)
        if line_search == "reduced":
            moved = False
            for _ in range(params.sheet_sweeps):
                res, u_next = descend_sheet_reduced(sheet, u, params, region, step_hint,
                                                       smoothing=smoothing)
                if not res.accepted:
                    step_hint = max(step_hint * 0.25, grid.h / 64)
                    break
                sheet, u, moved = res.sheet, u_next, True
                step_hint = min(2.0 * res.step, 4.0 * grid.h)
            report = total_energy(u, sheet, params)
            _record(it, report)
            if not moved:
                termination = "converged"
                break
            if _stalled():
                termination = "stalled"
                break
            continue
        best, best_surf = sheet, lumped_surface_energy(measure, u, params.delta_eps)
        cur = sheet
        moved = False
        for _ in range(params.sheet_sweeps):
            res = descend_sheet(cur, u, params, region)
            if not res.accepted:
                break
            cur = res.sheet
            surf = lumped_surface_energy(splat_measure(cur, grid), u, params.delta_eps)
            if surf <= best_surf:
                best, best_surf, moved = cur, surf, True
            else:
                rejected += 1
        sheet = best
        _record(it, total_energy(u, sheet, params))
        if not moved:
            termination = "converged"
            break
        if _stalled():
            termination = "stalled"
            break
    return RunResult(u, sheet, trace, termination, initial, flags, rejected)
