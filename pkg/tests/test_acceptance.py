"""Acceptance criteria 1-14, each at its stated tolerance.

Every test records one ``[criterion N] PASS|FAIL ...`` line. The lines are
printed as they happen and repeated in the pytest terminal summary. Lines
tagged ``[criterion NR]`` or ``[supplement ...]`` are extra diagnostics next
to a criterion and never replace it.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from plateau import analysis, cli
from plateau.coupling import SurfaceMeasure, splat_measure, surface_energy
from plateau.field import field_from_function, make_grid, solve_phase_field
from plateau.geometry import Box, CircleCurve, make_domain, sample_curve
from plateau.optimizer import alternate_minimize, sheet_gradient
from plateau.params import SolverParams
from plateau.sheet import ahlfors_ratio, init_sheet, lipschitz_estimate, parametric_sheet, sheet_area

RESULTS: list[str] = []
CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# catenoid through two unit circles one unit apart: 1 = c cosh(1/(2c)), larger root
CATENOID_C = 0.8483379380949786
CATENOID_AREA = 5.991796975802279


def verdict(label, ok, detail):
    line = f"[{label}] {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def disk_sheet(r_in, r_out, M, K, z=0.0):
    def fn(t, th):
        rho = r_in + (r_out - r_in) * t
        return np.stack([rho * np.cos(th), rho * np.sin(th), np.full_like(t, z)], axis=-1)
    return parametric_sheet(fn, M, K)


# ---------------------------------------------------------------------------
# shared solves


class Solve:
    def __init__(self, name, u, sheet=None, params=None, dist=None):
        self.name, self.u, self.sheet, self.params, self.dist = name, u, sheet, params, dist


LEMMA_EPS = 0.02
LEMMA_H = LEMMA_EPS / 8


@pytest.fixture(scope="module")
def lemma_solves():
    """Planar disk and annulus sheets at eps = 8h, with exact node distances."""
    g = make_grid(Box([-0.08, -0.08, -0.3], [0.08, 0.08, 0.3]), LEMMA_H)
    p = SolverParams(LEMMA_EPS, LEMMA_H, cg_tol=1e-10)
    out = []
    for name, (r_in, r_out) in (("planar", (0.0, 0.07)), ("annulus", (0.02, 0.06))):
        s = disk_sheet(r_in, r_out, 8, 32)
        u = solve_phase_field(g, splat_measure(s, g), p)
        out.append(Solve(name, u, s, p, analysis.node_distances(g, s)))
    return out


@pytest.fixture(scope="module")
def holder_solves():
    g = make_grid(Box([-0.08, -0.08, -0.12], [0.08, 0.08, 0.12]), LEMMA_H)
    s = disk_sheet(0.0, 0.07, 8, 32)
    m = splat_measure(s, g)
    out = []
    for eps in (LEMMA_EPS, LEMMA_EPS / 2):
        p = SolverParams(eps, LEMMA_H, cg_tol=1e-10)
        out.append(Solve(f"holder eps={eps:g}", solve_phase_field(g, m, p), s, p))
    return out


def plane_measure(g):
    h = g.h
    xs = g.origin[0] + (np.arange(g.dims[0]) + 0.5) * h
    ys = g.origin[1] + (np.arange(g.dims[1]) + 0.5) * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    return SurfaceMeasure.from_points(g, pts, np.full(len(pts), h * h))


def line_oracle(nz, params, h):
    """1-D tridiagonal solve of the same quadratic with unit column mass at the middle node."""
    eps, c = params.epsilon, params.c_eps
    n = nz - 1
    ab = np.zeros((3, n))
    ab[1] = 2 * eps / h + h / (4 * eps)
    ab[0, 1:] = -eps / h
    ab[2, :-1] = -eps / h
    rhs = np.zeros(n)
    mid = nz // 2 - 1
    ab[1, mid] += 1.0 / c
    rhs[mid] = 1.0 / c
    return np.concatenate([[1.0], 1.0 - solve_banded((1, 1), ab, rhs), [1.0]])


@pytest.fixture(scope="module")
def plane_solve():
    eps = 0.05
    h = eps / 4
    p = SolverParams(eps, h)
    g = make_grid(Box([-0.4] * 3, [0.4] * 3), h)  # 64^3 cells
    t0 = time.perf_counter()
    u = solve_phase_field(g, plane_measure(g), p, tol=1e-12)
    return Solve("plane 64^3", u, None, p), time.perf_counter() - t0


def catenoid_domain():
    return make_domain(Box([-1.2, -1.2, -0.7], [1.2, 1.2, 0.7]), Box([-1, -1, -0.5], [1, 1, 0.5]))


CATENOID_CURVES = (CircleCurve([0, 0, -0.5], 1.0), CircleCurve([0, 0, 0.5], 1.0))


def _catenoid(line_search):
    p = SolverParams(0.05, 0.025)
    t0 = time.perf_counter()
    res = alternate_minimize(catenoid_domain(), CATENOID_CURVES, p, M=64, K=256, line_search=line_search)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def catenoid_fixed():
    return _catenoid("fixed")


@pytest.fixture(scope="module")
def catenoid_reduced():
    return _catenoid("reduced")


@pytest.fixture(scope="module")
def small_runs():
    dom = make_domain(Box([-0.8, -0.8, -0.5], [0.8, 0.8, 0.5]), Box([-0.5, -0.5, -0.2], [0.5, 0.5, 0.2]))
    curves = [CircleCurve([0, 0, -0.2], 0.5), CircleCurve([0, 0, 0.2], 0.5)]
    p = SolverParams(0.1, 0.05, max_outer=6, sheet_sweeps=5)
    return {ls: alternate_minimize(dom, curves, p, M=8, K=32, line_search=ls) for ls in ("fixed", "reduced")}


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_annulus_area():
    t0 = time.perf_counter()
    r0 = sample_curve(CircleCurve([0, 0, 0], 0.5), 256)
    r1 = sample_curve(CircleCurve([0, 0, 0], 1.0), 256)
    area = sheet_area(init_sheet(r0, r1, 64))
    dt = time.perf_counter() - t0
    rel = abs(area - 0.75 * math.pi) / (0.75 * math.pi)
    ok = verdict("criterion 1", rel <= 5e-3 and dt < 1.0,
                 f"annulus area {area:.6f} vs {0.75 * math.pi:.6f} (rel {rel:.2e} <= 5e-3), {dt:.3f} s < 1 s")
    assert ok


def test_criterion_02_sphere_ahlfors():
    def fn(t, th):
        phi = 1e-3 + (math.pi - 2e-3) * t
        return np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=-1)
    t0 = time.perf_counter()
    s = parametric_sheet(fn, 64, 128)
    radii = np.array([1 / 2, 1 / 4, 1 / 8])
    rep = ahlfors_ratio(s, radii)
    dt = time.perf_counter() - t0
    dev = float(np.max(np.abs(rep.per_radius_sup - 1.0)))
    ok = verdict("criterion 2", dev <= 0.05 and dt < 10.0,
                 f"sphere sup ratios {np.round(rep.per_radius_sup, 4).tolist()} at r={radii.tolist()} "
                 f"(max |ratio-1| {dev:.4f} <= 0.05), {dt:.1f} s < 10 s")
    assert ok


def test_criterion_03_line_oracle(plane_solve):
    solve, dt = plane_solve
    g = solve.u.grid
    ref = line_oracle(g.dims[2], solve.params, g.h)
    err = np.abs(solve.u.values - ref[None, None, :])
    worst = float(err[1:-1, 1:-1].max())
    centre = float(err[g.dims[0] // 2, g.dims[1] // 2].max())
    ok = verdict("criterion 3", worst <= 1e-6 and dt < 30.0,
                 f"64^3 planar solve vs 1-D oracle: L_inf over all interior vertical lines {worst:.3e} "
                 f"(needs <= 1e-6; centre line {centre:.3e}), {dt:.1f} s. The u = 1 side walls bend the "
                 "profile near the box faces, so lines near the walls cannot match a 1-D solve")
    assert ok


def test_supplement_03_wide_box_centre_line():
    # with the side walls far away the centre line does reproduce the 1-D oracle
    eps = 0.05
    h = eps / 4
    p = SolverParams(eps, h)
    g = make_grid(Box([-1.2, -1.2, -0.4], [1.2, 1.2, 0.4]), h)
    u = solve_phase_field(g, plane_measure(g), p, tol=1e-12)
    ref = line_oracle(g.dims[2], p, h)
    err = float(np.max(np.abs(u.values[g.dims[0] // 2, g.dims[1] // 2] - ref)))
    ok = verdict("supplement 3", err <= 1e-6,
                 f"192x192x64 box, centre line vs 1-D oracle L_inf {err:.3e} <= 1e-6")
    assert ok


def test_criterion_04_maximum_principle(lemma_solves, holder_solves, plane_solve, catenoid_fixed,
                                        catenoid_reduced, small_runs):
    fields = [(s.name, s.u) for s in lemma_solves + holder_solves]
    fields.append((plane_solve[0].name, plane_solve[0].u))
    fields += [("catenoid fixed", catenoid_fixed[0].u), ("catenoid reduced", catenoid_reduced[0].u)]
    fields += [(f"small {k}", r.u) for k, r in small_runs.items()]
    lo = min(float(u.values.min()) for _, u in fields)
    hi = max(float(u.values.max()) for _, u in fields)
    ok = verdict("criterion 4", lo >= -1e-10 and hi <= 1 + 1e-10,
                 f"{len(fields)} converged solves: min u {lo:.6g} >= -1e-10, max u {hi!r} <= 1+1e-10")
    assert ok


def test_criterion_05_barrier_decay(lemma_solves):
    reps = [analysis.decay_profile(s.u, s.sheet, LEMMA_EPS, s.dist) for s in lemma_solves]
    ok = verdict("criterion 5", all(r.passed for r in reps),
                 "eps = 8h: " + "; ".join(f"{s.name} tested={r.tested} violations={r.violations} "
                                          f"log-margin={r.worst_margin:.3f}" for s, r in zip(lemma_solves, reps)))
    assert ok


def test_criterion_06_gradient_decay(lemma_solves):
    reps = [analysis.gradient_decay(s.u, s.sheet, LEMMA_EPS, s.dist) for s in lemma_solves]
    ok = verdict("criterion 6", all(r.passed and r.tested > 0 for r in reps),
                 "; ".join(f"{s.name} tested={r.tested} violations={r.violations} K={r.value:.4g} "
                           f"log-margin={r.worst_margin:.3f}" for s, r in zip(lemma_solves, reps)))
    assert ok


def test_criterion_07_holder_scaling(holder_solves):
    reps = [analysis.holder_quotient(s.u, 0.5, 100_000, 0, s.params) for s in holder_solves]
    sc = analysis.holder_scaling(*reps, factor=3.0)
    ok = verdict("criterion 7", sc.passed,
                 f"normalized Q(eps)={sc.params['coarse']:.4g}, Q(eps/2)={sc.params['fine']:.4g}, "
                 f"ratio {sc.value:.3f} <= 3")
    assert ok


def _trace_ok(res, p):
    t = res.totals
    mono = bool(np.all(np.diff(t) <= 1e-8 * np.abs(t[:-1])))
    lip = all(row.lipschitz <= p.lambda_cap * (1 + 1e-9) for row in res.trace)
    return mono, lip


def test_criterion_08_alternating_descent(catenoid_fixed, catenoid_reduced, small_runs):
    p_cat = SolverParams(0.05, 0.025)
    p_small = SolverParams(0.1, 0.05)
    runs = [("catenoid fixed", catenoid_fixed[0], p_cat), ("catenoid reduced", catenoid_reduced[0], p_cat)]
    runs += [(f"small {k}", r, p_small) for k, r in small_runs.items()]
    parts, good = [], True
    for name, res, p in runs:
        mono, lip = _trace_ok(res, p)
        good &= mono and lip
        parts.append(f"{name}: {len(res.trace)} iterates, nonincreasing={mono}, Lip<=cap={lip}")
    ok = verdict("criterion 8", good, "; ".join(parts))
    assert ok


def _catenoid_detail(res, dt):
    area = res.trace[-1].area
    rel = abs(area - CATENOID_AREA) / CATENOID_AREA
    ok = rel <= 0.02 and area <= 0.97 * 2 * math.pi and dt < 300.0
    return ok, (f"final area {area:.5f} vs catenoid {CATENOID_AREA:.5f} (rel {rel:.2%} <= 2%), "
                f"<= 0.97*2pi = {0.97 * 2 * math.pi:.5f}: {area <= 0.97 * 2 * math.pi}; "
                f"{res.termination} after {len(res.trace)} outer iterations, {dt:.0f} s < 300 s")


def test_catenoid_oracle_constants():
    c = brentq(lambda c: c * math.cosh(0.5 / c) - 1.0, 0.5, 1.0, xtol=1e-15)
    assert c == pytest.approx(CATENOID_C, rel=1e-12)
    assert math.pi * c * (1.0 + c * math.sinh(1.0 / c)) == pytest.approx(CATENOID_AREA, rel=1e-12)


def test_criterion_09_catenoid(catenoid_fixed):
    res, dt = catenoid_fixed
    ok, detail = _catenoid_detail(res, dt)
    ok = verdict("criterion 9", ok, "fixed-u sweeps (default scheme), 96x96x56 grid, M=64, K=256: " + detail)
    assert ok


def test_criterion_09R_catenoid_reduced(catenoid_reduced):
    res, dt = catenoid_reduced
    ok, detail = _catenoid_detail(res, dt)
    ok = verdict("criterion 9R", ok, "line_search='reduced' (u re-solved per trial), same grid: " + detail)
    assert ok


def test_criterion_10_lsc():
    parts, good = [], True
    for name in ("wrinkle", "bump"):
        seq = analysis.make_sequence(name, 32)
        rep = analysis.lsc_harness(seq, n_balls=10, seed=0, slack=0.005)
        good &= rep.passed
        parts.append(f"{name}: violations={rep.violations} of {rep.tested} checks, "
                     f"worst tail margin {rep.value:.4f}, Lambda={seq.lambda_cap:.3f}")
    ok = verdict("criterion 10", good, "; ".join(parts))
    assert ok


def test_criterion_11_density():
    seq = analysis.make_sequence("wrinkle", 32)
    rep = analysis.density_estimate(seq, term=-1, n_points=20, C=3.0, seed=0, slack=0.02)
    ok = verdict("criterion 11", rep.passed,
                 f"n=32, 20 points, eta={rep.params['eta']:.4f}: min ratio {rep.value:.4f} "
                 f">= (1-3 eta)^2 - 2% = {rep.params['bound']:.4f}")
    assert ok


def test_criterion_12_splat_conservation():
    rng = np.random.default_rng(12)
    g = make_grid(Box([-1.5] * 3, [1.5] * 3), 0.125)
    worst = 0.0
    for _ in range(100):
        M, K = int(rng.integers(2, 9)), int(rng.integers(8, 33))
        r0 = sample_curve(CircleCurve(rng.uniform(-0.2, 0.2, 3), rng.uniform(0.3, 1.0), rng.normal(size=3)), K)
        r1 = sample_curve(CircleCurve(rng.uniform(-0.2, 0.2, 3), rng.uniform(0.3, 1.0), rng.normal(size=3)), K)
        s = init_sheet(r0, r1, M)
        v = s.vertices.copy()
        v[1:-1] += 0.1 * rng.normal(size=v[1:-1].shape)
        s = s.with_vertices(v)
        a = sheet_area(s)
        worst = max(worst, abs(splat_measure(s, g).node_mass.sum() - a) / a)
    ok = verdict("criterion 12", worst <= 1e-12, f"100 random sheets: worst relative mass error {worst:.2e} <= 1e-12")
    assert ok


def test_criterion_13_gradient():
    rng = np.random.default_rng(13)
    g = make_grid(Box([-1.5] * 3, [1.5] * 3), 0.125)
    delta, step = 0.05, 1e-6
    worst = 0.0
    for _ in range(10):
        a, b, c = rng.normal(size=3)
        u = field_from_function(g, lambda x, y, z: 0.5 + 0.3 * np.sin(a * x + 1) * np.cos(b * y) + 0.1 * c * z)
        s = init_sheet(sample_curve(CircleCurve([0, 0, -0.5], 1.0), 12), sample_curve(CircleCurve([0, 0, 0.5], 0.8), 12), 4)
        v = s.vertices.copy()
        v[1:-1] += 0.05 * rng.normal(size=v[1:-1].shape)
        s = s.with_vertices(v)
        grad = sheet_gradient(s, u, delta)
        fd = np.zeros_like(grad)
        for i in range(1, s.M):
            for j in range(s.K):
                for d in range(3):
                    vp, vm = v.copy(), v.copy()
                    vp[i, j, d] += step
                    vm[i, j, d] -= step
                    fd[i, j, d] = (surface_energy(s.with_vertices(vp), u, delta)
                                   - surface_energy(s.with_vertices(vm), u, delta)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(grad - fd)) / np.max(np.abs(fd))))
    ok = verdict("criterion 13", worst <= 1e-5,
                 f"10 random (sheet, u) pairs: worst max-component error / max |fd| = {worst:.2e} <= 1e-5")
    assert ok


def test_criterion_14_determinism(tmp_path):
    cfg = str(CONFIGS / "small.ini")
    names = ("trace.csv", "final.obj", "field.vtk")
    for run in ("a", "b"):
        assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / run), "--seed", "42", "--threads", "1"]) == 0
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    ok = verdict("criterion 14", all(same),
                 "two solves, same config/seed/threads: " + ", ".join(f"{n} identical={s}" for n, s in zip(names, same)))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
