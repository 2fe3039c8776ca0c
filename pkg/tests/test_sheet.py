import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from conftest import annulus, cylinder
from plateau.errors import OutsideC0, RingMismatch
from plateau.geometry import Ball, CircleCurve, sample_curve
from plateau.sheet import (ahlfors_ratio, area_in_ball, dyadic_radii, init_sheet, lipschitz_estimate,
                           parametric_sheet, sheet_area, triangulate)

ANNULUS_AREA = np.pi * 0.75


def sphere(M=64, K=128, cap=1e-3):
    def fn(t, th):
        phi = cap + (np.pi - 2 * cap) * t
        return np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=-1)
    return parametric_sheet(fn, M, K)


def test_identity_homotopy_is_degenerate():
    ring = sample_curve(CircleCurve([0, 0, 0], 1.0), 32)
    s = init_sheet(ring, ring, 4)
    for i in range(5):
        np.testing.assert_array_equal(s.vertices[i], ring)
    assert sheet_area(s) == 0.0


def test_linear_rows_are_convex_combinations():
    r0 = sample_curve(CircleCurve([0, 0, 0], 0.5), 16)
    r1 = sample_curve(CircleCurve([0, 0, 0], 1.0), 16)
    s = init_sheet(r0, r1, 4)
    np.testing.assert_allclose(s.vertices[1], 0.75 * r0 + 0.25 * r1, atol=1e-15)
    assert np.all(s.vertices[..., 2] == 0.0)


def test_cylinder_rows_interpolate_heights():
    s = cylinder(4, 16)
    np.testing.assert_allclose(s.vertices[:, 0, 2], [-0.5, -0.25, 0.0, 0.25, 0.5], atol=1e-15)


def test_ring_mismatch():
    with pytest.raises(RingMismatch):
        init_sheet(np.zeros((8, 3)), np.zeros((9, 3)), 4)


def test_ring_outside_region():
    ring = sample_curve(CircleCurve([0, 0, 0], 1.0), 16)
    with pytest.raises(OutsideC0):
        init_sheet(ring, 0.5 * ring, 4, region=Ball([0, 0, 0], 0.9))


def test_sheet_shape_validation():
    with pytest.raises(ValueError):
        init_sheet(np.zeros((4, 3)), np.zeros((4, 3)), 4)
    with pytest.raises(ValueError):
        init_sheet(np.zeros((8, 3)), np.ones((8, 3)), 1)


def test_vertices_are_read_only():
    s = cylinder(2, 8)
    with pytest.raises(ValueError):
        s.vertices[0, 0, 0] = 1.0


def test_triangulation_counts_and_coverage():
    s = cylinder(6, 20)
    tris = triangulate(s)
    assert tris.shape == (2 * 6 * 20, 3)
    assert set(np.unique(tris)) == set(range(7 * 20))


def test_triangulation_uses_shorter_diagonal():
    v = np.zeros((3, 8, 3))
    v[:, :, 0] = np.arange(8)[None, :] * 1.0
    v[:, :, 1] = np.arange(3)[:, None] * 1.0
    v[1, 1, 2] = 0.0
    # shear every cell so that the (i,j)-(i+1,j+1) diagonal is the short one
    v[:, :, 0] += 0.8 * np.arange(3)[:, None] * -1.0
    s = parametric_sheet(lambda t, th: v, 2, 8)
    tris = triangulate(s)
    a, b, c = tris[0]
    K = 8
    # first cell (0,0): shorter diagonal joins a=(0,0) with (1,1)
    assert {a, b, c} == {0, 1, K + 1}


def test_annulus_area():
    s = annulus(0.5, 1.0, 64, 256)
    assert sheet_area(s) == pytest.approx(ANNULUS_AREA, rel=5e-3)
    # frozen: inscribed polygons lose a fixed fraction sin(2pi/K)/(2pi/K)
    assert sheet_area(s) == pytest.approx(ANNULUS_AREA * np.sin(2 * np.pi / 256) / (2 * np.pi / 256), rel=1e-12)


def test_cylinder_area():
    s = cylinder(64, 256)
    assert sheet_area(s) == pytest.approx(2 * np.pi, rel=5e-3)


def test_area_convergence_rate_in_K():
    errs = [abs(sheet_area(annulus(0.5, 1.0, 8, K)) - ANNULUS_AREA) for K in (32, 64, 128)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 2.0 <= (coarse / fine) <= 8.0


def test_area_rigid_motion_invariance(rng):
    s = cylinder(8, 32)
    a0 = sheet_area(s)
    for R in Rotation.random(100, random_state=3):
        shift = rng.normal(size=3)
        moved = s.with_vertices(R.apply(s.points).reshape(s.vertices.shape) + shift)
        assert sheet_area(moved) == pytest.approx(a0, rel=1e-12)


def test_lipschitz_cylinder():
    assert lipschitz_estimate(cylinder(64, 256)) == pytest.approx(1.0, rel=1e-2)


def test_lipschitz_annulus():
    assert lipschitz_estimate(annulus(0.5, 1.0, 64, 256)) == pytest.approx(1.0, rel=1e-2)


def test_lipschitz_degenerate_circle():
    ring = sample_curve(CircleCurve([0, 0, 0], 1.0), 256)
    lip = lipschitz_estimate(init_sheet(ring, ring, 4))
    # only the angular chord survives: K/(2pi) * 2 sin(pi/K)
    assert lip == pytest.approx(256 / np.pi * np.sin(np.pi / 256), rel=1e-12)


def test_lipschitz_monotone_under_displacement(rng):
    s = cylinder(8, 32)
    base = lipschitz_estimate(s)
    for _ in range(100):
        v = s.vertices.copy()
        i, j = rng.integers(1, 8), rng.integers(32)
        v[i, j] += rng.normal(size=3) * 0.5
        assert lipschitz_estimate(s.with_vertices(v)) >= base - 1e-12


@given(st.floats(0.1, 10.0))
def test_lipschitz_scales_linearly(scale):
    s = annulus(0.5, 1.0, 4, 16)
    big = s.with_vertices(s.vertices * scale)
    assert lipschitz_estimate(big) == pytest.approx(scale * lipschitz_estimate(s), rel=1e-12)


def test_area_in_ball_flat_disk():
    s = annulus(0.0, 2.0, 64, 256)
    for r in (0.25, 0.5, 1.0):
        assert area_in_ball(s, np.array([0.3, -0.2, 0.0]), r) == pytest.approx(np.pi * r * r, rel=2e-3)


def test_ahlfors_flat_annulus():
    s = annulus(0.5, 1.0, 32, 256)
    rep = ahlfors_ratio(s, dyadic_radii(s, levels=4, start=3))
    assert rep.sup_ratio <= 1.05
    assert rep.argmax_radius in rep.radii


def test_ahlfors_sphere_caps():
    s = sphere()
    radii = np.array([1 / 8, 1 / 4, 1 / 2])
    centers = s.vertices[::8, ::16].reshape(-1, 3)
    rep = ahlfors_ratio(s, radii, centers)
    assert np.all(np.abs(rep.per_radius_sup - 1.0) <= 0.05)


def test_sphere_cap_area_exact_clip():
    # finer clipping than the Ahlfors monitor: every cap is pi r^2 to 0.5%
    s = sphere()
    for x in s.vertices[::16, ::32].reshape(-1, 3):
        for r in (1 / 8, 1 / 4, 1 / 2):
            assert area_in_ball(s, x, r) == pytest.approx(np.pi * r * r, rel=5e-3)


def test_ahlfors_two_stacked_disks():
    # rows 0..32 sweep the lower disk outwards, rows 33..65 the upper one
    # back inwards; the joining band is the vertical rim strip
    def two_disks(t, th):
        i = np.rint(t * 65)
        lower = i <= 32
        rho = np.where(lower, i / 32, (65 - i) / 32)
        z = np.where(lower, 0.0, 0.05)
        return np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=-1)
    s = parametric_sheet(two_disks, 65, 128)
    rep = ahlfors_ratio(s, np.array([0.5]), np.array([[0.0, 0.0, 0.0]]))
    # the short connecting band at the rim lies outside the ball
    assert rep.sup_ratio == pytest.approx(2.0, rel=0.05)


def test_ahlfors_rejects_bad_radii():
    with pytest.raises(ValueError):
        ahlfors_ratio(cylinder(4, 16), np.array([0.5, -1.0]))
