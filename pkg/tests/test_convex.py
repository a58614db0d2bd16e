import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipe

from pharm_bm import convex
from pharm_bm.errors import CurvatureFloorViolation, GenerationFailed, NotInterior, OriginNotInterior

TH = np.linspace(0, 2 * np.pi, 97)


def test_disk_support_and_center():
    h = convex.disk(2.0, center=(0.3, -0.1))
    np.testing.assert_allclose(h(TH), 2.0 + 0.3 * np.cos(TH) - 0.1 * np.sin(TH), atol=1e-14)


def test_ellipse_support_closed_form():
    h = convex.ellipse(2.0, 1.0, Kmax=64)
    exact = np.sqrt(4 * np.cos(TH) ** 2 + np.sin(TH) ** 2)
    assert np.max(np.abs(h(TH) - exact)) < 1e-8


def test_curvature_floor():
    with pytest.raises(CurvatureFloorViolation):
        convex.fourier(1.0, [0.0, 0.5])
    convex.fourier(1.0, [0.0, 0.3])


@given(st.floats(0.01, 3), st.floats(0, 3), st.integers(0, 50), st.integers(0, 50))
@settings(max_examples=40, deadline=None)
def test_minkowski_additivity(alpha, beta, s1, s2):
    h1, h2 = convex.random_body(s1), convex.random_body(s2)
    hc = convex.minkowski_combine(h1, h2, alpha, beta)
    np.testing.assert_allclose(hc(TH), alpha * h1(TH) + beta * h2(TH), atol=1e-12)


def test_hausdorff_disks():
    assert convex.hausdorff(convex.disk(1.0), convex.disk(1.3)) == pytest.approx(0.3, abs=1e-13)
    assert convex.hausdorff(convex.disk(1.0), convex.disk(1.0, (0.2, 0.0))) == pytest.approx(0.2, abs=1e-12)


def test_diam_and_min_support():
    e = convex.ellipse(2.0, 1.0)
    assert convex.diam(e) == pytest.approx(4.0, abs=1e-8)
    assert convex.min_support(e) == pytest.approx(1.0, abs=1e-8)
    assert convex.support_gap(e, convex.disk(0.5)) == pytest.approx(0.5, abs=1e-8)


def test_gauss_param_perimeter():
    assert convex.gauss_param(convex.disk(0.7), 512).perimeter == pytest.approx(2 * np.pi * 0.7, rel=1e-12)
    # ellipse perimeter 4 a E(1 - b^2/a^2)
    per = convex.gauss_param(convex.ellipse(2.0, 1.0), 4096).perimeter
    assert per == pytest.approx(8 * ellipe(1 - 0.25), rel=1e-6)


def test_gauss_param_positions_on_boundary():
    h = convex.random_body(7)
    g = convex.gauss_param(h, 256)
    # <x(theta), nu(theta)> = h(theta)
    np.testing.assert_allclose(np.sum(g.positions * g.normals, axis=1), h(g.theta), atol=1e-12)


def test_radial_function_ellipse():
    e = convex.ellipse(2.0, 1.0, Kmax=64)
    phi = np.linspace(0, 2 * np.pi, 41)
    exact = 1.0 / np.sqrt(np.cos(phi) ** 2 / 4 + np.sin(phi) ** 2)
    assert np.max(np.abs(convex.radial_from_support(e, phi) - exact)) < 1e-7


def test_radial_needs_interior_origin():
    with pytest.raises(OriginNotInterior):
        convex.radial_from_support(convex.disk(1.0, (2.0, 0.0)), 0.0)


def test_dist_and_project_disk():
    d, foot, ang = convex.dist_and_project(convex.disk(1.0), [0.3, 0.4])
    assert d == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(foot, [0.6, 0.8], atol=1e-10)
    with pytest.raises(NotInterior):
        convex.dist_and_project(convex.disk(1.0), [1.5, 0.0])


@given(st.integers(0, 200), st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
@settings(max_examples=50, deadline=None)
def test_projection_inequality(seed, frac, phi):
    h = convex.random_body(seed)
    r = float(convex.radial_from_support(h, phi))
    x = frac * r * np.array([np.cos(phi), np.sin(phi)])
    assert np.max(convex.projection_gaps(h, x[None, :], 100, seed)) <= 1e-9


def test_rayleigh_spot_value():
    assert convex.rayleigh_quadrature([1, 0], [1, 0]) == pytest.approx(np.pi, rel=1e-12)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_rayleigh_bounds(v):
    a, b = np.array(v[:2]), np.array(v[2:])
    val = convex.rayleigh_quadrature(a, b)
    ab = float(a @ b)
    lo, hi = sorted((0.0, 2 * np.pi * ab))
    assert lo - 1e-12 <= val <= hi + 1e-12


def test_random_body_deterministic_and_admissible():
    h1, h2 = convex.random_body(42), convex.random_body(42)
    assert h1.allclose(h2, atol=0)
    assert h1.c0 == 1.0 and h1.a[0] == 0.0 and h1.b[0] == 0.0
    assert convex.min_curvature_radius(h1)[0] >= 0.05
    assert not h1.allclose(convex.random_body(43))


def test_random_body_generation_failure():
    with pytest.raises(GenerationFailed):
        convex.random_body(0, Kmax=4, decay=0.0, amplitude=5.0)


def test_support_of_points_square():
    pts = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    s = convex.support_of_points(pts, 256, Kmax=16)
    np.testing.assert_allclose(s.values, convex.square_support(s.theta), atol=1e-12)


def test_support_of_star_curve_circle():
    smooth = convex.support_of_star_curve(np.full(256, 0.7), M=256, Kmax=16).smooth
    assert smooth.allclose(convex.disk(0.7), atol=1e-6)


def test_body_round_trip(tmp_path):
    h = convex.random_body(9)
    convex.save_body(h, tmp_path / "body.txt")
    g = convex.load_body(tmp_path / "body.txt")
    assert g.allclose(h, atol=0) and g.kappa_floor == h.kappa_floor
