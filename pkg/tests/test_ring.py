import numpy as np
import pytest

from pharm_bm import convex, oracles
from pharm_bm.errors import InvalidProblem, LevelOutOfRange
from pharm_bm.ring import (RingProblem, ScalarField, boundary_gradient, build_mesh, convexity_defect,
                           harnack_window, level_set, level_support, solve, sublevel_restart_check)


def annulus_error(p, mesh):
    prob = RingProblem(convex.disk(1.0), convex.disk(0.25), p, 1.0, mesh)
    fld = solve(prob)
    rho = np.hypot(*fld.mesh.nodes.T)
    return float(np.max(np.abs(fld.u - oracles.annulus_u(rho, p, 0.25, 1.0))))


def test_mesh_small_annulus():
    m = build_mesh(RingProblem(convex.disk(1.0), convex.disk(0.25), 2.5, 1.0, (8, 4)))
    assert m.triangles.shape[0] == 64
    assert np.all(m.area > 0)
    np.testing.assert_allclose(m.nodes[m.index(0, 4)], [1.0, 0.0], atol=1e-14)
    # each quad splits into two triangles; each kind is congruent around a radial layer
    layer = m.area.reshape(4, -1)
    for kind in (layer[:, 0::2], layer[:, 1::2]):
        assert np.allclose(kind, kind[:, :1], rtol=1e-12)


def test_mesh_ellipse_orientation():
    e = convex.ellipse(2.0, 1.0)
    m = build_mesh(RingProblem(e, e.scaled(0.3), 2.5, 1.0, (64, 16)))
    assert np.all(m.area > 0) and m.quality > 0


def test_invalid_problems():
    with pytest.raises(InvalidProblem):
        RingProblem(convex.disk(1.0), convex.disk(0.9999), 2.5)
    with pytest.raises(InvalidProblem):
        RingProblem(convex.disk(1.0), convex.disk(0.5), 3.0)
    with pytest.raises(InvalidProblem):
        RingProblem(convex.disk(1.0), convex.disk(0.5), 2.5, 0.0)


def test_annulus_oracle_small(annulus_small):
    prob, fld = annulus_small
    rho = np.hypot(*fld.mesh.nodes.T)
    assert np.max(np.abs(fld.u - oracles.annulus_u(rho, 2.5, 0.25, 1.0))) < 1e-4
    assert fld.comparison_violations() == 0
    assert fld.radial_monotone()
    assert np.all(fld.u[fld.mesh.outer_nodes] == 0) and np.all(fld.u[fld.mesh.inner_nodes] == 1.0)


@pytest.mark.parametrize("p", [2.0, 2.25, 2.5, 2.75])
def test_grid_convergence(p):
    coarse, fine = annulus_error(p, (64, 32)), annulus_error(p, (128, 64))
    assert coarse / fine >= 1.5


def test_scaling_covariance(random_ring_small):
    prob, fld = random_ring_small
    lam = 1.7
    fs = solve(prob.scaled(lam))
    np.testing.assert_allclose(fs.mesh.nodes, lam * fld.mesh.nodes, atol=1e-12)
    assert np.max(np.abs(fs.u - fld.u)) < 1e-8


def test_boundary_gradient_annulus(annulus_small):
    _, fld = annulus_small
    bg = boundary_gradient(fld)
    exact = oracles.annulus_grad(1.0, 2.5, 0.25, 1.0)
    assert np.max(np.abs(bg.grad - exact)) / exact < 1e-2
    assert np.max(np.abs(bg.grad_element - bg.grad) / bg.grad) < 2e-2


def test_level_set_annulus(annulus_small):
    _, fld = annulus_small
    for s in (0.1, 0.5, 0.9):
        lc = level_set(fld, s)
        assert np.max(np.abs(lc.radii - oracles.annulus_level_radius(s, 2.5, 0.25, 1.0))) < 1e-3
    with pytest.raises(LevelOutOfRange):
        level_set(fld, 1.0)


def test_level_set_convexity(ellipse_ring, random_ring_small):
    for _, fld in (ellipse_ring, random_ring_small):
        for s in (0.05, 0.2, 0.5, 0.8):
            assert convexity_defect(level_set(fld, s).points) <= fld.h_mesh**2


def test_level_nesting(random_ring_small):
    _, fld = random_ring_small
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    prev = level_support(fld, 0.0)(th)
    for t in (0.1, 0.3, 0.5):
        cur = level_support(fld, t)(th)
        assert np.all(cur < prev)
        prev = cur


def test_restart_trivial_and_annulus(annulus_small):
    _, fld = annulus_small
    assert sublevel_restart_check(fld, 0.0).discrepancy == 0.0
    assert sublevel_restart_check(fld, 0.2).discrepancy <= 5e-3


def test_restart_random(random_ring_small):
    _, fld = random_ring_small
    assert sublevel_restart_check(fld, 0.1).discrepancy <= 1e-2


def test_harnack_window(random_ring_small):
    _, fld = random_ring_small
    assert harnack_window(fld, [0.1, 0.05]).constant <= 3.0


def test_polar_eval_matches_nodes(random_ring_small):
    _, fld = random_ring_small
    nodes = fld.mesh.nodes[fld.mesh.M_ang:-fld.mesh.M_ang]
    assert np.max(np.abs(fld.polar_eval(nodes) - fld.u[fld.mesh.M_ang:-fld.mesh.M_ang])) < 1e-10
    assert np.isnan(fld.polar_eval([[5.0, 0.0]])[0])


def test_field_immutable(annulus_small):
    _, fld = annulus_small
    with pytest.raises(ValueError):
        fld.u[0] = 2.0
    assert isinstance(fld, ScalarField)
