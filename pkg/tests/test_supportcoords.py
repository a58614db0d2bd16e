import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pharm_bm import convex, oracles
from pharm_bm import supportcoords as sc
from pharm_bm.errors import GridMismatch
from pharm_bm.ring import RingProblem, ScalarField, solve


@pytest.fixture(scope="module")
def annulus_table(annulus_small):
    prob, fld = annulus_small
    return sc.build_table(prob, fld), fld


@pytest.fixture(scope="module")
def disk_pair():
    inner = convex.disk(0.8)
    tabs, flds = [], []
    for R in (0.98, 1.02):
        prob = RingProblem(convex.disk(R), inner, 2.5, 1.0, (256, 64))
        fld = solve(prob)
        tabs.append(sc.build_table(prob, fld))
        flds.append(fld)
    return tabs, flds


def test_table_rows_are_level_circles(annulus_table):
    tab, _ = annulus_table
    rho = oracles.annulus_level_radius(tab.t[1:], 2.5, 0.25, 1.0)
    assert np.max(np.abs(tab.h[1:] - rho[:, None])) < 1e-3
    assert tab.monotone_in_t()


def test_plaphu_annulus(annulus_table):
    tab, _ = annulus_table
    assert sc.plaphu_residual(tab, 2.5).sup < 5e-2


def test_plaphu_contrast_nonharmonic(annulus_small):
    prob, fld = annulus_small
    sq = ScalarField(prob, fld.mesh, fld.u**2 / prob.eps0)
    tab = sc.build_table(prob, sq, t_grid=np.linspace(0.05, 0.5, 32))
    res = sc.plaphu_residual(tab, 2.5)
    assert np.min(np.abs(res.interior())) > 0.1


def test_ids1_annulus(annulus_table):
    tab, fld = annulus_table
    rep = sc.ids1_check(tab, fld)
    assert max(rep.support, rep.gradient, rep.speed) < 1e-2


def test_supconv_idempotent(annulus_table):
    tab, fld = annulus_table
    S = sc.supremal_convolution(tab, tab, 0.5)
    rep = sc.subsolution_compare(S, fld, n_probe=2000)
    assert abs(rep.max_violation) <= rep.tol_discrete


def test_supconv_endpoints(disk_pair):
    (t1, t2), (f1, f2) = disk_pair
    for lam, fld in ((0.0, f1), (1.0, f2)):
        S = sc.supremal_convolution(t1, t2, lam)
        assert sc.subsolution_compare(S, fld, n_probe=2000).max_violation < 1e-3


def test_supconv_disk_levels(disk_pair):
    (t1, t2), _ = disk_pair
    S = sc.supremal_convolution(t1, t2, 0.5)
    rho1 = oracles.annulus_level_radius(t1.t, 2.5, 0.8, 0.98)
    rho2 = oracles.annulus_level_radius(t1.t, 2.5, 0.8, 1.02)
    assert np.max(np.abs(S.table.h - 0.5 * (rho1 + rho2)[:, None])) < 1e-3


def test_supconv_disk_subsolution(disk_pair):
    (t1, t2), _ = disk_pair
    prob = RingProblem(convex.disk(1.0), convex.disk(0.8), 2.5, 1.0, (256, 64))
    fld = solve(prob)
    S = sc.supremal_convolution(t1, t2, 0.5)
    assert sc.subsolution_compare(S, fld).max_violation <= 1e-3
    assert sc.subsolution_sign_check(S, 2.5).passed


def test_grid_mismatch(annulus_table, disk_pair):
    (t1, _), _ = disk_pair
    tab, _ = annulus_table
    with pytest.raises(GridMismatch):
        sc.supremal_convolution(tab, t1, 0.5)


@given(st.integers(0, 2**31), st.sampled_from([0.25, 0.5, 0.75]))
@settings(max_examples=30, deadline=None)
def test_cstech_inequalities(seed, lam):
    rng = np.random.default_rng(seed)
    n = 50
    M1, M2 = sc.random_spd(rng, n), sc.random_spd(rng, n)
    z1, z2 = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    t1, t2 = rng.normal(size=n), rng.normal(size=n)
    g1, g2 = sc.cstech_gaps(M1, M2, z1, z2, t1, t2, lam)
    assert np.all(g1 >= -1e-12) and np.all(g2 >= -1e-12)


def test_cstech_equality_case():
    rng = np.random.default_rng(1)
    M = sc.random_spd(rng, 20)
    z = rng.normal(size=(20, 2))
    t = rng.normal(size=20)
    g1, g2 = sc.cstech_gaps(M, M, z, z, t, t, 0.5)
    np.testing.assert_allclose(g1, 0, atol=1e-9)
    np.testing.assert_allclose(g2, 0, atol=1e-9)
