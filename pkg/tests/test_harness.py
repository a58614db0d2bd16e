import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pharm_bm import convex, harness, oracles
from pharm_bm.config import from_dict
from pharm_bm.errors import NeighborhoodTooLarge


def small_config(**exp):
    return from_dict({"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "inner": {"scale": 0.8}},
                      "solver": {"p": 2.5, "mesh": [64, 16]}, "experiment": exp})


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0, 1))
def test_combination_parameter_stays_in_family(t1, t2, lam):
    K0, Kp = convex.disk(1.0), convex.random_body(4).scaled(0.5)
    s = harness.combination_parameter(t1, t2, lam)
    Kl = convex.minkowski_combine(harness.family_body(K0, Kp, t1), harness.family_body(K0, Kp, t2), 1 - lam, lam)
    assert Kl.allclose(harness.family_body(K0, Kp, s), atol=1e-12)


def test_family_consistency():
    K0, Kp = convex.disk(1.0), convex.random_body(2).scaled(0.5)
    for sign in (1, -1):
        d = [convex.hausdorff(harness.family_body(K0, Kp, sign * t), K0) for t in (0.1, 0.05, 0.02, 0.01, 0.001)]
        assert np.all(np.diff(d) < 0) and d[-1] < 1e-3


def test_family_grid():
    cfg = small_config(tau=0.05, n_family=2)
    fam = harness.family(cfg)
    assert [t for t, _ in fam] == pytest.approx([-0.05 * 2 / 3, -0.05 / 3, 0.0, 0.05 / 3, 0.05 * 2 / 3])


def test_family_pure_dilation_when_kprime_zero():
    K = harness.family_body(convex.disk(1.0), convex.origin(), 0.25)
    assert K.allclose(convex.disk(0.8), atol=1e-14)


def test_family_too_large():
    cfg = small_config(tau=0.9, n_family=2)
    cfg.bodies["Kprime"] = {"kind": "disk", "radius": 0.2}
    with pytest.raises(NeighborhoodTooLarge):
        harness.family(cfg)


@pytest.mark.parametrize("seed", [0, 5, 17])
def test_random_pair_within_neighbourhood(seed):
    K0 = convex.disk(1.0)
    K1, K2 = harness.random_pair(seed, K0, 0.05)
    assert convex.hausdorff(K1, K0) <= 0.05 and convex.hausdorff(K2, K0) <= 0.05
    assert not K1.allclose(K2)
    K1b, _ = harness.random_pair(seed, K0, 0.05)
    assert K1.allclose(K1b, atol=0)


def test_family_pair_members():
    fp = harness.family_pair(3, convex.disk(1.0))
    assert fp.K1.allclose(harness.family_body(convex.disk(1.0), fp.Kprime, fp.t1), atol=1e-14)
    assert fp.t1 < fp.t2


def test_margin_symmetry():
    cfg = small_config(lambdas=[0.3, 0.5])
    K1, K2 = harness.random_pair(1, cfg.K0)
    a = harness.bm_min_check(cfg, K1, K2, serial=True)
    cfg.lambdas = [0.7, 0.5]
    b = harness.bm_min_check(cfg, K2, K1, serial=True)
    for ra, rb in zip(a.rows, b.rows):
        assert ra["T_lambda"] == pytest.approx(rb["T_lambda"], rel=1e-9)


def test_disk_margin_matches_closed_form():
    cfg = from_dict({"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "inner": {"scale": 0.8}},
                     "solver": {"p": 2.5, "mesh": [128, 32]}, "experiment": {"lambdas": [0.5]}})
    rep = harness.bm_min_check(cfg, convex.disk(0.98), convex.disk(1.02), serial=True)
    closed = oracles.annulus_T(2.5, 0.8, 1.0) - oracles.annulus_T(2.5, 0.8, 1.02)
    assert closed == pytest.approx(6.9, abs=0.2)
    assert rep.rows[0]["margin"] == pytest.approx(closed, rel=5e-2)


def test_concavity_scaling_identity_for_origin():
    cfg = from_dict({"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "Kprime": {"kind": "disk", "radius": 0.0},
                                "inner": {"level_set": 0.5, "presolve_scale": 0.25}},
                     "solver": {"p": 2.5, "mesh": [64, 32]},
                     "experiment": {"semantics": "transported", "lambdas": [0.5]}})
    K0 = cfg.K0
    K1, K2 = harness.family_body(K0, convex.origin(), -0.05), harness.family_body(K0, convex.origin(), 0.05)
    rep = harness.bm_concavity_check(cfg, K1, K2, -0.05, 0.05, serial=True)
    row = [r for r in rep.rows if r["semantics"] == "transported"][0]
    assert row["concavity_defect"] == pytest.approx(0.0, abs=1e-10)


def test_homogeneity_small():
    cfg = small_config()
    rep = harness.homogeneity_check(cfg, [0.5, 2.0], serial=True)
    assert rep.passed and rep.expected == 0.5


def test_hadamard_identity_routes():
    base = {"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "inner": {"level_set": 0.5, "presolve_scale": 0.25}},
            "solver": {"p": 2.5, "mesh": [64, 32]}, "experiment": {"semantics": "transported", "tau": 0.1}}
    for kp in ({"kind": "disk", "radius": 1.0}, {"kind": "disk", "radius": 0.0}):
        doc = {**base, "bodies": {**base["bodies"], "Kprime": kp}}
        rep = harness.hadamard_check(from_dict(doc), serial=True)
        assert rep.route == "identity" and rep.rel_error <= 1e-10


def test_transported_disk_solver_matches_oracle():
    # the solved derivative follows the exact transported value, not the boundary-integral formula
    doc = {"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "Kprime": {"kind": "disk", "radius": 0.5},
                      "inner": {"level_set": 0.5, "presolve_scale": 0.25}},
           "solver": {"p": 2.5, "mesh": [128, 64]}, "experiment": {"semantics": "transported", "tau": 0.1}}
    rep = harness.hadamard_check(from_dict(doc), serial=True)
    ref = rep.reference
    assert ref["solved_dlogT"] == pytest.approx(ref["exact_dlogT"], abs=1e-3)


def test_homothetic_hadamard():
    doc = {"bodies": {"K0": {"kind": "disk", "radius": 1.0}, "Kprime": {"kind": "random", "seed": 5, "scale": 0.5},
                      "inner": {"scale": 0.8}},
           "solver": {"p": 2.5, "mesh": [128, 32]}, "experiment": {"tau": 0.1}}
    assert harness.hadamard_homothetic(from_dict(doc), serial=True).rel_error < 1e-3


def test_pmap_matches_serial(monkeypatch):
    monkeypatch.setenv("PHARM_BM_THREADS", "2")
    assert harness.n_workers() == 2
    items = [2.25, 2.5, 2.75]
    expected = [oracles.stationary_radius(p, 0.25) for p in items]
    assert harness.pmap(_stationary, items) == expected
    assert harness.pmap(_stationary, items, serial=True) == expected
    assert harness.n_workers(serial=True) == 1


def _stationary(p):
    return oracles.stationary_radius(p, 0.25)
