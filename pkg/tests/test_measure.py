import numpy as np
import pytest

from pharm_bm import convex, oracles
from pharm_bm.errors import LevelUnresolvable
from pharm_bm.measure import functional_T, level_integral, limchar_sweep, measure


def test_oracle_formula_consistency():
    # T from the gradient formula against the closed form in the task
    for p in (2.25, 2.5, 2.75):
        a = oracles.exponent(p)
        closed = 2 * np.pi * a ** (p - 1) * 1.0 * (1.0 - 0.25**a) ** (-(p - 1))
        assert oracles.annulus_T(p, 0.25, 1.0) == pytest.approx(closed, rel=1e-12)
    assert oracles.annulus_grad(1.0, 2.5, 0.25, 1.0) == pytest.approx(0.90079, abs=2e-5)


def test_stationary_radius():
    assert oracles.stationary_radius(2.5, 0.25) == pytest.approx(2.0, rel=1e-12)
    R = np.linspace(1.2, 3.2, 2001)
    T = oracles.annulus_T(2.5, 0.25, R)
    assert R[np.argmin(T)] == pytest.approx(2.0, abs=2e-3)


def test_transported_oracle_trivial_cases():
    # K' = B_1 leaves the body fixed; the derivative of the normalised functional is zero
    exact, formula = oracles.transported_disk_dlogT(2.5, 0.54, 1.0)
    assert exact == pytest.approx(0.0, abs=1e-12) and formula == 0.0


def test_measure_annulus(annulus_small):
    prob, fld = annulus_small
    mu = measure(prob, fld)
    exact = oracles.annulus_mass(2.5, 0.25, 1.0)
    assert mu.total_mass == pytest.approx(exact, rel=1e-3)
    assert mu.spherical_mass == pytest.approx(mu.total_mass, rel=1e-10)
    assert mu.integrate(np.ones_like) == pytest.approx(mu.total_mass, rel=1e-10)


def test_functional_annulus(annulus_small):
    prob, fld = annulus_small
    rep = functional_T(prob, fld)
    exact = oracles.annulus_T(2.5, 0.25, 1.0)
    assert rep.T_spherical == pytest.approx(exact, rel=1e-3)
    assert rep.rel_gap < 5e-3


def test_functional_random_gap(random_ring_small):
    prob, fld = random_ring_small
    assert functional_T(prob, fld).rel_gap < 5e-3


def test_level_integral_tends_to_T(annulus_small):
    prob, fld = annulus_small
    T = oracles.annulus_T(2.5, 0.25, 1.0)
    I = [level_integral(prob, fld, s) for s in (0.2, 0.1, 0.05)]
    assert abs(I[-1] - T) < abs(I[0] - T)


def test_limchar_rejects_unresolved_levels(annulus_small):
    prob, fld = annulus_small
    with pytest.raises(LevelUnresolvable):
        limchar_sweep(prob, fld, [0.5])
    with pytest.raises(LevelUnresolvable):
        limchar_sweep(prob, fld, [1e-5])
