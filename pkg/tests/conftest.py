import pytest

from pharm_bm import convex
from pharm_bm.ring import RingProblem, solve


@pytest.fixture(scope="session")
def annulus_small():
    prob = RingProblem(convex.disk(1.0), convex.disk(0.25), 2.5, 1.0, (128, 64))
    return prob, solve(prob)


@pytest.fixture(scope="session")
def random_ring_small():
    prob = RingProblem(convex.random_body(3), convex.disk(0.25), 2.5, 1.0, (128, 64))
    return prob, solve(prob)


@pytest.fixture(scope="session")
def ellipse_ring():
    outer = convex.ellipse(1.5, 1.0)
    prob = RingProblem(outer, outer.scaled(0.4), 2.25, 1.0, (128, 48))
    return prob, solve(prob)
