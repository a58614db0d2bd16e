"""Full acceptance battery at the pinned tolerances, one test and one printed line per criterion.

Solves are shared through the caches in ``pharm_bm.acceptance``; the property
suite runs last so its comparison-principle audit covers every solve made here.
"""

import pytest

from pharm_bm import acceptance


@pytest.fixture
def check(capsys):
    def run(number):
        c = acceptance.run(number, "full")
        with capsys.disabled():
            print("\n" + c.line() + f" ({c.seconds:.0f}s)")
        assert c.passed, c.line()

    return run


def test_annulus_oracle(check):
    check(1)


def test_functional_oracle(check):
    check(2)


def test_homogeneity(check):
    check(3)


def test_hadamard_transported(check):
    check(4)


def test_support_coordinate_residuals(check):
    check(5)


def test_supremal_convolution_subsolution(check):
    check(6)


def test_brunn_minkowski_min_form(check):
    check(7)


def test_limiting_characterization(check):
    check(8)


def test_locality_probe(check):
    check(10)


def test_property_suites(check):
    check(9)
