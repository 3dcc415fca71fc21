from math import pi

import numpy as np
import pytest
from scipy import integrate, special

from nlevel.errors import SupportViolation, ValidationError
from nlevel.haar import RngStream, empirical_density
from nlevel.quadrature import QuadratureSpec
from nlevel.rmtdensity import (density_contour, density_onaxis, density_restricted,
                               exact_one_level, kernel_density, kernel_matrix, scaled_density,
                               sides_label)
from nlevel.shiftcalc import GroupSpec
from nlevel.testfns import Factor, TestFunction, _ProductFactor, parse_test_function


def per(desc, n):
    return parse_test_function(desc, n, periodic=True)


@pytest.mark.parametrize("N", [1, 3, 6])
def test_count_one_level(N):
    for sym in ("SO_even", "USp"):
        g = GroupSpec(sym, N)
        assert abs(density_contour(g, 1, per("one", 1)).value - N) < 1e-6
        assert abs(density_onaxis(g, 1, per("one", 1)).value - N) < 1e-6


def test_count_pairs():
    r = density_contour(GroupSpec("SO_even", 5), 2, per("one", 2))
    assert abs(r.value - 20) < 1e-6
    assert abs(r.imag) < 1e-8 * max(1, abs(r.value))
    assert len(r.terms) == 9


def test_weyl_examples():
    assert abs(density_contour(GroupSpec("SO_even", 1), 1, per("cos:2", 1)).value) < 1e-8
    assert abs(density_onaxis(GroupSpec("USp", 1), 1, per("cos:2", 1)).value + 0.5) < 1e-6


@pytest.mark.parametrize("sym", ["SO_even", "USp"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_one_level_against_exact_density(sym, k):
    g = GroupSpec(sym, 3)
    th = np.linspace(0, pi, 20001)
    exact = integrate.simpson(exact_one_level(g, th) * np.cos(k * th), x=th)
    assert abs(density_contour(g, 1, per(f"cos:{k}", 1)).value - exact) < 1e-8


def test_contour_onaxis_agreement():
    g = GroupSpec("SO_even", 4)
    f = per("cos:1", 2)
    a, b = density_contour(g, 2, f), density_onaxis(g, 2, f)
    assert abs(a.value - b.value) < 1e-6
    assert abs(a.value - b.value) <= a.error_estimate + b.error_estimate + 1e-10


@pytest.mark.parametrize("sym", ["SO_even", "USp"])
def test_monte_carlo_agreement(sym):
    g = GroupSpec(sym, 3)
    f = per("cos:1*cos:2", 2)
    exact = density_contour(g, 2, f).value
    mean, err = empirical_density(g, f, 2, True, 40000, RngStream(21))
    assert abs(mean - exact) < 3 * err


def test_argument_symmetry():
    g = GroupSpec("USp", 3)
    a = density_contour(g, 2, per("cos:1*gauss:1", 2)).value
    b = density_contour(g, 2, per("gauss:1*cos:1", 2)).value
    assert abs(a - b) < 1e-12 * max(1, abs(a))


def test_validation():
    g = GroupSpec("SO_even", 2)
    with pytest.raises(ValidationError):
        density_contour(g, 3, per("one", 3))
    with pytest.raises(ValidationError):
        density_contour(g, 1, parse_test_function("gauss:1", 1))
    with pytest.raises(ValidationError):
        density_contour(g, 2, per("one", 1))


def _sinc4(width, n):
    half = Factor("fejer", width / 2)
    return TestFunction(n, factors=[_ProductFactor((half, half))] * n)


def test_restricted_full_equivalence_and_audit():
    g = GroupSpec("SO_even", 8)
    f = _sinc4(1.9, 1)
    quad = QuadratureSpec(panels=100, order=16, contour_offset=0.25, truncation=25.0)
    full = density_restricted(g, 1, f, None, quad)
    q1 = density_restricted(g, 1, f, 1, quad)
    assert abs(full.value - q1.value) < 1e-6
    assert set(q1.metadata["subset_audit"]["K"]) == {0}
    same = density_restricted(g, 1, f, 2, quad)
    assert same.value == full.value


def test_restricted_full_equivalence_n2():
    g = GroupSpec("USp", 6)
    f = _sinc4(1.9, 2)
    quad = QuadratureSpec(panels=16, order=16, contour_offset=0.25, truncation=12.0, tol=1.0)
    full = density_restricted(g, 2, f, None, quad)
    q2 = density_restricted(g, 2, f, 2, quad)
    assert abs(full.value - q2.value) < 1e-6
    for sizes in q2.metadata["subset_audit"].values():
        assert max(sizes) < 2


def test_restricted_audit_n2():
    g = GroupSpec("USp", 4)
    f = parse_test_function("fejer:0.9", 2)
    quad = QuadratureSpec(panels=12, order=16, contour_offset=0.25, truncation=10.0, tol=1.0)
    r = density_restricted(g, 2, f, 1, quad)
    for sides, sizes in r.metadata["subset_audit"].items():
        assert sizes == [0]


def test_restricted_support_violation():
    g = GroupSpec("SO_even", 4)
    with pytest.raises(SupportViolation):
        density_restricted(g, 1, parse_test_function("fejer:2.5", 1), 1)
    with pytest.raises(SupportViolation):
        density_restricted(g, 1, parse_test_function("gauss:1", 1), 1)


def test_kernel_values():
    assert kernel_matrix("SO_even", 0.0, 0.0) == 2
    assert kernel_matrix("USp", 0.0, 0.0) == 0


def test_kernel_density_two_level_oracle():
    f = parse_test_function("gauss:1", 2)

    def integrand(y, x):
        K = lambda a, b: np.sinc(b - a) + np.sinc(b + a)
        det = K(x, x) * K(y, y) - K(x, y) * K(y, x)
        return np.exp(-(x * x + y * y) / 2) * det / 4

    oracle = integrate.dblquad(integrand, -12, 12, -12, 12, epsabs=1e-11)[0]
    assert abs(kernel_density("SO_even", 2, f).value - oracle) < 1e-8


def test_kernel_density_one_level_closed_form():
    # int exp(-x^2/2) sin(a x) / x dx = pi erf(a / sqrt 2), here a = 2 pi
    f = parse_test_function("gauss:1", 1)
    closed = 0.5 * (np.sqrt(2 * pi) + 0.5 * special.erf(np.sqrt(2) * pi))
    gauss = lambda x: np.exp(-x * x / 2)
    oracle = integrate.quad(lambda x: 0.5 * gauss(x) * (1 + np.sinc(2 * x)), -40, 40,
                            limit=400)[0]
    assert abs(closed - oracle) < 1e-9
    assert abs(kernel_density("SO_even", 1, f).value - closed) < 1e-9
    assert abs(kernel_density("USp", 1, f).value - (np.sqrt(2 * pi) - closed)) < 1e-9


def test_scaled_density_counting():
    g = GroupSpec("SO_even", 10)
    f = parse_test_function("gauss:1", 1)
    r = scaled_density(g, 1, f)
    assert r.metadata["window_error"] < 1e-6
    k = kernel_density("SO_even", 1, f).value
    assert abs(r.value / k - 1) < 0.05


def test_sides_label():
    assert sides_label("KML") == {"K": "1", "L": "3", "M": "2"}
    assert sides_label("KK") == {"K": "1;2", "L": "", "M": ""}
