"""Fast invariant battery run by the ``selftest`` subcommand."""

from math import pi, sqrt

import numpy as np

from .arith import EulerTruncation, ap, euler_AE, kronecker, parse_curve, primes_up_to
from .ntdensity import elliptic_family, jstar_family
from .quadrature import QuadratureSpec, circle_residue
from .rmtdensity import density_contour, density_onaxis, exact_one_level
from .shiftcalc import GroupSpec, jstar, ratio_average
from .specialfn import zeta1p
from .testfns import parse_test_function

__all__ = ["run_battery", "CURVE_37A", "CURVE_11A"]

CURVE_37A = "-16,16,37,-1,2:ap=-2,37:nonsplit"
CURVE_11A = "-13392,-1080432,11,1,2:ap=-2,3:ap=-1,11:split"


def _check(name, ok, detail):
    return {"name": name, "pass": bool(ok), "detail": detail}


def _zeta():
    err = abs(zeta1p(1.0) - pi ** 2 / 6)
    return _check("zeta(2)", err < 1e-12, f"abs error {err:.1e}")


def _rmt_residue():
    g = GroupSpec("SO_even", 4)
    beta, rest = 0.3 + 0.2j, [0.15 - 0.4j]
    lhs = circle_residue(lambda z: np.array([jstar([x, beta] + rest, g) for x in z]), -beta)
    rhs = jstar([beta] + rest, g) + jstar([-beta] + rest, g) + 2 * g.N * jstar(rest, g)
    rel = abs(lhs - rhs) / abs(rhs)
    return _check("random-matrix residue identity", rel < 1e-8, f"relative error {rel:.1e}")


def _ratio_empty():
    g = GroupSpec("USp", 3)
    val = ratio_average([], [], g)
    return _check("empty ratio average", val == 1.0, f"value {val}")


def _density_routes():
    g = GroupSpec("SO_even", 3)
    f = parse_test_function("cos:1*cos:2", 2, periodic=True)
    a = density_contour(g, 2, f).value
    b = density_onaxis(g, 2, f).value
    return _check("contour and on-axis densities agree", abs(a - b) < 1e-9,
                  f"{a:.12f} vs {b:.12f}")


def _count_one():
    g = GroupSpec("SO_even", 5)
    f = parse_test_function("one", 2, periodic=True)
    v = density_contour(g, 2, f).value
    return _check("pair count N(N-1)", abs(v - 20) < 1e-9, f"value {v:.12f}")


def _one_level():
    g = GroupSpec("USp", 2)
    th = np.linspace(0, pi, 4001)
    mass = np.trapezoid(exact_one_level(g, th), th)
    return _check("one-level density mass N", abs(mass - 2) < 1e-6, f"mass {mass:.9f}")


def _kronecker():
    ok = all(kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)
             for d in (5, 8, 12, 13, 21) for m in range(1, 30) for n in range(1, 30))
    return _check("Kronecker multiplicativity", ok, "d in {5, 8, 12, 13, 21}, m, n < 30")


def _hasse():
    curve = parse_curve(CURVE_37A)
    worst = max(abs(ap(curve, int(p))) / (2 * sqrt(p)) for p in primes_up_to(500))
    return _check("Hasse bound", worst <= 1, f"max |a_p|/2sqrt(p) = {worst:.3f}")


def _euler_empty():
    v = euler_AE([], parse_curve(CURVE_37A), EulerTruncation(100)).value
    return _check("arithmetic factor of the empty set", v == 1.0, f"value {v}")


def _nt_residue():
    fam = elliptic_family(CURVE_37A)
    tr = EulerTruncation(200)
    beta, B = 0.05 + 0.3j, [0.1j]

    def J(A, Bs):
        return jstar_family(fam, A, Bs, 200, tr)

    lhs = circle_residue(lambda z: np.array([J([x, beta], B) for x in z]), -beta)
    rhs = J([beta], B) + J([-beta], B) - J([], B + [beta])
    rel = abs(lhs - rhs) / abs(rhs)
    return _check("family residue identity", rel < 1e-6, f"relative error {rel:.1e}")


BATTERY = [_zeta, _rmt_residue, _ratio_empty, _density_routes, _count_one, _one_level,
           _kronecker, _hasse, _euler_empty, _nt_residue]


def run_battery():
    """Run every check; returns a list of dicts with name, pass, detail."""
    return [check() for check in BATTERY]
