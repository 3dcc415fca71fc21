from math import sqrt

import numpy as np
import pytest

from nlevel.arith import (EulerTruncation, ap, euler_ADL, euler_AE, euler_general, euler_sums,
                          family_selector, fundamental_array, fundamental_discriminants,
                          is_fundamental, kronecker, kronecker_table, parse_curve, primes_up_to,
                          selected_discriminants)
from nlevel.errors import TruncationTooCoarse, UnknownReductionType, ValidationError

from conftest import CURVE_11A, CURVE_37A, LONG_11A, LONG_37A, long_ap


def _sieve_fundamental(X):
    out = []
    for d in range(1, X + 1):
        m = d if d % 4 == 1 else d // 4 if d % 4 == 0 else None
        if m is None or (d % 4 == 0 and m % 4 not in (2, 3)):
            continue
        if all(m % (k * k) for k in range(2, int(sqrt(m)) + 1)):
            out.append(d)
    return out


def test_kronecker_small_values():
    assert kronecker(5, 2) == -1
    assert kronecker(8, 3) == -1
    assert kronecker(12, 5) == -1
    assert kronecker(13, 3) == 1
    assert kronecker(5, 5) == 0
    assert kronecker(-4, -1) == -1


def test_kronecker_multiplicative_and_periodic(rng):
    ds = fundamental_array(2000)
    for _ in range(1000):
        d = int(rng.choice(ds))
        m, n = (int(x) for x in rng.integers(1, 5000, size=2))
        assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)
        assert kronecker(d, n + d) == kronecker(d, n)


def test_kronecker_table_matches_scalar():
    d = fundamental_array(500)
    for n in (-37, -11, 2, 3, 7):
        assert list(kronecker_table(n, d)) == [kronecker(int(x), n) for x in d]


def test_fundamental_discriminants():
    assert list(fundamental_discriminants(13)) == [1, 5, 8, 12, 13]
    assert not is_fundamental(7) and is_fundamental(28)
    assert list(fundamental_array(10 ** 4)) == _sieve_fundamental(10 ** 4)
    assert all(is_fundamental(d) for d in fundamental_array(300))


@pytest.mark.parametrize("short,long", [(CURVE_37A, LONG_37A), (CURVE_11A, LONG_11A)])
def test_ap_matches_enumeration(short, long):
    curve = parse_curve(short)
    for p in primes_up_to(101):
        assert ap(curve, int(p)) == long_ap(long, int(p)), p


@pytest.mark.parametrize("text", [CURVE_37A, CURVE_11A])
def test_hasse_bound(text):
    curve = parse_curve(text)
    for p in primes_up_to(10 ** 4):
        assert ap(curve, int(p)) ** 2 <= 4 * p


def test_curve_errors():
    with pytest.raises(ValidationError):
        parse_curve("0,0,37,-1")
    with pytest.raises(ValidationError):
        parse_curve("1,1,37,2")
    with pytest.raises(UnknownReductionType):
        ap(parse_curve("-16,16,37,-1,2:ap=-2"), 37)
    with pytest.raises(UnknownReductionType):
        parse_curve("-16,16,37,-1,37:weird")
    assert ap(parse_curve("-16,16,37,-1,2:ap=-2,37:additive"), 37) == 0


def test_selector():
    curve = parse_curve(CURVE_37A)
    sel = selected_discriminants(10 ** 4, curve)
    frac = len(sel) / len(fundamental_array(10 ** 4))
    assert abs(frac - 0.5) < 0.025
    assert all(family_selector(curve, int(d)) for d in sel[:200])
    assert not family_selector(curve, 37 * 4)


def test_empty_set_is_one():
    assert euler_AE([], parse_curve(CURVE_37A), EulerTruncation(100)).value == 1.0
    assert euler_ADL([], EulerTruncation(100)).value == 1.0


@pytest.mark.parametrize("kind", ["elliptic", "dirichlet"])
def test_general_factor_reduces_at_b_equal_a(kind, rng):
    curve = parse_curve(CURVE_37A) if kind == "elliptic" else None
    tr = EulerTruncation(1000)
    for size in (1, 2):
        D = list(rng.uniform(-0.2, 0.2, size) + 1j * rng.uniform(-3, 3, size))
        direct = np.exp(euler_sums(kind, D, curve=curve, trunc=tr)["log_value"])
        general = euler_general(kind, D, D, list(range(size)), curve, tr)
        assert abs(direct - general) < 1e-10 * abs(general)
        extra = 0.1 - 0.7j
        widened = euler_general(kind, D + [extra], D + [extra], list(range(size)), curve, tr)
        assert abs(widened - general) < 1e-10 * abs(general)


@pytest.mark.parametrize("kind", ["elliptic", "dirichlet"])
def test_log_derivatives_by_finite_differences(kind):
    curve = parse_curve(CURVE_37A) if kind == "elliptic" else None
    tr = EulerTruncation(500)
    D, w, v = [0.1 + 0.2j], 0.05 - 0.1j, 0.07 + 0.03j
    s = euler_sums(kind, D, [w], [(w, v)], curve, tr)

    def log_general(a, b=None):
        A = D + [a] + ([] if b is None else [b])
        B = D + [w] + ([] if b is None else [v])
        return np.log(euler_general(kind, A, B, [0], curve, tr))

    h = 1e-5
    fd = (log_general(w + h) - log_general(w - h)) / (2 * h)
    assert abs(s["singles"][0] - fd) < 1e-6
    h = 1e-4
    fd2 = (log_general(w + h, v + h) - log_general(w + h, v - h)
           - log_general(w - h, v + h) + log_general(w - h, v - h)) / (4 * h * h)
    assert abs(s["pairs"][0] - fd2) < 1e-5
    one = euler_AE(D, curve, tr, [w]) if curve else euler_ADL(D, tr, [w])
    assert abs(one.value - s["singles"][0]) < 1e-14


def test_dirichlet_factor_against_direct_product():
    delta = 0.1
    value = 1.0
    for p in primes_up_to(100):
        p = float(p)
        zp = lambda s: 1.0 / (1.0 - p ** -s)
        y = zp(1 - 2 * delta) / zp(1.0)
        x = p ** -(0.5 - delta)
        b = p ** -(0.5 + delta)
        body = 0.5 * (1 - b) / (1 - x) + 0.5 * (1 + b) / (1 + x) + 1 / p
        value *= body / (1 + 1 / p) / y
    got = euler_ADL([delta], EulerTruncation(100)).value
    assert abs(got - value) < 1e-13 * abs(value)


@pytest.mark.parametrize("kind", ["elliptic", "dirichlet"])
def test_doubling_pmax_within_tail(kind):
    curve = parse_curve(CURVE_11A) if kind == "elliptic" else None
    D = [0.05 + 1.3j, 0.1 + 0.4j]

    def run(p_max):
        tr = EulerTruncation(p_max)
        return euler_AE(D, curve, tr) if curve else euler_ADL(D, tr)

    a, b = run(2000), run(4000)
    assert abs(a.value - b.value) < a.tail_estimate


def test_truncation_guard():
    with pytest.raises(ValidationError):
        EulerTruncation(50)
    with pytest.raises(TruncationTooCoarse):
        euler_ADL([0.2 + 1j], EulerTruncation(100, tol=1e-12))
