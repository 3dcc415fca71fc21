import numpy as np
import pytest

CURVE_37A = "-16,16,37,-1,2:ap=-2,37:nonsplit"
CURVE_11A = "-13392,-1080432,11,1,2:ap=-2,3:ap=-1,11:split"

# long Weierstrass models [a1, a2, a3, a4, a6] of the same isogeny classes
LONG_37A = (0, 0, 1, -1, 0)
LONG_11A = (0, -1, 1, -10, -20)


def circle(fun, center, radius=1e-3, m=64):
    z = center + radius * np.exp(2j * np.pi * (np.arange(m) + 0.5) / m)
    return complex(np.mean(np.asarray(fun(z)) * (z - center)))


def long_ap(coeffs, p):
    """a_p = p + 1 - #E(F_p) by enumerating all (x, y) of a long model."""
    a1, a2, a3, a4, a6 = coeffs
    x = np.arange(p)[:, None]
    y = np.arange(p)[None, :]
    lhs = (y * y + a1 * x * y + a3 * y) % p
    rhs = (x ** 3 + a2 * x * x + a4 * x + a6) % p
    return p - int(np.sum(lhs == rhs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
