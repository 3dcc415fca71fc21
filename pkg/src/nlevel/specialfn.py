"""Complex special functions: the kernel z(x), Gamma-family values and
zeta(1+s) with its logarithmic derivatives.

Every function accepts scalars or arrays and is vectorized over the input.
Scalar input returns a numpy complex scalar.
"""

import numpy as np
from scipy import special

from .errors import NonConvergence, PoleAt

__all__ = ["zfun", "gamma_family", "zeta1p", "STIELTJES", "LaurentExpansion",
           "zfun_laurent", "zeta1p_laurent"]

TWO_PI = 2.0 * np.pi
POLE_TOL = 1e-14
Z_SERIES_RADIUS = 1e-3
ZETA_SERIES_RADIUS = 0.25

# gamma_n in zeta(1+s) = 1/s + sum_n (-1)^n gamma_n s^n / n!
STIELTJES = np.array([
    0.5772156649015329, -0.07281584548367673, -0.00969036319287232,
    0.002053834420303346, 0.0023253700654673, 0.0007933238173010627,
    -0.0002387693454301996, -0.000527289567057751, -0.0003521233538030395,
    -3.439477441808805e-05, 0.0002053328149090648, 0.0002701844395439035,
    0.0001672729121051402, -2.7463806603760158e-05, -0.00020920926205929996,
    -0.0002834686553202414, -0.00019969685830896976, 2.6277037109918338e-05,
    0.0003073684081492528, 0.0005036054530473557, 0.00046634356151155945,
    0.00010443776975600011, -0.0005415995822039977, -0.0012439620904082457,
])


class LaurentExpansion:
    """Truncated Laurent series sum_k c_k s^(k - pole_order)."""

    def __init__(self, pole_order, coefficients):
        self.pole_order = int(pole_order)
        self.coefficients = np.asarray(coefficients, dtype=complex)
        if len(self.coefficients) < self.pole_order + 1:
            raise ValueError("need at least pole_order + 1 coefficients")

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for c in self.coefficients[::-1]:
            out = out * s + c
        return out / s ** self.pole_order


def _as_complex(x):
    arr = np.asarray(x, dtype=complex)
    return arr, arr.ndim == 0


def _ret(out, scalar):
    return out[()] if scalar else out


def zfun(x, mode="value"):
    """Evaluate z(x) = 1/(1 - exp(-x)) or one of its log-derivatives.

    Parameters
    ----------
    x : complex or array_like
        Argument, away from the lattice 2*pi*i*Z.
    mode : {"value", "logderiv", "logderiv2"}
        ``value`` gives z(x), ``logderiv`` gives z'/z(x) = -1/(e^x - 1),
        ``logderiv2`` gives (z'/z)'(x) = e^x/(e^x - 1)^2.

    Returns
    -------
    complex or ndarray

    Raises
    ------
    PoleAt
        If any argument lies within 1e-14 of a lattice point.
    """
    x, scalar = _as_complex(x)
    k = np.round(x.imag / TWO_PI)
    r = x - 1j * TWO_PI * k
    ar = np.abs(r)
    if np.any(ar < POLE_TOL):
        raise PoleAt(x[ar < POLE_TOL].ravel()[0])
    small = ar < Z_SERIES_RADIUS
    rs = np.where(small, r, 1.0)
    rb = np.where(small, 1.0, r)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if mode == "value":
            big = -1.0 / np.expm1(-rb)
            ser = 1 / rs + 0.5 + rs / 12 - rs ** 3 / 720 + rs ** 5 / 30240
        elif mode == "logderiv":
            big = -1.0 / np.expm1(rb)
            ser = -1 / rs + 0.5 - rs / 12 + rs ** 3 / 720 - rs ** 5 / 30240
        elif mode == "logderiv2":
            big = 0.25 / np.sinh(0.5 * rb) ** 2
            ser = rs ** -2 - 1 / 12 + rs ** 2 / 240 - rs ** 4 / 6048
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return _ret(np.where(small, ser, big), scalar)


def zfun_laurent(mode="value"):
    """Laurent expansion of ``zfun`` at the origin."""
    table = {
        "value": (1, [1, 0.5, 1 / 12, 0, -1 / 720]),
        "logderiv": (1, [-1, 0.5, -1 / 12, 0, 1 / 720]),
        "logderiv2": (2, [1, 0, -1 / 12, 0, 1 / 240]),
    }
    return LaurentExpansion(*table[mode])


def _nonpositive_integer(s):
    return (s.imag == 0) & (s.real <= 0) & (s.real == np.round(s.real))


def gamma_family(s, mode="loggamma"):
    """Gamma-family values.

    Parameters
    ----------
    s : complex or array_like
        Argument; for the ratio modes this is the shift delta.
    mode : {"loggamma", "digamma", "ratio_elliptic", "ratio_dirichlet"}
        The ratio modes return Gamma(1 - d)/Gamma(1 + d) and
        Gamma(1/4 - d/2)/Gamma(1/4 + d/2).

    Returns
    -------
    complex or ndarray
        For ratio modes a denominator pole yields an exact zero, a numerator
        pole raises.

    Raises
    ------
    PoleAt
        At a pole of Gamma (loggamma, digamma) or of the ratio numerator.
    """
    s, scalar = _as_complex(s)
    if mode in ("loggamma", "digamma"):
        bad = _nonpositive_integer(s)
        if np.any(bad):
            raise PoleAt(s[bad].ravel()[0], "Gamma pole")
        out = special.loggamma(s) if mode == "loggamma" else special.psi(s)
        return _ret(np.asarray(out, dtype=complex), scalar)
    if mode == "ratio_elliptic":
        num, den = 1.0 - s, 1.0 + s
    elif mode == "ratio_dirichlet":
        num, den = 0.25 - 0.5 * s, 0.25 + 0.5 * s
    else:
        raise ValueError(f"unknown mode {mode!r}")
    num_pole = _nonpositive_integer(num)
    den_pole = _nonpositive_integer(den)
    if np.any(num_pole):
        raise PoleAt(s[num_pole].ravel()[0], "numerator Gamma pole")
    safe_den = np.where(den_pole, 1.0, den)
    out = np.exp(special.loggamma(num) - special.loggamma(safe_den))
    return _ret(np.where(den_pole, 0.0, out), scalar)


_FACT = np.cumprod(np.r_[1.0, np.arange(1, len(STIELTJES))])
_LAURENT_C = STIELTJES * (-1.0) ** np.arange(len(STIELTJES)) / _FACT


def zeta1p_laurent():
    """Laurent expansion of zeta(1+s) at s = 0 from the Stieltjes constants."""
    return LaurentExpansion(1, np.r_[1.0, _LAURENT_C])


def _zeta_near_one(s):
    g = np.zeros_like(s)
    g1 = np.zeros_like(s)
    g2 = np.zeros_like(s)
    n = len(_LAURENT_C)
    for k in range(n - 1, -1, -1):
        g2 = g2 * s + (k + 2) * (k + 1) * _LAURENT_C[k + 2] if k + 2 < n else g2 * s
        g1 = g1 * s + (k + 1) * _LAURENT_C[k + 1] if k + 1 < n else g1 * s
        g = g * s + _LAURENT_C[k]
    z0 = 1 / s + g
    z1 = -1 / s ** 2 + g1
    z2 = 2 / s ** 3 + g2
    return z0, z1, z2


# B_{2j} / (2j)!
_BERN = np.array([special.bernoulli(2 * j)[2 * j] / special.factorial(2 * j, exact=False)
                  for j in range(1, 16)])


def _zeta_euler_maclaurin(sigma, tol):
    """zeta and its first two derivatives at sigma by Euler-Maclaurin.

    The cutoff starts small, which limits cancellation left of the critical
    line, and grows until the last correction term is below ``tol``.
    """
    for scale in (0.3, 0.6, 1.2):
        try:
            return _em_fixed(sigma, tol, scale)
        except NonConvergence:
            if scale == 1.2:
                raise


def _em_fixed(sigma, tol, scale):
    m = 14
    K = int(np.ceil(scale * (np.max(np.abs(sigma)) + 2 * m))) + 5
    n = np.arange(1, K, dtype=float)
    logn = np.log(n)
    terms = np.exp(-np.multiply.outer(sigma, logn))
    z0 = terms.sum(axis=-1)
    z1 = -(terms * logn).sum(axis=-1)
    z2 = (terms * logn ** 2).sum(axis=-1)
    lk = np.log(K)
    kp = np.exp(-sigma * lk)
    sm1 = sigma - 1.0
    tail = K * kp
    z0 = z0 + tail / sm1 + 0.5 * kp
    z1 = z1 + tail * (-lk / sm1 - 1 / sm1 ** 2) - 0.5 * lk * kp
    z2 = z2 + tail * (lk ** 2 / sm1 + 2 * lk / sm1 ** 2 + 2 / sm1 ** 3) + 0.5 * lk ** 2 * kp
    # jets (P, P', P'') of the rising product sigma (sigma+1) ... (sigma+2j-2)
    p0 = np.ones_like(sigma)
    p1 = np.zeros_like(sigma)
    p2 = np.zeros_like(sigma)
    last = None
    for j in range(1, m + 1):
        lo = 0 if j == 1 else 2 * j - 3
        for i in range(lo, 2 * j - 1):
            p2 = p2 * (sigma + i) + 2 * p1
            p1 = p1 * (sigma + i) + p0
            p0 = p0 * (sigma + i)
        kk = _BERN[j - 1] * np.exp(-(sigma + 2 * j - 1) * lk)
        t0 = kk * p0
        z0 = z0 + t0
        z1 = z1 + kk * (p1 - lk * p0)
        z2 = z2 + kk * (p2 - 2 * lk * p1 + lk ** 2 * p0)
        last = t0
    err = np.abs(last) / np.maximum(np.abs(z0), 1e-300)
    if np.any(err > tol):
        raise NonConvergence(f"Euler-Maclaurin tail {float(np.max(err)):.2e} above {tol:.1e}")
    return z0, z1, z2


def zeta1p(s, mode="value", tol=1e-11, chunk=8192):
    """Evaluate zeta(1+s), zeta'/zeta(1+s) or (zeta'/zeta)'(1+s).

    Parameters
    ----------
    s : complex or array_like
        Offset from the pole at 1, with |Im s| <= 1e3 and |Re s| <= 2.
    mode : {"value", "logderiv", "logderiv2"}
    tol : float
        Relative tolerance for the Euler-Maclaurin remainder.

    Returns
    -------
    complex or ndarray

    Raises
    ------
    PoleAt
        At s = 0.
    NonConvergence
        If the Euler-Maclaurin remainder exceeds ``tol``.
    """
    if mode not in ("value", "logderiv", "logderiv2"):
        raise ValueError(f"unknown mode {mode!r}")
    s, scalar = _as_complex(s)
    if np.any(np.abs(s) < POLE_TOL):
        raise PoleAt(0.0, "zeta pole")
    flat = s.ravel()
    z0 = np.empty_like(flat)
    z1 = np.empty_like(flat)
    z2 = np.empty_like(flat)
    near = np.abs(flat) < ZETA_SERIES_RADIUS
    if np.any(near):
        z0[near], z1[near], z2[near] = _zeta_near_one(flat[near])
    far = np.flatnonzero(~near)
    for lo in range(0, len(far), chunk):
        idx = far[lo:lo + chunk]
        z0[idx], z1[idx], z2[idx] = _zeta_euler_maclaurin(1.0 + flat[idx], tol)
    if mode == "value":
        out = z0
    else:
        ld = z1 / z0
        out = ld if mode == "logderiv" else z2 / z0 - ld ** 2
    return _ret(out.reshape(s.shape), scalar)
