"""Arithmetic layer: primes, the Kronecker symbol, fundamental
discriminants, traces of Frobenius and the truncated Euler products A_E and
A_DL with their logarithmic derivatives.

Euler products are accumulated as sums of per-prime logarithms, so the
branch of each logarithm is irrelevant once exponentiated.  Every product
reports a tail estimate: the larger of the change between truncating at
p_max / 2 and at p_max and the root sum of squares of the per-prime terms
over that last octave.  The second guards against oscillating factors
whose partial products happen to agree at the two cut-offs.  Shifts with
negative real part make the factors decay only like p^(2 Re x - 1), and
there the estimate is optimistic.
"""

from dataclasses import dataclass, field
from math import isqrt, sqrt

import numpy as np

from .errors import TruncationTooCoarse, UnknownReductionType, ValidationError

__all__ = [
    "primes_up_to",
    "is_prime",
    "kronecker",
    "kronecker_table",
    "is_fundamental",
    "fundamental_discriminants",
    "fundamental_array",
    "CurveFamily",
    "parse_curve",
    "ap",
    "lambda_p",
    "family_selector",
    "selected_discriminants",
    "EulerTruncation",
    "EulerResult",
    "euler_sums",
    "euler_AE",
    "euler_ADL",
    "euler_general",
    "REDUCTION_TYPES",
]

REDUCTION_TYPES = ("additive", "split", "nonsplit")
_BAD_AP = {"additive": 0, "split": 1, "nonsplit": -1}


def primes_up_to(n):
    """Ascending primes p <= n (sieve of Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for k in range(3, isqrt(n) + 1, 2):
        if n % k == 0:
            return False
    return True


def _jacobi(a, n):
    """Jacobi symbol (a/n) for odd n > 0."""
    a %= n
    out = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                out = -out
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            out = -out
        a %= n
    return out if n == 1 else 0


def kronecker(d, n):
    """Kronecker symbol (d/n) for integers d, n.

    Extends the Jacobi symbol with (d/2) = 0 for even d, +1 for
    d = +-1 mod 8 and -1 for d = +-3 mod 8, and (d/-1) = sign of d.
    """
    d, n = int(d), int(n)
    if n == 0:
        return 1 if d in (1, -1) else 0
    out = 1
    if n < 0:
        n = -n
        if d < 0:
            out = -out
    while n % 2 == 0:
        n //= 2
        if d % 2 == 0:
            return 0
        if d % 8 in (3, 5):
            out = -out
    return out * _jacobi(d, n)


def kronecker_table(n, d):
    """Vectorized (d/n) for an array of positive d and a fixed n.

    For d > 0 the symbol is periodic in d with period dividing 8|n|.
    """
    d = np.asarray(d, dtype=np.int64)
    if np.any(d <= 0):
        raise ValidationError("kronecker_table needs positive d")
    period = 8 * max(abs(int(n)), 1)
    table = np.array([kronecker(r if r else period, n) for r in range(period)], dtype=np.int64)
    return table[d % period]


def _squarefree_mask(x):
    mask = np.ones(x + 1, dtype=bool)
    mask[0] = False
    for p in primes_up_to(isqrt(x)):
        mask[p * p::p * p] = False
    return mask


def fundamental_array(X):
    """All positive fundamental discriminants d <= X in ascending order.

    d = 1 (the trivial character) is included.
    """
    if X < 1:
        raise ValidationError("X must be at least 1")
    X = int(X)
    sf = _squarefree_mask(X)
    d = np.arange(X + 1)
    odd = sf & (d % 4 == 1)
    even = np.zeros(X + 1, dtype=bool)
    m = d[: X // 4 + 1]
    ok = sf[: X // 4 + 1] & ((m % 4 == 2) | (m % 4 == 3))
    even[4 * m[ok]] = True
    return np.flatnonzero(odd | even).astype(np.int64)


def fundamental_discriminants(X):
    """Ascending stream of positive fundamental discriminants d <= X."""
    yield from (int(d) for d in fundamental_array(X))


def is_fundamental(d):
    d = int(d)
    if d <= 0:
        return False

    def squarefree(m):
        return all(m % (p * p) for p in range(2, isqrt(m) + 1))
    if d % 4 == 1:
        return squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and squarefree(m)
    return False


@dataclass
class CurveFamily:
    """Elliptic curve y^2 = x^3 + A x + B with user-supplied conductor and
    root number.

    ``bad_types`` maps primes dividing M to their reduction type;
    ``ap_overrides`` fixes a_p at primes where the short model is not
    minimal (always needed at p = 2).
    """

    A: int
    B: int
    M: int
    omega: int
    bad_types: dict = field(default_factory=dict)
    ap_overrides: dict = field(default_factory=dict)
    name: str = ""
    _ap_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValidationError("singular curve: 4A^3 + 27B^2 = 0")
        if self.omega not in (1, -1):
            raise ValidationError("root number must be +1 or -1")
        if self.M < 1:
            raise ValidationError("conductor must be positive")
        for p, kind in self.bad_types.items():
            if kind not in REDUCTION_TYPES:
                raise UnknownReductionType(f"unknown reduction type {kind!r} at {p}")
            if self.M % p:
                raise ValidationError(f"{p} does not divide the conductor {self.M}")

    @property
    def discriminant(self):
        return -16 * (4 * self.A ** 3 + 27 * self.B ** 2)

    def describe(self):
        parts = [str(self.A), str(self.B), str(self.M), f"{self.omega:+d}"]
        parts += [f"{p}:{k}" for p, k in sorted(self.bad_types.items())]
        parts += [f"{p}:ap={v}" for p, v in sorted(self.ap_overrides.items())]
        return ",".join(parts)


def parse_curve(text):
    """Parse "A,B,M,omega[,p:type|p:ap=value,...]".

    Examples: "-16,16,37,-1,2:ap=-2,37:nonsplit" (37a) or
    "-13392,-1080432,11,1,2:ap=-2,3:ap=-1,11:split" (11a).
    """
    fields = [t.strip() for t in text.split(",") if t.strip()]
    if len(fields) < 4:
        raise ValidationError(f"curve needs A,B,M,omega: {text!r}")
    try:
        A, B, M, omega = (int(x) for x in fields[:4])
    except ValueError:
        raise ValidationError(f"bad curve coefficients in {text!r}") from None
    bad, over = {}, {}
    for tok in fields[4:]:
        p, sep, rest = tok.partition(":")
        if not sep:
            raise ValidationError(f"bad prime annotation {tok!r}")
        try:
            p = int(p)
            if rest.startswith("ap="):
                over[p] = int(rest[3:])
            else:
                bad[p] = rest
        except ValueError:
            raise ValidationError(f"bad prime annotation {tok!r}") from None
    return CurveFamily(A, B, M, omega, bad, over, name=text)


def _count_ap(A, B, p):
    x = np.arange(p, dtype=np.int64)
    rhs = (x * x % p * x + A * x + B) % p
    sq = np.zeros(p, dtype=np.int64)
    sq[(x * x) % p] = 1
    leg = np.where(rhs == 0, 0, 2 * sq[rhs] - 1)
    return int(-leg.sum())


def ap(curve, p):
    """Trace of Frobenius a_p.

    Good reduction: minus the sum of Legendre symbols of x^3 + A x + B.
    Primes dividing M use the declared reduction type.

    Raises
    ------
    UnknownReductionType
        If p divides M without a declared type.
    ValidationError
        If p divides the model discriminant but not M and no override is
        given (the short model is not minimal there).
    """
    p = int(p)
    if p in curve._ap_cache:
        return curve._ap_cache[p]
    if p in curve.ap_overrides:
        val = curve.ap_overrides[p]
    elif curve.M % p == 0:
        if p not in curve.bad_types:
            raise UnknownReductionType(f"reduction type at {p} is not declared")
        val = _BAD_AP[curve.bad_types[p]]
    elif curve.discriminant % p == 0:
        raise ValidationError(f"model is not minimal at {p}; supply {p}:ap=<value>")
    else:
        val = _count_ap(curve.A % p, curve.B % p, p)
        if val * val > 4 * p:
            raise ValidationError(f"Hasse bound violated at {p}")
    curve._ap_cache[p] = val
    return val


def lambda_p(curve, primes):
    """lambda(p) = a_p / sqrt(p) for an array of primes."""
    return np.array([ap(curve, int(p)) / sqrt(p) for p in primes])


def family_selector(curve, d):
    """True when chi_d(-M) omega_E = +1."""
    return kronecker(d, -curve.M) * curve.omega == 1


def selected_discriminants(X, curve=None):
    """Fundamental discriminants d <= X in the family: all of them for the
    Dirichlet family, chi_d(-M) omega_E = +1 for a curve."""
    d = fundamental_array(X)
    if curve is None:
        return d
    return d[kronecker_table(-curve.M, d) * curve.omega == 1]


@dataclass(frozen=True)
class EulerTruncation:
    """Primes p <= p_max; ``tol`` turns a larger tail estimate into an error."""

    p_max: int = 10000
    tol: float = None

    def __post_init__(self):
        if self.p_max < 100:
            raise ValidationError("p_max must be at least 100")


@dataclass
class EulerResult:
    value: complex
    tail_estimate: float


@dataclass
class _LocalData:
    p: np.ndarray
    lam: np.ndarray
    good: np.ndarray


_LOCAL = {}


def _local_data(curve, p_max):
    key = (None if curve is None else curve.describe(), p_max)
    if key not in _LOCAL:
        p = primes_up_to(p_max)
        if curve is None:
            lam, good = np.zeros(len(p)), np.ones(len(p), dtype=bool)
        else:
            lam = lambda_p(curve, p)
            good = np.array([curve.M % int(q) != 0 for q in p])
        _LOCAL[key] = _LocalData(p, lam, good)
    return _LOCAL[key]


class _Prime:
    """Per-prime building blocks for a chunk of primes, broadcast against
    the shift arrays."""

    def __init__(self, p, lam, good, ndim):
        shape = (-1,) + (1,) * ndim
        self.logp = np.log(p.astype(float)).reshape(shape)
        self.ip = (1.0 / p).reshape(shape)
        self.r = (1.0 / np.sqrt(p)).reshape(shape)
        self.lam = lam.reshape(shape)
        self.good = good.reshape(shape)

    def pw(self, x):
        """p^(-x)."""
        return np.exp(-np.asarray(x) * self.logp)

    def log_z(self, x):
        """log z_p(1 + x) = -log(1 - p^(-1-x))."""
        return -np.log1p(-self.ip * self.pw(x))

    def ell(self, x):
        """d/ds log z_p(s) at s = 1 + x."""
        y = self.ip * self.pw(x)
        return -self.logp * y / (1.0 - y)

    def ell2(self, x):
        y = self.ip * self.pw(x)
        return self.logp ** 2 * y / (1.0 - y) ** 2


class _Powers:
    """p^(-x) for sums and differences of base shifts, built from one
    exponential per base shift."""

    def __init__(self, P, shifts):
        self.P = P
        self.w = {}
        self.inv = {}
        for x in shifts:
            if id(x) not in self.w:
                self.w[id(x)] = P.pw(x)

    def __call__(self, *terms):
        """Product of p^(-s x) over (s, x) in ``terms``."""
        out = 1.0
        for sgn, x in terms:
            w = self.w[id(x)]
            if sgn < 0:
                if id(x) not in self.inv:
                    self.inv[id(x)] = 1.0 / w
                w = self.inv[id(x)]
            out = out * (w if abs(sgn) == 1 else w ** abs(sgn))
        return out


def _zeta_factor(P, D, kind, W):
    """Per-prime zeta-local factor of A at B = A, as a product."""
    out = 1.0
    for i, a in enumerate(D):
        out = out * (1.0 - P.ip * W((-2 if kind != "elliptic" else 2, a)))
        for b in D[i + 1:]:
            num = (1.0 - P.ip * W((1, a), (1, b))) * (1.0 - P.ip * W((-1, a), (-1, b)))
            den = (1.0 - P.ip * W((1, b), (-1, a))) * (1.0 - P.ip * W((1, a), (-1, b)))
            out = out * num / den
    return out * (1.0 - P.ip) ** -len(D)


def _u(P, x, sign, kind, W=None):
    """Local polynomial in p^(-1/2-x): U_+- for the curve, V_+- for Dirichlet."""
    w = P.pw(x) if W is None else W((1, x))
    t = P.r * w
    if kind == "elliptic":
        return 1.0 + sign * P.lam * t + P.ip * w * w
    return 1.0 + sign * t


def _du(P, x, sign, kind, W=None):
    w = P.pw(x) if W is None else W((1, x))
    t = P.r * w
    if kind == "elliptic":
        return -P.logp * (sign * P.lam * t + 2.0 * P.ip * w * w)
    return -P.logp * sign * t


def _ell(P, w):
    y = P.ip * w
    return -P.logp * y / (1.0 - y)


def _ell2(P, w):
    y = P.ip * w
    return P.logp ** 2 * y / (1.0 - y) ** 2


def _u_neg(P, x, sign, kind, W):
    w = W((-1, x))
    t = P.r * w
    if kind == "elliptic":
        return 1.0 + sign * P.lam * t + P.ip * w * w
    return 1.0 + sign * t


def _chunk_sums(P, kind, D, singles, pairs):
    """log of the chunk product of A_p, and chunk sums of the singleton and
    pair log-derivatives."""
    W = _Powers(P, list(D) + list(singles) + [x for pr in pairs for x in pr])
    good = P.good if kind == "elliptic" else True
    R = {}
    for s in (-1, 1):
        r = 1.0
        for a in D:
            r = r * _u(P, a, s, kind, W) / _u_neg(P, a, s, kind, W)
        R[s] = r
    gn = 0.5 * (R[-1] + R[1]) + P.ip
    fac = _zeta_factor(P, D, kind, W) * np.where(good, gn / (1.0 + P.ip), 1.0)
    if kind == "elliptic" and D:
        v = 1.0
        for a in D:
            v = v * (1.0 - P.lam * P.r * W((1, a))) / (1.0 - P.lam * P.r * W((-1, a)))
        fac = fac * np.where(good, 1.0, v)
    fac = np.broadcast_to(fac, np.broadcast_shapes(np.shape(fac), P.logp.shape))
    log_a = np.log(np.prod(fac, axis=0))
    spread = [np.sum(np.abs(fac - 1.0) ** 2, axis=0)]
    sgn = 1.0 if kind == "elliptic" else -1.0
    kap = {}

    def kappa(a):
        if id(a) not in kap:
            kap[id(a)] = {s: _du(P, a, s, kind, W) / _u(P, a, s, kind, W) for s in (-1, 1)}
        return kap[id(a)]

    def total(x):
        return np.sum(x, axis=0)

    single_out = []
    for a in singles:
        d1 = sgn * _ell(P, W((2, a)))
        for b in D:
            d1 = d1 + _ell(P, W((1, a), (1, b))) - _ell(P, W((1, a), (-1, b)))
        k = kappa(a)
        g = -0.5 * (R[-1] * k[-1] + R[1] * k[1]) / gn
        if kind == "elliptic":
            t = P.lam * P.r * W((1, a))
            bad = P.logp * t / (1.0 - t)
            d1 = d1 + np.where(good, g, -bad)
        else:
            d1 = d1 + g
        single_out.append(total(d1))
        spread.append(total(np.abs(d1) ** 2))
    pair_out = []
    for a, b in pairs:
        d2 = -_ell2(P, W((1, a), (1, b)))
        ka, kb = kappa(a), kappa(b)
        g12 = 0.5 * (R[-1] * ka[-1] * kb[-1] + R[1] * ka[1] * kb[1]) / gn
        g1 = -0.5 * (R[-1] * ka[-1] + R[1] * ka[1]) / gn
        g2 = -0.5 * (R[-1] * kb[-1] + R[1] * kb[1]) / gn
        d2 = d2 + np.where(good, g12 - g1 * g2, 0.0)
        pair_out.append(total(d2))
        spread.append(total(np.abs(d2) ** 2))
    return log_a, single_out, pair_out, spread


def euler_sums(kind, D, singles=(), pairs=(), curve=None, trunc=None, chunk_elems=2 ** 21):
    """Truncated arithmetic factor and its log-derivatives in one prime pass.

    Parameters
    ----------
    kind : {"elliptic", "dirichlet"}
    D : sequence of complex or arrays
        The subset D; the factor is A(D, D, D).
    singles : sequence
        Shifts a outside D; returns sum_p of d/da log A_p.
    pairs : sequence of (a, b)
        Returns sum_p of d^2/(da db) log A_p.
    curve : CurveFamily, required for ``kind="elliptic"``
    trunc : EulerTruncation

    Returns
    -------
    dict
        ``log_value``, ``singles``, ``pairs`` (sums over p <= p_max), the
        matching ``*_half`` sums over p <= p_max / 2 and ``spread``: for
        each of log A, the singles and the pairs, the root sum of squared
        per-prime terms over p_max / 2 < p <= p_max.
    """
    if kind not in ("elliptic", "dirichlet"):
        raise ValidationError(f"unknown family {kind!r}")
    if kind == "elliptic" and curve is None:
        raise ValidationError("elliptic factors need a curve")
    trunc = trunc or EulerTruncation()
    loc = _local_data(curve if kind == "elliptic" else None, trunc.p_max)
    D = [np.asarray(x, dtype=complex) for x in D]
    singles = [np.asarray(x, dtype=complex) for x in singles]
    pairs = [(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) for a, b in pairs]
    allx = D + singles + [x for pr in pairs for x in pr]
    shape = np.broadcast_shapes(*[x.shape for x in allx]) if allx else ()
    ndim = len(shape)
    size = int(np.prod(shape)) if shape else 1
    step = min(256, max(1, chunk_elems // max(size, 1)))
    half_idx = int(np.searchsorted(loc.p, trunc.p_max // 2, side="right"))
    zero = np.zeros(shape, dtype=complex)
    tot = {"log": zero.copy(), "s": [zero.copy() for _ in singles],
           "p": [zero.copy() for _ in pairs]}
    half = None
    spread = [zero.real.copy() for _ in range(1 + len(singles) + len(pairs))]
    bounds = sorted(set(list(range(0, len(loc.p), step)) + [half_idx, len(loc.p)]))
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if lo == half_idx:
            half = {"log": tot["log"].copy(), "s": [x.copy() for x in tot["s"]],
                    "p": [x.copy() for x in tot["p"]]}
        P = _Prime(loc.p[lo:hi], loc.lam[lo:hi], loc.good[lo:hi], ndim)
        logA, s_out, p_out, sq = _chunk_sums(P, kind, D, singles, pairs)
        if lo >= half_idx:
            spread = [a + b for a, b in zip(spread, sq)]
        tot["log"] = tot["log"] + logA
        for i, v in enumerate(s_out):
            tot["s"][i] = tot["s"][i] + v
        for i, v in enumerate(p_out):
            tot["p"][i] = tot["p"][i] + v
    if half is None:
        half = tot
    return {"log_value": tot["log"], "singles": tot["s"], "pairs": tot["p"],
            "log_value_half": half["log"], "singles_half": half["s"],
            "pairs_half": half["p"], "spread": [np.sqrt(x) for x in spread]}


def _result(kind, D, curve, trunc, deriv_block):
    trunc = trunc or EulerTruncation()
    D = list(D)
    W = list(deriv_block or [])
    if len(W) > 2:
        return EulerResult(0.0, 0.0)
    if any(any(np.all(np.asarray(w) == np.asarray(d)) for d in D) for w in W):
        raise ValidationError("derivative shifts must lie outside D")
    singles = W if len(W) == 1 else []
    pairs = [tuple(W)] if len(W) == 2 else []
    s = euler_sums(kind, D, singles, pairs, curve, trunc)
    if not W:
        if not D:
            return EulerResult(1.0, 0.0)
        val = np.exp(s["log_value"])
        tail = np.maximum(np.abs(val - np.exp(s["log_value_half"])), np.abs(val) * s["spread"][0])
    else:
        key = "singles" if len(W) == 1 else "pairs"
        val = s[key][0]
        tail = np.maximum(np.abs(val - s[key + "_half"][0]), s["spread"][1])
    tail = float(np.max(tail))
    if trunc.tol is not None and tail > trunc.tol:
        raise TruncationTooCoarse(f"Euler tail estimate {tail:.2e} above {trunc.tol:.1e}")
    if np.ndim(val) == 0:
        val = complex(val)
    return EulerResult(val, tail)


def euler_general(kind, A, B, D_idx, curve=None, trunc=None):
    """Truncated A(A, B, D) from the general local factors, D given by its
    indices in A.  Scalar shifts only; used to check the B = A reduction
    and the log-derivatives by finite differences."""
    trunc = trunc or EulerTruncation()
    loc = _local_data(curve if kind == "elliptic" else None, trunc.p_max)
    P = _Prime(loc.p, loc.lam, loc.good, 0)
    E = [-complex(a) if i in D_idx else complex(a) for i, a in enumerate(A)]
    B = [complex(b) for b in B]
    logf = 0.0
    for e in E:
        for b in B:
            logf = logf + P.log_z(e + b)
    for group in (E, B):
        for i, x in enumerate(group):
            for y in group[i + 1:]:
                logf = logf - P.log_z(x + y)
    for b in B if kind == "elliptic" else E:
        logf = logf - P.log_z(2 * b)
    ratio = {}
    for s in (-1, 1):
        r = 1.0
        for b in B:
            r = r * _u(P, b, s, kind)
        for e in E:
            r = r / _u(P, e, s, kind)
        ratio[s] = r
    logG = np.log(0.5 * (ratio[-1] + ratio[1]) + P.ip) - np.log1p(P.ip)
    good = P.good if kind == "elliptic" else True
    logf = logf + np.where(good, logG, 0.0)
    if kind == "elliptic":
        v = 0.0
        for b in B:
            v = v + np.log(1.0 - P.lam * P.r * P.pw(b))
        for e in E:
            v = v - np.log(1.0 - P.lam * P.r * P.pw(e))
        logf = logf + np.where(good, 0.0, v)
    return complex(np.exp(np.sum(logf)))


def euler_AE(D, curve, trunc=None, deriv_block=None):
    """A_E(D, D, D) truncated at p_max, or with ``deriv_block`` W the sum
    A_D(W) = sum_i A_{D,i}(W) of log-derivatives.

    Returns
    -------
    EulerResult
    """
    return _result("elliptic", D, curve, trunc, deriv_block)


def euler_ADL(D, trunc=None, deriv_block=None):
    """A_DL(D, D, D) truncated at p_max, or its log-derivatives A_D(W).

    Returns
    -------
    EulerResult
    """
    return _result("dirichlet", D, None, trunc, deriv_block)
