"""Even test functions and their text descriptors.

A descriptor is a ``*``-separated product of factors, one per variable
(a single factor is reused for every variable):

``one``          constant 1
``cos:k``        cos(k x)
``gauss:s``      exp(-x^2 / (2 s^2)), summed over 2*pi translates in periodic mode
``fejer:w``      (sin(pi w x) / (pi w x))^2, Fourier support radius w

Factors accept complex arguments, which the contour integrals need.
"""

from dataclasses import dataclass, replace
from math import erfc, isfinite, log, pi, sqrt

import numpy as np

from .errors import ValidationError

__all__ = ["Factor", "TestFunction", "parse_test_function", "set_partitions",
           "mobius_weight", "BATTERY"]

BATTERY = ("one", "cos:1", "cos:2", "cos:3", "cos:1*cos:2", "gauss:0.5", "gauss:1")


@dataclass(frozen=True)
class Factor:
    """One even factor g(scale * x)."""

    kind: str
    param: float = 0.0
    periodic: bool = False
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("one", "cos", "gauss", "fejer"):
            raise ValidationError(f"unknown test-function factor {self.kind!r}")
        if self.kind in ("gauss", "fejer") and not self.param > 0:
            raise ValidationError(f"{self.kind} needs a positive parameter")
        if self.kind == "cos" and (self.param != int(self.param) or self.param < 0):
            raise ValidationError("cos:k needs a non-negative integer k")
        if self.periodic and self.kind == "fejer":
            raise ValidationError("fejer has no periodic version")

    @property
    def name(self):
        if self.kind == "one":
            return "one"
        p = int(self.param) if self.kind == "cos" else self.param
        return f"{self.kind}:{p}"

    def __call__(self, x):
        y = self.scale * np.asarray(x)
        if self.kind == "one":
            return np.ones_like(y, dtype=complex if np.iscomplexobj(y) else float)
        if self.kind == "cos":
            return np.cos(self.param * y)
        if self.kind == "fejer":
            return np.sinc(self.param * y) ** 2
        s2 = 2.0 * self.param ** 2
        if not self.periodic:
            return np.exp(-y * y / s2)
        images = int(np.ceil(7.0 * self.param / (2 * pi))) + 1
        out = 0.0
        for k in range(-images, images + 1):
            out = out + np.exp(-(y + 2 * pi * k) ** 2 / s2)
        return out

    @property
    def support(self):
        """Fourier support radius (in the e^{-2 pi i x xi} convention)."""
        if self.kind == "fejer":
            return self.param * self.scale
        if self.kind == "one" or (self.kind == "cos" and self.param == 0):
            return 0.0
        return float("inf")

    def tail(self, T):
        """Bound on the integral of |g| over [T, infinity)."""
        if self.kind == "gauss":
            s = self.param / self.scale
            return s * sqrt(pi / 2) * erfc(T / (s * sqrt(2)))
        if self.kind == "fejer":
            w = self.param * self.scale
            return 1.0 / (pi ** 2 * w ** 2 * T)
        return float("inf")

    def length(self):
        """Length scale of variation: the width of a Gaussian or the zero
        spacing of a Fejer kernel."""
        if self.kind == "gauss":
            return self.param / self.scale
        if self.kind == "fejer":
            return 1.0 / (self.param * self.scale)
        return float("inf")

    def mass(self):
        """Integral of |g| over the real line."""
        if self.kind == "gauss":
            return self.param / self.scale * sqrt(2 * pi)
        if self.kind == "fejer":
            return 1.0 / (self.param * self.scale)
        return float("inf")

    def truncation(self, tol):
        """Smallest convenient T with tail(T) below ``tol``."""
        if self.kind == "gauss":
            s = self.param / self.scale
            return s * sqrt(2 * max(log(s * sqrt(pi / 2) / tol), 1.0)) + s
        if self.kind == "fejer":
            w = self.param * self.scale
            return 1.0 / (pi ** 2 * w ** 2 * tol)
        return float("inf")

    def scaled(self, c):
        return replace(self, scale=self.scale * c, periodic=False)


class TestFunction:
    """Even test function of ``arity`` variables.

    Either a product of :class:`Factor` objects, one per variable, or a
    joint vectorized callable.

    Parameters
    ----------
    arity : int
    factors : sequence of Factor, optional
    joint : callable, optional
        ``joint(*xs)`` for broadcastable arrays ``xs``.
    periodic : bool
        Whether the function is 2*pi-periodic in each variable.
    support : float, optional
        Fourier support radius of the joint function (sum over variables).
    name : str
    """

    __test__ = False

    def __init__(self, arity, factors=None, joint=None, periodic=False, support=None, name=""):
        if (factors is None) == (joint is None):
            raise ValueError("give exactly one of factors and joint")
        self.arity = int(arity)
        self.factors = tuple(factors) if factors is not None else None
        if self.factors is not None and len(self.factors) != self.arity:
            raise ValueError("one factor per variable")
        self.joint = joint
        self.periodic = bool(periodic)
        self._support = support
        self.name = name or ("*".join(f.name for f in self.factors) if self.factors else "joint")

    @property
    def is_product(self):
        return self.factors is not None

    @property
    def support(self):
        if self._support is not None:
            return self._support
        if self.is_product:
            return sum(f.support for f in self.factors)
        return None

    def __call__(self, *xs):
        if len(xs) != self.arity:
            raise ValueError(f"expected {self.arity} arguments")
        if self.is_product:
            out = 1.0
            for f, x in zip(self.factors, xs):
                out = out * f(x)
            return out
        return self.joint(*xs)

    def merge(self, blocks):
        """Restriction to the diagonal where variables in each block coincide.

        Parameters
        ----------
        blocks : sequence of tuple of int
            A set partition of range(arity).

        Returns
        -------
        TestFunction
            One variable per block.
        """
        blocks = [tuple(b) for b in blocks]
        if self.is_product:
            facs = []
            for b in blocks:
                fs = [self.factors[i] for i in b]
                facs.append(fs[0] if len(fs) == 1 else _ProductFactor(tuple(fs)))
            return TestFunction(len(blocks), factors=facs, periodic=self.periodic,
                                name=f"{self.name}|{blocks}")
        where = {}
        for k, b in enumerate(blocks):
            for i in b:
                where[i] = k

        def joint(*ys):
            return self.joint(*[ys[where[i]] for i in range(self.arity)])
        return TestFunction(len(blocks), joint=joint, periodic=self.periodic,
                            name=f"{self.name}|{blocks}")

    def scaled(self, c):
        """The function x -> f(c x), no longer periodic."""
        if self.is_product:
            return TestFunction(self.arity, factors=[f.scaled(c) for f in self.factors],
                                name=f"{self.name}@{c:g}")
        j = self.joint
        return TestFunction(self.arity, joint=lambda *xs: j(*[c * x for x in xs]),
                            support=None if self._support is None else self._support * c,
                            name=f"{self.name}@{c:g}")

    def tail(self, T):
        """Bound on the mass of |f| outside the box [-T, T]^n."""
        if not self.is_product:
            return float("nan")
        total = 0.0
        for i, f in enumerate(self.factors):
            rest = 1.0
            for j, g in enumerate(self.factors):
                if j != i:
                    rest *= g.mass()
            total += 2 * f.tail(T) * rest
        return total

    def length(self):
        """Smallest length scale over the factors; None for joint functions."""
        if not self.is_product:
            return None
        return min(f.length() for f in self.factors)

    def truncation(self, tol):
        if not self.is_product:
            raise ValidationError("joint test functions need an explicit truncation")
        return max(f.truncation(tol) for f in self.factors)

    def check_even(self, rng=None, tol=1e-12):
        rng = np.random.default_rng(0) if rng is None else rng
        x = rng.uniform(-3, 3, size=(16, self.arity))
        base = self(*x.T)
        for i in range(self.arity):
            y = x.copy()
            y[:, i] *= -1
            if not np.allclose(self(*y.T), base, rtol=tol, atol=tol):
                raise ValidationError(f"test function is not even in variable {i}")

    def check_periodic(self, rng=None, tol=1e-12):
        rng = np.random.default_rng(1) if rng is None else rng
        x = rng.uniform(-3, 3, size=(16, self.arity))
        base = self(*x.T)
        for i in range(self.arity):
            y = x.copy()
            y[:, i] += 2 * pi
            if not np.allclose(self(*y.T), base, rtol=tol, atol=tol):
                raise ValidationError(f"test function is not 2pi-periodic in variable {i}")


class _ProductFactor:
    """Pointwise product of factors sharing one variable."""

    def __init__(self, parts):
        self.parts = parts
        self.name = "(" + "*".join(p.name for p in parts) + ")"
        self.periodic = all(p.periodic for p in parts)

    def __call__(self, x):
        out = 1.0
        for p in self.parts:
            out = out * p(x)
        return out

    @property
    def support(self):
        return sum(p.support for p in self.parts)

    def tail(self, T):
        if all(p.kind == "fejer" for p in self.parts):
            # |sinc(w x)|^2 <= 1/(pi w x)^2, integrated over [T, inf)
            k = len(self.parts)
            w2 = np.prod([(p.param * p.scale) ** 2 for p in self.parts])
            return 1.0 / ((2 * k - 1) * pi ** (2 * k) * w2 * T ** (2 * k - 1))
        return min(p.tail(T) for p in self.parts)

    def truncation(self, tol):
        if all(p.kind == "fejer" for p in self.parts):
            k = len(self.parts)
            w2 = np.prod([(p.param * p.scale) ** 2 for p in self.parts])
            return float(((2 * k - 1) * pi ** (2 * k) * w2 * tol) ** (-1.0 / (2 * k - 1)))
        return min(p.truncation(tol) for p in self.parts)

    def mass(self):
        return min(p.mass() for p in self.parts)

    def length(self):
        return min(p.length() for p in self.parts)

    def scaled(self, c):
        return _ProductFactor(tuple(p.scaled(c) for p in self.parts))


def _parse_factor(token, periodic):
    token = token.strip()
    if token == "one":
        return Factor("one", periodic=periodic)
    kind, sep, arg = token.partition(":")
    if not sep:
        raise ValidationError(f"cannot parse test-function factor {token!r}")
    try:
        val = float(arg)
    except ValueError:
        raise ValidationError(f"bad parameter in {token!r}") from None
    if not isfinite(val):
        raise ValidationError(f"bad parameter in {token!r}")
    return Factor(kind, val, periodic=periodic and kind != "cos")


def parse_test_function(text, n, periodic=False):
    """Build a product :class:`TestFunction` from a descriptor.

    Parameters
    ----------
    text : str
        For example ``"cos:1*cos:2"`` or ``"gauss:0.5"``.
    n : int
        Number of variables; a single factor is used for all of them.
    periodic : bool
        Periodic mode for random-matrix densities.
    """
    tokens = [t for t in text.split("*")]
    if len(tokens) == 1:
        tokens = tokens * n
    if len(tokens) != n:
        raise ValidationError(f"{text!r} has {len(tokens)} factors for {n} variables")
    facs = [_parse_factor(t, periodic) for t in tokens]
    if periodic and any(f.kind == "fejer" for f in facs):
        raise ValidationError("fejer factors are not periodic")
    return TestFunction(n, factors=facs, periodic=periodic, name=text)


def set_partitions(n):
    """All set partitions of range(n) as lists of tuples."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        for i in range(len(part)):
            yield part[:i] + [part[i] + (n - 1,)] + part[i + 1:]
        yield part + [(n - 1,)]


def mobius_weight(blocks):
    """prod over blocks of (-1)^(|b|-1) (|b|-1)!, the Mobius function of the
    partition lattice used to pass from all index tuples to distinct ones."""
    w = 1
    for b in blocks:
        k = len(b)
        for j in range(1, k):
            w *= -j
    return w
