"""n-level densities of eigenangles of SO(2N) and USp(2N).

Three evaluation routes share one tensor-grid engine:

* ``density_contour``: vertical contours at Re z = +-delta, where J* is
  regular.  The contour identity sums over all index tuples, so distinct
  tuples are recovered by Mobius inversion over set partitions of the
  variables.
* ``density_onaxis``: the distinct-tuple formula with J* on the imaginary
  axis.  Terms sharing the same M-set combine to a pole-free periodic
  integrand; the trapezoid rule is linear, so summing per-term grid sums
  equals integrating the combined integrand.  Per-axis node offsets keep
  every node off the removable singularities.
* ``density_restricted``: infinite vertical lines with J*_q.

Periodic integrals use the trapezoid rule, which converges geometrically
for analytic periodic integrands and is exact for trigonometric
polynomials of degree below the node count.  Infinite lines use composite
Gauss-Legendre.
"""

import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from math import pi

import numpy as np

from .errors import (CancellationWarning, QuadratureNonConvergence, SupportViolation,
                     ValidationError)
from .quadrature import (QuadratureSpec, axis_shifts, check_resolution, contract, line_nodes,
                         periodic_nodes)
from .shiftcalc import GroupSpec, jstar_terms
from .testfns import TestFunction, mobius_weight, set_partitions

__all__ = [
    "DensityResult",
    "density_contour",
    "density_onaxis",
    "density_restricted",
    "kernel_density",
    "kernel_matrix",
    "scaled_density",
    "exact_one_level",
    "sides_label",
]

ROUNDOFF = 1e-13
CANCELLATION_LIMIT = 1e12


@dataclass
class DensityResult:
    """Assembled density with its error estimate and per-term breakdown.

    ``terms`` maps a side string such as ``"KLM"`` (side of variable i at
    position i) to that term's complex contribution.
    """

    value: float
    error_estimate: float
    terms: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    imag: float = 0.0


def sides_label(sides):
    """Split a side string into comma-free K, L, M index lists."""
    out = {"K": [], "L": [], "M": []}
    for i, s in enumerate(sides):
        out[s].append(str(i + 1))
    return {k: ";".join(v) for k, v in out.items()}


class _Grid:
    """Per-axis nodes, weights and argument maps for one evaluation route."""

    def __init__(self, axes, jarg, farg):
        self.axes = axes
        self.k = len(axes)
        self.jarg = jarg
        self.farg = farg

    def axis(self, i, x):
        shape = [1] * self.k
        shape[i] = -1
        return np.reshape(x, shape)


def _grid_terms(grid, f, jfun, mweight, prefactor):
    """Contributions of every (K, L, M) assignment on a tensor grid.

    ``jfun(args, sides)`` receives one argument per variable, M variables
    included, and returns a map from subset D to J-values.

    Returns the term map, the sum of absolute contributions (for the
    roundoff estimate) and the list of subset counts per assignment.
    """
    k = grid.k
    terms = {}
    abs_total = 0.0
    audit = {}
    for sides in product("KLM", repeat=k):
        args = [grid.axis(i, grid.jarg(s, grid.axes[i][0])) for i, s in enumerate(sides)]
        parts = jfun(args, sides)
        audit["".join(sides)] = sorted(len(D) for D in parts)
        J = 0.0
        for v in parts.values():
            J = J + v
        J = np.asarray(J, dtype=complex)
        n_m = sides.count("M")
        scale = prefactor * mweight ** n_m
        if f.is_product:
            vecs = [w * f.factors[i](grid.farg(s, t)) for i, (s, (t, w)) in
                    enumerate(zip(sides, grid.axes))]
            val = contract(J, vecs)
            mag = contract(np.abs(J), [np.abs(v) for v in vecs]).real
        else:
            args = [grid.axis(i, grid.farg(s, t)) for i, (s, (t, _)) in
                    enumerate(zip(sides, grid.axes))]
            W = 1.0
            for i, (_, w) in enumerate(grid.axes):
                W = W * grid.axis(i, w)
            FW = f(*args) * W
            val = complex(np.sum(J * FW))
            mag = float(np.sum(np.abs(J) * np.abs(FW)))
        terms["".join(sides)] = scale * val
        abs_total += abs(scale) * mag
    return terms, abs_total, audit


def _rmt_jfun(g, q=None):
    """J* of the K and L arguments; M variables only carry the 2N weight."""
    def jfun(args, sides):
        return jstar_terms([a for a, s in zip(args, sides) if s != "M"], g, q)
    return jfun


def _validate(g, n, f, periodic):
    if not isinstance(f, TestFunction):
        raise ValidationError("f must be a TestFunction")
    if f.arity != n:
        raise ValidationError(f"test function has {f.arity} variables, n = {n}")
    if n < 1:
        raise ValidationError("n must be at least 1")
    if g is not None and n > g.N:
        raise ValidationError(f"n = {n} exceeds N = {g.N}")
    f.check_even()
    if periodic:
        if not f.periodic:
            raise ValidationError("random-matrix densities need a periodic test function")
        f.check_periodic()


def _finish(evaluate, quad, route, extra=None):
    terms, abs_total, audit = evaluate(quad)
    total = sum(terms.values())
    meta = {"route": route, "nodes_per_dim": quad.nodes_per_dim,
            "contour_offset": quad.contour_offset, "abs_term_sum": abs_total}
    if extra:
        meta.update(extra)
    err = ROUNDOFF * abs_total + meta.get("tail_estimate", 0.0)
    if quad.estimate_error:
        half_terms, _, _ = evaluate(quad.halved())
        err += abs(total - sum(half_terms.values()))
    cond = abs_total / max(abs(total), 1.0)
    meta["condition"] = cond
    if cond > CANCELLATION_LIMIT:
        warnings.warn(f"term-sum condition number {cond:.2e}", CancellationWarning)
    meta["subset_audit"] = audit
    res = DensityResult(float(total.real), float(err), terms, meta, float(total.imag))
    if err > quad.tol * max(1.0, abs(total)):
        raise QuadratureNonConvergence(
            f"{route}: error estimate {err:.2e} above tolerance {quad.tol:.1e}")
    return res


def _mobius(f, all_tuples):
    """Distinct-tuple terms from all-tuple evaluations on every diagonal.

    ``all_tuples(fb)`` returns (terms, abs_total, audit) for the merged
    function ``fb``; merged side strings are spread back to the original
    variables.
    """
    n = f.arity
    total = defaultdict(complex)
    abs_total = 0.0
    audit = {}
    for blocks in set_partitions(n):
        mu = mobius_weight(blocks)
        fb = f if len(blocks) == n else f.merge(blocks)
        terms, mag, aud = all_tuples(fb)
        for sides_b, val in terms.items():
            sides = [""] * n
            for b, s in zip(blocks, sides_b):
                for i in b:
                    sides[i] = s
            total["".join(sides)] += mu * val
        abs_total += abs(mu) * mag
        if len(blocks) == n:
            audit = aud
    return dict(total), abs_total, audit


def _contour_all(g, f, quad, cache):
    """E[sum over all index tuples of f] from the contour identity."""
    k = f.arity
    m = quad.nodes_per_dim
    delta = quad.contour_offset
    axes = [periodic_nodes(m, s) for s in axis_shifts(k)]

    def jarg(side, t):
        return delta + 1j * t if side == "K" else delta - 1j * t

    def farg(side, t):
        return -t + 1j * delta if side == "K" else -t - 1j * delta

    grid = _Grid(axes, jarg, farg)

    inner = _rmt_jfun(g)

    def jfun(args, sides):
        key = (k, m, delta, sides)
        if key not in cache:
            cache[key] = inner(args, sides)
        return cache[key]

    return _grid_terms(grid, f, jfun, 2 * g.N, (4 * pi) ** -k)


def density_contour(g, n, f, quad=None):
    """Average over the group of the sum of f over distinct n-tuples of
    eigenangles, from the off-axis contour form.

    Parameters
    ----------
    g : GroupSpec
    n : int
        Number of variables, at most N.
    f : TestFunction
        Periodic, even in every variable.
    quad : QuadratureSpec, optional

    Returns
    -------
    DensityResult
    """
    quad = quad or QuadratureSpec()
    _validate(g, n, f, periodic=True)

    def evaluate(q):
        cache = {}
        return _mobius(f, lambda fb: _contour_all(g, fb, q, cache))

    return _finish(evaluate, quad, "contour")


def density_onaxis(g, n, f, quad=None):
    """Same average as :func:`density_contour` from the on-axis form.

    Parameters and return value as for :func:`density_contour`.
    """
    quad = quad or QuadratureSpec()
    _validate(g, n, f, periodic=True)

    def evaluate(q):
        m = q.nodes_per_dim
        axes = [periodic_nodes(m, s) for s in axis_shifts(n)]
        grid = _Grid(axes, lambda s, t: 1j * t if s == "K" else -1j * t, lambda s, t: t)
        return _grid_terms(grid, f, _rmt_jfun(g), 2 * g.N, (4 * pi) ** -n)

    return _finish(evaluate, quad, "onaxis")


def density_restricted(g, n, f, q=None, quad=None):
    """Density of the scaled function F(x) = f(N x / (2 pi)) summed over the
    periodically extended sequence of +-eigenangles, using J*_q.

    Parameters
    ----------
    g : GroupSpec
    n : int
    f : TestFunction
        Strip-decay mode with a declared Fourier support radius below 2q.
    q : int or None
        Keep subsets with |D| < q; None evaluates the full J*.
    quad : QuadratureSpec, optional
        ``truncation`` sets the half-length T of the lines.

    Returns
    -------
    DensityResult
        ``metadata["subset_audit"]`` lists the subset sizes evaluated for
        each (K, L, M) assignment.
    """
    quad = quad or QuadratureSpec(panels=64, order=16)
    _validate(g, n, f, periodic=False)
    if q is not None:
        supp = f.support
        if supp is None or not supp < 2 * q:
            raise SupportViolation(f"support radius {supp} is not below 2q = {2 * q}")
    F = f.scaled(g.N / (2 * pi))
    T = quad.truncation or F.truncation(quad.tail_tol)
    check_resolution(T, quad.panels, F.length(), "restricted")
    delta = quad.contour_offset

    def jarg(side, t):
        return delta + 1j * t if side == "K" else delta - 1j * t

    def farg(side, t):
        if side == "K":
            return -t + 1j * delta
        return -t - 1j * delta if side == "L" else -t

    def evaluate(qs):
        axes = [line_nodes(T, qs.panels, qs.order, s) for s in axis_shifts(n)]
        grid = _Grid(axes, jarg, farg)
        return _grid_terms(grid, F, _rmt_jfun(g, q), 2 * g.N, (2 * pi) ** -n)

    tail = (g.N / pi) ** n * F.tail(T)
    return _finish(evaluate, quad, "restricted",
                   {"q": q, "truncation_T": T, "tail_estimate": tail, "panels": quad.panels,
                    "order": quad.order})


def kernel_matrix(symmetry, x, y):
    """sinc(pi(y-x)) + s sinc(pi(y+x)) with s = +1 (SO_even) or -1 (USp)."""
    s = 1.0 if symmetry == "SO_even" else -1.0
    return np.sinc(y - x) + s * np.sinc(y + x)


def _det_kernel(symmetry, xs):
    n = len(xs)
    K = [[kernel_matrix(symmetry, xs[i], xs[j]) for j in range(n)] for i in range(n)]
    if n == 1:
        return K[0][0]
    if n == 2:
        return K[0][0] * K[1][1] - K[0][1] * K[1][0]
    if n == 3:
        return (K[0][0] * (K[1][1] * K[2][2] - K[1][2] * K[2][1])
                - K[0][1] * (K[1][0] * K[2][2] - K[1][2] * K[2][0])
                + K[0][2] * (K[1][0] * K[2][1] - K[1][1] * K[2][0]))
    raise ValidationError("kernel densities are implemented for n <= 3")


def kernel_density(symmetry, n, f, quad=None):
    """Limiting density (1/2^n) times the integral over R^n of f det K.

    The 1/2^n normalization is the n = 2 prefactor carried over to every n.

    Parameters
    ----------
    symmetry : {"SO_even", "USp"}
    n : int
    f : TestFunction
        Strip-decay mode.
    quad : QuadratureSpec, optional

    Returns
    -------
    DensityResult
    """
    quad = quad or QuadratureSpec(panels=48, order=16)
    _validate(None, n, f, periodic=False)
    if symmetry not in ("SO_even", "USp"):
        raise ValidationError(f"unknown symmetry {symmetry!r}")
    T = quad.truncation or f.truncation(quad.tail_tol)
    check_resolution(T, quad.panels, f.length(), "kernel")

    def evaluate(qs):
        x, w = line_nodes(T, qs.panels, qs.order)
        xs = []
        W = 1.0
        for i in range(n):
            shape = [1] * n
            shape[i] = -1
            xs.append(x.reshape(shape))
            W = W * w.reshape(shape)
        vals = f(*xs) * _det_kernel(symmetry, xs) * W / 2 ** n
        total = complex(np.sum(vals))
        return {"M" * n: total}, float(np.sum(np.abs(vals))), {}

    return _finish(evaluate, quad, "kernel",
                   {"truncation_T": T, "tail_estimate": f.tail(T) * 2 ** n / 2 ** n,
                    "normalization": "1/2^n carried over from n = 2"})


class _Windowed:
    """g(c x) times a cosine taper over the last 10% of [0, pi]."""

    def __init__(self, factor, c):
        self.factor = factor.scaled(c)
        self.name = f"window({factor.name})"

    @staticmethod
    def window(t):
        a = np.abs(t)
        u = np.clip((a - 0.9 * pi) / (0.1 * pi), 0.0, 1.0)
        return 0.5 * (1 + np.cos(pi * u))

    def __call__(self, t):
        return self.factor(t) * self.window(t)


def scaled_density(g, n, f, quad=None):
    """Finite-N density of F(theta) = f(N theta / pi), for comparison with
    :func:`kernel_density`.

    F is made periodic by a cosine taper over 0.9 pi <= |theta| <= pi and
    evaluated by the on-axis route.  ``metadata["window_error"]`` bounds the
    change caused by the taper.
    """
    quad = quad or QuadratureSpec(nodes_per_dim=max(128, 32 * g.N))
    _validate(g, n, f, periodic=False)
    if not f.is_product:
        raise ValidationError("scaled_density needs a product test function")
    c = g.N / pi
    facs = [_Windowed(fac, c) for fac in f.factors]
    F = TestFunction(n, factors=facs, periodic=True, name=f"scaled({f.name})")
    t = np.linspace(0.9 * pi, pi, 401)
    lost = []
    for fac in f.factors:
        vals = np.abs(fac.scaled(c)(t)) * (1 - _Windowed.window(t))
        lost.append(np.trapezoid(vals, t) * 2 * c)
    mass = [2 * c * max(np.trapezoid(np.abs(fac.scaled(c)(np.linspace(0, pi, 2001))),
                                     np.linspace(0, pi, 2001)), 1e-300) for fac in f.factors]
    window_error = 0.0
    for i in range(n):
        rest = np.prod([mass[j] for j in range(n) if j != i]) if n > 1 else 1.0
        window_error += lost[i] * rest

    def evaluate(q):
        m = q.nodes_per_dim
        axes = [periodic_nodes(m, s) for s in axis_shifts(n)]
        grid = _Grid(axes, lambda s, t: 1j * t if s == "K" else -1j * t, lambda s, t: t)
        return _grid_terms(grid, F, _rmt_jfun(g), 2 * g.N, (4 * pi) ** -n)

    return _finish(evaluate, quad, "scaled-onaxis", {"window_error": float(window_error)})


def exact_one_level(g, theta):
    """Exact one-level density of eigenangles on [0, pi] for finite N."""
    th = np.asarray(theta, dtype=float)
    if g.symmetry == "SO_even":
        k, s = 2 * g.N - 1, 1.0
    else:
        k, s = 2 * g.N + 1, -1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(np.sin(th)) < 1e-12, float(k), np.sin(k * th) / np.sin(th))
    return (k + s * ratio) / (2 * pi)
