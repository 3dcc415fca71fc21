"""Conjectured statistics of zeros in families of quadratic twists.

Two families are supported: even quadratic twists of an elliptic curve
("elliptic") and quadratic Dirichlet L-functions ("dirichlet").  For each
family ``jstar_family`` evaluates the closed-form average J*(A, B) of the
product of logarithmic derivatives over the family members of conductor
up to X.

The per-member factor of a D-term is exp(-kappa s_D ell_d) with s_D the sum
of D, and every B-shift contributes h(beta) - kappa ell_d.  The family sum
therefore reduces to the moments sum_d ell_d^k exp(-kappa s ell_d), which
factor over the grid axes when each shift lives on its own axis, so a whole
tensor grid costs one small matrix product per moment.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import log, pi, sqrt
from string import ascii_letters

import numpy as np
from scipy import special

from .arith import (CurveFamily, EulerTruncation, euler_sums, family_selector,
                    parse_curve, selected_discriminants)
from .errors import (EmptySelection, MalformedDatabase, QuadratureNonConvergence, TooLarge,
                     ValidationError)
from .haar import tuple_sum
from .quadrature import QuadratureSpec, axis_shifts, check_resolution, line_nodes
from .rmtdensity import (DensityResult, _finish, _Grid, _grid_terms, _mobius, _validate,
                         kernel_density)
from .shiftcalc import pair_partitions, subsets
from .specialfn import gamma_family, zeta1p
from .testfns import TestFunction

__all__ = [
    "Family",
    "elliptic_family",
    "dirichlet_family",
    "parse_family",
    "FamilyDensityRequest",
    "ZeroDatabase",
    "psi_logderiv",
    "jstar_family",
    "jstar_family_terms",
    "nt_density",
    "one_level_direct",
    "two_level_diagnostics",
    "scaled_two_level",
    "empirical_from_zeros",
    "REMAINDER_CAVEAT",
]

MAX_ORDER = 3
REMAINDER_CAVEAT = "O(X^(1/2+eps)) remainder not modeled"
NT_OFFSET = 0.2
DEFAULT_PANELS = {1: 64, 2: 32, 3: 12}
_SWAP = str.maketrans("KL", "LK")


@dataclass(frozen=True, eq=False)
class Family:
    """A family of L-functions with its conductor scale.

    Attributes
    ----------
    kind : {"elliptic", "dirichlet"}
    curve : CurveFamily or None
        Required for the elliptic family.
    """

    kind: str
    curve: CurveFamily = None

    def __post_init__(self):
        if self.kind not in ("elliptic", "dirichlet"):
            raise ValidationError(f"unknown family {self.kind!r}")
        if self.kind == "elliptic" and self.curve is None:
            raise ValidationError("the elliptic family needs a curve")

    @property
    def kappa(self):
        """Power of the conductor scale: 2 for curves, 1 for Dirichlet."""
        return 2.0 if self.kind == "elliptic" else 1.0

    def ell(self, d):
        """log(sqrt(M) d / 2 pi) for curves, log(d / pi) for Dirichlet."""
        d = np.asarray(d, dtype=float)
        if self.kind == "elliptic":
            return np.log(sqrt(self.curve.M) * d / (2 * pi))
        return np.log(d / pi)

    def h(self, beta):
        """Member-independent part of psi'/psi(1/2 + beta)."""
        b = np.asarray(beta, dtype=complex)
        if self.kind == "elliptic":
            return -special.psi(1 - b) - special.psi(1 + b)
        return -0.5 * special.psi(0.25 + 0.5 * b) - 0.5 * special.psi(0.25 - 0.5 * b)

    def gamma_ratio(self, delta):
        mode = "ratio_elliptic" if self.kind == "elliptic" else "ratio_dirichlet"
        return gamma_family(delta, mode)

    def discriminants(self, X):
        return _selected(self, int(X))

    def describe(self):
        return "dirichlet" if self.kind == "dirichlet" else f"elliptic({self.curve.describe()})"


def elliptic_family(curve):
    """Family of even quadratic twists of ``curve`` (CurveFamily or string)."""
    return Family("elliptic", parse_curve(curve) if isinstance(curve, str) else curve)


def dirichlet_family():
    return Family("dirichlet")


def parse_family(text):
    """``"dirichlet"`` or a curve string accepted by :func:`parse_curve`."""
    return dirichlet_family() if text.strip() == "dirichlet" else elliptic_family(text)


_SELECTED = {}


def _selected(family, X):
    key = (family.describe(), X)
    if key not in _SELECTED:
        _SELECTED[key] = selected_discriminants(X, family.curve)
    return _SELECTED[key]


@dataclass(frozen=True)
class FamilyDensityRequest:
    """Inputs of :func:`nt_density`."""

    family: Family
    n: int
    f: TestFunction
    x_max: int = 10 ** 4
    trunc: EulerTruncation = field(default_factory=EulerTruncation)
    quad: QuadratureSpec = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_ORDER:
            raise TooLarge(f"n = {self.n} outside 1..{MAX_ORDER}")


@dataclass
class ZeroDatabase:
    """Ascending positive zero ordinates per discriminant.

    Attributes
    ----------
    blocks : dict
        Maps d to a 1-d float array.
    metadata : dict
    """

    blocks: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for d, g in list(self.blocks.items()):
            g = np.asarray(g, dtype=float)
            if g.ndim != 1 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise MalformedDatabase(f"ordinates for d={d} must be positive and increasing")
            self.blocks[d] = g


def psi_logderiv(family, beta, d):
    """psi'/psi(1/2 + beta) for the member of discriminant d.

    Parameters
    ----------
    family : Family
    beta : complex or array_like
        |Re beta| < 1/2.
    d : int or array_like

    Returns
    -------
    complex or ndarray
    """
    out = family.h(beta) - family.kappa * family.ell(d)
    return complex(out) if np.ndim(out) == 0 else out


def _zeta_dagger(x):
    """zeta(1 + x) with factors at x == 0 replaced by 1."""
    x = np.asarray(x, dtype=complex)
    pole = x == 0
    if not np.any(pole):
        return zeta1p(x)
    return np.where(pole, 1.0, zeta1p(np.where(pole, 1.0, x)))


def _zeta_block(family, D):
    sgn = 1.0 if family.kind == "elliptic" else -1.0
    out = 1.0
    for d in D:
        out = out * _zeta_dagger(2 * sgn * d)
    for a, b in combinations(D, 2):
        out = out * _zeta_dagger(a + b) * _zeta_dagger(-a - b) / (
            _zeta_dagger(a - b) * _zeta_dagger(b - a))
    return out


def _poly_coeffs(family, B):
    """Coefficients c_k of prod_beta (h_beta - kappa ell) in powers of ell."""
    coef = [1.0]
    for b in B:
        hb = family.h(b)
        new = [0.0] * (len(coef) + 1)
        for k, c in enumerate(coef):
            new[k] = new[k] + c * hb
            new[k + 1] = new[k + 1] - family.kappa * c
        coef = new
    return coef


def _axes_of(shape, rank):
    shape = (1,) * (rank - len(shape)) + tuple(shape)
    return tuple(i for i, s in enumerate(shape) if s > 1), shape


def _moments(kappa, D, ell, kmax, chunk_elems=2 ** 22):
    """S_k = sum_d ell_d^k exp(-kappa s ell_d), s = sum(D), k = 0..kmax."""
    powers = [ell ** k for k in range(kmax + 1)]
    if not D:
        return [float(np.sum(p)) for p in powers]
    shapes = [np.shape(x) for x in D]
    out_shape = np.broadcast_shapes(*shapes)
    rank = len(out_shape)
    used = [_axes_of(s, rank) for s in shapes]
    flat = [a for ax, _ in used for a in ax]
    if len(flat) == len(set(flat)) and rank <= len(ascii_letters) - 1:
        # each shift lives on its own axes: contract over d with einsum
        ops, subs = [], []
        for x, (ax, sh) in zip(D, used):
            v = np.reshape(np.asarray(x, dtype=complex), sh)
            v = v.reshape([sh[a] for a in ax])
            ops.append(np.exp(-kappa * v[..., None] * ell))
            subs.append("".join(ascii_letters[a] for a in ax) + "z")
        outsub = "".join(ascii_letters[a] for a in sorted(flat))
        res_shape = [out_shape[a] if a in flat else 1 for a in range(rank)]
        res = []
        for p in powers:
            expr = ",".join(subs + ["z"]) + "->" + outsub
            r = np.einsum(expr, *ops, p, optimize=True)
            res.append(np.reshape(r, res_shape))
        return res
    s = np.broadcast_to(sum(np.asarray(x, dtype=complex) for x in D), out_shape).ravel()
    res = [np.zeros(s.shape, dtype=complex) for _ in powers]
    step = max(1, chunk_elems // max(len(ell), 1))
    for lo in range(0, len(s), step):
        E = np.exp(-kappa * s[lo:lo + step, None] * ell[None, :])
        for k, p in enumerate(powers):
            res[k][lo:lo + step] = E @ p
    return [r.reshape(out_shape) for r in res]


def _block_sums(family, D, rest, trunc):
    """Singleton and pair block factors of the H-sum for subset D."""
    kind = family.kind
    pair_idx = list(combinations(range(len(rest)), 2))
    s = euler_sums(kind, D, rest, [(rest[i], rest[j]) for i, j in pair_idx],
                   family.curve, trunc)
    sgn = 1.0 if kind == "elliptic" else -1.0
    zl = {}
    for tag in ("", "_half"):
        single = []
        for a, ad in zip(rest, s["singles" + tag]):
            v = -sgn * zeta1p(2 * a, "logderiv")
            for d in D:
                v = v + zeta1p(a - d, "logderiv") - zeta1p(a + d, "logderiv")
            single.append(v + ad)
        pair = {}
        for (i, j), ad in zip(pair_idx, s["pairs" + tag]):
            pair[(i, j)] = zeta1p(rest[i] + rest[j], "logderiv2") + ad
        log_a = s["log_value" + tag]
        zl[tag] = (single, pair, log_a)
    return zl


def _pp_sum(m, single, pair):
    total = 0.0
    for part in pair_partitions(list(range(m))):
        prod = 1.0
        for block in part:
            prod = prod * (single[block[0]] if len(block) == 1 else pair[block])
        total = total + prod
    return total


def jstar_family_terms(family, A, B, X, trunc=None):
    """Per-subset contributions to J*(A, B), keyed by the index tuple of D.

    Returns
    -------
    terms : dict
    euler_tail : float
        Largest change of any term between p_max / 2 and p_max.
    """
    trunc = trunc or EulerTruncation()
    A = [np.asarray(a, dtype=complex) for a in A]
    B = [np.asarray(b, dtype=complex) for b in B]
    if len(A) + len(B) > 2 * MAX_ORDER:
        raise TooLarge("too many shifts")
    ell = family.ell(family.discriminants(X))
    coef = _poly_coeffs(family, B)
    out = {}
    tail = 0.0
    for D_idx in subsets(len(A)):
        D = [A[i] for i in D_idx]
        rest = [A[i] for i in range(len(A)) if i not in D_idx]
        S = _moments(family.kappa, D, ell, len(coef) - 1)
        dsum = 0.0
        for c, s in zip(coef, S):
            dsum = dsum + c * s
        blocks = _block_sums(family, D, rest, trunc)
        pref = (-1.0) ** len(D)
        for d in D:
            pref = pref * family.gamma_ratio(d)
        pref = pref * _zeta_block(family, D) if D else pref
        vals = {}
        for tag, (single, pair, log_a) in blocks.items():
            arith = np.exp(log_a) if D else 1.0
            vals[tag] = pref * arith * dsum * _pp_sum(len(rest), single, pair)
        out[D_idx] = vals[""]
        tail = max(tail, float(np.max(np.abs(vals[""] - vals["_half"]))))
    return out, tail


def jstar_family(family, A, B, X, trunc=None):
    """Average over the family of products of logarithmic derivatives.

    Parameters
    ----------
    family : Family
    A : sequence of complex or arrays
        Shifts of the L'/L factors; distinct, no two summing to zero.
    B : sequence of complex or arrays
        Shifts of the psi'/psi factors, |Re beta| < 1/2.
    X : int
        Discriminants d <= X of the family are summed.
    trunc : EulerTruncation, optional

    Returns
    -------
    complex or ndarray
    """
    terms, _ = jstar_family_terms(family, A, B, X, trunc)
    total = 0.0
    for v in terms.values():
        total = total + v
    return complex(total) if np.ndim(total) == 0 else total


def _family_jfun(family, X, trunc, tails):
    def jfun(args, sides):
        A = [a for a, s in zip(args, sides) if s != "M"]
        B = [a for a, s in zip(args, sides) if s == "M"]
        terms, tail = jstar_family_terms(family, A, B, X, trunc)
        tails.append(tail)
        return terms
    return jfun


def _family_tail(family, X, F, T, n):
    ell = family.ell(family.discriminants(X))
    scale = family.kappa * np.sum(np.abs(ell)) / (2 * pi)
    return float(scale ** n * F.tail(T))


def nt_density(req, route="contour"):
    """Conjectured n-level density of zero ordinates summed over the family.

    Evaluates (4 pi)^-n times the integral over R^n of the signed
    (K, L, M) sum of J*, which equals the half-line form by evenness of f.

    Parameters
    ----------
    req : FamilyDensityRequest
    route : {"contour", "onaxis"}
        "contour" uses lines at Re z = +-delta where J* is regular;
        "onaxis" uses imaginary arguments on offset nodes and is kept as a
        validation path.

    Returns
    -------
    DensityResult
        ``metadata`` carries the truncation tail, the Euler tail and the
        unmodeled remainder caveat.
    """
    fam, n, f, X = req.family, req.n, req.f, int(req.x_max)
    _validate(None, n, f, periodic=False)
    quad = req.quad or QuadratureSpec(panels=DEFAULT_PANELS[n], order=16,
                                      contour_offset=NT_OFFSET, tol=1e-8 if n == 1 else 1e-6)
    if route not in ("contour", "onaxis"):
        raise ValidationError(f"unknown route {route!r}")
    delta = quad.contour_offset
    if route == "contour" and not 0 < delta < 0.25:
        raise ValidationError("contour offset must lie in (0, 1/4)")
    xstar = len(fam.discriminants(X))
    if xstar == 0:
        raise EmptySelection(f"no discriminants up to X = {X}")
    T = quad.truncation or f.truncation(quad.tail_tol)
    check_resolution(T, quad.panels, f.length(), "nt-" + route)
    tails = []
    jfun = _family_jfun(fam, X, req.trunc, tails)

    def contour_all(fb, qs, cache):
        k = fb.arity
        axes = [line_nodes(T, qs.panels, qs.order, s) for s in axis_shifts(k)]

        def jarg(side, t):
            if side == "K":
                return delta + 1j * t
            return delta - 1j * t if side == "L" else -delta + 1j * t

        def farg(side, t):
            return -t + 1j * delta if side == "K" else -t - 1j * delta

        def cached(args, sides):
            sides = "".join(sides)
            key = (k, qs.panels, sides)
            # L arguments are conjugates of K arguments and J* is real on
            # real shifts, so swapping K and L conjugates every term
            mirror = (k, qs.panels, sides.translate(_SWAP))
            if key not in cache:
                if "M" not in sides and mirror in cache:
                    cache[key] = {D: np.conj(v) for D, v in cache[mirror].items()}
                else:
                    cache[key] = jfun(args, sides)
            return cache[key]

        return _grid_terms(_Grid(axes, jarg, farg), fb, cached, -1.0, (4 * pi) ** -k)

    def evaluate(qs):
        if route == "contour":
            cache = {}
            return _mobius(f, lambda fb: contour_all(fb, qs, cache))
        axes = [line_nodes(T, qs.panels, qs.order, s) for s in axis_shifts(n)]
        grid = _Grid(axes, lambda s, t: 1j * t if s == "L" else -1j * t, lambda s, t: t)
        return _grid_terms(grid, f, jfun, -1.0, (4 * pi) ** -n)

    extra = {"family": fam.describe(), "X": X, "X_star": xstar, "truncation_T": T,
             "p_max": req.trunc.p_max, "caveat": REMAINDER_CAVEAT,
             "tail_estimate": _family_tail(fam, X, f, T, n)}
    res = _finish(evaluate, quad, "nt-" + route, extra)
    res.metadata["euler_tail"] = max(tails) if tails else 0.0
    return res


def one_level_direct(curve, f, X, trunc=None, quad=None):
    """One-level sum over twists in the regrouped direct form.

    Integrates over the real line
    sum_d [2 ell_d + psi(1+it) + psi(1-it)]
    + 2 X* [-zeta'/zeta(1+2it) + A_D(it)]
    - 2 sum_d (sqrt(M) d/2pi)^(-2it) Gamma(1-it)/Gamma(1+it) zeta(1+2it) A_E(it)
    against f(t) / 2 pi.

    Parameters
    ----------
    curve : CurveFamily or str
    f : TestFunction
        One variable, even, strip decay.
    X : int
    trunc : EulerTruncation, optional
    quad : QuadratureSpec, optional

    Returns
    -------
    float
    """
    fam = elliptic_family(curve)
    _validate(None, 1, f, periodic=False)
    trunc = trunc or EulerTruncation()
    quad = quad or QuadratureSpec(panels=64, order=16, tol=1e-8)
    T = quad.truncation or f.truncation(quad.tail_tol)
    check_resolution(T, quad.panels, f.length(), "one_level_direct")
    ell = fam.ell(fam.discriminants(X))
    xstar = len(ell)
    if xstar == 0:
        raise EmptySelection(f"no discriminants up to X = {X}")

    def evaluate(qs):
        t, w = line_nodes(T, qs.panels, qs.order, axis_shifts(1)[0])
        z = 1j * t
        gam = xstar * (special.psi(1 + z) + special.psi(1 - z)) + 2 * np.sum(ell)
        ad = euler_sums("elliptic", [], [z], curve=fam.curve, trunc=trunc)["singles"][0]
        empty = 2 * xstar * (-zeta1p(2 * z, "logderiv") + ad)
        ae = np.exp(euler_sums("elliptic", [z], curve=fam.curve, trunc=trunc)["log_value"])
        phase = np.exp(-2 * np.outer(z, ell)).sum(axis=1)
        one = -2 * phase * gamma_family(z, "ratio_elliptic") * zeta1p(2 * z) * ae
        vals = (gam + empty + one) * f(t) * w / (2 * pi)
        return complex(np.sum(vals)), float(np.sum(np.abs(vals)))

    val, mag = evaluate(quad)
    half, _ = evaluate(quad.halved())
    err = abs(val - half) + 1e-13 * mag
    if err > quad.tol * max(1.0, abs(val)):
        raise QuadratureNonConvergence(f"one_level_direct: error estimate {err:.2e}")
    return float(val.real)


def two_level_diagnostics(curve, X, a=1.0, b=None, trunc=None):
    """Leading-order checks of the scaled two-level sum.

    Returns
    -------
    dict
        ``diag1`` = J*(empty, {-pi i a/L, -pi i b/L}) / (X* L^2), target 4;
        ``diag2`` = [J*({pi i a/L}, {-pi i b/L}) + J*({-pi i a/L}, {-pi i b/L})]
        / (X* L^2), target -4 sin(2 pi a)/(2 pi a).
    """
    fam = elliptic_family(curve)
    b = a if b is None else b
    L = log(sqrt(fam.curve.M) * X / (2 * pi))
    xstar = len(fam.discriminants(X))
    if xstar == 0:
        raise EmptySelection(f"no discriminants up to X = {X}")
    ia, ib = pi * 1j * a / L, pi * 1j * b / L
    norm = xstar * L ** 2
    d1 = jstar_family(fam, [], [-ia, -ib], X, trunc) / norm
    d2 = (jstar_family(fam, [ia], [-ib], X, trunc)
          + jstar_family(fam, [-ia], [-ib], X, trunc)) / norm
    return {"a": a, "b": b, "L": L, "X_star": xstar,
            "diag1": float(d1.real), "diag1_target": 4.0,
            "diag2": float(d2.real), "diag2_target": float(-4 * np.sinc(2 * a))}


def scaled_two_level(curve, f, X, trunc=None, quad=None, a=1.0, b=None):
    """Two-level sum with ordinates scaled by L / pi, per family member.

    Parameters
    ----------
    curve : CurveFamily or str
    f : TestFunction
        Two variables, even, strip decay.
    X : int
    trunc : EulerTruncation, optional
    quad : QuadratureSpec, optional
    a, b : float
        Shift parameters of the diagnostics.

    Returns
    -------
    dict
        ``value`` (divided by X*), ``kernel`` (the limiting comparator),
        ``error_estimate`` and the diagnostics of
        :func:`two_level_diagnostics`.
    """
    fam = elliptic_family(curve)
    trunc = trunc or EulerTruncation()
    L = log(sqrt(fam.curve.M) * X / (2 * pi))
    F = f.scaled(L / pi)
    res = nt_density(FamilyDensityRequest(fam, 2, F, X, trunc, quad))
    xstar = res.metadata["X_star"]
    kern = kernel_density("SO_even", 2, f)
    out = {"value": res.value / xstar, "error_estimate": res.error_estimate / xstar,
           "kernel": kern.value, "L": L, "X_star": xstar,
           "euler_tail": res.metadata["euler_tail"] / xstar, "caveat": REMAINDER_CAVEAT}
    out.update({k: v for k, v in two_level_diagnostics(fam.curve, X, a, b, trunc).items()
                if k.startswith("diag")})
    return out


def empirical_from_zeros(db, f, n, selector=None):
    """Sum of f over distinct n-tuples of stored ordinates, over selected d.

    Parameters
    ----------
    db : ZeroDatabase
    f : callable
        Vectorized in n arguments.
    n : int
    selector : Family, callable or None
        A Family keeps d in its selection (the curve sign condition for
        twists); a callable is used as a predicate on d; None keeps all.

    Returns
    -------
    float
    """
    if isinstance(selector, Family):
        curve = selector.curve
        keep = (lambda d: True) if curve is None else (lambda d: family_selector(curve, d))
    else:
        keep = selector or (lambda d: True)
    chosen = [d for d in sorted(db.blocks) if keep(d)]
    if not chosen:
        raise EmptySelection("no discriminant in the database passes the selector")
    total = 0.0
    for d in chosen:
        g = db.blocks[d]
        if len(g) >= n:
            total += float(tuple_sum(g[None, :], f, n, distinct=True)[0])
    return total
