"""Closed-form ratio averages and log-derivative averages for SO(2N) and
USp(2N).

Shift arguments are sequences whose entries are complex scalars or numpy
arrays.  Arrays broadcast against each other, so a whole quadrature grid is
evaluated in one call; keeping each entry in its minimal broadcast shape
(for example ``(m, 1)`` and ``(1, m)``) keeps the work proportional to the
grid that is actually needed.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import CoincidentShifts, DimensionTooSmall, PoleAt, TooLarge, ZeroArgument
from .specialfn import zfun

__all__ = [
    "GroupSpec",
    "ShiftSet",
    "pair_partitions",
    "involution_count",
    "subsets",
    "q_prefactor",
    "h_term",
    "jstar",
    "jstar_terms",
    "ratio_average",
    "MAX_SHIFTS",
]

MAX_SHIFTS = 12
SYMMETRIES = ("SO_even", "USp")


@dataclass(frozen=True)
class GroupSpec:
    """Symmetry type and half-dimension N of the matrix group."""

    symmetry: str
    N: int

    def __post_init__(self):
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}, got {self.symmetry!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def sign(self):
        """+1 for SO(2N), -1 for USp(2N)."""
        return 1 if self.symmetry == "SO_even" else -1


@dataclass(frozen=True)
class ShiftSet:
    """Labeled shifts with optional side tags ("K", "L" or "M")."""

    values: tuple
    labels: tuple = ()
    sides: tuple = ()

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(vals))))
        if len(set(self.labels)) != len(self.labels) or len(self.labels) != len(vals):
            raise ValueError("labels must be unique, one per shift")
        if self.sides and len(self.sides) != len(vals):
            raise ValueError("one side tag per shift")

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def involution_count(m):
    """Number of partitions of an m-set into blocks of size one or two."""
    a, b = 1, 1
    for k in range(2, m + 1):
        a, b = b, b + (k - 1) * a
    return b if m >= 1 else 1


def pair_partitions(items):
    """Yield every partition of ``items`` into singletons and pairs once.

    Parameters
    ----------
    items : sequence
        Up to 12 entries.

    Yields
    ------
    list of tuple
        Blocks of one or two entries.
    """
    items = list(items)
    if len(items) > MAX_SHIFTS:
        raise TooLarge(f"{len(items)} shifts exceed the limit of {MAX_SHIFTS}")
    yield from _pp(items)


def _pp(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for tail in _pp(rest):
        yield [(first,)] + tail
    for i, other in enumerate(rest):
        for tail in _pp(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + tail


def subsets(m, max_size=None):
    """Index tuples of all subsets of range(m), by increasing size."""
    top = m if max_size is None else min(m, max_size)
    for k in range(top + 1):
        yield from combinations(range(m), k)


def _z(x, mode="value"):
    try:
        return zfun(x, mode)
    except PoleAt as exc:
        raise ZeroArgument(exc.where, "z-argument at a pole") from None


def _check_distinct(values):
    vals = [v for v in values if np.ndim(v) == 0]
    for a, b in combinations(vals, 2):
        if a == b:
            raise CoincidentShifts(f"repeated shift {a!r}")


def q_prefactor(D, g):
    """Prefactor exp(-2N sum D) (-1)^|D| B(D) of the D-term in J*.

    Parameters
    ----------
    D : sequence of complex or arrays
    g : GroupSpec

    Returns
    -------
    complex or ndarray
        B(D) is the perfect-square resolution of the square root:
        prod z(2 s d) over d, times z(d+d')z(-d-d')/(z(d-d')z(d'-d)) over
        pairs, with s = +1 for SO(2N) and s = -1 for USp(2N).
    """
    D = list(D)
    _check_distinct(D)
    out = np.exp(-2 * g.N * sum(D)) * (-1) ** len(D) if D else 1.0
    for d in D:
        out = out * _z(2 * g.sign * d)
    for a, b in combinations(D, 2):
        out = out * _z(a + b) * _z(-a - b) / (_z(a - b) * _z(b - a))
    return out


def h_term(D, W, g):
    """Block factor H_D(W) for a block W of one or two shifts outside D.

    SO(2N): singleton a gives sum_d [z'/z(a-d) - z'/z(a+d)] - z'/z(2a), a
    pair gives (z'/z)'(a+a').  USp(2N) flips the sign of the z'/z(2a) term
    and keeps the pair block as (z'/z)'(a+a'), which is the sign obtained by
    differentiating the ratio formula and confirmed by Monte Carlo.
    """
    W = list(W)
    if not W:
        return 1.0
    if len(W) == 1:
        a = W[0]
        out = -g.sign * _z(2 * a, "logderiv")
        for d in D:
            out = out + _z(a - d, "logderiv") - _z(a + d, "logderiv")
        return out
    if len(W) == 2:
        return _z(W[0] + W[1], "logderiv2")
    raise ValueError("blocks hold one or two shifts")


def jstar_terms(A, g, q=None):
    """Per-subset contributions to J*(A), keyed by the index tuple of D."""
    A = list(A)
    if len(A) > MAX_SHIFTS:
        raise TooLarge(f"{len(A)} shifts exceed the limit of {MAX_SHIFTS}")
    _check_distinct(A)
    max_size = None if q is None else q - 1
    out = {}
    for D_idx in subsets(len(A), max_size):
        D = [A[i] for i in D_idx]
        rest = [i for i in range(len(A)) if i not in D_idx]
        single = {i: h_term(D, [A[i]], g) for i in rest}
        total = 0.0
        for part in pair_partitions(rest):
            prod = 1.0
            for block in part:
                prod = prod * (single[block[0]] if len(block) == 1
                               else h_term(D, [A[block[0]], A[block[1]]], g))
            total = total + prod
        out[D_idx] = q_prefactor(D, g) * total
    return out


def jstar(A, g, q=None):
    """Average of the product of log-derivatives of characteristic polynomials.

    Parameters
    ----------
    A : sequence of complex or arrays
        Pairwise distinct shifts with no two summing to zero.
    g : GroupSpec
    q : int, optional
        Keep only subsets D with |D| < q.

    Returns
    -------
    complex or ndarray
    """
    total = 0.0
    for term in jstar_terms(A, g, q).values():
        total = total + term
    return total


def ratio_average(A, B, g):
    """Average over the group of prod_A Lambda(e^-a) / prod_B Lambda(e^-b).

    Parameters
    ----------
    A, B : sequences of complex or arrays
        Re(b) > 0 for b in B.
    g : GroupSpec
        Requires N >= |B|.

    Returns
    -------
    complex or ndarray
        Subset terms whose denominator contains z(0) are zero; the factor
        1/z(x) = 1 - exp(-x) is used so that they vanish exactly.
    """
    A, B = list(A), list(B)
    if g.N < len(B):
        raise DimensionTooSmall(f"N={g.N} is below |B|={len(B)}")
    b_part = 1.0
    for i, b in enumerate(B):
        if g.sign > 0:
            b_part = b_part * _z(2 * b)
        for b2 in B[i + 1:]:
            b_part = b_part * _z(b + b2)
    total = 0.0
    for D_idx in subsets(len(A)):
        E = [-A[i] if i in D_idx else A[i] for i in range(len(A))]
        term = np.exp(-2 * g.N * sum(A[i] for i in D_idx)) if D_idx else 1.0
        for i, e in enumerate(E):
            if g.sign < 0:
                term = term * _z(2 * e)
            for e2 in E[i + 1:]:
                term = term * _z(e + e2)
            for b in B:
                term = term * -np.expm1(-(e + b))
        total = total + term
    return total * b_part
