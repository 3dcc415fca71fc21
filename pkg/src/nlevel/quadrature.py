"""Quadrature rules and the tensor-grid contraction shared by the density
evaluators."""

from dataclasses import dataclass, replace
from functools import lru_cache
from math import pi

import numpy as np

from .errors import QuadratureNonConvergence

__all__ = ["QuadratureSpec", "periodic_nodes", "line_nodes", "gauss_legendre",
           "axis_shifts", "contract", "circle_residue", "check_resolution",
           "MAX_PANEL_LENGTHS"]

# a 16-point Gauss-Legendre panel resolves a few length scales of a smooth
# integrand; wider panels can miss the integrand entirely at every level of
# halving, so they are rejected rather than estimated
MAX_PANEL_LENGTHS = 4.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature parameters.

    Attributes
    ----------
    nodes_per_dim : int
        Trapezoid nodes per period for 2*pi-periodic integrals.
    contour_offset : float
        Distance delta of the vertical contours from the imaginary axis.
    panels, order : int
        Composite Gauss-Legendre panels and nodes per panel on [-T, T].
    truncation : float or None
        Half-length T of truncated lines; None derives it from the test
        function's decay.
    tail_tol : float
        Target for the truncation tail when T is derived.
    tol : float
        Error estimates above this raise QuadratureNonConvergence.
    estimate_error : bool
        Repeat the evaluation on the halved grid to estimate the error.
    """

    nodes_per_dim: int = 96
    contour_offset: float = 0.5
    panels: int = 96
    order: int = 16
    truncation: float = None
    tail_tol: float = 1e-10
    tol: float = 1e-6
    estimate_error: bool = True

    def halved(self):
        return replace(self, nodes_per_dim=max(self.nodes_per_dim // 2, 2),
                       panels=max(self.panels // 2, 1))


def check_resolution(T, panels, length, route):
    """Raise QuadratureNonConvergence when panels on [-T, T] are wider than
    MAX_PANEL_LENGTHS times the test function's length scale."""
    if length is None:
        return
    width = 2.0 * T / panels
    if width > MAX_PANEL_LENGTHS * length:
        need = int(np.ceil(2.0 * T / (MAX_PANEL_LENGTHS * length)))
        raise QuadratureNonConvergence(
            f"{route}: panel width {width:.3g} on [-{T:.3g}, {T:.3g}] exceeds "
            f"{MAX_PANEL_LENGTHS:g} length scales ({length:.3g}); use at least {need} panels "
            f"or a shorter truncation")


@lru_cache(maxsize=None)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def axis_shifts(k):
    """Fractional node offsets s_i = (i+1)/(2k+1) for k axes.

    No offset is 0, and no sum or difference of two offsets is an integer,
    so shifted periodic grids never put a node on theta_i = 0, pi or on
    theta_i = +-theta_j.
    """
    return [(i + 1) / (2 * k + 1) for i in range(k)]


def periodic_nodes(m, shift=0.0):
    """Trapezoid nodes and weights on one period [-pi, pi)."""
    h = 2 * pi / m
    t = -pi + (np.arange(m) + shift) * h
    return t, np.full(m, h)


def line_nodes(T, panels, order, shift=0.0):
    """Composite Gauss-Legendre nodes on [-T, T], translated by ``shift``
    panel widths (used to keep grids on different axes apart)."""
    x, w = gauss_legendre(order)
    edges = np.linspace(-T, T, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return t + shift * 2 * T / panels, wt


def contract(J, vectors):
    """Sum of J times the outer product of ``vectors`` over a tensor grid.

    ``J`` broadcasts over the grid; axes of length one are summed
    analytically.  Returns the complex total.
    """
    k = len(vectors)
    val = np.asarray(J, dtype=complex)
    if val.ndim < k:
        val = val.reshape((1,) * (k - val.ndim) + val.shape)
    for i in range(k - 1, -1, -1):
        v = vectors[i]
        if val.shape[-1] == 1:
            val = val[..., 0] * np.sum(v)
        else:
            val = val @ v
    return complex(val)


def circle_residue(fun, center, radius=1e-3, m=64):
    """Residue of ``fun`` at ``center`` by the trapezoid rule on a circle.

    ``fun`` maps an array of points to values; the rule is exact for
    Laurent polynomials of degree below m in (z - center).
    """
    z = center + radius * np.exp(2j * pi * (np.arange(m) + 0.5) / m)
    return complex(np.mean(np.asarray(fun(z)) * (z - center)))
