"""Eigenangle densities of Haar-random SO(2N) and USp(2N) matrices.

Evaluates the same n-level density three ways (contour integrals,
on-axis integrals and Monte Carlo over sampled matrices), then watches
the rescaled one-level density approach its large-N kernel limit.
"""

import numpy as np

from nlevel.haar import RngStream, empirical_density
from nlevel.rmtdensity import (density_contour, density_onaxis, exact_one_level,
                               kernel_density, scaled_density)
from nlevel.shiftcalc import GroupSpec
from nlevel.testfns import parse_test_function

f = parse_test_function("gauss:0.7", 2, periodic=True)
print("two-level density of a periodized Gaussian, width 0.7")
for sym in ("SO_even", "USp"):
    g = GroupSpec(sym, 4)
    a = density_contour(g, 2, f)
    b = density_onaxis(g, 2, f)
    mc, se = empirical_density(g, f, 2, True, 20000, RngStream(1))
    print(f"  {sym:7s} N=4  contour {a.value:+.10f}  on-axis {b.value:+.10f}  "
          f"Monte Carlo {mc:+.4f} +- {se:.4f}")

g = GroupSpec("USp", 3)
theta = np.linspace(0, np.pi, 7)
print("\nexact one-level density of USp(6) at a few angles")
for t, r in zip(theta, exact_one_level(g, theta)):
    print(f"  theta={t:.3f}  rho={r:.6f}")

gauss = parse_test_function("gauss:2", 1)
print("\nrescaled one-level density against the kernel limit")
for sym in ("SO_even", "USp"):
    limit = kernel_density(sym, 1, gauss).value
    for N in (10, 20, 30):
        v = scaled_density(GroupSpec(sym, N), 1, gauss).value
        print(f"  {sym:7s} N={N:2d}  {v:.6f}  limit {limit:.6f}  gap {v / limit - 1:+.2%}")
