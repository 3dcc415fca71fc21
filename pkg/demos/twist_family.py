"""Quadratic twists of the conductor-37 curve.

Compares the one-level density from the log-derivative average with the
regrouped direct sum, then tracks the leading-order two-level
diagnostics as X grows.  Their gaps to the limiting values shrink like
1/L with L = log(sqrt(M) X / 2 pi), slowly enough that X = 1e6 is still
far from the limit.
"""

from nlevel.arith import EulerTruncation
from nlevel.ntdensity import (FamilyDensityRequest, elliptic_family, nt_density,
                              one_level_direct, two_level_diagnostics)
from nlevel.testfns import parse_test_function

CURVE = "-16,16,37,-1,2:ap=-2,37:nonsplit"
fam = elliptic_family(CURVE)
f = parse_test_function("gauss:1", 1)
tr = EulerTruncation(1000)
for X in (300, 1000):
    dens = nt_density(FamilyDensityRequest(fam, 1, f, X, tr))
    direct = one_level_direct(CURVE, f, X, tr)
    print(f"X={X:5d}  twists={dens.metadata['X_star']:4d}  2 x density {2 * dens.value:.10f}  "
          f"direct {direct:.10f}")

print("\ntwo-level diagonal ratio (limit 4) and folded single shift at a = 0.25")
tr = EulerTruncation(10 ** 4)
for X in (10 ** 4, 10 ** 5, 10 ** 6):
    d1 = two_level_diagnostics(CURVE, X, a=1.0, trunc=tr)
    d2 = two_level_diagnostics(CURVE, X, a=0.25, trunc=tr)
    L = d1["L"]
    print(f"X={X:8d}  L={L:6.2f}  diag {d1['diag1']:.4f}  L x gap {(4 - d1['diag1']) * L:6.2f}  "
          f"folded {d2['diag2']:+.4f} vs {d2['diag2_target']:+.4f}  "
          f"L x gap {(d2['diag2'] - d2['diag2_target']) * L:6.2f}")
