"""Arithmetic inputs of the twist family: traces of Frobenius, fundamental
discriminants, the sign selection and convergence of the Euler factor."""

import numpy as np

from nlevel.arith import (EulerTruncation, ap, euler_AE, fundamental_array, parse_curve,
                          primes_up_to, selected_discriminants)

curve = parse_curve("-16,16,37,-1,2:ap=-2,37:nonsplit")
print("a_p for the conductor-37 curve")
print("  " + "  ".join(f"{int(p)}:{ap(curve, int(p))}" for p in primes_up_to(50)))

d = fundamental_array(10 ** 4)
sel = selected_discriminants(10 ** 4, curve)
print(f"\nfundamental discriminants up to 1e4: {len(d)}; first ten {d[:10].tolist()}")
print(f"twists with the even sign: {len(sel)} ({len(sel) / len(d):.1%})")

print("\nEuler factor A_E at D = {0.1 + 2i} as p_max doubles")
for p_max in 1000 * 2 ** np.arange(6):
    r = euler_AE([0.1 + 2j], curve, EulerTruncation(int(p_max)))
    print(f"  p_max={int(p_max):6d}  {r.value:.10f}  tail estimate {r.tail_estimate:.1e}")
