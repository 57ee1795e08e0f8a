"""Spectral threshold and Green function of the point interaction.

The bound state of -Delta_alpha sits at -lambda_alpha.  Below that threshold
beta_alpha(lambda) is negative and the quadratic form of the action is not
positive, which decides where ground states can exist.
"""

import math

from pointnls.greens import flux_normalization, green_norm
from pointnls.model import Params, beta, lambda_alpha

for alpha in (-0.5, 0.0, 0.5, 1.0):
    p = Params(2, 1, 3.0, 1.0, alpha)
    la = lambda_alpha(p)
    print(f"d=2 alpha={alpha:+.1f}: lambda_alpha={la:.10g}  beta(1)={beta(p):+.6f}  "
          f"{'ground state possible' if p.lam > la else 'below threshold'}")

for alpha in (-1.0, -0.1, 0.3):
    p = Params(3, 1, 1.5, 1.0, alpha)
    print(f"d=3 alpha={alpha:+.1f}: lambda_alpha={lambda_alpha(p):.10g}")

print("\nGreen function, lambda = 1")
for d in (2, 3):
    l2 = green_norm(d, 1.0, 2.0) ** 2
    closed = 1 / (4 * math.pi) if d == 2 else 1 / (8 * math.pi)
    print(f"  d={d}: ||G||_2^2 = {l2:.15f} (closed form {closed:.15f})")
    for r in (1e-2, 1e-3, 1e-4):
        print(f"    flux + lambda * mass at r={r:g}: {flux_normalization(d, 1.0, r):.10f}")
