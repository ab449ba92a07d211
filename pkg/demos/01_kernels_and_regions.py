"""
Kernels, moments and admissible regions
=======================================

Two approximate identities on the circle: the Poisson kernel and its
square-root relative P_r^(1/2) renormalized to unit mass.  We look at how
sharply each one peaks, how wide its moment phi_*(r) is, and which
approach regions lambda(r) keep the functional Pi_2 bounded.
"""

import math

import numpy as np

from fatoulab import POISSON, default_ladder, frac_poisson, phi_star_moment, pi_functional, power_log
from fatoulab import synthesize_region

frac = frac_poisson(0.5)
ladder = default_ladder(3, 12)

# The sup norm of the Poisson slice is (1 + r) / (2 pi (1 - r)); the
# square-root kernel peaks lower, because its mass spreads into the tails.
print("   1-r      ||P_r||     ||frac_r||   phi*(P)   phi*(frac) log(1/(1-r))")
for r in ladder[::2]:
    p, q = POISSON.slice(r), frac.slice(r)
    print(f"{1 - r:8.2e} {p.sup_norm:11.4g} {q.sup_norm:11.4g} "
          f"{phi_star_moment(p):9.4f} {phi_star_moment(q) * math.log(1 / (1 - r)):9.4f}")

# The Poisson moment settles near 1/(2 pi); the square-root kernel decays
# roughly like 1/log(1/(1-r)), slowly drifting upward on reachable scales.
print("1/(2 pi) =", 1 / (2 * math.pi))

# A region lambda(r) = (1-r) log(1/(1-r))^b is admissible for L^2 data when
# Pi_2 stays bounded.  For the square-root kernel b = 2 is the borderline.
for b in (2, 3):
    est = pi_functional("p", power_log(1, 1, b), frac, default_ladder(), p=2)
    print(f"b = {b}: Pi_2 tail {est.tail_value:.4g}, growth over the ladder {est.growth():.3g}")

# Or ask for the region directly: solve lambda ||phi_r|| phi_*^(p-1) = 1.
lam = synthesize_region(frac, 2.0, 1.0, "moment", ladder)
eps = 1 - ladder
print("synthesized lambda / ((1-r) log^2):", np.round(lam(ladder) / (eps * np.log(1 / eps) ** 2), 3))
