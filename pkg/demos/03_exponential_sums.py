"""Complete exponential sums S_b(N; m): two evaluators, multiplicativity, and bounds.

At b = (7) the sum exceeds the square-root bound built from H_b, while the per-unit
bound (which accounts for u -> B(u; h) being only additive) holds.
"""
import math

import numpy as np

from gqforms import Ideal, factor_prime, make_diagonal, make_real_quadratic
from gqforms.expsums import (gauss_sum, h_lattice, random_dual_vector, s_bound, s_bound_by_unit, s_sum_gamma,
                             s_sum_moebius, sigma_decomposition, verify_multiplicativity)
from gqforms.ideal import g_invariant_ideal

K = make_real_quadratic(2)
F = make_diagonal(K, [1, 1], [1])
N = K(3)

for gen in (3, K([3, 1]), 7):
    b = Ideal.principal(K, gen)
    s1, s2 = s_sum_gamma(F, b, N), s_sum_moebius(F, b, N)
    H = h_lattice(F, b)
    print(f"N(b)={b.norm():3d}  S={s1.real:10.3f}{s1.imag:+.1e}j  moebius={s2.real:10.3f}  "
          f"|H/Gb^n|={H.index_inner}  |S|/bound={abs(s1) / s_bound(F, b, H):.3f}  "
          f"|S|/unit bound={abs(s1) / s_bound_by_unit(F, b):.3f}")

b1, b2 = Ideal.principal(K, 3), factor_prime(K, 17)[0][0]
r = verify_multiplicativity(F, b1, b2, N)
print("multiplicativity at N(b)=", b1.norm() * b2.norm(), ": relative deviation", f"{r['rel_dev']:.1e}")

P = factor_prime(K, 17)[0][0]
print("Gauss sum modulus at N(P)=17:", abs(gauss_sum(P)), "vs sqrt 17 =", math.sqrt(17))
rng = np.random.default_rng(0)
# v_2 taken in the trace dual of P so the untwisted factor does not vanish
v = [random_dual_vector(F, g_invariant_ideal(P, F.G_set), rng)[0], random_dual_vector(F, P, rng)[0]]
r = sigma_decomposition(F, P, K(17), v)
print(f"Sigma decomposition ({r['kind']}): direct {abs(r['direct']):.3f}, recomposed {abs(r['recomposed']):.3f}")
