"""Ideal arithmetic in Q(sqrt 2) and a certified primitive additive character."""
from gqforms import Ideal, factor_prime, make_real_quadratic
from gqforms.characters import find_primitive_gamma, is_primitive_bruteforce, psi
from gqforms.ideal import different_ideal, divisors, g_invariant_ideal, residue_units

K = make_real_quadratic(2)
print("discriminant:", K.discriminant, " different has norm", different_ideal(K).norm())

for p in (2, 3, 7):
    kinds = [(e, f) for _, e, f in factor_prime(K, p)]
    print(f"p = {p}: (e, f) pairs {kinds}")

P, Pt = (Q for Q, _, _ in factor_prime(K, 7))
b = P * P * Ideal.principal(K, 3)
print("b = P^2 (3) has norm", b.norm(), "and", len(divisors(b)), "divisors;",
      len(residue_units(b)), "units mod b")
print("G-invariant ideal of P for G = {id, tau}:", g_invariant_ideal(P, [0, 1]).mat)

chi = find_primitive_gamma(P)
print("gamma =", chi.gamma, " primitive by direct check:", is_primitive_bruteforce(chi.gamma, P))
print("psi(gamma * 1) =", psi(chi.gamma))
