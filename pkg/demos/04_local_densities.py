"""Exact local counts, p-adic densities and the singular series for X1^2+...+X5^2+(X1^tau)^2 = 3."""
from gqforms import make_diagonal, make_real_quadratic
from gqforms.densities import local_density, prime_density, singular_series
from gqforms.expsums import prime_power_character_side

K = make_real_quadratic(2)
F = make_diagonal(K, [1] * 5, [1])
N = K(3)

for p in (2, 3, 5):
    r = prime_density(F, N, p, l_max=4)
    levels = ", ".join(f"l={k}: {float(v):.6f}" for k, v in sorted(r.levels.items()))
    lim = f"{float(r.geometric_limit):.6f}" if r.geometric_limit is not None else "n/a"
    print(f"p={p}: {levels}; repeated exactly: {r.stabilized}; geometric limit {lim}")

small = make_diagonal(K, [1, 1], [1])
total, _ = prime_power_character_side(small, N, 3, 2)
print("character side vs density at 3^2:", total.real, float(local_density(small, N, 3, 2)))

series = singular_series(F, N, p_max=13, l_max=3)
print(f"singular series up to p=13: {series.value:.5f} (half-range product {series.truncated_half:.5f})")
