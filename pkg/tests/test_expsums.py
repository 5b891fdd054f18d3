import math

import numpy as np
import pytest

from gqforms.characters import find_primitive_gamma
from gqforms.expsums import (check_h_structure, gamma_independence, gauss_sum, h_lattice, kappa_inclusion,
                             kloosterman_salie, prime_power_character_side, random_dual_vector, s_bound, s_bound_by_unit,
                             s_sum_gamma, s_sum_moebius, sigma_decomposition, standard_diagonal_h,
                             verify_multiplicativity, violates_h_condition)
from gqforms.densities import local_density
from gqforms.errors import InvalidInput
from gqforms.forms import make_diagonal, special_shape_of
from gqforms.ideal import Ideal, factor_prime, g_invariant_ideal, ideals_up_to_norm


def _split_primes(K, bound):
    out = []
    for p in range(3, bound):
        if all(p % q for q in range(2, int(p ** 0.5) + 1)) and p % 8 in (1, 7):
            out.extend(P for P, _, _ in factor_prime(K, p))
    return out


@pytest.mark.parametrize("norm_bound", [30])
def test_gamma_matches_moebius(small_form, qsqrt2, norm_bound):
    rng = np.random.default_rng(3)
    for b in ideals_up_to_norm(qsqrt2, norm_bound)[1:]:
        Gb = g_invariant_ideal(b, small_form.G_set)
        m = random_dual_vector(small_form, Gb, rng)
        N = qsqrt2(list(map(int, rng.integers(-4, 5, size=2))))
        s1 = s_sum_gamma(small_form, b, N, m)
        s2 = s_sum_moebius(small_form, b, N, m)
        assert abs(s1 - s2) <= 1e-8 * max(1.0, abs(s2))


def test_gamma_independence(small_form, qsqrt2):
    for b in (Ideal.principal(qsqrt2, 3), factor_prime(qsqrt2, 7)[0][0], Ideal.principal(qsqrt2, 5)):
        r = gamma_independence(small_form, b, qsqrt2(2))
        assert r["gamma1"] != r["gamma2"]
        assert r["rel_dev"] < 1e-9


def test_unit_bound_holds_on_sweep(small_form, qsqrt2):
    for b in ideals_up_to_norm(qsqrt2, 60)[1:]:
        s = s_sum_gamma(small_form, b, qsqrt2(3))
        assert abs(s) <= s_bound_by_unit(small_form, b) * (1 + 1e-9)
        assert s_bound_by_unit(small_form, b) >= s_bound(small_form, b) * (1 - 1e-12)


def test_h_bound_fails_at_seven(small_form, qsqrt2):
    # rational units a give gamma*a + (gamma*a)^tau = 0, so H_b undercounts the trivial shifts
    b = Ideal.principal(qsqrt2, 7)
    s = s_sum_gamma(small_form, b, qsqrt2(3))
    assert s_sum_moebius(small_form, b, qsqrt2(3)) == pytest.approx(2009)
    assert abs(s) == pytest.approx(2009)
    assert s_bound(small_form, b) == pytest.approx(1764)
    assert abs(s) <= s_bound_by_unit(small_form, b)


def test_vanishing_outside_h_dual(small_form, qsqrt2):
    rng = np.random.default_rng(5)
    b = factor_prime(qsqrt2, 7)[0][0]
    H = h_lattice(small_form, b)
    Gb = H.Gb
    hits = 0
    for _ in range(200):
        m = random_dual_vector(small_form, Gb, rng)
        if violates_h_condition(small_form, H, m):
            hits += 1
            assert abs(s_sum_gamma(small_form, b, qsqrt2(1), m)) < 1e-9 * s_bound(small_form, b, H)
        if hits >= 5:
            break
    assert hits >= 5


def test_multiplicativity(small_form, qsqrt2):
    b1 = Ideal.principal(qsqrt2, 3)
    b2 = factor_prime(qsqrt2, 7)[1][0]
    Gb = g_invariant_ideal(b1 * b2, small_form.G_set)
    m = random_dual_vector(small_form, Gb, np.random.default_rng(0))
    r = verify_multiplicativity(small_form, b1, b2, qsqrt2([1, 1]), m)
    assert r["rel_dev"] < 1e-8
    # with m = 0 the twist of N by a square unit drops out
    s = s_sum_gamma(small_form, b1 * b2, qsqrt2(5))
    assert s == pytest.approx(s_sum_gamma(small_form, b1, qsqrt2(5)) * s_sum_gamma(small_form, b2, qsqrt2(5)),
                              rel=1e-9, abs=1e-9)


def test_h_structure_and_kappa(qsqrt2):
    F = make_diagonal(qsqrt2, [1, 3], [qsqrt2([1, 1])])
    S = special_shape_of(F)
    for b in ideals_up_to_norm(qsqrt2, 40)[1:]:
        H = h_lattice(F, b)
        rep = check_h_structure(F, H)
        assert all(rep.values()), rep
        ok, _ = kappa_inclusion(S, b, H)
        assert ok


def test_standard_diagonal_h(qsqrt2):
    F = make_diagonal(qsqrt2, [1, 3], [])
    for b in ideals_up_to_norm(qsqrt2, 30)[1:]:
        assert h_lattice(F, b).lattice == standard_diagonal_h(F, b)


@pytest.mark.parametrize("p", [7, 17, 23, 31])
def test_gauss_sum_modulus(qsqrt2, p):
    for P, _, _ in factor_prime(qsqrt2, p):
        assert abs(gauss_sum(P)) == pytest.approx(math.sqrt(p), rel=1e-12)


def test_kloosterman_degenerate_and_weil(qsqrt2):
    P = factor_prime(qsqrt2, 17)[0][0]
    assert kloosterman_salie(P, 0, 0) == pytest.approx(16)
    # Ramanujan sum when exactly one argument vanishes
    assert kloosterman_salie(P, 1, 0) == pytest.approx(-1)
    for A, B in ((1, 1), (2, 5), (3, 7)):
        assert abs(kloosterman_salie(P, A, B)) <= 2 * math.sqrt(17) + 1e-9
        # Salie sums have modulus 0 or exactly 2 sqrt(p) at most
        assert abs(kloosterman_salie(P, A, B, e=1)) <= 2 * math.sqrt(17) + 1e-9


def test_sigma_decomposition(qsqrt2):
    F = make_diagonal(qsqrt2, [1, 1], [1])
    P = factor_prime(qsqrt2, 7)[0][0]
    Gb = g_invariant_ideal(P, F.G_set)
    rng = np.random.default_rng(2)
    for _ in range(4):
        v = random_dual_vector(F, Gb, rng)
        r = sigma_decomposition(F, P, qsqrt2(1), v)
        assert r["rel_dev"] < 1e-8
    with pytest.raises(InvalidInput):
        sigma_decomposition(F, Ideal.principal(qsqrt2, 3), qsqrt2(1), [qsqrt2(0)] * 2)


def test_prime_power_identity(small_form, qsqrt2):
    for p, l in ((3, 1), (3, 2), (5, 1)):
        total, _ = prime_power_character_side(small_form, qsqrt2(3), p, l)
        dens = float(local_density(small_form, qsqrt2(3), p, l))
        assert abs(total - dens) <= 1e-9 * max(1.0, dens)


def test_rejects_bad_m(small_form, qsqrt2):
    b = Ideal.principal(qsqrt2, 3)
    with pytest.raises(InvalidInput):
        s_sum_gamma(small_form, b, qsqrt2(1), [qsqrt2(1) / 7, qsqrt2(0)])
