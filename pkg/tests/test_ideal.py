import itertools

import numpy as np
import pytest

from gqforms.errors import InvalidInput
from gqforms.field import FieldElement
from gqforms.ideal import (Ideal, crt_split, different_ideal, divisors, factor_ideal, factor_prime,
                           g_invariant_ideal, ideals_by_factorisation, ideals_up_to_norm, moebius,
                           residue_classes, residue_units, unit_ideal, valuation)


def test_norms_and_products(qsqrt2):
    K = qsqrt2
    a = Ideal.principal(K, K(3) + K.gen(1))
    b = Ideal.principal(K, K(5))
    assert a.norm() == 7 and b.norm() == 25
    assert (a * b).norm() == 175
    assert a * a.inverse() == unit_ideal(K)
    assert (a * b) / b == a
    assert a.contains(K(3) + K.gen(1))
    assert not a.contains(K(1))


def test_different_and_trace_dual(qsqrt2, cubic):
    assert different_ideal(qsqrt2).norm() == 8
    assert different_ideal(cubic).norm() == 49
    o = unit_ideal(qsqrt2)
    assert o.trace_dual() * different_ideal(qsqrt2) == o


@pytest.mark.parametrize("p", [2, 3, 7, 17, 23])
def test_prime_factorisation_quadratic(qsqrt2, p):
    primes = factor_prime(qsqrt2, p)
    assert sum(e * f for _, e, f in primes) == 2
    prod = unit_ideal(qsqrt2)
    for P, e, f in primes:
        assert P.norm() == p ** f
        prod = prod * P ** e
    assert prod == Ideal.principal(qsqrt2, p)
    # 2 ramifies, p = +-1 mod 8 splits, the rest are inert
    kind = [(e, f) for _, e, f in primes]
    if p == 2:
        assert kind == [(2, 1)]
    elif p % 8 in (1, 7):
        assert kind == [(1, 1), (1, 1)]
    else:
        assert kind == [(1, 2)]


def test_cubic_splitting(cubic):
    assert [(e, f) for _, e, f in factor_prime(cubic, 7)] == [(3, 1)]
    assert [(e, f) for _, e, f in factor_prime(cubic, 13)] == [(1, 1)] * 3
    assert [(e, f) for _, e, f in factor_prime(cubic, 2)] == [(1, 3)]


def test_enumeration_matches_factorisation(qsqrt2):
    a = sorted((c.norm(), c.mat) for c in ideals_up_to_norm(qsqrt2, 60))
    b = sorted((c.norm(), c.mat) for c in ideals_by_factorisation(qsqrt2, 60))
    assert a == b


def test_divisors_and_moebius(qsqrt2):
    b = Ideal.principal(qsqrt2, 14)
    ds = divisors(b)
    assert all(c.contains_ideal(b) for c in ds)
    # 14 = P2^2 * P7 * P7'
    assert len(ds) == 3 * 2 * 2
    assert sum(moebius(c) for c in ds) == 0
    assert moebius(unit_ideal(qsqrt2)) == 1
    P2 = factor_prime(qsqrt2, 2)[0][0]
    assert moebius(P2 * P2) == 0
    assert valuation(P2, b) == 2
    assert valuation(P2, qsqrt2.gen(1)) == 1


def test_residue_counts(qsqrt2, cubic):
    for K, g in ((qsqrt2, 6), (cubic, 4)):
        b = Ideal.principal(K, g)
        assert len(residue_classes(b)) == b.norm()
        # |(o/b)^*| is multiplicative: prod over P^k of N(P)^(k-1) (N(P) - 1)
        phi = 1
        for P, k in factor_ideal(b):
            q = P.norm()
            phi *= q ** (k - 1) * (q - 1)
        assert len(residue_units(b)) == phi


def test_membership_vectorised(qsqrt2):
    b = Ideal.principal(qsqrt2, qsqrt2(3) + qsqrt2.gen(1)) * Ideal.principal(qsqrt2, 2)
    pts = np.array(list(itertools.product(range(-8, 9), repeat=2)))
    mask = b.member_mask(pts)
    exact = [b.contains(FieldElement(qsqrt2, list(p))) for p in pts.tolist()]
    assert mask.tolist() == exact
    red = b.reduce_array(pts)
    assert np.all(b.member_mask(pts - red))


def test_g_invariant(qsqrt2):
    P = factor_prime(qsqrt2, 7)[0][0]
    assert g_invariant_ideal(P, [0]) == P
    Gb = g_invariant_ideal(P, [0, 1])
    assert Gb == Ideal.principal(qsqrt2, 7)
    assert g_invariant_ideal(Ideal.principal(qsqrt2, 3), [0, 1]) == Ideal.principal(qsqrt2, 3)


def test_crt_split(qsqrt2):
    b1 = Ideal.principal(qsqrt2, 3)
    b2 = factor_prime(qsqrt2, 7)[0][0]
    a1, a2 = crt_split(b1 * b2, b1, b2)
    assert Ideal.principal(qsqrt2, a1) + b1 * b2 == b1
    assert Ideal.principal(qsqrt2, a2) + b1 * b2 == b2
    with pytest.raises(InvalidInput):
        crt_split(b1 * b1, b1, b1)


def test_json_round_trip(qsqrt2):
    b = factor_prime(qsqrt2, 17)[1][0] * Ideal.principal(qsqrt2, 2)
    assert Ideal.from_json(qsqrt2, b.to_json()) == b
    with pytest.raises(InvalidInput):
        Ideal.from_hnf(qsqrt2, [[2, 1], [0, 3]])
