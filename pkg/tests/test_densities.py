import math
from fractions import Fraction

import numpy as np
import pytest

from gqforms.densities import (find_real_point, local_count, local_count_bruteforce, local_density,
                               padic_solution_certificate, prime_density, region_weight, singular_integral,
                               singular_series, smooth_weight)
from gqforms.descent import DescendedSystem, descend
from gqforms.errors import BudgetError, InvalidInput
from gqforms.forms import make_diagonal


@pytest.mark.parametrize("p,l", [(2, 1), (2, 2), (3, 1), (5, 1), (3, 2)])
def test_local_count_matches_enumeration(small_form, qsqrt2, p, l):
    for N in (qsqrt2(3), qsqrt2([1, 2]), qsqrt2(0)):
        fast = local_count(small_form, N, p, l)
        assert fast == local_count_bruteforce(small_form, N, p, l, "descended")
        if p ** (2 * l * 2) <= 2000:
            assert fast == local_count_bruteforce(small_form, N, p, l, "field")


def test_local_count_cubic(cubic):
    F = make_diagonal(cubic, [1, cubic.gen(1)], [1])
    for p in (2, 3):
        assert local_count(F, cubic(1), p, 1) == local_count_bruteforce(F, cubic(1), p, 1)


def test_counts_sum_to_total(small_form, qsqrt2):
    # summing over every target mod p^l recovers all points
    p, l = 3, 1
    total = sum(local_count(small_form, qsqrt2([a, b]), p, l) for a in range(3) for b in range(3))
    assert total == 3 ** (2 * 2)


def test_density_is_exact_fraction(small_form, qsqrt2):
    v = local_density(small_form, qsqrt2(3), 3, 2)
    assert isinstance(v, Fraction)
    assert v == Fraction(local_count(small_form, qsqrt2(3), 3, 2), 3 ** (2 * 2 * 1))


def test_transform_budget(qsqrt2):
    F = make_diagonal(qsqrt2, [1, 1, 1], [1])
    with pytest.raises(BudgetError):
        local_count(F, qsqrt2(3), 31, 3, transform_budget=1e6)


def test_obstructed_prime(qsqrt2):
    F = make_diagonal(qsqrt2, [2] * 5, [2])
    r = prime_density(F, qsqrt2(1), 2, l_max=2)
    assert r.value == 0
    assert r.note.startswith("no solutions")


def test_certificate_is_a_solution(qsqrt2):
    F = make_diagonal(qsqrt2, [1] * 5, [1])
    S = descend(F)
    for p in (2, 3, 5):
        cert = padic_solution_certificate(F, qsqrt2(3), p)
        assert cert is not None
        M = p ** cert["level"]
        vals = S.values_array([cert["x"]])[0]
        assert np.all((vals - np.array([3, 0])) % M == 0)
        assert cert["level"] >= 2 * cert["minor_valuation"] + 1


def test_geometric_limit_recorded(qsqrt2):
    F = make_diagonal(qsqrt2, [1] * 5, [1])
    r = prime_density(F, qsqrt2(3), 3, l_max=5)
    lv = [r.levels[k] for k in sorted(r.levels)]
    # differences shrink by exactly p^-3 once the level passes 2
    assert (lv[3] - lv[2]) / (lv[2] - lv[1]) == Fraction(1, 27)
    assert r.geometric_limit is not None


def test_singular_series_positive(small_form, qsqrt2):
    res = singular_series(small_form, qsqrt2(3), p_max=7, l_max=2)
    assert res.value > 0
    assert not res.obstructed
    assert [r.p for r in res.table] == [2, 3, 5, 7]


def _two_circles(qsqrt2):
    z = [[Fraction(0)] * 4 for _ in range(4)]
    Q1 = [row[:] for row in z]
    Q2 = [row[:] for row in z]
    Q1[0][0] = Q1[1][1] = Fraction(1)
    Q2[2][2] = Q2[3][3] = Fraction(1)
    return DescendedSystem(qsqrt2, 2, [Q1, Q2])


@pytest.mark.parametrize("method", ["slab", "radial"])
def test_singular_integral_closed_form(qsqrt2, method):
    # density of {x^2 + y^2 = 1} is pi, and the two circles are independent
    S = _two_circles(qsqrt2)
    est = singular_integral(S, [1.0, 1.0], np.zeros(4), delta=1.5, samples=400_000, method=method, seed=3,
                            eps=0.01)
    assert abs(est.value - math.pi ** 2) < 5 * est.stderr + 0.02 * math.pi ** 2


def test_singular_integral_seeded(small_form):
    S = descend(small_form)
    pt = find_real_point(S, [3.0, 0.0], seed=1, scale=1.0)
    assert pt.found
    a = singular_integral(S, [3.0, 0.0], pt.xi, samples=20_000, seed=7)
    b = singular_integral(S, [3.0, 0.0], pt.xi, samples=20_000, seed=7)
    assert a.value == b.value
    assert a.method == "radial"


def test_no_real_point(qsqrt2):
    S = descend(make_diagonal(qsqrt2, [1, 1], [1]))
    # a positive definite first equation has no solution at -1
    pt = find_real_point(S, [-1.0, 0.0], seed=0, starts=10)
    assert not pt.found


def test_weights():
    assert smooth_weight(np.array([0.0]))[0] == pytest.approx(math.exp(-1))
    assert smooth_weight(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]
    u = np.array([[0.1, 0.2], [0.5, 0.0]])
    assert region_weight(u, np.zeros(2), 0.25, "indicator").tolist() == [1.0, 0.0]
    assert np.all(region_weight(u, np.zeros(2), 0.25, "smooth") <= 1)
    with pytest.raises(InvalidInput):
        region_weight(u, np.zeros(2), 0.25, "box")
