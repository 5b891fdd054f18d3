from fractions import Fraction

import numpy as np
import pytest

from gqforms.errors import InvalidInput
from gqforms.forms import (GQF, bilinear, check_assumptions, diagonal_data, dual_form, embedded_system,
                           evaluate, is_admissible, make_diagonal, make_partial_trace, make_special,
                           special_shape, special_shape_of)


def test_evaluate_small_form(qsqrt2, small_form):
    K = qsqrt2
    w = K.gen(1)
    assert evaluate(small_form, [K(1), K(1)]) == K(3)
    x = K(1) + w
    # x^2 + (x^tau)^2 = 2 Tr-part; (1+w)^2 + (1-w)^2 = 6
    assert evaluate(small_form, [x, K(0)]) == K(6)


def test_symmetric_entries_and_conflicts(qsqrt2):
    F = GQF(qsqrt2, 2, {(0, 0, 1, 1): 3})
    assert F.coeff(1, 0, 1, 0) == qsqrt2(3)
    with pytest.raises(InvalidInput):
        GQF(qsqrt2, 2, {(0, 0, 1, 1): 3, (1, 1, 0, 0): 4})
    with pytest.raises(InvalidInput):
        GQF(qsqrt2, 2, {(0, 2, 1, 1): 3})


def test_bilinear_polarisation(qsqrt2):
    K = qsqrt2
    F = make_special(K, [[1, 2], [2, K([0, 1])]], [[3]], 1)
    x = [K([1, 2]), K([-1, 1])]
    y = [K([0, 3]), K([2, 0])]
    s = [a + b for a, b in zip(x, y)]
    assert evaluate(F, s) - evaluate(F, x) - evaluate(F, y) == 2 * bilinear(F, x, y)


def test_embedded_system_matches_values(cubic):
    F = make_diagonal(cubic, [1, cubic.gen(1), 2], [cubic.gen(2)], tau=1)
    mats = embedded_system(F)
    x = [cubic([1, -2, 0]), cubic([0, 1, 1]), cubic([3, 0, -1])]
    X = np.array([[xi.embed(k) for xi in x] for k in range(3)]).reshape(-1)
    val = evaluate(F, x)
    for l in range(3):
        assert X @ mats[l] @ X == pytest.approx(val.embed(l), rel=1e-9)


def test_diagonal_and_dual(qsqrt2):
    F = make_diagonal(qsqrt2, [1, 2, 3], [5])
    a, b, tau = diagonal_data(F)
    assert [x.coords[0] for x in a] == [1, 2, 3] and b == [qsqrt2(5)] and tau == 1
    D = dual_form(F)
    assert diagonal_data(D)[0] == [qsqrt2(30), qsqrt2(15), qsqrt2(10)]
    assert diagonal_data(make_partial_trace(qsqrt2, [0, 1], 2)) is not None
    assert diagonal_data(GQF(qsqrt2, 2, {(0, 0, 1, 0): 1, (0, 0, 0, 0): 1, (1, 0, 1, 0): 1})) is None
    with pytest.raises(InvalidInput):
        make_diagonal(qsqrt2, [1, 0], [])


def test_special_shape_round_trip(qsqrt2):
    S = special_shape(qsqrt2, [[1, 1], [1, 2]], [[3]], 1, 1)
    F = S.to_gqf()
    T = special_shape_of(F)
    assert T.m == 1 and T.tau == 1
    assert T.to_gqf() == F
    with pytest.raises(InvalidInput):
        make_special(qsqrt2, [[1, 0], [0, 1]], [[0]], 1)


def test_admissibility(qsqrt2, small_form):
    verdict, witness = is_admissible(small_form)
    assert verdict == "yes" and witness is not None
    # a form missing a variable cannot be admissible
    F = GQF(qsqrt2, 2, {(0, 0, 0, 0): 1})
    assert is_admissible(F)[0] == "no"


def test_check_assumptions_reports_determinants(qsqrt2):
    S = special_shape(qsqrt2, [[1 if i == j else 0 for j in range(5)] for i in range(5)],
                      [[1]], 1, 1)
    rep = check_assumptions(S, probes=5)
    assert rep["det_A"] == qsqrt2(1)
    assert rep["det_B"] == qsqrt2(1)
