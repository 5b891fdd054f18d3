from fractions import Fraction
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gqforms.errors import InvalidInput
from gqforms.field import (FieldElement, builtin_field, format_element, make_field_from_description,
                           make_real_quadratic, parse_element)

coords = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4), min_size=2, max_size=2)


def test_quadratic_invariants(qsqrt2):
    K = qsqrt2
    assert K.degree == 2
    assert K.discriminant == 8
    w = K.gen(1)
    assert w * w == K(2)
    assert (K(3) + w).norm() == 7
    assert (K(3) + w).trace() == 6
    assert [x.coords for x in K.dual_basis] == [(Fraction(1, 2), 0), (0, Fraction(1, 4))]
    # embeddings sorted so the first one sends sqrt(2) to +sqrt(2)
    assert w.embed(0) == pytest.approx(2 ** 0.5)
    assert w.galois(1) == -w


def test_sqrt5_integral_basis():
    K = make_real_quadratic(5)
    assert K.discriminant == 5
    phi = K.gen(1)
    assert phi * phi == phi + 1


def test_cyclic_cubic(cubic):
    assert cubic.degree == 3
    assert cubic.discriminant == 49
    for t in range(3):
        for x in cubic.integral_basis():
            # every automorphism preserves the ring of integers and is multiplicative
            assert x.galois(t).is_integral()
    a, b = cubic.gen(1), cubic.gen(2) + 3
    for t in range(3):
        assert (a * b).galois(t) == a.galois(t) * b.galois(t)
    # the group is cyclic of order 3
    assert cubic.galois_compose[1][1] == 2 and cubic.galois_compose[1][2] == 0


@settings(max_examples=60, deadline=None)
@given(coords, coords, coords)
def test_field_axioms(a, b, c):
    K = make_real_quadratic(2)
    x, y, z = FieldElement(K, a), FieldElement(K, b), FieldElement(K, c)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x * y).norm() == x.norm() * y.norm()
    assert (x + y).trace() == x.trace() + y.trace()
    if x:
        assert x * x.inverse() == K.one()


@settings(max_examples=30, deadline=None)
@given(coords)
def test_embeddings_are_ring_maps(a):
    K = make_real_quadratic(2)
    x = FieldElement(K, a)
    y = x * x + 3 * x
    for l in range(2):
        assert y.embed(l) == pytest.approx(x.embed(l) ** 2 + 3 * x.embed(l), abs=1e-9)
    assert float(x.norm()) == pytest.approx(x.embed(0) * x.embed(1), abs=1e-9)


def test_element_text_round_trip(qsqrt2):
    x = parse_element(qsqrt2, "3+1*w2")
    assert x.coords == (3, 1)
    assert parse_element(qsqrt2, format_element(x)) == x
    assert parse_element(qsqrt2, "-1/2*w2 + 5").coords == (5, Fraction(-1, 2))
    with pytest.raises(InvalidInput):
        parse_element(qsqrt2, "3+w7")
    with pytest.raises(InvalidInput):
        parse_element(qsqrt2, "3x")


def test_description_round_trip(qsqrt2, cubic, tmp_path):
    for K in (qsqrt2, cubic):
        desc = K.to_description()
        path = tmp_path / "f.json"
        path.write_text(json.dumps(desc))
        K2 = builtin_field(str(path))
        assert K2 == K
        assert K2.discriminant == K.discriminant


def test_builtin_names():
    assert builtin_field("Qsqrt:3").discriminant == 12
    assert builtin_field("cyclic7").discriminant == 49
    with pytest.raises(InvalidInput):
        builtin_field("Qsqrt:x")


def test_rejects_bad_descriptions():
    with pytest.raises(InvalidInput):
        # x^2 + 1 is not totally real
        make_field_from_description({"degree": 2, "min_poly": [0, 1], "basis": [["1", "0"], ["0", "1"]],
                                     "galois": [[0, 1], [1, 0]]})
    with pytest.raises(InvalidInput):
        make_field_from_description({"degree": 2, "min_poly": [0, -2]})


def test_mixed_fields_rejected(qsqrt2):
    K3 = make_real_quadratic(3)
    with pytest.raises(InvalidInput):
        qsqrt2.gen(1) + K3.gen(1)
