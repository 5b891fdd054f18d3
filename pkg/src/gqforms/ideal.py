"""Fractional ideals of the ring of integers as canonical HNF lattices."""
import itertools
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod

import numpy as np
import sympy

from . import linalg as la
from .errors import InvalidInput, SearchBoundError, UnsupportedPrime
from .field import FieldElement


class Ideal:
    """A fractional ideal, stored as (1/den) * mat * Z^d with mat in column HNF."""

    __slots__ = ("field", "lattice")

    def __init__(self, field, lattice, check=False):
        self.field = field
        self.lattice = lattice
        if check:
            for col in lattice.basis():
                for k in range(field.degree):
                    if not lattice.contains(field._mul_coords(field._unit(k), col)):
                        raise InvalidInput("lattice is not closed under multiplication by the ring of integers")

    # ------------------------------------------------------------ constructors
    @classmethod
    def from_generators(cls, field, gens):
        """Ideal generated (as an o-module) by the given elements."""
        vecs = []
        for g in gens:
            g = field(g)
            for k in range(field.degree):
                vecs.append(field._mul_coords(g.coords, field._unit(k)))
        return cls(field, la.Lattice.from_generators(vecs, field.degree))

    @classmethod
    def principal(cls, field, a):
        a = field(a)
        if not a:
            raise InvalidInput("the zero ideal is not supported")
        return cls.from_generators(field, [a])

    @classmethod
    def unit(cls, field):
        return cls(field, la.Lattice.standard(field.degree))

    @classmethod
    def from_hnf(cls, field, mat, den=1):
        """Build from a matrix in column HNF; validates the module property."""
        lat = la.Lattice.from_generators(
            [[Fraction(mat[i][j], den) for i in range(field.degree)] for j in range(field.degree)],
            field.degree)
        return cls(field, lat, check=True)

    # ------------------------------------------------------------ basics
    @property
    def mat(self):
        return [list(r) for r in self.lattice.hnf]

    @property
    def den(self):
        return self.lattice.den

    def __eq__(self, other):
        return isinstance(other, Ideal) and self.lattice == other.lattice and self.field == other.field

    def __hash__(self):
        return hash(self.lattice)

    def __repr__(self):
        return f"Ideal(den={self.den}, mat={self.mat})"

    def _check(self, other):
        if not isinstance(other, Ideal) or not (other.field is self.field or other.field == self.field):
            raise InvalidInput("ideals belong to different fields")

    def basis(self):
        return [FieldElement(self.field, v) for v in self.lattice.basis()]

    def is_integral(self):
        return self.den == 1

    def is_unit(self):
        return self.lattice == la.Lattice.standard(self.field.degree)

    def norm(self):
        """Absolute norm; an integer for integral ideals."""
        v = self.lattice.covolume()
        return int(v) if v.denominator == 1 else v

    def contains(self, x):
        x = self.field(x)
        return self.lattice.contains(x.coords)

    def __contains__(self, x):
        return self.contains(x)

    def contains_ideal(self, other):
        self._check(other)
        return self.lattice.contains_lattice(other.lattice)

    def divides(self, other):
        """self | other, i.e. other is contained in self."""
        return self.contains_ideal(other)

    def to_json(self):
        return {"den": self.den, "mat": [x for row in self.lattice.hnf for x in row]}

    @classmethod
    def from_json(cls, field, obj):
        d = field.degree
        flat = obj["mat"]
        if len(flat) != d * d:
            raise InvalidInput("ideal matrix has wrong size")
        return cls.from_hnf(field, [flat[i * d:(i + 1) * d] for i in range(d)], int(obj.get("den", 1)))

    # ------------------------------------------------------------ arithmetic
    def __mul__(self, other):
        if isinstance(other, (FieldElement, int, Fraction)):
            other = Ideal.principal(self.field, other)
        self._check(other)
        f = self.field
        vecs = [f._mul_coords(a, b) for a in self.lattice.basis() for b in other.lattice.basis()]
        return Ideal(f, la.Lattice.from_generators(vecs, f.degree))

    __rmul__ = __mul__

    def __add__(self, other):
        self._check(other)
        return Ideal(self.field, self.lattice + other.lattice)

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        result = Ideal.unit(self.field)
        for _ in range(k):
            result = result * self
        return result

    def intersect(self, other):
        self._check(other)
        return Ideal(self.field, self.lattice.intersect(other.lattice))

    def conjugate(self, t):
        f = self.field
        return Ideal(f, la.Lattice.from_generators(
            [f.apply_galois_coords(t, v) for v in self.lattice.basis()], f.degree))

    def trace_dual(self):
        return Ideal(self.field, self.lattice.transform(self.field.trace_gram).dual())

    def inverse(self):
        return colon_ideal(unit_ideal(self.field), self)

    def __truediv__(self, other):
        return self * other.inverse()

    # ------------------------------------------------------------ residues
    def diag(self):
        return [self.lattice.hnf[i][i] for i in range(self.field.degree)]

    def reduce_array(self, arr):
        """Canonical box representatives of integer coordinate rows modulo this integral ideal."""
        H = np.array(self.lattice.hnf, dtype=np.int64)
        arr = np.array(arr, dtype=np.int64, copy=True)
        for i in reversed(range(self.field.degree)):
            q = np.floor_divide(arr[:, i], H[i, i])
            if np.any(q):
                arr -= np.outer(q, H[:, i])
        return arr

    def index_array(self, arr):
        """Residue index (C-order over the HNF diagonal) of each coordinate row."""
        red = self.reduce_array(arr)
        return np.ravel_multi_index(tuple(red.T), tuple(self.diag()))

    def residue_array(self):
        diag = self.diag()
        return np.indices(diag).reshape(len(diag), -1).T.astype(np.int64)

    def member_mask(self, arr):
        """Vectorised membership test for integer coordinate rows (integral ideal)."""
        H = np.array(self.lattice.hnf, dtype=np.int64)
        arr = np.array(arr, dtype=np.int64, copy=True)
        ok = np.ones(len(arr), dtype=bool)
        for i in reversed(range(self.field.degree)):
            ok &= arr[:, i] % H[i, i] == 0
            q = arr[:, i] // H[i, i]
            arr -= np.outer(q, H[:, i])
        return ok


# ---------------------------------------------------------------- module-level ops
def unit_ideal(field):
    return Ideal.unit(field)


def ideal_mul(a, b):
    return a * b


def ideal_gcd(a, b):
    return a + b


def ideal_lcm(a, b):
    return a.intersect(b)


def ideal_norm(a):
    return a.norm()


def ideal_conjugate(a, t):
    return a.conjugate(t)


def trace_dual(a):
    return a.trace_dual()


def colon_ideal(a, b):
    """{x in K : x*b is contained in a}."""
    a._check(b)
    f = a.field
    result = None
    for bk in b.lattice.basis():
        m = FieldElement(f, bk).mult_matrix()
        pre = a.lattice.transform(la.inverse(m))
        result = pre if result is None else result.intersect(pre)
    return Ideal(f, result)


@lru_cache(maxsize=None)
def different_ideal(field):
    o = unit_ideal(field)
    return colon_ideal(o, o.trace_dual())


def denominator_ideal(gamma):
    """{alpha in o : alpha*gamma in o}."""
    if not gamma:
        raise InvalidInput("denominator ideal of zero is undefined")
    f = gamma.field
    o = unit_ideal(f)
    return colon_ideal(o, Ideal.principal(f, gamma)).intersect(o)


def g_invariant_ideal(b, G):
    """Intersection of the conjugates b^(tau^-1) over the automorphism indices in G."""
    f = b.field
    G = sorted(set(G))
    if not G:
        raise InvalidInput("automorphism set must be nonempty")
    result = None
    for t in G:
        c = b.conjugate(f.galois_inverse[t])
        result = c if result is None else result.intersect(c)
    return result


# ---------------------------------------------------------------- primes
def _rational_primes(n):
    return [int(p) for p in sympy.primefactors(abs(int(n)))]


def is_prime(n):
    return bool(sympy.isprime(n))


@lru_cache(maxsize=None)
def factor_prime(field, p):
    """Prime ideals above the rational prime p as (ideal, e, f) triples."""
    if not is_prime(p):
        raise InvalidInput(f"{p} is not prime")
    if field.index % p == 0:
        raise UnsupportedPrime(f"{p} divides the index of Z[theta]; factorisation not supported")
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(field.min_poly)), x, modulus=p)
    _, factors = poly.factor_list()
    theta = field.theta()
    out = []
    for g, e in factors:
        coeffs = [int(c) % p for c in reversed(g.all_coeffs())]
        val = field.zero()
        power = field.one()
        for c in coeffs:
            val = val + power * c
            power = power * theta
        P = Ideal.from_generators(field, [field(p), val])
        out.append((P, int(e), int(g.degree())))
    if sum(e * f for _, e, f in out) != field.degree:
        raise InvalidInput("factorisation inconsistent with the degree")
    return tuple(out)


def valuation(P, x):
    """ord_P of a nonzero element or fractional ideal."""
    if isinstance(x, Ideal):
        if x.den != 1:
            return valuation(P, x * x.den) - valuation(P, Ideal.principal(x.field, x.den))
        k = 0
        power = P
        while power.contains_ideal(x):
            k += 1
            power = power * P
        return k
    x = P.field(x)
    if not x:
        raise InvalidInput("valuation of zero")
    den = la.common_denominator(x.coords)
    if den != 1:
        return valuation(P, x * den) - valuation(P, P.field(den))
    k = 0
    power = P
    while power.contains(x):
        k += 1
        power = power * P
    return k


def factor_ideal(b):
    """Factor an integral ideal as a list of (prime ideal, exponent)."""
    if not b.is_integral():
        raise InvalidInput("factor_ideal expects an integral ideal")
    f = b.field
    out = []
    for p in _rational_primes(b.norm()):
        for P, _, _ in factor_prime(f, p):
            k = valuation(P, b)
            if k:
                out.append((P, k))
    check = unit_ideal(f)
    for P, k in out:
        check = check * P ** k
    if check != b:
        raise InvalidInput("factorisation did not reproduce the ideal")
    return out


def moebius(q):
    """Moebius function of an integral ideal."""
    fac = factor_ideal(q)
    if any(k > 1 for _, k in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def divisors(b):
    """All integral ideals containing b (i.e. dividing b)."""
    try:
        fac = factor_ideal(b)
    except UnsupportedPrime:
        return _divisors_by_enumeration(b)
    out = []
    for exps in itertools.product(*[range(k + 1) for _, k in fac]):
        c = unit_ideal(b.field)
        for (P, _), e in zip(fac, exps):
            if e:
                c = c * P ** e
        out.append(c)
    return out


def _divisors_by_enumeration(b):
    f = b.field
    N = b.norm()
    return [c for c in ideals_with_norm_dividing(f, N) if c.contains_ideal(b)]


def _hnf_candidates(d, N, exact=False):
    """Upper-triangular HNF matrices whose determinant divides (or equals) N."""
    def diag_tuples(k, rem):
        if k == 0:
            if not exact or rem == 1:
                yield ()
            return
        for h in range(1, rem + 1):
            if rem % h == 0:
                for rest in diag_tuples(k - 1, rem // h):
                    yield (h,) + rest

    for diag in diag_tuples(d, N):
        slots = [(i, j) for j in range(d) for i in range(j)]
        ranges = [range(diag[i]) for i, j in slots]
        for vals in itertools.product(*ranges):
            H = [[0] * d for _ in range(d)]
            for i in range(d):
                H[i][i] = diag[i]
            for (i, j), v in zip(slots, vals):
                H[i][j] = v
            yield H


def ideals_with_norm_dividing(field, N, exact=False):
    out = []
    for H in _hnf_candidates(field.degree, N, exact):
        lat = la.Lattice(H, 1)
        if all(lat.contains(field._mul_coords(field._unit(k), col))
               for col in lat.basis() for k in range(1, field.degree)):
            out.append(Ideal(field, lat))
    return out


def ideals_up_to_norm(field, bound):
    """Every integral ideal of norm at most ``bound`` (enumerated via HNF shapes)."""
    seen = []
    for n in range(1, bound + 1):
        seen.extend(ideals_with_norm_dividing(field, n, exact=True))
    return seen


def ideals_by_factorisation(field, bound):
    """Integral ideals of norm <= bound built from prime ideals over supported primes."""
    primes = []
    for p in range(2, bound + 1):
        if is_prime(p) and field.index % p:
            for P, _, f in factor_prime(field, p):
                if p ** f <= bound:
                    primes.append(P)
    result = [unit_ideal(field)]
    for P in primes:
        nP = P.norm()
        new = []
        for c in result:
            cur = c
            while cur.norm() * nP <= bound:
                cur = cur * P
                new.append(cur)
        result.extend(new)
    return sorted(result, key=lambda c: (c.norm(), c.mat))


# ---------------------------------------------------------------- residues and CRT
def residue_classes(b):
    """Canonical coset representatives of o/b."""
    f = b.field
    return [FieldElement(f, row) for row in b.residue_array().tolist()]


def unit_mask(b, arr):
    """Boolean mask: which coordinate rows are units modulo b."""
    arr = np.asarray(arr, dtype=np.int64)
    try:
        fac = factor_ideal(b)
    except UnsupportedPrime:
        o = unit_ideal(b.field)
        return np.array([(Ideal.principal(b.field, list(r)) + b) == o if any(r) else b.is_unit()
                         for r in arr.tolist()], dtype=bool)
    ok = np.ones(len(arr), dtype=bool)
    for P, _ in fac:
        ok &= ~P.member_mask(arr)
    return ok


def residue_units_array(b):
    arr = b.residue_array()
    return arr[unit_mask(b, arr)]


def residue_units(b):
    f = b.field
    return [FieldElement(f, row) for row in residue_units_array(b).tolist()]


def _small_elements(ideal, radius):
    """Elements of an integral ideal with HNF coefficients in [-radius, radius], smallest first."""
    basis = ideal.lattice.basis()
    d = ideal.field.degree
    coeffs = sorted(itertools.product(range(-radius, radius + 1), repeat=d),
                    key=lambda c: (max(map(abs, c)), sum(map(abs, c)), c))
    for c in coeffs:
        if any(c):
            yield FieldElement(ideal.field, [sum(ci * v[k] for ci, v in zip(c, basis)) for k in range(d)])


def crt_split(b, b1, b2, max_radius=32):
    """Elements alpha1 in b1, alpha2 in b2 with (alpha_i) + b = b_i.

    Then every class mod b is alpha1*mu + alpha2*beta for unique mu mod b2, beta mod b1.
    """
    if (b1 + b2) != unit_ideal(b.field) or b1 * b2 != b:
        raise InvalidInput("crt_split needs b = b1*b2 with coprime factors")

    def find(target):
        radius = 1
        while radius <= max_radius:
            for a in _small_elements(target, radius):
                if Ideal.principal(b.field, a) + b == target:
                    return a
            radius *= 2
        raise SearchBoundError(f"no CRT element found within radius {max_radius}")

    return find(b1), find(b2)
