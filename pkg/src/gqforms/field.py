"""Totally real Galois number fields with exact arithmetic on an integral basis."""
import json
import re
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg as la
from .errors import InvalidInput


def _poly_mulmod(a, b, modpoly):
    """Multiply power-basis coordinate lists a, b modulo the monic ``modpoly`` (ascending)."""
    d = len(modpoly) - 1
    prod = [Fraction(0)] * (2 * d - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    prod[i + j] += x * y
    for k in range(len(prod) - 1, d - 1, -1):
        c = prod[k]
        if c:
            for t in range(d):
                prod[k - d + t] -= c * modpoly[t]
            prod[k] = Fraction(0)
    return prod[:d]


def _is_squarefree(n):
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


class NumberField:
    """A totally real Galois field K = Q(theta) with a user-supplied integral basis.

    ``min_poly`` is ascending (constant term first, monic).  ``basis[j][k]`` is the
    coefficient of theta^k in the j-th basis element; the first basis element must be 1.
    The Galois action is given either as root permutations (``perms[t][i]`` is the index
    of the image of root i, roots sorted in decreasing order) or as coordinate matrices.
    """

    def __init__(self, min_poly, basis, galois, name=None):
        self.min_poly = [int(c) for c in min_poly]
        d = len(self.min_poly) - 1
        if d < 1 or self.min_poly[-1] != 1:
            raise InvalidInput("min_poly must be monic of degree >= 1")
        self.degree = d
        self.name = name
        self.basis = [[Fraction(x) for x in row] for row in basis]
        if len(self.basis) != d or any(len(r) != d for r in self.basis):
            raise InvalidInput("basis must be a d x d matrix")
        if self.basis[0] != [Fraction(int(k == 0)) for k in range(d)]:
            raise InvalidInput("first basis element must be 1")
        if la.det(self.basis) == 0:
            raise InvalidInput("basis elements are linearly dependent")
        self._mod = [Fraction(c) for c in self.min_poly]
        self._to_omega = la.inverse(la.transpose(self.basis))

        self.roots = self._real_roots()
        self._build_structure()
        self.embeddings = np.array(
            [[float(sum(float(c) * r ** k for k, c in enumerate(self.basis[j]))) for j in range(d)]
             for r in self.roots])
        self.trace_gram = [[self._trace_coords(self._mul_coords(self._unit(i), self._unit(j)))
                            for j in range(d)] for i in range(d)]
        self.discriminant = int(la.det(self.trace_gram))
        self._build_galois(galois)

    # ------------------------------------------------------------ construction
    def _real_roots(self):
        coeffs = [float(c) for c in reversed(self.min_poly)]
        raw = np.roots(coeffs)
        scale = max(1.0, float(np.max(np.abs(raw))))
        if np.any(np.abs(raw.imag) > 1e-7 * scale):
            raise InvalidInput("min_poly is not totally real")
        roots = []
        p = np.poly1d(coeffs)
        dp = p.deriv()
        for r in raw.real:
            for _ in range(50):
                step = p(r) / dp(r)
                r -= step
                if abs(step) < 1e-16 * max(1.0, abs(r)):
                    break
            roots.append(float(r))
        roots.sort(reverse=True)
        if any(abs(a - b) < 1e-9 for a, b in zip(roots, roots[1:])):
            raise InvalidInput("min_poly has a repeated root")
        return roots

    def _unit(self, i):
        return [Fraction(int(k == i)) for k in range(self.degree)]

    def _power_to_omega(self, p):
        return la.matvec(self._to_omega, p)

    def _omega_to_power(self, w):
        return la.matvec(la.transpose(self.basis), w)

    def _build_structure(self):
        d = self.degree
        sc = []
        for i in range(d):
            row = []
            for j in range(d):
                prod = _poly_mulmod(self.basis[i], self.basis[j], self._mod)
                w = self._power_to_omega(prod)
                if any(x.denominator != 1 for x in w):
                    raise InvalidInput(
                        f"basis not closed under multiplication (w{i + 1}*w{j + 1} is not integral)")
                row.append(tuple(int(x) for x in w))
            sc.append(tuple(row))
        self.struct_consts = tuple(sc)
        theta = self._power_to_omega([Fraction(int(k == 1)) for k in range(d)]) if d > 1 else [Fraction(0)]
        if any(x.denominator != 1 for x in theta):
            raise InvalidInput("basis does not span an order containing theta")
        self.theta_coords = tuple(theta)

    def _mul_coords(self, a, b):
        d = self.degree
        out = [0] * d
        sc = self.struct_consts
        for i, x in enumerate(a):
            if x:
                sci = sc[i]
                for j, y in enumerate(b):
                    if y:
                        xy = x * y
                        for k, c in enumerate(sci[j]):
                            if c:
                                out[k] += c * xy
        return out

    def _trace_coords(self, a):
        sc = self.struct_consts
        return Fraction(sum(a[i] * sc[i][j][j] for i in range(self.degree) for j in range(self.degree)))

    def _build_galois(self, galois):
        d = self.degree
        if galois is None or len(galois) != d:
            raise InvalidInput("Galois action must list exactly d automorphisms")
        mats = []
        for g in galois:
            if all(isinstance(x, int) for x in g):
                mats.append(self._matrix_from_perm(list(g)))
            else:
                mats.append([[Fraction(x) for x in row] for row in g])
        for m in mats:
            self._check_automorphism(m)
        ident = la.identity(d)
        keys = [tuple(map(tuple, m)) for m in mats]
        if len(set(keys)) != d:
            raise InvalidInput("Galois matrices are not distinct")
        if tuple(map(tuple, ident)) not in keys:
            raise InvalidInput("Galois matrices do not contain the identity")
        for a in mats:
            for b in mats:
                if tuple(map(tuple, la.matmul(a, b))) not in keys:
                    raise InvalidInput("Galois matrices are not closed under composition")
        idx = keys.index(tuple(map(tuple, ident)))
        mats = [mats[idx]] + mats[:idx] + mats[idx + 1:]
        self.galois = tuple(tuple(tuple(int(x) for x in row) for row in m) for m in mats)
        keys = [m for m in self.galois]
        self.galois_compose = [[keys.index(tuple(tuple(int(x) for x in row)
                                                  for row in la.matmul(a, b)))
                                for b in self.galois] for a in self.galois]
        self.galois_inverse = [row.index(0) for row in self.galois_compose]
        # embedding_shift[t][l] = k  with  rho_l(tau_t(a)) = rho_k(a)
        theta = list(self.theta_coords) if d > 1 else [Fraction(1)]
        shift = []
        for t in range(d):
            img = self.apply_galois_coords(t, theta)
            vals = [float(sum(float(c) * self.embeddings[l][j] for j, c in enumerate(img)))
                    for l in range(d)]
            base = [float(sum(float(c) * self.embeddings[l][j] for j, c in enumerate(theta)))
                    for l in range(d)]
            row = []
            for l in range(d):
                hits = [k for k in range(d) if abs(vals[l] - base[k]) < 1e-9 * max(1.0, abs(base[k]))]
                if len(hits) != 1:
                    raise InvalidInput("Galois action does not permute the real embeddings")
                row.append(hits[0])
            shift.append(tuple(row))
        self.embedding_shift = tuple(shift)

    def _matrix_from_perm(self, perm):
        d = self.degree
        if sorted(perm) != list(range(d)):
            raise InvalidInput(f"not a permutation of root indices: {perm}")
        # tau(theta) = h(theta) with h(r_i) = r_perm[i]; rationalize and verify exactly
        V = np.array([[r ** k for k in range(d)] for r in self.roots])
        h = np.linalg.solve(V, np.array([self.roots[i] for i in perm]))
        hp = [Fraction(float(x)).limit_denominator(10 ** 9) for x in h]
        # evaluate min_poly at h(theta) exactly
        acc = [Fraction(0)] * d
        power = [Fraction(int(k == 0)) for k in range(d)]
        for c in self.min_poly:
            acc = [a + c * p for a, p in zip(acc, power)]
            power = _poly_mulmod(power, hp, self._mod)
        if any(acc):
            raise InvalidInput(f"root permutation {perm} does not define an automorphism")
        cols = []
        for j in range(d):
            img = [Fraction(0)] * d
            power = [Fraction(int(k == 0)) for k in range(d)]
            for c in self.basis[j]:
                img = [a + c * p for a, p in zip(img, power)]
                power = _poly_mulmod(power, hp, self._mod)
            cols.append(self._power_to_omega(img))
        return la.transpose(cols)

    def _check_automorphism(self, m):
        d = self.degree
        if len(m) != d or any(len(r) != d for r in m):
            raise InvalidInput("Galois matrix has wrong shape")
        if any(x.denominator != 1 for row in m for x in row):
            raise InvalidInput("Galois matrix does not preserve the ring of integers")
        if la.det(m) == 0:
            raise InvalidInput("Galois matrix is singular")
        if [row[0] for row in m] != self._unit(0):
            raise InvalidInput("Galois matrix does not fix 1")
        for i in range(d):
            for j in range(d):
                lhs = la.matvec(m, self._mul_coords(self._unit(i), self._unit(j)))
                rhs = self._mul_coords(la.matvec(m, self._unit(i)), la.matvec(m, self._unit(j)))
                if lhs != rhs:
                    raise InvalidInput("Galois matrix is not a ring automorphism")

    # ------------------------------------------------------------ public API
    def __repr__(self):
        return f"NumberField({self.name or self.min_poly}, D_K={self.discriminant})"

    def __eq__(self, other):
        return self is other or (isinstance(other, NumberField) and self._key() == other._key())

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        key = self.__dict__.get("_cached_key")
        if key is None:
            key = (tuple(self.min_poly), tuple(map(tuple, self.basis)), frozenset(self.galois))
            self.__dict__["_cached_key"] = key
        return key

    def element(self, coords):
        return FieldElement(self, coords)

    def __call__(self, value):
        """Coerce an int, Fraction, coordinate list, element string or element."""
        if isinstance(value, FieldElement):
            if value.field != self:
                raise InvalidInput("element belongs to a different field")
            return value
        if isinstance(value, (int, Fraction)):
            return FieldElement(self, [value] + [0] * (self.degree - 1))
        if isinstance(value, str):
            return parse_element(self, value)
        return FieldElement(self, value)

    def zero(self):
        return self(0)

    def one(self):
        return self(1)

    def gen(self, j):
        """The integral basis element w_{j+1}."""
        return FieldElement(self, self._unit(j))

    def integral_basis(self):
        return [self.gen(j) for j in range(self.degree)]

    def theta(self):
        return FieldElement(self, self.theta_coords)

    @cached_property
    def dual_basis(self):
        """Elements rho_i with Tr(rho_i w_j) = delta_ij."""
        ginv = la.inverse(self.trace_gram)
        return [FieldElement(self, row) for row in ginv]

    def apply_galois_coords(self, t, coords):
        return [sum(c * x for c, x in zip(row, coords)) for row in self.galois[t]]

    def conj_index(self, t, l):
        """Index k with rho_k = rho_l o tau_t."""
        return self.embedding_shift[t][l]

    def l_tau(self, t, l):
        """Index k with rho_k o tau_t = rho_l."""
        return self.embedding_shift[t].index(l)

    def discriminant_check(self):
        return float(np.linalg.det(self.embeddings)) ** 2

    @cached_property
    def index(self):
        """Index of Z[theta] in the ring spanned by the basis."""
        d = self.degree
        powers = []
        p = [Fraction(int(k == 0)) for k in range(d)]
        theta = [Fraction(int(k == 1)) for k in range(d)] if d > 1 else [Fraction(0)]
        for _ in range(d):
            powers.append(self._power_to_omega(p))
            p = _poly_mulmod(p, theta, self._mod)
        return abs(int(la.det(powers)))

    def to_description(self):
        return {
            "degree": self.degree,
            "min_poly": list(reversed(self.min_poly)),
            "basis": [[str(x) for x in row] for row in self.basis],
            "galois": [[[str(x) for x in row] for row in m] for m in self.galois],
        }


class FieldElement:
    """An element of K as exact rational coordinates over the integral basis."""

    __slots__ = ("field", "coords")

    def __init__(self, field, coords):
        coords = tuple(Fraction(x) for x in coords)
        if len(coords) != field.degree:
            raise InvalidInput("coordinate vector has wrong length")
        self.field = field
        self.coords = coords

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field is not self.field and other.field != self.field:
                raise InvalidInput("elements belong to different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, [a + b for a, b in zip(self.coords, other.coords)])

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, [-a for a in self.coords])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, [a - b for a, b in zip(self.coords, other.coords)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, [a * other for a in self.coords])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.field._mul_coords(self.coords, other.coords))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, [a / other for a in self.coords])
        other = self._coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.field(other) * self.inverse()

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field(other)
        return (isinstance(other, FieldElement) and self.coords == other.coords
                and (self.field is other.field or self.field == other.field))

    def __hash__(self):
        return hash(self.coords)

    def __bool__(self):
        return any(self.coords)

    def __repr__(self):
        return f"FieldElement({format_element(self)})"

    def mult_matrix(self):
        """Matrix of x -> self*x on basis coordinates (columns are self*w_j)."""
        d = self.field.degree
        cols = [self.field._mul_coords(self.coords, self.field._unit(j)) for j in range(d)]
        return [[Fraction(cols[j][i]) for j in range(d)] for i in range(d)]

    def trace(self):
        return self.field._trace_coords(self.coords)

    def norm(self):
        return la.det(self.mult_matrix())

    def inverse(self):
        if not self:
            raise InvalidInput("zero has no inverse")
        return FieldElement(self.field, la.solve(self.mult_matrix(), self.field._unit(0)))

    def galois(self, t):
        return FieldElement(self.field, self.field.apply_galois_coords(t, self.coords))

    def embed(self, l):
        return float(sum(float(c) * self.field.embeddings[l][j] for j, c in enumerate(self.coords)))

    def is_integral(self):
        return all(c.denominator == 1 for c in self.coords)

    def to_json(self):
        return [str(c) for c in self.coords]


# -------------------------------------------------------------- free functions
def mul(a, b):
    return a * b


def trace(a):
    return a.trace()


def norm(a):
    return a.norm()


def apply_galois(t, a):
    return a.galois(t)


def embed(a, l):
    return a.embed(l)


def dual_basis(field):
    return list(field.dual_basis)


# -------------------------------------------------------------- constructors
def make_real_quadratic(D):
    """Q(sqrt(D)) for squarefree D > 1 with its standard integral basis."""
    if not isinstance(D, int) or D <= 1 or not _is_squarefree(D):
        raise InvalidInput(f"D must be a squarefree integer > 1, got {D!r}")
    if D % 4 == 1:
        basis = [[1, 0], [Fraction(1, 2), Fraction(1, 2)]]
    else:
        basis = [[1, 0], [0, 1]]
    return NumberField([-D, 0, 1], basis, [[0, 1], [1, 0]], name=f"Qsqrt:{D}")


def make_cyclic_cubic():
    """The cyclic cubic field defined by x^3 + x^2 - 2x - 1 (discriminant 49)."""
    desc = {"degree": 3, "min_poly": [1, 1, -2, -1],
            "basis": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
            "galois": [[0, 1, 2], [1, 2, 0], [2, 0, 1]]}
    field = make_field_from_description(desc)
    field.name = "cyclic7"
    return field


def make_field_from_description(desc):
    """Build a field from a description record (dict, JSON string or path)."""
    if isinstance(desc, str):
        if desc.lstrip().startswith("{"):
            desc = json.loads(desc)
        else:
            with open(desc) as fh:
                desc = json.load(fh)
    try:
        d = int(desc["degree"])
        mp = [int(c) for c in desc["min_poly"]]
        basis = [[Fraction(x) for x in row] for row in desc["basis"]]
        galois = desc["galois"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed field description: {exc}") from exc
    if len(mp) == d:
        mp = [1] + mp
    if len(mp) != d + 1 or mp[0] != 1:
        raise InvalidInput("min_poly must be monic of the stated degree (highest power first)")
    gal = []
    for g in galois:
        if g and all(isinstance(x, int) for x in g):
            gal.append(list(g))
        else:
            gal.append([[Fraction(x) for x in row] for row in g])
    return NumberField(list(reversed(mp)), basis, gal, name=desc.get("name"))


BUILTINS = {"cyclic7": make_cyclic_cubic}


def builtin_field(spec):
    """Resolve builtin names: ``Qsqrt:D`` or ``cyclic7``; otherwise a description path."""
    if spec.startswith("Qsqrt:"):
        try:
            D = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidInput(f"bad builtin field {spec!r}") from exc
        return make_real_quadratic(D)
    if spec in BUILTINS:
        return BUILTINS[spec]()
    return make_field_from_description(spec)


# -------------------------------------------------------------- element text format
_TERM = re.compile(r"([+-]?)\s*([0-9]+(?:/[0-9]+)?)?\s*\*?\s*(w[0-9]+)?")


def parse_element(field, text):
    """Parse strings such as ``3+1*w2`` or ``-1/2*w1 + w3`` (w1 = 1)."""
    s = text.replace(" ", "")
    if not s:
        raise InvalidInput("empty element string")
    coords = [Fraction(0)] * field.degree
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise InvalidInput(f"cannot parse element {text!r} at position {pos}")
        sign = -1 if m.group(1) == "-" else 1
        coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        k = int(m.group(3)[1:]) if m.group(3) else 1
        if not 1 <= k <= field.degree:
            raise InvalidInput(f"basis index out of range in {text!r}")
        coords[k - 1] += sign * coef
        pos = m.end()
        if pos < len(s) and s[pos] not in "+-":
            raise InvalidInput(f"cannot parse element {text!r} at position {pos}")
    return FieldElement(field, coords)


def format_element(a):
    parts = []
    for k, c in enumerate(a.coords):
        if c:
            term = str(c) if k == 0 else f"{c}*w{k + 1}"
            parts.append(term if not parts or term.startswith("-") else "+" + term)
    return "".join(parts) or "0"
