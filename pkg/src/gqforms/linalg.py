"""Exact rational linear algebra, integer Hermite normal form and rational lattices.

Matrices are plain nested lists (row-major).  Entries are ``int`` or
``fractions.Fraction``; nothing here touches floating point.
"""
from fractions import Fraction
from math import gcd, lcm

from .errors import InvalidInput


def frac_matrix(rows):
    return [[Fraction(x) for x in row] for row in rows]


def identity(k):
    return [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]


def transpose(m):
    return [list(col) for col in zip(*m)]


def matmul(a, b):
    bt = transpose(b)
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a, v):
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def row_reduce(m):
    """Reduced row echelon form.  Returns (rref, pivot_columns)."""
    a = [list(map(Fraction, row)) for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def rank(m):
    if not m:
        return 0
    return len(row_reduce(m)[1])


def det(m):
    a = [list(map(Fraction, row)) for row in m]
    k = len(a)
    result = Fraction(1)
    for c in range(k):
        piv = next((i for i in range(c, k) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            result = -result
        result *= a[c][c]
        inv = 1 / a[c][c]
        for i in range(c + 1, k):
            if a[i][c] != 0:
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return result


def inverse(m):
    k = len(m)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(k)]
           for i, row in enumerate(m)]
    red, piv = row_reduce(aug)
    if piv[:k] != list(range(k)):
        raise InvalidInput("matrix is singular")
    return [row[k:] for row in red]


def solve(m, b):
    """Solve m x = b for square invertible m."""
    k = len(m)
    aug = [list(map(Fraction, row)) + [Fraction(b[i])] for i, row in enumerate(m)]
    red, piv = row_reduce(aug)
    if piv != list(range(k)):
        raise InvalidInput("matrix is singular")
    return [red[i][k] for i in range(k)]


def kernel(m, ncols=None):
    """Basis of the rational right kernel {x : m x = 0}."""
    if not m:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    cols = len(m[0])
    red, piv = row_reduce(m)
    free = [c for c in range(cols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for r, p in enumerate(piv):
            v[p] = -red[r][f]
        basis.append(v)
    return basis


def common_denominator(values):
    den = 1
    for x in values:
        den = lcm(den, Fraction(x).denominator)
    return den


# ---------------------------------------------------------------- HNF

def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _det_multiple(vectors, k):
    """|det| of some k independent vectors among ``vectors`` (a multiple of the lattice determinant)."""
    chosen = []
    echelon = []
    for v in vectors:
        w = [Fraction(x) for x in v]
        for row, pc in echelon:
            if w[pc] != 0:
                f = w[pc] / row[pc]
                w = [a - f * b for a, b in zip(w, row)]
        pc = next((i for i, x in enumerate(w) if x != 0), None)
        if pc is not None:
            echelon.append((w, pc))
            chosen.append(v)
            if len(chosen) == k:
                break
    if len(chosen) < k:
        raise InvalidInput("generators do not span a full-rank lattice")
    return abs(int(det(transpose(chosen))))


def hnf_columns(vectors, k):
    """Column-style Hermite normal form of the lattice spanned by integer ``vectors`` in Z^k.

    Returns an upper-triangular k x k matrix (row-major) with positive diagonal and
    entries right of the diagonal reduced into [0, diagonal).  Works modulo a
    multiple of the determinant so intermediate entries stay small.
    """
    vecs = [list(map(int, v)) for v in vectors if any(v)]
    D = _det_multiple(vecs, k)
    vecs = [[x % D for x in v] for v in vecs]
    cols = [None] * k
    for i in reversed(range(k)):
        pivot = [0] * k
        pivot[i] = D
        rest = []
        for v in vecs:
            if v[i] == 0:
                rest.append(v)
                continue
            g, s, t = _xgcd(pivot[i], v[i])
            a, b = pivot[i] // g, v[i] // g
            new_pivot = [(s * x + t * y) for x, y in zip(pivot, v)]
            other = [(a * y - b * x) for x, y in zip(pivot, v)]
            pivot = [x % D if j < i else x for j, x in enumerate(new_pivot)]
            other = [x % D for x in other]
            if any(other):
                rest.append(other)
        if pivot[i] < 0:
            pivot = [-x for x in pivot]
        cols[i] = pivot
        vecs = rest
    H = [[cols[j][i] for j in range(k)] for i in range(k)]
    for j in range(k):
        for i in reversed(range(j)):
            q = H[i][j] // H[i][i]
            if q:
                for r in range(i + 1):
                    H[r][j] -= q * H[r][i]
    return H


class Lattice:
    """Full-rank lattice (1/den) * H * Z^k with H in canonical column HNF."""

    __slots__ = ("hnf", "den", "dim", "_key")

    def __init__(self, hnf, den=1):
        g = den
        for row in hnf:
            for x in row:
                g = gcd(g, x)
        self.hnf = tuple(tuple(x // g for x in row) for row in hnf)
        self.den = den // g
        self.dim = len(hnf)
        self._key = (self.den, self.hnf)

    @classmethod
    def from_generators(cls, vectors, k):
        vectors = [[Fraction(x) for x in v] for v in vectors]
        den = common_denominator(x for v in vectors for x in v)
        ints = [[int(x * den) for x in v] for v in vectors]
        return cls(hnf_columns(ints, k), den)

    @classmethod
    def standard(cls, k):
        return cls([[int(i == j) for j in range(k)] for i in range(k)], 1)

    def basis(self):
        """Basis vectors (columns) as lists of Fractions."""
        k = self.dim
        return [[Fraction(self.hnf[i][j], self.den) for i in range(k)] for j in range(k)]

    def __eq__(self, other):
        return isinstance(other, Lattice) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Lattice(den={self.den}, hnf={[list(r) for r in self.hnf]})"

    def covolume(self):
        v = Fraction(1)
        for i in range(self.dim):
            v *= self.hnf[i][i]
        return v / Fraction(self.den) ** self.dim

    def contains(self, vec):
        """Exact membership test by back-substitution."""
        w = [Fraction(x) * self.den for x in vec]
        for i in reversed(range(self.dim)):
            if w[i].denominator != 1:
                return False
            q, r = divmod(int(w[i]), self.hnf[i][i])
            if r:
                return False
            if q:
                for t in range(i + 1):
                    w[t] -= q * self.hnf[t][i]
        return True

    def contains_lattice(self, other):
        return all(self.contains(v) for v in other.basis())

    def __add__(self, other):
        return Lattice.from_generators(self.basis() + other.basis(), self.dim)

    def dual(self):
        """Standard dual {y : y.x in Z for all x in self}."""
        hinv = inverse(self.basis_matrix())
        return Lattice.from_generators(hinv, self.dim)  # rows of B^{-1} = columns of B^{-T}

    def intersect(self, other):
        return (self.dual() + other.dual()).dual()

    def basis_matrix(self):
        return [[Fraction(x, self.den) for x in row] for row in self.hnf]

    def transform(self, m):
        """Image lattice m * self for an invertible rational matrix m."""
        return Lattice.from_generators([matvec(m, b) for b in self.basis()], self.dim)

    def scale(self, c):
        c = Fraction(c)
        return Lattice.from_generators([[c * x for x in b] for b in self.basis()], self.dim)
