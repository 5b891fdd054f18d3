"""Generalised quadratic forms: sums of c[i,j,t,u] * x_i^t * x_j^u with a symmetric tensor.

Automorphisms are referred to by their index in ``field.galois`` (index 0 is the
identity).  Variables are 0-based.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import linalg as la
from .errors import InvalidInput
from .field import FieldElement


class GQF:
    """A generalised quadratic form over ``field`` in ``n`` variables.

    ``entries`` maps (i, t, j, u) -> coefficient.  The symmetric partner (j, u, i, t)
    is filled in automatically; conflicting values are rejected.
    """

    def __init__(self, field, n, entries=None):
        if n < 1:
            raise InvalidInput("need at least one variable")
        self.field = field
        self.n = n
        d = field.degree
        coeffs = {}
        for key, value in (entries or {}).items():
            i, t, j, u = key
            if not (0 <= i < n and 0 <= j < n and 0 <= t < d and 0 <= u < d):
                raise InvalidInput(f"coefficient index out of range: {key}")
            value = field(value)
            for k in ((i, t, j, u), (j, u, i, t)):
                if k in coeffs and coeffs[k] != value:
                    raise InvalidInput(f"coefficients at {key} and its mirror disagree")
                coeffs[k] = value
        self.coeffs = {k: v for k, v in coeffs.items() if v}
        self._key = tuple(sorted((k, v.coords) for k, v in self.coeffs.items()))

    # ------------------------------------------------------------ basics
    def __eq__(self, other):
        return (isinstance(other, GQF) and self.n == other.n and self.field == other.field
                and self._key == other._key)

    def __hash__(self):
        return hash((self.n, self._key))

    def __repr__(self):
        return f"GQF(n={self.n}, terms={len(self.coeffs)})"

    def __add__(self, other):
        if other.n != self.n:
            raise InvalidInput("forms have different numbers of variables")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, self.field.zero()) + v
        return GQF(self.field, self.n, out)

    def scale(self, c):
        c = self.field(c)
        return GQF(self.field, self.n, {k: c * v for k, v in self.coeffs.items()})

    def coeff(self, i, j, t, u):
        return self.coeffs.get((i, t, j, u), self.field.zero())

    @property
    def G_set(self):
        s = set()
        for (i, t, j, u) in self.coeffs:
            s.add(t)
            s.add(u)
        return sorted(s)

    def is_integral(self):
        return all(v.is_integral() for v in self.coeffs.values())

    def blocks(self):
        """Connected groups of variables (no coefficient couples different groups)."""
        parent = list(range(self.n))

        def root(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for (i, t, j, u) in self.coeffs:
            ri, rj = root(i), root(j)
            if ri != rj:
                parent[ri] = rj
        groups = {}
        for i in range(self.n):
            groups.setdefault(root(i), []).append(i)
        return sorted(groups.values())

    def restrict(self, variables):
        """The form in the listed variables only (renumbered from 0)."""
        pos = {v: k for k, v in enumerate(variables)}
        ent = {(pos[i], t, pos[j], u): c for (i, t, j, u), c in self.coeffs.items()
               if i in pos and j in pos}
        return GQF(self.field, len(variables), ent)

    def matrix(self):
        """The nd x nd coefficient matrix indexed by (i, t) -> i*d + t."""
        d = self.field.degree
        z = self.field.zero()
        m = [[z] * (self.n * d) for _ in range(self.n * d)]
        for (i, t, j, u), c in self.coeffs.items():
            m[i * d + t][j * d + u] = c
        return m


# ---------------------------------------------------------------- evaluation
def _conjugates(F, x):
    if len(x) != F.n:
        raise InvalidInput(f"expected {F.n} values, got {len(x)}")
    f = F.field
    x = [f(v) for v in x]
    G = F.G_set
    return {(i, t): x[i].galois(t) for i in range(F.n) for t in G}


def evaluate(F, x):
    """F(x), exactly."""
    cx = _conjugates(F, x)
    total = F.field.zero()
    for (i, t, j, u), c in F.coeffs.items():
        total = total + c * cx[i, t] * cx[j, u]
    return total


def bilinear(F, x, y):
    """B(x; y) = sum c[i,j,t,u] x_i^t y_j^u."""
    cx = _conjugates(F, x)
    cy = _conjugates(F, y)
    total = F.field.zero()
    for (i, t, j, u), c in F.coeffs.items():
        total = total + c * cx[i, t] * cy[j, u]
    return total


def bilinear_matrix(F, v):
    """Rational d x dn matrix of h -> B(v; h), h flattened as coordinate k of h_j at k*n + j."""
    f = F.field
    d, n = f.degree, F.n
    cv = _conjugates(F, v)
    cols = [[Fraction(0)] * d for _ in range(d * n)]
    for (i, t, j, u), c in F.coeffs.items():
        base = c * cv[i, t]
        for k in range(d):
            val = base * f.gen(k).galois(u)
            col = cols[k * n + j]
            for r in range(d):
                col[r] += val.coords[r]
    return [[cols[c][r] for c in range(d * n)] for r in range(d)]


# ---------------------------------------------------------------- constructors
def _det_K(m, field):
    """Determinant of a square matrix over K by elimination."""
    a = [[field(x) for x in row] for row in m]
    k = len(a)
    result = field.one()
    for c in range(k):
        piv = next((i for i in range(c, k) if a[i][c]), None)
        if piv is None:
            return field.zero()
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            result = -result
        result = result * a[c][c]
        inv = a[c][c].inverse()
        for i in range(c + 1, k):
            if a[i][c]:
                fct = a[i][c] * inv
                a[i] = [x - fct * y for x, y in zip(a[i], a[c])]
    return result


def rank_K(m, field):
    """Rank over K of a matrix with entries in K."""
    a = [[field(x) for x in row] for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = a[r][c].inverse()
        for i in range(r + 1, rows):
            if a[i][c]:
                fct = a[i][c] * inv
                a[i] = [x - fct * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == rows:
            break
    return r


@dataclass(frozen=True)
class SpecialShape:
    """F = Q(X) + R(X_1^tau, ..., X_m^tau) with Q given by A (n x n) and R by Bm (m x m)."""
    field: object
    A: tuple
    Bm: tuple
    m: int
    tau: int

    @property
    def n(self):
        return len(self.A)

    def B_full(self):
        z = self.field.zero()
        return [[self.Bm[i][j] if i < self.m and j < self.m else z for j in range(self.n)]
                for i in range(self.n)]

    def to_gqf(self):
        ent = {}
        for i in range(self.n):
            for j in range(self.n):
                if self.A[i][j]:
                    ent[i, 0, j, 0] = self.A[i][j]
        for i in range(self.m):
            for j in range(self.m):
                if self.Bm[i][j]:
                    ent[i, self.tau, j, self.tau] = self.Bm[i][j]
        return GQF(self.field, self.n, ent)


def _sym(field, mat, name):
    mat = tuple(tuple(field(x) for x in row) for row in mat)
    k = len(mat)
    if any(len(r) != k for r in mat):
        raise InvalidInput(f"{name} must be square")
    for i in range(k):
        for j in range(k):
            if mat[i][j] != mat[j][i]:
                raise InvalidInput(f"{name} must be symmetric")
    return mat


def special_shape(field, Q, R, m, tau):
    if tau == 0 or not 0 < tau < field.degree:
        raise InvalidInput("tau must be a nontrivial automorphism index")
    A = _sym(field, Q, "Q")
    Bm = _sym(field, R, "R")
    if not 1 <= m <= len(A) or len(Bm) != m:
        raise InvalidInput("need 1 <= m <= n and R of size m")
    return SpecialShape(field, A, Bm, m, tau)


def make_special(field, Q, R, m, tau=1):
    """Q(X) + R(X_1^tau, ..., X_m^tau); R must be nonsingular."""
    S = special_shape(field, Q, R, m, tau)
    if not _det_K(S.Bm, field):
        raise InvalidInput("R is singular (upper-left block of B must be invertible)")
    return S.to_gqf()


def make_diagonal(field, a, b, tau=1):
    """a_1 X_1^2 + ... + a_n X_n^2 + b_1 (X_1^tau)^2 + ... + b_m (X_m^tau)^2."""
    a = [field(x) for x in a]
    b = [field(x) for x in b]
    if any(not x for x in a + b):
        raise InvalidInput("diagonal coefficients must be nonzero")
    if len(b) > len(a):
        raise InvalidInput("more conjugate terms than variables")
    if b and (tau == 0 or not 0 < tau < field.degree):
        raise InvalidInput("tau must be a nontrivial automorphism index")
    ent = {(i, 0, i, 0): x for i, x in enumerate(a)}
    for i, x in enumerate(b):
        ent[i, tau, i, tau] = x
    return GQF(field, len(a), ent)


def make_partial_trace(field, H, n):
    """Sum over i of sum over t in H of (X_i^t)^2."""
    H = sorted(set(H))
    if not H or any(not 0 <= t < field.degree for t in H):
        raise InvalidInput("bad automorphism subset")
    return GQF(field, n, {(i, t, i, t): 1 for i in range(n) for t in H})


def diagonal_data(F):
    """(a, b, tau) if F has the diagonal shape, else None."""
    a = [None] * F.n
    b = {}
    tau = None
    for (i, t, j, u), c in F.coeffs.items():
        if i != j or t != u:
            return None
        if t == 0:
            a[i] = c
        else:
            if tau is not None and t != tau:
                return None
            tau = t
            b[i] = c
    if any(x is None for x in a):
        return None
    m = len(b)
    if sorted(b) != list(range(m)):
        return None
    return a, [b[i] for i in range(m)], tau


def special_shape_of(F):
    """The SpecialShape Q(X) + R(X_1^tau, ..., X_m^tau) of F, or None if F is not of that shape."""
    f = F.field
    n = F.n
    tau = None
    A = [[f.zero()] * n for _ in range(n)]
    conj = {}
    for (i, t, j, u), c in F.coeffs.items():
        if t != u:
            return None
        if t == 0:
            A[i][j] = c
        else:
            if tau is not None and t != tau:
                return None
            tau = t
            conj[i, j] = c
    if tau is None:
        return None
    m = 1 + max(max(i, j) for i, j in conj)
    Bm = [[conj.get((i, j), f.zero()) for j in range(m)] for i in range(m)]
    return SpecialShape(f, tuple(map(tuple, A)), tuple(map(tuple, Bm)), m, tau)


# ---------------------------------------------------------------- derived objects
def embedded_system(F):
    """Real dn x dn matrices M_l with rho_l(F(x)) = X^T M_l X, X = (rho_k(x_i)) at k*n + i."""
    f = F.field
    d, n = f.degree, F.n
    mats = np.zeros((d, d * n, d * n))
    for (i, t, j, u), c in F.coeffs.items():
        for l in range(d):
            k1 = f.conj_index(t, l)
            k2 = f.conj_index(u, l)
            mats[l, k1 * n + i, k2 * n + j] += c.embed(l)
    return mats


def dual_form(F):
    """For diagonal F: prod(a) prod(b) * (sum x_i^2 / a_i + sum (x_i^tau)^2 / b_i)."""
    data = diagonal_data(F)
    if data is None:
        raise InvalidInput("dual_form needs a diagonal form")
    a, b, tau = data
    P = F.field.one()
    for x in a + b:
        P = P * x
    return make_diagonal(F.field, [P / x for x in a], [P / x for x in b], tau if b else 1)


def coeff_rank(F):
    return rank_K(F.matrix(), F.field)


def is_admissible(F, draws=20, seed=0):
    """Return ("yes", witness), ("no", None) or ("unknown", None)."""
    f = F.field
    d, n = f.degree, F.n
    rows = []
    for i in range(n):
        for k in range(d):
            v = [f.zero()] * n
            v[i] = f.gen(k)
            rows.extend(bilinear_matrix(F, v))
    if la.rank(rows) < d * n:
        return "no", None
    rng = np.random.default_rng(seed)
    candidates = [[[f.one() if r == i else f.zero() for r in range(n)] for i in range(n)]]
    for _ in range(draws):
        candidates.append([[f(list(map(int, rng.integers(-5, 6, size=d)))) for _ in range(n)]
                           for _ in range(n)])
    for vs in candidates:
        stacked = []
        for v in vs:
            stacked.extend(bilinear_matrix(F, v))
        if la.rank(stacked) == d * n:
            return "yes", vs
    return "unknown", None


def check_assumptions(S, seed=0, probes=20):
    """Exact determinants, the pencil polynomials, a rank verdict and a codimension probe."""
    from .descent import descend
    from .realpoints import newton_point

    f = S.field
    n, m, d = S.n, S.m, f.degree
    A = [list(r) for r in S.A]
    B = S.B_full()
    det_A = _det_K(A, f)
    det_B = _det_K([list(r) for r in S.Bm], f)
    tinv = f.galois_inverse[S.tau]
    Bt = [[x.galois(tinv) for x in row] for row in B]
    # exact pencil det(A + t * tau^{-1}(B)) in K[t] by interpolation at t = 0..n
    pts = list(range(n + 1))
    vals = [_det_K([[A[i][j] + Bt[i][j] * t for j in range(n)] for i in range(n)], f) for t in pts]
    coeffs = _interpolate_K(pts, vals, f)
    degree = max((k for k, c in enumerate(coeffs) if c), default=-1)
    per_embedding = []
    verdict_15 = "holds"
    for l in range(d):
        real = [c.embed(l) for c in coeffs]
        Al = np.array([[x.embed(l) for x in row] for row in A])
        Bl = np.array([[x.embed(l) for x in row] for row in Bt])
        v = _pencil_rank_verdict(real, degree, Al, Bl, n)
        per_embedding.append({"embedding": l, "poly": real, "degree": degree,
                              "degree_ok": degree >= m - 1, "rank_verdict": v})
        if v == "fails":
            verdict_15 = "fails"
        elif v == "inconclusive" and verdict_15 == "holds":
            verdict_15 = "inconclusive"
    sysm = descend(S.to_gqf())
    mats = np.array([[[float(x) for x in row] for row in q] for q in sysm.forms])
    best_rank = 0
    for s in range(probes):
        pt = newton_point(mats, np.zeros(d), seed=seed + s, starts=1, avoid_origin=True)
        if pt.residual < 1e-9:
            sv = np.linalg.svd(2 * np.einsum("lij,j->li", mats, pt.xi), compute_uv=False)
            best_rank = max(best_rank, int(np.sum(sv > 1e-8 * max(1.0, sv.max()))))
    return {
        "det_A": det_A, "det_B": det_B,
        "assumption_1_2_dets": bool(det_A) and bool(det_B),
        "pencil": per_embedding,
        "assumption_1_6": degree >= m - 1,
        "assumption_1_5": verdict_15,
        "codimension_probe": {"max_jacobian_rank": best_rank, "target": d,
                              "verdict": "consistent" if best_rank == d else "not observed",
                              "heuristic": True},
    }


def _interpolate_K(xs, ys, field):
    """Coefficients (ascending) of the polynomial through (xs, ys) with values in K."""
    k = len(xs)
    V = [[Fraction(x) ** p for p in range(k)] for x in xs]
    Vinv = la.inverse(V)
    return [sum((ys[j] * Vinv[p][j] for j in range(k)), field.zero()) for p in range(k)]


def _pencil_rank_verdict(poly, degree, Al, Bl, n, tol=1e-10, band=1e-6):
    if degree == 0 or n == 1:
        return "holds"
    scale = max(1.0, np.abs(Al).max(), np.abs(Bl).max())
    if degree < 0:
        t = 0.3183
        sv = np.linalg.svd(Al + t * Bl, compute_uv=False)
        return "fails" if n >= 2 and sv[-2] < tol * scale else "inconclusive"
    roots = np.roots(list(reversed(poly[:degree + 1])))
    verdict = "holds"
    for r in roots:
        if abs(r.imag) > 1e-8 * max(1.0, abs(r)):
            continue
        sv = np.linalg.svd(Al + r.real * Bl, compute_uv=False)
        second = sv[-2] if n >= 2 else sv[-1]
        s = second / (scale * max(1.0, abs(r.real)))
        if s < tol:
            return "fails"
        if s < band:
            verdict = "inconclusive"
    return verdict
