"""Descent of a generalised quadratic form to d rational quadrics in dn variables, and back.

Writing X_i = sum_k U[k, i] w_k, the form satisfies F(X) = sum_p w_p Q_p(U) where the
variables of each Q_p are ordered k-major: U[k, i] sits at position k*n + i.
"""
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg as la
from .errors import InvalidInput
from .field import FieldElement
from .forms import GQF


@dataclass
class DescendedSystem:
    field: object
    n: int
    forms: list                      # d symmetric dn x dn matrices of Fractions, Q_p(u) = u^T M_p u
    shift: tuple = None              # (N_1, ..., N_d) or None
    _int_cache: dict = dfield(default_factory=dict, repr=False, compare=False)

    @property
    def d(self):
        return self.field.degree

    @property
    def nvars(self):
        return self.d * self.n

    def __eq__(self, other):
        return (isinstance(other, DescendedSystem) and self.n == other.n and self.field == other.field
                and self.forms == other.forms and self.shift == other.shift)

    def values(self, u):
        """Exact values (Q_1(u), ..., Q_d(u))."""
        u = [Fraction(x) for x in u]
        return [sum(u[a] * sum(row[b] * u[b] for b in range(len(u)) if row[b]) for a, row in enumerate(M)
                    if u[a]) for M in self.forms]

    def integer_forms(self):
        """(D, A) with A an int64 array of D * M_p; D clears every denominator."""
        if "int" not in self._int_cache:
            D = la.common_denominator(x for M in self.forms for row in M for x in row)
            A = np.array([[[int(x * D) for x in row] for row in M] for M in self.forms], dtype=np.int64)
            self._int_cache["int"] = (D, A)
        return self._int_cache["int"]

    def values_array(self, U):
        """Integer values for many integer points U (rows); requires integral outputs."""
        D, A = self.integer_forms()
        U = np.asarray(U, dtype=np.int64)
        raw = np.einsum("na,pab,nb->np", U, A, U)
        if D != 1:
            if np.any(raw % D):
                raise InvalidInput("form values are not integral at integer points")
            raw //= D
        return raw

    def float_forms(self):
        return np.array([[[float(x) for x in row] for row in M] for M in self.forms])


# ---------------------------------------------------------------- trace table
@lru_cache(maxsize=None)
def _trace_table(field):
    """T[t][u][p][k][l][m] = Tr(rho_p * w_k * tau_t(w_l) * tau_u(w_m))."""
    d = field.degree
    rho = field.dual_basis
    gens = field.integral_basis()
    conj = [[g.galois(t) for g in gens] for t in range(d)]
    table = []
    for t in range(d):
        row_t = []
        for u in range(d):
            pk = [[[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)]
            for l in range(d):
                for m in range(d):
                    e = conj[t][l] * conj[u][m]
                    for k in range(d):
                        ek = gens[k] * e
                        for p in range(d):
                            pk[p][k][l][m] = (rho[p] * ek).trace()
            row_t.append(pk)
        table.append(row_t)
    return table


def descend(F):
    """The descended system of F, computed exactly from dual-basis traces."""
    f = F.field
    d, n = f.degree, F.n
    D = d * n
    T = _trace_table(f)
    beta = [[[Fraction(0)] * D for _ in range(D)] for _ in range(d)]
    for (i, t, j, u), c in F.coeffs.items():
        tab = T[t][u]
        ck = c.coords
        for p in range(d):
            tp = tab[p]
            Bp = beta[p]
            for l in range(d):
                for m in range(d):
                    val = sum(ck[k] * tp[k][l][m] for k in range(d) if ck[k])
                    if val:
                        Bp[l * n + i][m * n + j] += val
    return DescendedSystem(f, n, beta)


# ---------------------------------------------------------------- inverse map
def _slot_pairs(S):
    return [(a, b) for a in range(S) for b in range(a, S)]


@lru_cache(maxsize=None)
def _phi_inverse(field, n):
    """Exact inverse of the linear map coefficient tensor -> descended coefficients."""
    d = field.degree
    slots = _slot_pairs(n * d)          # slot s = i*d + t
    upairs = _slot_pairs(n * d)         # u-index pairs (a <= b)
    columns = []
    for k in range(d):
        wk = field.gen(k)
        for s1, s2 in slots:
            i, t = divmod(s1, d)
            j, u = divmod(s2, d)
            sysm = descend(GQF(field, n, {(i, t, j, u): wk}))
            columns.append([sysm.forms[p][a][b] for p in range(d) for a, b in upairs])
    phi = la.transpose(columns)
    return la.inverse(phi)


def lift(S):
    """The unique generalised quadratic form whose descended system is S (shift ignored)."""
    f = S.field
    d, n = f.degree, S.n
    D = d * n
    if len(S.forms) != d or any(len(M) != D or any(len(r) != D for r in M) for M in S.forms):
        raise InvalidInput("descended system has the wrong shape")
    for M in S.forms:
        for a in range(D):
            for b in range(a + 1, D):
                if M[a][b] != M[b][a]:
                    raise InvalidInput("descended forms must be symmetric")
    upairs = _slot_pairs(D)
    rhs = [Fraction(S.forms[p][a][b]) for p in range(d) for a, b in upairs]
    sol = la.matvec(_phi_inverse(f, n), rhs)
    slots = _slot_pairs(n * d)
    acc = {}
    idx = 0
    for k in range(d):
        for s1, s2 in slots:
            v = sol[idx]
            idx += 1
            if v:
                coords = acc.setdefault((s1, s2), [Fraction(0)] * d)
                coords[k] += v
    entries = {}
    for (s1, s2), coords in acc.items():
        i, t = divmod(s1, d)
        j, u = divmod(s2, d)
        entries[i, t, j, u] = FieldElement(f, coords)
    return GQF(f, n, entries)


# ---------------------------------------------------------------- shift, W, transport
def shift(S, N):
    N = S.field(N)
    if not N.is_integral():
        raise InvalidInput("N must be integral")
    return DescendedSystem(S.field, S.n, S.forms, tuple(int(c) for c in N.coords))


def w_matrix(field, n):
    """Block matrix with block (l, k) equal to rho_l(w_k) * I_n."""
    return np.kron(field.embeddings, np.eye(n))


def to_u(x):
    """Flatten x in o^n to integer coordinates, k-major."""
    n = len(x)
    d = x[0].field.degree
    u = [0] * (d * n)
    for i, xi in enumerate(x):
        for k, c in enumerate(xi.coords):
            if c.denominator != 1:
                raise InvalidInput("transport expects integral vectors")
            u[k * n + i] = int(c)
    return u


def to_x(field, n, u):
    d = field.degree
    if len(u) != d * n:
        raise InvalidInput("coordinate vector has the wrong length")
    return [FieldElement(field, [u[k * n + i] for k in range(d)]) for i in range(n)]


def transport(obj, field=None, n=None):
    """x (list of elements) -> u (ints), or u -> x when field and n are given."""
    if field is None:
        return to_u(obj)
    return to_x(field, n, obj)


def system_to_json(S):
    return {"n": S.n, "d": S.d,
            "forms": [[str(x) for row in M for x in row] for M in S.forms],
            "shift": list(S.shift) if S.shift is not None else None}


def system_from_json(field, obj):
    try:
        n, d = int(obj["n"]), int(obj["d"])
        raw = obj["forms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed system: {exc}") from exc
    if d != field.degree or len(raw) != d:
        raise InvalidInput("system degree does not match the field")
    D = d * n
    forms = []
    for p, M in enumerate(raw):
        flat = [x for row in M for x in row] if M and isinstance(M[0], list) else M
        if len(flat) != D * D:
            raise InvalidInput(f"forms[{p}] has {len(flat)} entries, expected {D * D}")
        forms.append([[Fraction(flat[a * D + b]) for b in range(D)] for a in range(D)])
    sh = obj.get("shift")
    return DescendedSystem(field, n, forms, tuple(int(x) for x in sh) if sh is not None else None)
