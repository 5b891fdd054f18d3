"""Complete exponential sums S_b(N; m) attached to a generalised quadratic form.

S_b(N; m) = sum_{a in (o/b)*} psi(-gamma a N) sum_{x mod Gb} psi(gamma a F(x) + m.x)

where Gb is the G-invariant ideal of b and psi(gamma .) a primitive character mod b.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg as la
from .characters import (exp_phases, exp_phases_ld, find_primitive_gamma, fsum_complex, linear_phase, phase,
                         psi, sum_complex_ld, trace_pairing)
from .descent import descend
from .errors import BudgetError, InvalidInput
from .field import FieldElement
from .forms import bilinear, bilinear_matrix, diagonal_data, dual_form, evaluate
from .ideal import (Ideal, _small_elements, divisors, g_invariant_ideal, is_prime, moebius, residue_units_array,
                    unit_ideal, valuation)

DEFAULT_BUDGET = 5_000_000


@lru_cache(maxsize=256)
def _descended(F):
    return descend(F)


def _gb(F, b):
    return g_invariant_ideal(b, F.G_set or [0])


def _zero_vector(F):
    return [F.field.zero()] * F.n


def _check_dual(F, Gb, m):
    dual = Gb.trace_dual()
    m = [F.field(x) for x in m]
    if len(m) != F.n:
        raise InvalidInput("m has the wrong length")
    for i, x in enumerate(m):
        if not dual.contains(x):
            raise InvalidInput(f"m[{i}] is not in the trace dual of the G-invariant ideal")
    return m


# ---------------------------------------------------------------- H lattice
@dataclass
class HLattice:
    lattice: la.Lattice        # in Z^{dn}, coordinate k of h_j at k*n + j
    b: Ideal
    Gb: Ideal
    n: int
    index_outer: int           # |o^n / H|
    index_inner: int           # |H / Gb^n|

    def basis_vectors(self, field):
        n, d = self.n, field.degree
        out = []
        for v in self.lattice.basis():
            out.append([FieldElement(field, [v[k * n + j] for k in range(d)]) for j in range(n)])
        return out


def ideal_power_lattice(I, n):
    """I^n inside Q^{dn} with the k-major flattening."""
    d = I.field.degree
    gens = []
    for j in range(n):
        for z in I.lattice.basis():
            v = [Fraction(0)] * (d * n)
            for k in range(d):
                v[k * n + j] = z[k]
            gens.append(v)
    return la.Lattice.from_generators(gens, d * n)


def product_lattice(ideals):
    """I_1 x ... x I_n inside Q^{dn}."""
    n = len(ideals)
    d = ideals[0].field.degree
    gens = []
    for j, I in enumerate(ideals):
        for z in I.lattice.basis():
            v = [Fraction(0)] * (d * n)
            for k in range(d):
                v[k * n + j] = z[k]
            gens.append(v)
    return la.Lattice.from_generators(gens, d * n)


def h_lattice(F, b):
    """{h in o^n : 2B(w_k e_j; h) in b for all k, j} with both indices."""
    f = F.field
    d, n = f.degree, F.n
    D = d * n
    bdual = b.lattice.dual().basis()
    gens = [[Fraction(int(i == j)) for i in range(D)] for j in range(D)]
    for j in range(n):
        for k in range(d):
            v = [f.zero()] * n
            v[j] = f.gen(k)
            L = bilinear_matrix(F, v)            # d x D
            for y in bdual:
                gens.append([2 * sum(y[r] * L[r][c] for r in range(d)) for c in range(D)])
    H = la.Lattice.from_generators(gens, D).dual()
    Gb = _gb(F, b)
    outer = int(H.covolume())
    inner = Fraction(Gb.norm() ** n, outer)
    if inner.denominator != 1:
        raise InvalidInput("index computation inconsistent")
    return HLattice(H, b, Gb, n, outer, int(inner))


def check_h_structure(F, H):
    """Exact checks: Gb^n in H in o^n and the index identity."""
    gbn = ideal_power_lattice(H.Gb, F.n)
    inner_direct = gbn.covolume() / H.lattice.covolume()
    return {
        "contains_Gb_n": H.lattice.contains_lattice(gbn),
        "inside_o_n": la.Lattice.standard(H.lattice.dim).contains_lattice(H.lattice),
        "index_identity": H.index_outer * H.index_inner == H.Gb.norm() ** F.n,
        "inner_index_direct": inner_direct == H.index_inner,
    }


def kappa_constants(S):
    """Constants kappa_i, kappa~_i for a special shape with H_b inside the product of kappa*b's.

    With Delta = w_l tau(w_l') - tau(w_l) w_l' != 0, A h lies in ((2 Delta)^-1 b)^n and
    Bm tau(h') in ((2 Delta)^-1 b)^m, which gives kappa = 1/(2 Delta det A) and
    kappa~ = tau^-1(1/(2 Delta det Bm)).
    """
    from .forms import _det_K

    f = S.field
    w = f.integral_basis()
    delta = None
    for l1 in range(f.degree):
        for l2 in range(l1 + 1, f.degree):
            cand = w[l1] * w[l2].galois(S.tau) - w[l1].galois(S.tau) * w[l2]
            if cand:
                delta = cand
                break
        if delta is not None:
            break
    if delta is None:
        raise InvalidInput("tau acts trivially on the basis")
    detA = _det_K([list(r) for r in S.A], f)
    detB = _det_K([list(r) for r in S.Bm], f)
    if not detA or not detB:
        raise InvalidInput("kappa constants need det A and det Bm nonzero")
    beta = (2 * delta).inverse()
    kappa = beta / detA
    kappa_t = (beta / detB).galois(f.galois_inverse[S.tau])
    return kappa, kappa_t


def kappa_inclusion(S, b, H=None):
    """Exact check that H_b lies in prod_{i<=m}(kappa b cap kappa~ b^(tau^-1)) x prod_{i>m} kappa b."""
    F = S.to_gqf()
    H = H or h_lattice(F, b)
    kappa, kappa_t = kappa_constants(S)
    f = S.field
    kb = b * kappa
    ktb = b.conjugate(f.galois_inverse[S.tau]) * kappa_t
    comps = [kb.intersect(ktb) if i < S.m else kb for i in range(S.n)]
    target = product_lattice(comps)
    return target.contains_lattice(H.lattice), (kappa, kappa_t)


def standard_diagonal_h(F, b):
    """For a standard diagonal form sum c_i X_i^2: prod ((2c_i)^-1 b cap o)."""
    data = diagonal_data(F)
    if data is None or data[1]:
        raise InvalidInput("needs a standard diagonal form")
    o = unit_ideal(F.field)
    return product_lattice([(b * (2 * c).inverse()).intersect(o) for c in data[0]])


# ---------------------------------------------------------------- evaluators
def _block_tables(F, Gb, b, m, budget):
    """For each variable block: C[y] = sum over x_block mod Gb with F_block(x) = y mod b of psi(m.x)."""
    f = F.field
    d, n = f.degree, F.n
    S = _descended(F)
    Dint, A = S.integer_forms()
    reps = Gb.residue_array()
    NG = len(reps)
    Nb = b.norm()
    lin = [linear_phase(x) for x in m]
    Dm = 1
    for _, D in lin:
        Dm = math.lcm(Dm, D)
    tables = []
    for block in F.blocks():
        k = len(block)
        total = NG ** k
        if total > budget:
            raise BudgetError(f"block of {k} variables needs {total} terms (budget {budget})")
        uidx = [kk * n + i for kk in range(d) for i in block]
        sub = A[:, uidx][:, :, uidx]
        wvec = np.concatenate([[lin[i][0][kk] * (Dm // lin[i][1]) for i in block] for kk in range(d)])
        C = np.zeros(Nb, dtype=np.clongdouble)
        chunk = max(1, 2_000_000 // max(1, k))
        for start in range(0, total, chunk):
            ids = np.arange(start, min(total, start + chunk))
            digits = np.array(np.unravel_index(ids, (NG,) * k)).T    # (rows, k)
            X = reps[digits]                                          # (rows, k, d)
            U = X.transpose(0, 2, 1).reshape(len(ids), d * k)         # k-major within block
            vals = np.einsum("na,pab,nb->np", U, sub, U)
            if Dint != 1:
                vals //= Dint
            y = b.index_array(vals)
            if Dm == 1:
                C += np.bincount(y, minlength=Nb)
                continue
            ph = exp_phases_ld(U @ wvec, Dm)
            order = np.argsort(y, kind="stable")
            ys = y[order]
            starts = np.flatnonzero(np.r_[True, ys[1:] != ys[:-1]])
            C[ys[starts]] += np.add.reduceat(ph[order], starts)
        tables.append(C)
    return tables


def s_sum_gamma(F, b, N, m=None, chi=None, budget=DEFAULT_BUDGET):
    """S_b(N; m) through a certified primitive character psi(gamma .) modulo b."""
    if not F.is_integral():
        raise InvalidInput("exponential sums need an integral form")
    f = F.field
    N = f(N)
    Gb = _gb(F, b)
    m = _check_dual(F, Gb, m if m is not None else _zero_vector(F))
    chi = chi or find_primitive_gamma(b)
    tables = _block_tables(F, Gb, b, m, budget)
    Mg, Dg = trace_pairing(chi.gamma)
    units = residue_units_array(b)
    Y = b.residue_array()
    aM = (units @ Mg) % Dg                                  # (U, d)
    Ncoords = np.array([int(c) for c in N.coords], dtype=np.int64)
    prod = exp_phases_ld(-(aM @ Ncoords), Dg)
    for C in tables:
        support = np.nonzero(np.abs(C) > 0)[0]
        Ys = Y[support]
        inner = np.zeros(len(units), dtype=np.clongdouble)
        step = max(1, 1_000_000 // max(1, len(support)))
        for s in range(0, len(units), step):
            E = exp_phases_ld(aM[s:s + step] @ Ys.T, Dg)
            inner[s:s + step] = E @ C[support]
        prod *= inner
    return sum_complex_ld(prod)


def s_sum_moebius(F, b, N, m=None, budget=DEFAULT_BUDGET):
    """S_b(N; m) = sum_{c | b} mu(b/c) N(c) sum_{x mod Gb, F(x) - N in c} psi(m.x)."""
    if not F.is_integral():
        raise InvalidInput("exponential sums need an integral form")
    f = F.field
    d, n = f.degree, F.n
    N = f(N)
    Gb = _gb(F, b)
    m = _check_dual(F, Gb, m if m is not None else _zero_vector(F))
    reps = Gb.residue_array()
    total = len(reps) ** n
    if total > budget:
        raise BudgetError(f"direct enumeration needs {total} terms (budget {budget})")
    digits = np.array(np.unravel_index(np.arange(total), (len(reps),) * n)).T
    X = reps[digits]                                        # (total, n, d)
    U = X.transpose(0, 2, 1).reshape(total, d * n)
    vals = _descended(F).values_array(U) - np.array([int(c) for c in N.coords], dtype=np.int64)
    lin = [linear_phase(x) for x in m]
    Dm = 1
    for _, D in lin:
        Dm = math.lcm(Dm, D)
    w = np.concatenate([[lin[i][0][kk] * (Dm // lin[i][1]) for i in range(n)] for kk in range(d)])
    ph = exp_phases_ld(U @ w, Dm)
    result = np.clongdouble(0)
    for c in divisors(b):
        mu = moebius(b / c)
        if mu:
            mask = c.member_mask(vals)
            result += mu * c.norm() * np.sum(ph[mask])
    return complex(float(result.real), float(result.imag))


def s_bound(F, b, H=None):
    """|(o/b)*| * |H_b / Gb^n|^(1/2) * N(Gb)^(n/2)."""
    H = H or h_lattice(F, b)
    units = len(residue_units_array(b))
    return units * math.sqrt(H.index_inner) * H.Gb.norm() ** (F.n / 2)


def s_bound_by_unit(F, b, chi=None):
    """Sum over units a of N(Gb)^(n/2) |H_a / Gb^n|^(1/2), H_a = {h : Tr(2 gamma a B(u; h)) in Z for all u}.

    u -> B(u; h) is additive but not o-linear once conjugate variables occur, so the
    character u -> psi(2 gamma a B(u; h)) can be trivial on a lattice larger than H_b.
    Squaring each inner sum with H_a in place of H_b gives a bound valid for every b.
    """
    f = F.field
    d, n = f.degree, F.n
    D = d * n
    chi = chi or find_primitive_gamma(b)
    Gb = _gb(F, b)
    traces = [f.gen(r).trace() for r in range(d)]
    # T[row][col][r] = Tr(w_r * 2B(e_row; e_col)), rows and columns k-major
    basis = []
    for k in range(d):
        for j in range(n):
            v = [f.zero()] * n
            v[j] = f.gen(k)
            basis.append(v)
    T = []
    for u in basis:
        row = []
        for h in basis:
            beta = 2 * bilinear(F, u, h)
            row.append([(f.gen(r) * beta).trace() for r in range(d)])
        T.append(row)
    std = [[Fraction(int(i == j)) for i in range(D)] for j in range(D)]
    cache = {}
    total = 0.0
    for a in residue_units_array(b).tolist():
        ga = (chi.gamma * FieldElement(f, a)).coords
        rows = tuple(tuple((sum(g * t for g, t in zip(ga, T[r][c])) % 1) for c in range(D)) for r in range(D))
        if rows not in cache:
            H = la.Lattice.from_generators(std + [list(x) for x in rows], D).dual()
            cache[rows] = Fraction(Gb.norm() ** n) / H.covolume()
        total += math.sqrt(Gb.norm() ** n * cache[rows])
    return total


def random_dual_vector(F, Gb, rng, size=3):
    dual = Gb.trace_dual().basis()
    f = F.field
    return [sum((c * int(rng.integers(-size, size + 1)) for c in dual), f.zero()) for _ in range(F.n)]


def violates_h_condition(F, H, m):
    """True if m.h lies outside the inverse different for some h in H_b."""
    f = F.field
    dinv = unit_ideal(f).trace_dual()
    for h in H.basis_vectors(f):
        dot = sum((mi * hi for mi, hi in zip(m, h)), f.zero())
        if not dinv.contains(dot):
            return True
    return False


def verify_multiplicativity(F, b1, b2, N, m=None, budget=DEFAULT_BUDGET):
    """Compare S_{b1 b2}(N; m) with S_{b1}(inv(Nb2)^2 N; Nb2 m) * S_{b2}(inv(Nb1)^2 N; Nb1 m)."""
    f = F.field
    n1, n2 = b1.norm(), b2.norm()
    if math.gcd(n1, n2) != 1:
        raise InvalidInput("b1 and b2 need coprime norms")
    N = f(N)
    m = [f(x) for x in m] if m is not None else _zero_vector(F)
    b = b1 * b2

    def S(bb, NN, mm):
        if bb.is_unit():
            return 1.0 + 0j
        return s_sum_gamma(F, bb, NN, mm, budget=budget)

    lhs = S(b, N, m)
    inv2 = pow(n2, -1, n1) if n1 > 1 else 0
    inv1 = pow(n1, -1, n2) if n2 > 1 else 0
    r1 = S(b1, N * (inv2 * inv2), [x * n2 for x in m])
    r2 = S(b2, N * (inv1 * inv1), [x * n1 for x in m])
    rhs = r1 * r2
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "factor1": r1, "factor2": r2,
            "abs_dev": abs(lhs - rhs), "rel_dev": abs(lhs - rhs) / scale if scale > 1e-12 else abs(lhs - rhs)}


# ---------------------------------------------------------------- degree-one primes
def _check_degree_one(P):
    p = P.norm()
    f = P.field
    if not isinstance(p, int) or not is_prime(p):
        raise InvalidInput("expected a prime ideal of degree one")
    if p == 2:
        raise InvalidInput("p must be odd")
    if f.discriminant % p == 0:
        raise InvalidInput("p must be unramified")
    return p


def gauss_sum(P, chi=None):
    """tau_P = sum over u mod P of psi(gamma u^2)."""
    p = _check_degree_one(P)
    chi = chi or find_primitive_gamma(P)
    c = phase(chi.gamma)                    # reps of o/P are the integers 0..p-1
    D = c.denominator
    r = np.arange(p, dtype=np.int64)
    return fsum_complex(exp_phases((r * r % D) * c.numerator, D))


def _legendre(r, p):
    t = pow(int(r), (p - 1) // 2, p)
    return -1 if t == p - 1 else t


def kloosterman_salie(P, A, B, e=0, chi=None):
    """sum over a in (o/P)* of chi(a)^e psi(gamma (a A + a^-1 B)), chi the quadratic character."""
    p = _check_degree_one(P)
    f = P.field
    chi_g = chi or find_primitive_gamma(P)
    cA = phase(chi_g.gamma * f(A))
    cB = phase(chi_g.gamma * f(B))
    D = math.lcm(cA.denominator, cB.denominator)
    qa, qb = int(cA * D), int(cB * D)
    r = np.arange(1, p, dtype=np.int64)
    rinv = np.array([pow(int(x), -1, p) for x in r], dtype=np.int64)
    vals = exp_phases((r * qa) % D + (rinv * qb) % D, D)
    if e % 2:
        vals = vals * np.array([_legendre(x, p) for x in r])
    return fsum_complex(vals)


def _find_valuation_element(P, Q, max_radius=16):
    """Element in P, not in P^2, not in Q."""
    P2 = P * P
    radius = 1
    while radius <= max_radius:
        for x in _small_elements(P, radius):
            if not P2.contains(x) and not Q.contains(x):
                return x
        radius *= 2
    raise InvalidInput("no element with the requested valuations found")


def sigma_decomposition(F, P, N, v, chi=None):
    """Split S_P(N; v) at a degree-one prime P with P^(tau^-1) != P into Sigma_0, Sigma_1, Sigma_2.

    Sigma_1 and Sigma_2 carry the factor gamma*alpha = g in their linear terms, so they are
    evaluated at v' = g^-1 v (inverse modulo N(Gb)), which makes the recombination equal
    to S_P(N; v).
    """
    f = F.field
    data = diagonal_data(F)
    if data is None:
        raise InvalidInput("sigma_decomposition needs a diagonal form")
    a, bco, tau = data
    if not bco:
        raise InvalidInput("needs at least one conjugate term")
    mm, n = len(bco), F.n
    p = _check_degree_one(P)
    prod = f(2)
    for x in a + bco:
        prod = prod * x
    if P.contains(prod):
        raise InvalidInput("P divides 2 a_1...a_n b_1...b_m")
    Pt = P.conjugate(f.galois_inverse[tau])
    if Pt == P:
        raise InvalidInput("P must differ from its conjugate")
    Gb = _gb(F, P)
    N = f(N)
    v = _check_dual(F, Gb, v)
    chi = chi or find_primitive_gamma(P)
    gamma, alpha, g = chi.gamma, chi.alpha, chi.g
    ginv = pow(g, -1, Gb.norm())
    vp = [x * ginv for x in v]
    mu = _find_valuation_element(Pt, P)          # ord_P(mu) = 0, ord_Pt(mu) = 1
    lam = _find_valuation_element(P, Pt)         # ord_P(lam) = 1, ord_Pt(lam) = 0
    lam_t = lam.galois(tau)
    r = np.arange(p, dtype=np.int64)             # residues of o/P and o/Pt are the integers
    units = r[1:]

    def quad_lin_sum(cq, cl):
        # sum_s psi(a*cq*s^2 + cl*s) for each unit a (cq, cl are exact phases of Tr)
        D = math.lcm(cq.denominator, cl.denominator)
        q = (cq * D).numerator % D
        l_ = (cl * D).numerator % D
        ph = (np.outer(units, (r * r) % D) % D * q + (r * l_)[None, :]) % D
        return exp_phases(ph, D).sum(axis=1)

    sigma1 = np.ones(len(units), dtype=complex)
    for i in range(n):
        sigma1 *= quad_lin_sum(phase_exact(gamma * mu * mu * a[i]), phase_exact(gamma * alpha * mu * vp[i]))
    sigma2 = np.ones(len(units), dtype=complex)
    for i in range(mm):
        sigma2 *= quad_lin_sum(phase_exact(gamma * lam_t * lam_t * bco[i]), phase_exact(gamma * alpha * lam * vp[i]))
    sigma0 = 1 + 0j
    for i in range(mm, n):
        c = phase_exact(gamma * alpha * lam * vp[i])
        sigma0 *= fsum_complex(exp_phases((r * c.numerator) % c.denominator, c.denominator))
    cN = phase_exact(gamma * N)
    lead = exp_phases(-(units * cN.numerator) % cN.denominator, cN.denominator)
    recomposed = sigma0 * fsum_complex(lead * sigma1 * sigma2)
    direct = s_sum_gamma(F, P, N, v)
    scale = max(abs(direct), abs(recomposed))
    rel = abs(direct - recomposed) / scale if scale > 1e-9 else abs(direct - recomposed)
    # theta exponent from the dual form
    Gf = dual_form(F)
    Gv = evaluate(Gf, v)
    ordG = valuation(P, Gv) if Gv else math.inf
    theta = 1.0 if (P.contains(N) and ordG >= -1) else 0.5
    bound = p ** (theta + (3 * n - mm) / 2)
    return {
        "sigma0": sigma0, "sigma1": sigma1, "sigma2": sigma2, "units": units,
        "recomposed": recomposed, "direct": direct, "rel_dev": rel,
        "lambda": lam, "mu": mu, "theta": theta, "ord_G_v": ordG,
        "bound": bound, "bound_ratio": abs(direct) / bound,
        "kind": "Kloosterman" if (mm + n) % 2 == 0 else "Salie",
    }


def phase_exact(x):
    return phase(x)


def gamma_independence(F, b, N, m=None, budget=DEFAULT_BUDGET):
    """Evaluate S_b(N; m) with two different certified characters."""
    chi1 = find_primitive_gamma(b)
    chi2 = find_primitive_gamma(b, skip=1)
    s1 = s_sum_gamma(F, b, N, m, chi=chi1, budget=budget)
    s2 = s_sum_gamma(F, b, N, m, chi=chi2, budget=budget)
    scale = max(abs(s1), abs(s2))
    return {"gamma1": chi1.gamma, "gamma2": chi2.gamma, "S1": s1, "S2": s2,
            "rel_dev": abs(s1 - s2) / scale if scale > 1e-9 else abs(s1 - s2)}


def prime_power_character_side(F, N, p, l, budget=DEFAULT_BUDGET):
    """sum over b | p^l of N(Gb)^-n S_b(N; 0); equals the local density at level l."""
    f = F.field
    top = Ideal.principal(f, f(p ** l))
    total = 0j
    terms = []
    for b in divisors(top):
        if b.is_unit():
            s = 1 + 0j
            ng = 1
        else:
            s = s_sum_gamma(F, b, N, None, budget=budget)
            ng = _gb(F, b).norm()
        terms.append((b, s))
        total += s / ng ** F.n
    return total, terms
