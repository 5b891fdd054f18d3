"""Local densities, the truncated singular series, the singular integral and the main-term constant."""
import itertools
import math
from dataclasses import dataclass, field as dfield
from fractions import Fraction

import numpy as np
from sympy import isprime, primerange

from .descent import DescendedSystem, descend
from .errors import BudgetError, InvalidInput
from .field import FieldElement
from .realpoints import RealPoint, jacobian, newton_point, quadric_values

DEFAULT_BUDGET = 10 ** 9
DEFAULT_TRANSFORM_BUDGET = 3 * 10 ** 10     # floating multiply-adds per exact transform
_FLOAT_EXACT = 2 ** 53


def _as_system(F):
    return F if isinstance(F, DescendedSystem) else descend(F)


def _target_coords(S, N):
    N = S.field(N)
    if not N.is_integral():
        raise InvalidInput("N must be integral")
    return [int(c) for c in N.coords]


# ---------------------------------------------------------------- exact counting mod p^l
def _variable_blocks(S):
    """Groups of x-variables that do not interact in any descended form."""
    n, d = S.n, S.d
    parent = list(range(n))

    def root(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for M in S.forms:
        for a in range(d * n):
            for b in range(d * n):
                if M[a][b]:
                    ra, rb = root(a % n), root(b % n)
                    if ra != rb:
                        parent[ra] = rb
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    return sorted(groups.values())


def _block_histogram(S, block, M, budget):
    """Counts of F_block(x) mod M over x in (o/M)^block, flattened base M over the d coordinates."""
    n, d = S.n, S.d
    D, A = S.integer_forms()
    k = len(block)
    nvars = d * k
    total = M ** nvars
    if total > budget:
        raise BudgetError(f"block of {k} variables needs {total} residues mod {M} (budget {budget})")
    uidx = [kk * n + i for kk in range(d) for i in block]
    sub = A[:, uidx][:, :, uidx]
    hist = np.zeros(M ** d, dtype=np.int64)
    place = M ** np.arange(d - 1, -1, -1, dtype=np.int64)
    chunk = 1 << 20
    for start in range(0, total, chunk):
        ids = np.arange(start, min(total, start + chunk), dtype=np.int64)
        U = np.array(np.unravel_index(ids, (M,) * nvars), dtype=np.int64).T
        raw = np.einsum("na,pab,nb->np", U, sub, U)
        if D != 1:
            raw //= D
        hist += np.bincount((raw % M) @ place, minlength=M ** d)
    return hist


def _ntt_primes(M, bound):
    """Primes q = 1 mod M with M*q^2 < 2^53 whose product exceeds bound."""
    qmax = min(1 << 26, math.isqrt(_FLOAT_EXACT // M))
    out, prod = [], 1
    k = (qmax - 1) // M
    while prod <= bound:
        if k <= 0:
            raise BudgetError(f"modulus {M} too large for exact transforms")
        q = k * M + 1
        if isprime(q):
            out.append(q)
            prod *= q
        k -= 1
    return out


def _root_of_unity(q, M):
    from sympy import primitive_root
    return pow(primitive_root(q), (q - 1) // M, q)


def _transform(H, W, q, d):
    """Multi-axis DFT over F_q using float64 matmuls that stay exact below 2^53."""
    M = W.shape[0]
    X = (H % q).astype(np.float64).reshape((M,) * d)
    for ax in range(d):
        X = np.moveaxis(np.tensordot(W, X, axes=([1], [ax])), 0, ax)
        X = np.fmod(X, q)
    return X.astype(np.int64).reshape(-1)


def _combine_histograms(hists, target, M, d, bound):
    """Number of ways to pick one value per histogram summing to target mod M, exactly."""
    if len(hists) == 1:
        idx = 0
        for c in target:
            idx = idx * M + c % M
        return int(hists[0][idx])
    size = M ** d
    grid = np.array(np.unravel_index(np.arange(size), (M,) * d)).T
    expo = (-(grid @ (np.array(target, dtype=np.int64) % M))) % M
    residues = []
    primes = _ntt_primes(M, bound)
    uniq = {}
    for h in hists:
        uniq.setdefault(h.tobytes(), [h, 0])[1] += 1
    for q in primes:
        w = _root_of_unity(q, M)
        table = np.array([pow(w, e, q) for e in range(M)], dtype=np.int64)
        W = table[np.outer(np.arange(M), np.arange(M)) % M].astype(np.float64)
        prod = np.ones(size, dtype=np.int64)
        for h, mult in uniq.values():
            T = _transform(h, W, q, d)
            for _ in range(mult):
                prod = (prod * T) % q
        s = int(((prod * table[expo]) % q).sum() % q)
        residues.append(s * pow(size, -1, q) % q)
    # Chinese remaindering
    x, mod = 0, 1
    for r, q in zip(residues, primes):
        t = ((r - x) * pow(mod, -1, q)) % q
        x += mod * t
        mod *= q
    if x > bound:
        raise ArithmeticError("reconstructed count exceeds its bound")
    return x


def local_count(F, N, p, l, budget=DEFAULT_BUDGET, transform_budget=DEFAULT_TRANSFORM_BUDGET):
    """#{x in (o/p^l)^n : F(x) = N mod p^l}, exactly."""
    if l < 1:
        raise InvalidInput("level must be at least 1")
    S = _as_system(F)
    M = p ** l
    target = _target_coords(S, N)
    blocks = _variable_blocks(S)
    if len(blocks) > 1 and S.d * M ** (S.d + 1) > transform_budget:
        raise BudgetError(f"transforms mod {M} need about {S.d * M ** (S.d + 1):.2e} operations "
                          f"(budget {transform_budget:.2e}); lower the level")
    hists = [_block_histogram(S, b, M, budget) for b in blocks]
    bound = M ** (S.d * S.n)
    return _combine_histograms(hists, target, M, S.d, bound)


def local_density(F, N, p, l, budget=DEFAULT_BUDGET, transform_budget=DEFAULT_TRANSFORM_BUDGET):
    """p^(-d l (n-1)) #{x mod p^l : F(x) = N}, as an exact Fraction."""
    S = _as_system(F)
    return Fraction(local_count(S, N, p, l, budget, transform_budget), p ** (S.d * l * (S.n - 1)))


def local_count_bruteforce(F, N, p, l, representation="descended", budget=10 ** 6):
    """Plain enumeration, either of the descended system over Z/p^l or of F over o/p^l."""
    M = p ** l
    if representation == "descended":
        S = _as_system(F)
        total = M ** S.nvars
        if total > budget:
            raise BudgetError(f"{total} points exceed budget {budget}")
        target = np.array(_target_coords(S, N), dtype=np.int64)
        U = np.array(np.unravel_index(np.arange(total), (M,) * S.nvars), dtype=np.int64).T
        return int(np.all((S.values_array(U) - target) % M == 0, axis=1).sum())
    if representation == "field":
        f = F.field
        from .forms import evaluate
        N = f(N)
        total = M ** (f.degree * F.n)
        if total > budget:
            raise BudgetError(f"{total} points exceed budget {budget}")
        reps = [FieldElement(f, c) for c in itertools.product(range(M), repeat=f.degree)]
        count = 0
        for x in itertools.product(reps, repeat=F.n):
            diff = evaluate(F, list(x)) - N
            if all(c.denominator == 1 and c.numerator % M == 0 for c in diff.coords):
                count += 1
        return count
    raise InvalidInput("representation must be 'descended' or 'field'")


# ---------------------------------------------------------------- p-adic solubility certificate
def _valuation_int(x, p):
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _minor_valuation(J, p):
    """Smallest p-adic valuation among the d x d minors of an integer d x D matrix."""
    d, D = J.shape
    best = math.inf
    for cols in itertools.combinations(range(D), d):
        sub = [[int(J[r][c]) for c in cols] for r in range(d)]
        det = int(round(float(np.linalg.det(np.array(sub, dtype=float))))) if d > 3 else _int_det(sub)
        best = min(best, _valuation_int(det, p))
        if best == 0:
            return 0
    return best


def _int_det(m):
    if len(m) == 1:
        return m[0][0]
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return sum((-1) ** c * m[0][c] * _int_det([row[:c] + row[c + 1:] for row in m[1:]]) for c in range(len(m)))


def padic_solution_certificate(F, N, p, seed=0, batches=20, batch_size=200_000, max_level=None):
    """Search for x with F(x) = N mod p^L and L >= 2e+1, e the valuation of the Jacobian minors.

    Such an x lifts to a p-adic solution with Jacobian of full rank (Hensel). With e = 0
    this is a solution mod p with nonvanishing gradient.
    """
    S = _as_system(F)
    D, A = S.integer_forms()
    target = np.array(_target_coords(S, N), dtype=np.int64)
    rng = np.random.default_rng([seed, p])
    d = S.d
    max_level = max_level or (2 * d * _valuation_int(2 * D, p) + 1 if p == 2 or D % p == 0 else 1) + 2
    for L in range(1, max_level + 1):
        M = p ** L
        for _ in range(batches):
            U = rng.integers(0, M, size=(batch_size, S.nvars), dtype=np.int64)
            hit = np.all((S.values_array(U) - target) % M == 0, axis=1)
            for u in U[np.nonzero(hit)[0][:50]]:
                J2 = np.einsum("pab,b->pa", A, u) * 2
                if np.any(J2 % D):
                    continue
                e = _minor_valuation(J2 // D, p)
                if L >= 2 * e + 1:
                    return {"x": u.tolist(), "level": L, "minor_valuation": e}
            if hit.any() and L < max_level:
                break
    return None


# ---------------------------------------------------------------- singular series
@dataclass
class PrimeDensity:
    p: int
    l_used: int
    value: Fraction             # sigma_p at level l_used, exact
    stabilized: bool            # sigma_p(l_used) == sigma_p(l_used + 1) and a p-adic solution certified
    levels: dict = dfield(default_factory=dict)
    certificate: dict = None
    geometric_limit: Fraction = None
    note: str = ""

    def to_json(self):
        return {"p": self.p, "l_used": self.l_used, "sigma_p": str(self.value), "sigma_p_float": float(self.value),
                "stabilized": self.stabilized, "levels": {str(k): str(v) for k, v in self.levels.items()},
                "geometric_limit": None if self.geometric_limit is None else str(self.geometric_limit),
                "certificate": self.certificate, "note": self.note}


@dataclass
class SeriesResult:
    value: float
    table: list
    truncated_half: float
    tail_sensitivity: float
    p_max: int
    extrapolated: float = None

    @property
    def obstructed(self):
        return any(r.value == 0 for r in self.table)

    @property
    def all_stabilized(self):
        return all(r.stabilized for r in self.table)


def _geometric_limit(levels):
    """Limit of sigma(l) if the last two ratios of consecutive differences agree exactly."""
    ls = sorted(levels)
    if len(ls) < 4:
        return None
    diffs = [levels[ls[i + 1]] - levels[ls[i]] for i in range(len(ls) - 1)]
    if not diffs[-2] or not diffs[-3]:
        return None
    r1, r2 = diffs[-2] / diffs[-3], diffs[-1] / diffs[-2]
    if r1 != r2 or not 0 < abs(r2) < 1:
        return None
    return levels[ls[-1]] + diffs[-1] * r2 / (1 - r2)


def prime_density(F, N, p, l_max=3, budget=DEFAULT_BUDGET, seed=0, transform_budget=DEFAULT_TRANSFORM_BUDGET):
    """sigma_p at the first level where it repeats exactly, else at the last affordable level."""
    S = _as_system(F)
    levels = {}
    note = ""
    stable_at = None
    for l in range(1, l_max + 1):
        try:
            levels[l] = local_density(S, N, p, l, budget, transform_budget)
        except BudgetError as exc:
            note = f"level {l} skipped: {exc}"
            break
        if levels[l] == 0:
            break
        if l > 1 and levels[l] == levels[l - 1]:
            stable_at = l - 1
            break
    if not levels:
        return PrimeDensity(p, 0, Fraction(1), False, levels, None, None, note or "no level computed")
    last = max(levels)
    if levels[last] == 0:
        return PrimeDensity(p, last, Fraction(0), True, levels, None, Fraction(0), "no solutions: local obstruction")
    cert = padic_solution_certificate(S, N, p, seed=seed)
    if stable_at is not None:
        return PrimeDensity(p, stable_at, levels[stable_at], cert is not None, levels, cert, levels[stable_at],
                            note if cert else "no nonsingular p-adic solution certified")
    return PrimeDensity(p, last, levels[last], False, levels, cert, _geometric_limit(levels),
                        note or f"no exact repetition up to level {l_max}")


def singular_series(F, N, p_max=50, l_max=3, budget=DEFAULT_BUDGET, seed=0,
                    transform_budget=DEFAULT_TRANSFORM_BUDGET):
    """Product of local densities over p <= p_max, with per-prime records."""
    S = _as_system(F)
    table = [prime_density(S, N, p, l_max, budget, seed, transform_budget) for p in primerange(2, p_max + 1)]
    value = math.prod(float(r.value) for r in table)
    half = math.prod(float(r.value) for r in table if r.p <= p_max // 2)
    tail = abs(value - half) / value if value else 0.0
    extra = math.prod(float(r.geometric_limit if r.geometric_limit is not None else r.value) for r in table)
    return SeriesResult(value, table, half, tail, p_max, extra)


# ---------------------------------------------------------------- real points and the singular integral
def find_real_point(S, t, seed=0, starts=50, scale=1.0, tol=1e-10, sv_floor=1e-6):
    """Point xi with Q_l(xi) = t_l and Jacobian of rank d; a not-found report otherwise."""
    S = _as_system(S)
    mats = S.float_forms()
    t = np.asarray(t, dtype=float)
    return newton_point(mats, t, seed=seed, starts=starts, scale=scale, tol=tol, sv_floor=sv_floor)


def smooth_weight(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def region_weight(u, xi, delta, weight):
    """w(|u - xi|_sup / delta) or the indicator of the box."""
    r = np.max(np.abs(u - xi), axis=-1) / delta
    if weight == "indicator":
        return (r <= 1).astype(float)
    if weight == "smooth":
        return smooth_weight(r)
    raise InvalidInput("weight must be 'indicator' or 'smooth'")


@dataclass
class IntegralEstimate:
    value: float
    stderr: float
    value_half_eps: float
    stderr_half_eps: float
    eps: float
    samples: int
    hits: int
    method: str
    seed: int

    @property
    def rel_stderr(self):
        return self.stderr / abs(self.value) if self.value else math.inf

    def to_json(self):
        return {k: getattr(self, k) for k in ("value", "stderr", "value_half_eps", "stderr_half_eps",
                                               "eps", "samples", "hits", "method", "seed")}


def _generator(seed):
    return np.random.Generator(np.random.Philox(seed))


def _sphere_area(D):
    return 2 * math.pi ** (D / 2) / math.gamma(D / 2)


def _mc_slab(mats, t, xi, delta, samples, eps, weight, rng, chunk):
    d, D = mats.shape[0], mats.shape[1]
    vals = {1: [], 2: []}
    hits = 0
    vol = (2 * delta) ** D
    for s in range(0, samples, chunk):
        k = min(chunk, samples - s)
        u = xi + delta * rng.uniform(-1, 1, size=(k, D))
        w = region_weight(u, xi, delta, weight)
        dev = np.abs(quadric_values(mats, u) - t).max(axis=1)
        for div in (1, 2):
            e = eps / div
            vals[div].append(w * (dev <= e) * vol / (2 * e) ** d)
        hits += int((dev <= eps).sum())
    return {k: np.concatenate(v) for k, v in vals.items()}, hits


def _mc_radial(mats, t, xi, delta, samples, eps, weight, rng, chunk):
    d, D = mats.shape[0], mats.shape[1]
    lead = int(np.argmax(np.abs(t)))
    others = [l for l in range(d) if l != lead]
    area = _sphere_area(D)
    vals = {1: [], 2: []}
    hits = 0
    for s in range(0, samples, chunk):
        k = min(chunk, samples - s)
        th = rng.normal(size=(k, D))
        th /= np.linalg.norm(th, axis=1, keepdims=True)
        qv = quadric_values(mats, th)
        ql = qv[:, lead]
        ok = ql * t[lead] > 0
        r0 = np.zeros(k)
        r0[ok] = np.sqrt(t[lead] / ql[ok])
        u = th * r0[:, None]
        w = region_weight(u, xi, delta, weight) * ok
        jac = np.zeros(k)
        jac[ok] = area * r0[ok] ** (D - 1) / (2 * r0[ok] * np.abs(ql[ok]))
        dev = np.abs(quadric_values(mats, u)[:, others] - t[others]).max(axis=1) if others else np.zeros(k)
        for div in (1, 2):
            e = eps / div
            vals[div].append(w * jac * (dev <= e) / (2 * e) ** len(others))
        hits += int(((dev <= eps) & (w > 0)).sum())
    return {k: np.concatenate(v) for k, v in vals.items()}, hits


def singular_integral(S, t, xi, delta=0.25, samples=1_000_000, eps=None, weight="indicator",
                      method="auto", seed=0, chunk=200_000):
    """Monte-Carlo estimate of the weighted real density of {Q_l(u) = t_l} near xi.

    ``slab`` samples the box xi + [-delta, delta]^D uniformly and counts points with
    |Q_l - t_l| <= eps for all l. ``radial`` parametrises the level set of the largest
    |t_l| along rays from the origin and uses slabs for the remaining equations; it is
    chosen by ``auto`` whenever t is nonzero. Both report the estimate at eps/2 too.
    """
    S = _as_system(S)
    mats = S.float_forms()
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if method == "auto":
        method = "radial" if np.any(t != 0) else "slab"
    if eps is None:
        scale = float(np.max(np.abs(t))) if np.any(t != 0) else delta ** 2
        eps = 0.02 * scale
    rng = _generator(seed)
    if method == "slab":
        vals, hits = _mc_slab(mats, t, xi, delta, samples, eps, weight, rng, chunk)
    elif method == "radial":
        if not np.any(t != 0):
            raise InvalidInput("radial method needs a nonzero target")
        vals, hits = _mc_radial(mats, t, xi, delta, samples, eps, weight, rng, chunk)
    else:
        raise InvalidInput("method must be 'auto', 'slab' or 'radial'")
    if hits == 0:
        raise InvalidInput("no Monte-Carlo sample hit the slab; increase delta, eps or samples")
    est = [float(np.mean(vals[k])) for k in (1, 2)]
    se = [float(np.std(vals[k], ddof=1) / math.sqrt(samples)) for k in (1, 2)]
    return IntegralEstimate(est[0], se[0], est[1], se[1], eps, samples, hits, method, seed)


# ---------------------------------------------------------------- main term
@dataclass
class DensityReport:
    N: list
    P: float
    series: SeriesResult
    sigma_infinity: IntegralEstimate
    sigma_infinity_zero: object
    constant_c: float
    constant_c_err: float
    constant_c_literal: float
    predicted: float
    predicted_err: float
    exponent: int
    xi: list
    delta: float
    weight: str
    seed: int
    notes: list = dfield(default_factory=list)

    @property
    def obstructed(self):
        return self.series.obstructed

    def to_json(self):
        return {
            "N": self.N, "P": self.P, "delta": self.delta, "weight": self.weight, "seed": self.seed,
            "xi": self.xi, "singular_series": self.series.value,
            "singular_series_half": self.series.truncated_half,
            "tail_sensitivity": self.series.tail_sensitivity, "p_max": self.series.p_max,
            "singular_series_extrapolated": self.series.extrapolated,
            "all_primes_stabilized": self.series.all_stabilized,
            "primes": [r.to_json() for r in self.series.table],
            "sigma_infinity": self.sigma_infinity.to_json() if self.sigma_infinity else None,
            "sigma_infinity_t0": self.sigma_infinity_zero,
            "constant_c": self.constant_c, "constant_c_err": self.constant_c_err,
            "constant_c_literal_normalisation": self.constant_c_literal,
            "predicted": self.predicted, "predicted_err": self.predicted_err,
            "exponent": self.exponent, "obstructed": self.obstructed, "notes": self.notes,
        }


def main_term_constant(F, N, P, p_max=50, l_max=3, delta=0.25, samples=1_000_000, weight="indicator",
                       seed=0, budget=DEFAULT_BUDGET, xi=None, eps=None, series=None):
    """c = S(N) * sigma_inf(N/P^2) in integer-coordinate normalisation; prediction c * P^((n-2)d)."""
    S = _as_system(F)
    f = S.field
    n, d = S.n, S.d
    Nc = _target_coords(S, N)
    series = series or singular_series(S, N, p_max, l_max, budget, seed)
    exponent = (n - 2) * d
    notes = []
    t = np.array(Nc, dtype=float) / P ** 2
    if xi is None:
        pt = find_real_point(S, t, seed=seed, scale=max(1e-3, math.sqrt(np.abs(t).max() or 1.0)))
        if not pt.found:
            notes.append("no nonsingular real point: sigma_infinity taken as 0")
        xi = pt.xi if pt.found else None
    sig = None
    if series.value == 0:
        notes.append("singular series vanishes: local obstruction")
    if xi is not None:
        sig = singular_integral(S, t, xi, delta, samples, eps, weight, "auto", seed)
    sig0 = None
    if xi is not None:
        try:
            z = singular_integral(S, np.zeros(d), xi, delta, max(samples // 4, 1000), None, weight, "slab", seed)
            sig0 = z.to_json()
        except InvalidInput as exc:
            sig0 = {"value": 0.0, "note": str(exc)}
    sval = sig.value if sig else 0.0
    c = series.value * sval
    rel = math.hypot(sig.rel_stderr if sig and sval else 0.0, series.tail_sensitivity)
    c_err = abs(c) * rel
    literal = c / f.discriminant ** (n - 0.5)
    return DensityReport(Nc, P, series, sig, sig0, c, c_err, literal, c * P ** exponent, c_err * P ** exponent,
                         exponent, None if xi is None else np.asarray(xi).tolist(), delta, weight, seed, notes)
