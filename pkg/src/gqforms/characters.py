"""The additive character psi(x) = exp(2 pi i Tr x) and primitive characters modulo ideals."""
import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg as la
from .errors import InvalidInput, SearchBoundError, UnsupportedPrime
from .field import FieldElement
from .ideal import (Ideal, _rational_primes, _small_elements, denominator_ideal, different_ideal,
                    divisors, factor_prime, moebius, residue_units_array, unit_ideal)


def phase(x):
    """Tr(x) reduced into [0, 1), exactly."""
    q = x.trace()
    return q - math.floor(q)


def psi(x):
    return cmath.exp(2j * math.pi * phase(x))


def exp_phases(ints, den):
    """exp(2 pi i * ints / den) for an integer array, reducing exactly before the float step."""
    r = np.mod(np.asarray(ints, dtype=np.int64), den)
    return np.exp(2j * np.pi * (r / den))


_TWO_PI_LD = 2 * np.longdouble("3.14159265358979323846264338327950288")


def exp_phases_ld(ints, den):
    """exp_phases in extended precision (complex long double)."""
    r = np.mod(np.asarray(ints, dtype=np.int64), den)
    theta = r.astype(np.longdouble) * (_TWO_PI_LD / np.longdouble(den))
    out = np.empty(theta.shape, dtype=np.clongdouble)
    out.real = np.cos(theta)
    out.imag = np.sin(theta)
    return out


def sum_complex_ld(values):
    """Pairwise sum in extended precision, rounded once to a Python complex."""
    total = np.sum(np.asarray(values, dtype=np.clongdouble))
    return complex(float(total.real), float(total.imag))


def fsum_complex(values):
    values = np.asarray(values)
    return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))


def trace_pairing(gamma):
    """Integer matrix M and denominator D with Tr(gamma * w_k * w_j) = M[k][j] / D."""
    f = gamma.field
    d = f.degree
    vals = [[(gamma * f.gen(k) * f.gen(j)).trace() for j in range(d)] for k in range(d)]
    D = la.common_denominator(x for row in vals for x in row)
    return np.array([[int(x * D) % D for x in row] for row in vals], dtype=np.int64), D


def linear_phase(m):
    """Integer vector v and denominator D with Tr(m * x) = v.x / D for x in coordinates."""
    f = m.field
    vals = [(m * f.gen(j)).trace() for j in range(f.degree)]
    D = la.common_denominator(vals)
    return np.array([int(x * D) % D for x in vals], dtype=np.int64), D


# ---------------------------------------------------------------- primitivity
def _check_modulus(b):
    if not b.is_integral() or b.is_unit():
        raise InvalidInput("modulus must be a proper nonzero integral ideal")


def primitivity_cofactor(gamma, b):
    """The ideal e with denominator_ideal(gamma) = b*e, e | different, (different/e, b) = 1; else None."""
    _check_modulus(b)
    if not gamma:
        return None
    f = b.field
    a = denominator_ideal(gamma)
    if not b.contains_ideal(a):
        return None
    e = a / b
    dif = different_ideal(f)
    if not e.is_integral() or not e.contains_ideal(dif):
        return None
    if dif / e + b != unit_ideal(f):
        return None
    return e


def is_primitive(gamma, b):
    return primitivity_cofactor(gamma, b) is not None


def is_character_mod(gamma, b):
    """psi(gamma*.) is constant on cosets of b."""
    return all(phase(gamma * z) == 0 for z in b.basis())


def is_primitive_bruteforce(gamma, b):
    """Direct definition: a character mod b not factoring through any proper quotient."""
    _check_modulus(b)
    if not is_character_mod(gamma, b):
        return False
    for c in divisors(b):
        if c != b and is_character_mod(gamma, c):
            return False
    return True


@dataclass(frozen=True)
class PrimitiveCharacter:
    modulus: Ideal
    gamma: FieldElement
    alpha: FieldElement
    g: int
    nu: FieldElement
    p1: Ideal
    e: Ideal

    def __call__(self, x):
        return psi(self.gamma * x)


def _is_prime_power(n):
    ps = _rational_primes(n)
    if len(ps) != 1:
        return None
    p = ps[0]
    f = 0
    while n % p == 0:
        n //= p
        f += 1
    return p, f


def _prime_ideal_check(c, p, f):
    if f == 1:
        return True
    try:
        return any(c == P for P, _, _ in factor_prime(c.field, p))
    except UnsupportedPrime:
        return False


@lru_cache(maxsize=4096)
def find_primitive_gamma(b, max_radius=64, skip=0):
    """Certified gamma = g/alpha with psi(gamma*.) primitive modulo b.

    alpha runs over small elements of b*different until (alpha) = b*different*p1 with p1
    prime and coprime to every conjugate of b*different; g is the norm of a small
    nu in p1 coprime to the same ideals. ``skip`` returns a later certified gamma, which
    gives a second character for independence checks.
    """
    _check_modulus(b)
    f = b.field
    dif = different_ideal(f)
    bd = b * dif
    bd_inv = bd.inverse()
    nbd = bd.norm()
    bad = b.norm() * f.discriminant
    radius = 2
    seen = set()
    while radius <= max_radius:
        for alpha in _small_elements(bd, radius):
            if alpha.coords in seen:
                continue
            seen.add(alpha.coords)
            q, r = divmod(abs(int(alpha.norm())), nbd)
            if r or q < 2:
                continue
            pf = _is_prime_power(q)
            if pf is None or bad % pf[0] == 0:
                continue
            p1 = Ideal.principal(f, alpha) * bd_inv
            if not p1.is_integral() or not _prime_ideal_check(p1, *pf):
                continue
            nu = next(v for v in _small_elements(p1, 4 * radius)
                      if math.gcd(int(v.norm()), bad) == 1)
            g = abs(int(nu.norm()))
            gamma = f(g) / alpha
            e = primitivity_cofactor(gamma, b)
            if e is None:
                continue
            if skip:
                skip -= 1
                continue
            return PrimitiveCharacter(b, gamma, alpha, g, nu, p1, e)
        radius *= 2
    raise SearchBoundError(f"no certified primitive character found within radius {max_radius}")


def verify_certificate(chi):
    """Re-check the defining conditions of the construction exactly."""
    b, f = chi.modulus, chi.modulus.field
    dif = different_ideal(f)
    o = unit_ideal(f)
    ok_alpha = Ideal.principal(f, chi.alpha) == b * dif * chi.p1
    coprime = all(chi.p1 + (b.conjugate(t) * dif) == o for t in range(f.degree))
    ok_g = chi.p1.contains(f(chi.g)) and all(
        Ideal.principal(f, chi.g) + b.conjugate(t) * dif == o for t in range(f.degree))
    ok_e = primitivity_cofactor(chi.gamma, b) == chi.e
    return ok_alpha and coprime and ok_g and ok_e


# ---------------------------------------------------------------- character sums
def primitive_char_sum(b, x, chi=None):
    """Sum over a in (o/b)* of psi(gamma*a*x)."""
    chi = chi or find_primitive_gamma(b)
    x = b.field(x)
    units = residue_units_array(b)
    if not x:
        return complex(len(units))
    vec, D = linear_phase(chi.gamma * x)
    return fsum_complex(exp_phases(units @ vec, D))


def primitive_char_sum_moebius(b, x):
    """Same sum via sum_{c | b} mu(b/c) N(c) [x in c]."""
    x = b.field(x)
    total = 0
    for c in divisors(b):
        mu = moebius(b / c)
        if mu and (not x or c.contains(x)):
            total += mu * c.norm()
    return total
