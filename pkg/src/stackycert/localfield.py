"""Computations in completions K_v.

Nothing here materializes a p-adic number.  Everything runs in finite
quotients O/P^k, with k picked from explicit Hensel thresholds, or, at
real places, with rational isolating intervals.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import _poly as P
from .errors import InternalInconsistency, NegativeValuation, ZeroElement
from .numfield import (
    FieldElement,
    FieldSpec,
    FinitePlace,
    RealPlace,
    _local_data,
    _vp_int,
    place_valuation,
)


class ResidueField:
    """GF(ell^d) as polynomials modulo the place's local factor.

    Elements are tuples of d ints, constant term first.
    """

    def __init__(self, ell: int, modulus):
        self.ell = ell
        self.modulus = list(modulus)
        self.d = len(self.modulus) - 1
        self.size = ell**self.d

    def reduce(self, poly) -> tuple:
        r = P.p_rem(P.p_trim(list(poly), self.ell), self.modulus, self.ell)
        return tuple(r) + (0,) * (self.d - len(r))

    def mul(self, a, b) -> tuple:
        return self.reduce(P.p_mul(P.trim(a), P.trim(b), self.ell))

    def add(self, a, b) -> tuple:
        return tuple((x + y) % self.ell for x, y in zip(a, b))

    def scalar(self, c) -> tuple:
        return self.reduce([c])

    def pow(self, a, n: int) -> tuple:
        return self.reduce(P.p_powmod(P.trim(a), n, self.modulus, self.ell)) if n else self.one

    @property
    def one(self):
        return self.scalar(1)

    @property
    def zero(self):
        return (0,) * self.d

    def inv(self, a):
        if not any(a):
            raise ZeroDivisionError("inverse of zero in residue field")
        return self.pow(a, self.size - 2)

    def elements(self):
        """All elements, ordered lexicographically by coefficient tuple."""
        return [tuple(reversed(c)) for c in itertools.product(range(self.ell), repeat=self.d)]

    def is_square(self, a) -> bool:
        if not any(a) or self.ell == 2:
            return True
        return self.pow(a, (self.size - 1) // 2) == self.one

    def sqrt(self, a):
        """The smaller (by coefficient tuple) of the square roots of a, or None."""
        if not any(a):
            return self.zero
        if not self.is_square(a):
            return None
        if self.ell == 2:
            root = self.pow(a, self.size // 2)
            return root
        root = self._tonelli(a)
        return min(root, tuple((-c) % self.ell for c in root), key=lambda r: tuple(reversed(r)))

    def _tonelli(self, a):
        q = self.size - 1
        s = (q & -q).bit_length() - 1
        odd = q >> s
        z = next(x for x in self.elements() if any(x) and not self.is_square(x))
        m, c = s, self.pow(z, odd)
        t, r = self.pow(a, odd), self.pow(a, (odd + 1) // 2)
        while t != self.one:
            i, t2 = 0, t
            while t2 != self.one:
                t2 = self.mul(t2, t2)
                i += 1
            b = c
            for _ in range(m - i - 1):
                b = self.mul(b, b)
            m, c = i, self.mul(b, b)
            t, r = self.mul(t, c), self.mul(r, b)
        return r

    def legendre(self, a) -> int:
        if not any(a):
            return 0
        return 1 if self.is_square(a) else -1


@functools.lru_cache(maxsize=None)
def residue_field(place: FinitePlace) -> ResidueField:
    return ResidueField(place.rational_prime, place.local_factor)


def valuation_at(a: FieldElement, place: FinitePlace) -> int:
    if a.is_zero():
        raise ZeroElement("valuation of zero")
    return place_valuation(a, place)


def congruent_mod(a: FieldElement, b: FieldElement, place: FinitePlace, k: int) -> bool:
    """a = b mod P^k in the completion."""
    diff = a - b
    return diff.is_zero() or place_valuation(diff, place) >= k


def residue_image(a: FieldElement, place: FinitePlace) -> tuple:
    if a.is_zero():
        return residue_field(place).zero
    if place_valuation(a, place) < 0:
        raise NegativeValuation(f"{a} is not integral at {place}")
    spec, ell = a.spec, place.rational_prime
    D = a.denominator()
    s = _vp_int(D, ell)
    num = a * D
    scale = spec.one
    if s:
        # multiply through by an element that is a unit at P but kills the
        # ell-denominator at the other places above ell
        scale = spec.element(_local_data(spec, place).coprime) ** s
        num = num * scale
        num = spec.element([Fraction(c) / ell**s for c in num.coords])
    field_ = residue_field(place)
    unit_den = D // ell**s
    top = field_.reduce([int(Fraction(c).numerator) * pow(Fraction(c).denominator, -1, ell) for c in num.coords])
    bottom = field_.mul(field_.scalar(unit_den), field_.reduce([int(c) for c in scale.coords]))
    return field_.mul(top, field_.inv(bottom))


def lift_residue(spec: FieldSpec, r: tuple) -> FieldElement:
    """Integral element whose residue is r (coordinates in [0, ell))."""
    return spec.element(list(r))


@functools.lru_cache(maxsize=None)
def uniformizer(spec: FieldSpec, place: FinitePlace) -> FieldElement:
    ell = place.rational_prime
    g = spec.from_poly(list(place.local_factor))
    for cand in (spec.rational(ell), g, g + ell):
        if not cand.is_zero() and place_valuation(cand, place) == 1:
            return cand
    raise InternalInconsistency(f"no uniformizer found at {place}")


def v2(place: FinitePlace) -> int:
    """v_P(2)."""
    return place.e if place.rational_prime == 2 else 0


def hensel_margin(place: FinitePlace) -> int:
    """Relative precision at which a unit that is a square mod P^k is a square.

    Uses 2 * e * v_P(2) + 1 uniformly at even places.
    """
    return 2 * place.e * v2(place) + 1


def residue_representatives(spec: FieldSpec, place: FinitePlace) -> list[FieldElement]:
    return [lift_residue(spec, r) for r in residue_field(place).elements()]


def quotient_representatives(spec: FieldSpec, place: FinitePlace, k: int):
    """Yield a complete residue system of O/P^k as sums of c_j * pi^j."""
    pi = uniformizer(spec, place)
    digits = residue_representatives(spec, place)
    powers = [pi**j for j in range(k)]
    for combo in itertools.product(digits, repeat=k):
        s = spec.zero
        for c, pw in zip(combo, powers):
            if not c.is_zero():
                s = s + c * pw
        yield s


def sqrt_mod_power(unit: FieldElement, place: FinitePlace, k: int) -> FieldElement | None:
    """Some s with s^2 = unit mod P^k, built one pi-adic digit at a time.

    s mod P^j fixes s^2 mod P^j, so partial roots failing that are pruned.
    Digits are tried in residue order, which makes the answer deterministic.
    """
    spec = unit.spec
    pi = uniformizer(spec, place)
    digits = residue_representatives(spec, place)

    def dfs(s, level, pw):
        if level and not congruent_mod(s * s, unit, place, level):
            return None
        if level == k:
            return s
        for c in digits:
            found = dfs(s + c * pw if not c.is_zero() else s, level + 1, pw * pi)
            if found is not None:
                return found
        return None

    return dfs(spec.zero, 0, spec.one)


# ----------------------------------------------------------- square classes


@dataclass(frozen=True)
class SquareClassCertificate:
    """Verdict on whether ``value`` is a square in K_v, with a witness.

    Witness kinds: ``root`` (element s, precision k, s^2 = value mod P^k),
    ``odd_valuation``, ``residue_nonsquare`` (the residue of the unit part),
    ``no_root_mod`` (exhaustive failure mod P^k at even places) and ``sign``
    at real places.
    """

    value: FieldElement
    place: FinitePlace | RealPlace
    verdict: str
    witness_kind: str
    witness: FieldElement | tuple | int | None = None
    precision: int = 0
    valuation: int = 0

    @property
    def is_square(self) -> bool:
        return self.verdict == "square"


def is_square_at(a: FieldElement, place) -> SquareClassCertificate:
    if a.is_zero():
        raise ZeroElement("square test of zero")
    if isinstance(place, RealPlace):
        sign = sign_at(a, place)
        return SquareClassCertificate(a, place, "square" if sign > 0 else "nonsquare", "sign", sign)
    spec = a.spec
    v = place_valuation(a, place)
    if v % 2:
        return SquareClassCertificate(a, place, "nonsquare", "odd_valuation", v, 0, v)
    pi = uniformizer(spec, place)
    half = pi ** (v // 2)
    unit = a / (half * half)
    margin = hensel_margin(place)
    k = v + margin
    if place.rational_prime != 2:
        field_ = residue_field(place)
        r = residue_image(unit, place)
        root = field_.sqrt(r)
        if root is None:
            return SquareClassCertificate(a, place, "nonsquare", "residue_nonsquare", r, 1, v)
        s = half * lift_residue(spec, root)
    else:
        root = sqrt_mod_power(unit, place, margin)
        s = None if root is None else half * root
        if s is None:
            return SquareClassCertificate(a, place, "nonsquare", "no_root_mod", margin, k, v)
    if not congruent_mod(s * s, a, place, k):
        raise InternalInconsistency(f"square witness for {a} at {place} does not verify")
    return SquareClassCertificate(a, place, "square", "root", s, k, v)


def check_square_witness(cert: SquareClassCertificate) -> bool:
    """Re-verify a root witness: right shape, Hensel-sufficient precision, congruence."""
    if cert.witness_kind != "root" or not isinstance(cert.witness, FieldElement):
        return False
    if isinstance(cert.place, RealPlace):
        return False
    v = place_valuation(cert.value, cert.place)
    if v % 2 or cert.precision < v + hensel_margin(cert.place):
        return False
    s = cert.witness
    return congruent_mod(s * s, cert.value, cert.place, cert.precision)


# -------------------------------------------------------------- real places


def _refine(f, lo, hi):
    mid = (lo + hi) / 2
    fm = P.q_eval(f, mid)
    if fm == 0:
        return mid, mid
    if (P.q_eval(f, lo) < 0) == (fm < 0):
        return mid, hi
    return lo, mid


def sign_at(a: FieldElement, place: RealPlace) -> int:
    """Sign (+1/-1) of a under the real embedding, by exact interval refinement."""
    if a.is_zero():
        raise ZeroElement("sign of zero")
    f = list(a.spec.min_poly)
    A = a.poly()
    if len(A) == 1:
        return 1 if A[0] > 0 else -1
    if len(f) == 2:
        val = P.q_eval(A, Fraction(-f[0]))
        return 1 if val > 0 else -1
    seq = P.sturm_sequence(A)
    lo, hi = place.lo, place.hi
    while True:
        if P.q_eval(A, lo) != 0 and P.q_eval(A, hi) != 0 and P.sturm_count(seq, lo, hi) == 0:
            return 1 if P.q_eval(A, lo) > 0 else -1
        lo, hi = _refine(f, lo, hi)
        if lo == hi:
            val = P.q_eval(A, lo)
            return 1 if val > 0 else -1


def refine_place(spec: FieldSpec, place: RealPlace, width: Fraction) -> RealPlace:
    f = list(spec.min_poly)
    lo, hi = place.lo, place.hi
    while hi - lo > width:
        lo, hi = _refine(f, lo, hi)
        if lo == hi:
            return RealPlace(lo - width / 4, hi + width / 4)
    return RealPlace(lo, hi)
