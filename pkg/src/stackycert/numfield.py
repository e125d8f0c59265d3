"""Exact arithmetic in K = Q[x]/(f) and its order Z[theta].

Fields are given by a monic irreducible integer polynomial ``f``; elements
are coordinate vectors in the power basis 1, theta, ..., theta^(n-1).
The order Z[theta] stands in for the ring of integers, and every prime
that gets touched is checked with Dedekind's criterion first.
"""

from __future__ import annotations

import ast
import functools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from sympy import factorint, isprime, nextprime

from . import _poly as P
from .errors import (
    DivisionByZero,
    IrreducibilityUndetermined,
    NotMonic,
    NotPrime,
    OrderNotMaximalAtPrime,
    ParseError,
    Reducible,
    UnitElement,
    ZeroElement,
)


def _num(c):
    c = Fraction(c)
    return c.numerator if c.denominator == 1 else c


# ------------------------------------------------------------------ parsing

_ALLOWED = re.compile(r"^[0-9a-z+\-*/^() \t]*$")


def parse_poly(text: str, var: str) -> list:
    """Parse integer/rational polynomial text in one variable.

    Grammar: integers, the variable letter, ``+ - * / ^`` and parentheses.
    Division is allowed only by constants.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty polynomial text")
    if not _ALLOWED.match(text):
        raise ParseError(f"unexpected characters in {text!r}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}") from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and type(node.value) is int:
            return P.trim([node.value])
        if isinstance(node, ast.Name):
            if node.id != var:
                raise ParseError(f"unknown variable {node.id!r} (expected {var!r})")
            return [0, 1]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = walk(node.operand)
            return P.q_neg(inner) if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp):
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return P.q_add(left, right)
            if isinstance(node.op, ast.Sub):
                return P.q_sub(left, right)
            if isinstance(node.op, ast.Mult):
                return P.q_mul(left, right)
            if isinstance(node.op, ast.Div):
                if len(right) != 1:
                    raise ParseError("division only by nonzero constants")
                return P.q_scale(left, Fraction(1) / Fraction(right[0]))
            if isinstance(node.op, ast.Pow):
                if len(right) > 1 or (right and (Fraction(right[0]).denominator != 1 or right[0] < 0)):
                    raise ParseError("exponents must be non-negative integer constants")
                n = int(right[0]) if right else 0
                if n > 10_000:
                    raise ParseError("exponent too large")
                out = [1]
                for _ in range(n):
                    out = P.q_mul(out, left)
                return out
        raise ParseError(f"unsupported syntax in {text!r}")

    return [_num(c) for c in walk(tree)]


def format_poly(coeffs: Sequence, var: str) -> str:
    terms = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        c = Fraction(c)
        mag = abs(c)
        sign = "-" if c < 0 else "+"
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        terms.append((sign, body))
    if not terms:
        return "0"
    head_sign, head = terms[0]
    out = ("-" if head_sign == "-" else "") + head
    for sign, body in terms[1:]:
        out += sign + body
    return out


# ------------------------------------------------------------------- fields


@dataclass(frozen=True)
class FieldSpec:
    """A number field presented by a monic irreducible integer polynomial.

    ``min_poly`` lists coefficients constant term first.
    """

    min_poly: tuple
    monogenic_assumed: bool = field(default=True, compare=False)

    def __post_init__(self):
        coeffs = tuple(self.min_poly)
        if not coeffs or len(coeffs) < 2:
            raise ParseError("field polynomial must have degree >= 1")
        if any(Fraction(c).denominator != 1 for c in coeffs):
            raise ParseError("field polynomial must have integer coefficients")
        coeffs = tuple(int(c) for c in coeffs)
        if coeffs[-1] != 1:
            raise NotMonic(f"leading coefficient {coeffs[-1]} is not 1")
        object.__setattr__(self, "min_poly", coeffs)
        _check_irreducible(coeffs)

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    def __str__(self):
        return format_poly(self.min_poly, "x")

    def element(self, coords) -> "FieldElement":
        coords = list(coords)
        if len(coords) > self.degree:
            raise ValueError("too many coordinates")
        coords += [0] * (self.degree - len(coords))
        return FieldElement(self, tuple(_num(c) for c in coords))

    def from_poly(self, poly) -> "FieldElement":
        return self.element(P.q_rem(poly, self.min_poly) if len(poly) > self.degree else poly)

    def parse_element(self, text: str) -> "FieldElement":
        return self.from_poly(parse_poly(text, "t"))

    def rational(self, r) -> "FieldElement":
        return self.element([r])

    @property
    def zero(self):
        return self.element([])

    @property
    def one(self):
        return self.element([1])

    @property
    def theta(self):
        if self.degree == 1:
            return self.element([-self.min_poly[0]])
        return self.element([0, 1])


def parse_field(poly_text: str) -> FieldSpec:
    poly = parse_poly(poly_text, "x")
    if len(poly) < 2:
        raise ParseError("field polynomial must have degree >= 1")
    if any(Fraction(c).denominator != 1 for c in poly):
        raise ParseError("field polynomial must have integer coefficients")
    return FieldSpec(tuple(int(c) for c in poly))



def _good_primes(f, count, start=2):
    """Yield primes p where f mod p stays squarefree of full degree."""
    found = 0
    p = start
    while found < count:
        if f[-1] % p and P.deg(P.p_gcd(f, P.p_derivative(f, p), p)) == 0:
            found += 1
            yield p
        p = nextprime(p)


def _subset_sums(degrees):
    sums = {0}
    for d in degrees:
        sums |= {s + d for s in sums}
    return sums


def _rational_roots(f):
    c0 = f[0]
    if c0 == 0:
        return [0]
    roots = []
    for d in _divisors(abs(c0)):
        for r in (d, -d):
            if P.q_eval(f, r) == 0:
                roots.append(r)
    return roots


def _divisors(n):
    out = [1]
    for prime, exp in factorint(n).items():
        out = [d * prime**k for d in out for k in range(exp + 1)]
    return sorted(out)


def _has_quadratic_factor(f):
    norm2 = math.isqrt(sum(c * c for c in f)) + 1
    bound = 2 * norm2
    for c in _divisors(abs(f[0])):
        for cc in (c, -c):
            for b in range(-bound, bound + 1):
                if not P.q_rem(f, [cc, b, 1]):
                    return True
    return False


@functools.lru_cache(maxsize=None)
def _check_irreducible(f: tuple) -> None:
    n = len(f) - 1
    if n == 1:
        return
    if _rational_roots(f):
        raise Reducible(f"{format_poly(f, 'x')} has a rational root")
    possible = set(range(n + 1))
    for count, p in enumerate(_good_primes(list(f), 10 if n <= 4 else 50)):
        degrees = [len(g) - 1 for g, _ in P.p_factor(list(f), p)]
        possible &= _subset_sums(degrees)
        if possible == {0, n}:
            return
    if n <= 3:
        return
    if n == 4:
        if _has_quadratic_factor(f):
            raise Reducible(f"{format_poly(f, 'x')} has a quadratic factor")
        return
    raise IrreducibilityUndetermined(format_poly(f, "x"))


RATIONALS = FieldSpec((0, 1))


# ----------------------------------------------------------------- elements


@dataclass(frozen=True)
class FieldElement:
    """An element of K in power-basis coordinates."""

    spec: FieldSpec
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.spec.degree:
            raise ValueError("coordinate vector has the wrong length")

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.spec != self.spec:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.spec.rational(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.spec, tuple(_num(a + b) for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.spec, tuple(-a for a in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prod = P.q_mul(list(self.coords), list(other.coords))
        red = P.q_rem_monic_int(prod, self.spec.min_poly)
        return self.spec.element(red)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise DivisionByZero("inverse of zero")
        g, s, _ = P.q_xgcd(P.trim(self.coords), list(self.spec.min_poly))
        if g != [1]:
            raise DivisionByZero("element shares a factor with the field polynomial")
        return self.spec.element(s)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.spec.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coords)

    def __bool__(self):
        return not self.is_zero()

    def is_integral(self) -> bool:
        return all(Fraction(c).denominator == 1 for c in self.coords)

    def denominator(self) -> int:
        return math.lcm(*(Fraction(c).denominator for c in self.coords))

    def poly(self) -> list:
        return P.trim(self.coords)

    def __str__(self):
        if self.spec.degree == 1:
            return str(self.coords[0])
        return format_poly(self.coords, "t")

    def __repr__(self):
        return f"FieldElement({self}, field={self.spec})"


def field_arithmetic(a: FieldElement, b: FieldElement | None, op: str) -> FieldElement:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown operation {op!r}")


def norm(a: FieldElement) -> Fraction:
    """N_{K/Q}(a) as Res(f, a(x)); f is monic so no leading-coefficient factor."""
    return _num(P.resultant(list(a.spec.min_poly), a.poly()))


def discriminant(spec: FieldSpec) -> int:
    n = spec.degree
    if n == 1:
        return 1
    fprime = spec.from_poly(P.q_derivative(list(spec.min_poly)))
    return int((-1) ** (n * (n - 1) // 2) * norm(fprime))


# ------------------------------------------------------------------- places


@dataclass(frozen=True, order=True)
class FinitePlace:
    rational_prime: int
    local_factor: tuple
    e: int
    d: int

    @property
    def residue_size(self) -> int:
        return self.rational_prime**self.d

    def __str__(self):
        return f"P({self.rational_prime}, {format_poly(self.local_factor, 'x')})"


@dataclass(frozen=True, order=True)
class RealPlace:
    """A real embedding, pinned down by an isolating interval (lo, hi)."""

    lo: Fraction
    hi: Fraction

    @property
    def isolating_interval(self):
        return (self.lo, self.hi)

    def __str__(self):
        return f"inf({float(self.lo):.6g}..{float(self.hi):.6g})"


def _require_prime(ell):
    if not isinstance(ell, int) or ell < 2 or not isprime(ell):
        raise NotPrime(f"{ell} is not a prime")


@functools.lru_cache(maxsize=None)
def _factor_cached(f: tuple, ell: int):
    return tuple((tuple(g), m) for g, m in P.p_factor(list(f), ell))


def factor_min_poly_mod(spec: FieldSpec, ell: int):
    _require_prime(ell)
    return list(_factor_cached(spec.min_poly, ell))


@functools.lru_cache(maxsize=None)
def dedekind_maximal(spec: FieldSpec, ell: int) -> bool:
    """Dedekind's criterion: is Z[theta] maximal at ell?"""
    f = list(spec.min_poly)
    radical, cofactor = [1], [1]
    for g, m in _factor_cached(spec.min_poly, ell):
        radical = P.p_mul(radical, list(g), ell)
        for _ in range(m - 1):
            cofactor = P.p_mul(cofactor, list(g), ell)
    excess = P.q_sub(f, P.q_mul(radical, cofactor))
    assert all(c % ell == 0 for c in excess)
    excess = P.p_trim([c // ell for c in excess], ell)
    common = P.p_gcd(P.p_gcd(excess, radical, ell), cofactor, ell)
    return common == [1]


@functools.lru_cache(maxsize=None)
def _places_cached(spec: FieldSpec, ell: int):
    if not dedekind_maximal(spec, ell):
        raise OrderNotMaximalAtPrime(f"Z[theta] is not maximal at {ell} for {spec}")
    return tuple(
        FinitePlace(ell, g, m, len(g) - 1) for g, m in _factor_cached(spec.min_poly, ell)
    )


def places_above(spec: FieldSpec, ell: int) -> list[FinitePlace]:
    _require_prime(ell)
    return list(_places_cached(spec, ell))


@functools.lru_cache(maxsize=None)
def real_places(spec: FieldSpec) -> tuple[RealPlace, ...]:
    """Isolate the real roots of f by Sturm sequences and bisection."""
    f = list(spec.min_poly)
    if spec.degree == 1:
        r = Fraction(-f[0])
        return (RealPlace(r - Fraction(1, 2), r + Fraction(1, 2)),)
    seq = P.sturm_sequence(f)
    bound = P.cauchy_bound(f)
    out = []
    stack = [(-bound, bound)]
    while stack:
        lo, hi = stack.pop()
        count = P.sturm_count(seq, lo, hi)
        if count == 0:
            continue
        if count == 1 and P.q_eval(f, hi) != 0 and P.q_eval(f, lo) != 0:
            out.append(RealPlace(lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.extend([(lo, mid), (mid, hi)])
    # f irreducible of degree >= 2 has no rational roots, so endpoints are never roots
    return tuple(sorted(out))


def count_real_places(spec: FieldSpec) -> int:
    return len(real_places(spec))


# ------------------------------------------------- valuations at places


@dataclass(frozen=True)
class _LocalData:
    beta: tuple  # integral coords of an element with v_P = e-1 and v_Q >= e_Q elsewhere
    coprime: tuple  # integral coords of an element with v_P = 0 and v_Q >= e_Q elsewhere


@functools.lru_cache(maxsize=None)
def _local_data(spec: FieldSpec, place: FinitePlace) -> _LocalData:
    ell, g = place.rational_prime, list(place.local_factor)
    fbar = P.p_trim(list(spec.min_poly), ell)
    beta = P.p_divmod(fbar, g, ell)[0]
    coprime = [1]
    for other, m in _factor_cached(spec.min_poly, ell):
        if tuple(other) != place.local_factor:
            for _ in range(m):
                coprime = P.p_mul(coprime, list(other), ell)
    return _LocalData(tuple(spec.element(beta).coords), tuple(spec.element(coprime).coords))


def _vp_int(n: int, ell: int) -> int:
    v = 0
    while n % ell == 0:
        n //= ell
        v += 1
    return v


def place_valuation(a: FieldElement, place: FinitePlace) -> int:
    """Normalized valuation v_P(a) for nonzero a.

    Writes a = b / D with b in Z[theta]; then counts how often b can be
    multiplied by beta/ell and stay integral, which happens exactly while
    b lies in P.
    """
    if a.is_zero():
        raise ZeroElement("valuation of zero")
    spec = a.spec
    ell = place.rational_prime
    D = a.denominator()
    b = [int(c * D) for c in a.coords]
    v = -place.e * _vp_int(D, ell)
    beta = list(_local_data(spec, place).beta)
    f = spec.min_poly
    while True:
        prod = P.q_rem_monic_int(P.q_mul(b, beta), f)
        if any(c % ell for c in prod):
            return v
        b = [c // ell for c in prod]
        v += 1


# ---------------------------------------------------------- element support


class PrimeVerdict(NamedTuple):
    is_prime: bool
    place: FinitePlace | None


def _integral_nonzero(a: FieldElement):
    if a.is_zero():
        raise ZeroElement("zero has no finite support")


def ideal_support(a: FieldElement) -> dict[FinitePlace, int]:
    """Finite places where v(a) != 0, with the valuations, in canonical order."""
    _integral_nonzero(a)
    n = norm(a)
    primes = set(factorint(abs(Fraction(n).numerator)))
    primes |= set(factorint(a.denominator()))
    primes |= set(factorint(abs(Fraction(n).denominator)))
    out = {}
    for ell in sorted(primes):
        for place in places_above(a.spec, ell):
            v = place_valuation(a, place)
            if v:
                out[place] = v
    return out


def is_odd(a: FieldElement) -> bool:
    """No place above 2 divides a."""
    return not any(place.rational_prime == 2 for place in ideal_support(a))


def is_unit(a: FieldElement) -> bool:
    return a.is_integral() and not a.is_zero() and abs(norm(a)) == 1


def is_prime_element(a: FieldElement) -> PrimeVerdict:
    _integral_nonzero(a)
    if not a.is_integral():
        raise ValueError("prime-element test needs an integral element")
    if is_unit(a):
        raise UnitElement(f"{a} is a unit")
    support = ideal_support(a)
    if len(support) == 1:
        (place, v), = support.items()
        if v == 1:
            return PrimeVerdict(True, place)
    return PrimeVerdict(False, None)


def place_sort_key(place):
    if isinstance(place, RealPlace):
        return (1, 0, (), place.lo)
    return (0, place.rational_prime, place.local_factor, 0)
