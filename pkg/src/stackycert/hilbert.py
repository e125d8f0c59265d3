"""Hilbert symbols and solvability of z^2 = a x^2 + b y^2 over completions."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

from sympy import factorint

from .errors import InternalInconsistency, ZeroArgument
from .localfield import (
    residue_field,
    residue_image,
    residue_representatives,
    sign_at,
    uniformizer,
    v2,
)
from .numfield import (
    FieldElement,
    FinitePlace,
    RealPlace,
    norm,
    place_sort_key,
    place_valuation,
    places_above,
    real_places,
)


@dataclass(frozen=True)
class ConicPoint:
    """Projective point (x:y:z); coordinates are integral elements or residues."""

    x: object
    y: object
    z: object
    place: FinitePlace | RealPlace | None = None

    def coords(self):
        return (self.x, self.y, self.z)


def _nonzero(*elems):
    if any(e.is_zero() for e in elems):
        raise ZeroArgument("Hilbert symbol arguments must be nonzero")


def hilbert_symbol(a: FieldElement, b: FieldElement, place) -> int:
    """(a, b)_v in {+1, -1}.

    Real places use signs, odd finite places the tame formula, and places
    above 2 decide solvability directly by a Hensel-bounded search.
    """
    _nonzero(a, b)
    if isinstance(place, RealPlace):
        return -1 if sign_at(a, place) < 0 and sign_at(b, place) < 0 else 1
    if place.rational_prime == 2:
        return 1 if solvable_by_search(a, b, place) else -1
    return _tame_symbol(a, b, place)


def _tame_symbol(a, b, place):
    alpha = place_valuation(a, place)
    beta = place_valuation(b, place)
    unit = (a**beta) * (b ** (-alpha))
    if (alpha * beta) % 2:
        unit = -unit
    return residue_field(place).legendre(residue_image(unit, place))


def _strip_even(a: FieldElement, place: FinitePlace):
    """Divide out pi^(2m) so that v_P(a) is 0 or 1."""
    v = place_valuation(a, place)
    m = v // 2
    if m:
        a = a / uniformizer(a.spec, place) ** (2 * m)
    return a, v - 2 * m


def solvable_by_search(a: FieldElement, b: FieldElement, place: FinitePlace) -> bool:
    """Decide whether z^2 = a x^2 + b y^2 has a nontrivial K_P-point.

    After scaling so v(a), v(b) are 0 or 1, any primitive solution has
    gradient valuation at most g = v(2) + max(v(a), v(b)).  A primitive
    triple with v(F) >= 2 v(grad F) + 1 lifts by Hensel, and the truncation
    mod P^(2g+1) of a true solution meets that bound, so a depth-first
    search over pi-adic digits to depth 2g+1 is exact.  Triples are
    normalized so their first unit coordinate (in order z, x, y) equals 1.
    """
    _nonzero(a, b)
    return _search_cached(a, b, place)


@functools.lru_cache(maxsize=4096)
def _search_cached(a, b, place):
    spec = a.spec
    a, va = _strip_even(a, place)
    b, vb = _strip_even(b, place)
    ve2 = v2(place)
    depth = 2 * (ve2 + max(va, vb)) + 1
    pi = uniformizer(spec, place)
    digits = residue_representatives(spec, place)
    zero, one = spec.zero, spec.one
    two = spec.rational(2)

    def val(x):
        return None if x.is_zero() else place_valuation(x, place)

    def hensel_ok(x, y, z):
        F = z * z - a * x * x - b * y * y
        if F.is_zero():
            return True
        vF = place_valuation(F, place)
        grads = [val(two * z), val(two * a * x), val(two * b * y)]
        vg = min(g for g in grads if g is not None)
        return vF >= 2 * vg + 1

    # pattern: which coordinate is pinned to 1, and which must lie in P
    patterns = [
        ("z", ()),
        ("x", ("z",)),
        ("y", ("z", "x")),
    ]

    def dfs(coords, free, in_p, level, pw):
        x, y, z = coords["x"], coords["y"], coords["z"]
        F = z * z - a * x * x - b * y * y
        if not F.is_zero() and place_valuation(F, place) < level:
            return False
        if hensel_ok(x, y, z):
            return True
        if level >= depth:
            return False
        choices = []
        for name in free:
            if level == 0 and name in in_p:
                choices.append([zero])
            else:
                choices.append(digits)
        return _extend(coords, free, choices, in_p, level, pw)

    def _extend(coords, free, choices, in_p, level, pw):
        for combo in itertools.product(*choices):
            nxt = dict(coords)
            for name, c in zip(free, combo):
                if not c.is_zero():
                    nxt[name] = coords[name] + c * pw
            if dfs(nxt, free, in_p, level + 1, pw * pi):
                return True
        return False

    for pinned, in_p in patterns:
        coords = {"x": zero, "y": zero, "z": zero}
        coords[pinned] = one
        free = [n for n in ("x", "y", "z") if n != pinned]
        if dfs(coords, free, in_p, 0, one):
            return True
    return False


def conic_point_residue_field(p: FieldElement, q: FieldElement, place: FinitePlace) -> ConicPoint:
    """First primitive residue-field solution of z^2 = p x^2 + q y^2 in lexicographic order."""
    field_ = residue_field(place)
    pb, qb = residue_image(p, place), residue_image(q, place)
    elements = field_.elements()
    squares = {}
    for z in elements:
        squares.setdefault(field_.mul(z, z), []).append(z)
    for x in elements:
        px2 = field_.mul(pb, field_.mul(x, x))
        for y in elements:
            rhs = field_.add(px2, field_.mul(qb, field_.mul(y, y)))
            for z in squares.get(rhs, []):
                if any(x) or any(y) or any(z):
                    return ConicPoint(x, y, z, place)
    raise InternalInconsistency("Chevalley-Warning violated: no residue point found")


def conic_solvable_locally(p: FieldElement, q: FieldElement, place) -> bool:
    return hilbert_symbol(p, q, place) == 1


def _relevant_primes(*elems: FieldElement) -> set[int]:
    primes = {2}
    for e in elems:
        D = e.denominator()
        n = norm(e * D)
        primes |= set(factorint(abs(int(n))))
        primes |= set(factorint(D))
    primes.discard(1)
    return primes


def symbol_table(a: FieldElement, b: FieldElement) -> dict:
    """Hilbert symbols at every real place and every finite place dividing 2ab."""
    _nonzero(a, b)
    out = {}
    for place in real_places(a.spec):
        out[place] = hilbert_symbol(a, b, place)
    for ell in sorted(_relevant_primes(a, b)):
        for place in places_above(a.spec, ell):
            out[place] = hilbert_symbol(a, b, place)
    return dict(sorted(out.items(), key=lambda kv: place_sort_key(kv[0])))


def product_formula_check(a: FieldElement, b: FieldElement) -> bool:
    prod = 1
    for sym in symbol_table(a, b).values():
        prod *= sym
    return prod == 1
