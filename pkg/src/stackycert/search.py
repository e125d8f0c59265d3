"""Choosing N, the unit generators of O_K[1/N], and a prime pair (p, q).

Class groups and unit groups are computed here only for degree <= 2.
For larger degree the caller supplies N and the generators (a profile
file), and only norm sanity checks are applied.
"""

from __future__ import annotations

import functools
import itertools
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

from sympy import primefactors, primerange

from .errors import MalformedInput, PreconditionViolated, SearchExhausted, UnsupportedDegree
from .localfield import SquareClassCertificate, is_square_at, sign_at
from .numfield import (
    FieldElement,
    FieldSpec,
    FinitePlace,
    count_real_places,
    discriminant,
    norm,
    parse_field,
    place_valuation,
    places_above,
    real_places,
)

log = logging.getLogger(__name__)

PI_LOWER = Fraction(314, 100)
THREADS_ENV = "STACKY_THREADS"


# ---------------------------------------------------------------- Minkowski


def _sqrt_upper(n: int, digits: int = 6) -> Fraction:
    scale = 10**digits
    r = math.isqrt(n * scale * scale)
    if r * r != n * scale * scale:
        r += 1
    return Fraction(r, scale)


def minkowski_bound(spec: FieldSpec) -> Fraction:
    """Rational upper bound for n!/n^n (4/pi)^r2 sqrt|disc|, with pi >= 3.14."""
    n = spec.degree
    r2 = (n - count_real_places(spec)) // 2
    disc = abs(discriminant(spec))
    return Fraction(math.factorial(n), n**n) * (4 / PI_LOWER) ** r2 * _sqrt_upper(disc)


# --------------------------------------------------------- quadratic fields


def _quadratic(spec: FieldSpec):
    if spec.degree != 2:
        raise UnsupportedDegree(f"degree {spec.degree} needs user-supplied data")
    c, b, _ = spec.min_poly
    return b, c, b * b - 4 * c


def _is_real(spec: FieldSpec) -> bool:
    return count_real_places(spec) == spec.degree


def _value(a: FieldElement, root: float) -> float:
    return sum(float(c) * root**i for i, c in enumerate(a.coords))


def _roots(spec: FieldSpec):
    b, c, D = _quadratic(spec)
    if D > 0:
        s = math.sqrt(D)
        return (-b + s) / 2, (-b - s) / 2
    return None


@functools.lru_cache(maxsize=None)
def fundamental_unit(spec: FieldSpec) -> FieldElement:
    """Fundamental unit of a real quadratic Z[theta], > 1 at the larger root.

    Runs the continued fraction of theta = (-b + sqrt D)/2 and returns the
    first convergent h/k for which h - k*theta is a unit (inverted).
    """
    b, c, D = _quadratic(spec)
    if D <= 0:
        raise ValueError("fundamental unit requested for an imaginary quadratic field")
    s = math.isqrt(D)
    Pn, Qn = -b, 2
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    for _ in range(10_000):
        if Qn > 0:
            a = (Pn + s) // Qn
        else:
            a = -((Pn + s) // (-Qn) + 1)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if abs(h * h + b * h * k + c * k * k) == 1:
            small = spec.element([h, -k])
            eps = small.inverse()
            larger = real_places(spec)[-1]
            return eps if sign_at(eps, larger) > 0 else -eps
        Pn = a * Qn - Pn
        Qn = (D - Pn * Pn) // Qn
    raise SearchExhausted("continued fraction did not produce a unit")


def _roots_of_unity(spec: FieldSpec) -> list[FieldElement]:
    if spec.degree == 2 and not _is_real(spec):
        return elements_of_norm(spec, 1)
    return [spec.one, -spec.one]


def _order(u: FieldElement) -> int:
    x = u
    for k in range(1, 13):
        if x == u.spec.one:
            return k
        x = x * u
    raise ValueError(f"{u} is not a root of unity")


def _first_nonzero_positive(a: FieldElement) -> bool:
    return next((c for c in a.coords if c != 0), 0) > 0


def torsion_generator(spec: FieldSpec) -> FieldElement:
    roots = _roots_of_unity(spec)
    top = max(_order(u) for u in roots)
    cands = [u for u in roots if _order(u) == top]
    # -1 is the only element of order 2
    return min(cands, key=lambda u: (not _first_nonzero_positive(u), u.coords))


def elements_of_norm(spec: FieldSpec, m: int) -> list[FieldElement]:
    """Integral elements with |N| = m.

    Imaginary quadratic: all of them.  Real quadratic: all of them within
    the box where both embeddings are at most sqrt(m * eps); scaling by eps
    moves |a/a'| by eps^2, so every class of associates meets that box.
    Degree 1: +-m.  Higher degree: only the small box of _small_elements_by_norm.
    """
    if spec.degree == 1:
        return [spec.rational(m), spec.rational(-m)]
    if spec.degree > 2:
        return list(_small_elements_by_norm(spec).get(m, ()))
    b, c, D = _quadratic(spec)
    if D < 0:
        C = math.sqrt(m)
        signs = (1,)
    else:
        eps = fundamental_unit(spec)
        C = math.sqrt(m * max(abs(_value(eps, r)) for r in _roots(spec))) * 1.001
        signs = (1, -1)
    Y = int(2 * C / math.sqrt(abs(D))) + 2
    out = []
    for y in range(-Y, Y + 1):
        for sgn in signs:
            disc = D * y * y + 4 * sgn * m
            if disc < 0:
                continue
            r = math.isqrt(disc)
            if r * r != disc:
                continue
            for root in {r, -r}:
                if (b * y + root) % 2 == 0:
                    out.append(spec.element([(b * y + root) // 2, y]))
    out = sorted(set(out), key=lambda a: a.coords)
    return [a for a in out if abs(norm(a)) == m]


BOX = 6


@functools.lru_cache(maxsize=None)
def _small_elements_by_norm(spec: FieldSpec) -> dict:
    """Degree > 2: integral elements with coordinates in [-BOX, BOX], keyed by |N|.

    Not complete: a principal ideal whose generators all lie outside the box
    is reported as having no generator, so the search skips it.
    """
    table: dict = {}
    for coords in itertools.product(range(-BOX, BOX + 1), repeat=spec.degree):
        if any(coords):
            a = spec.element(list(coords))
            table.setdefault(abs(int(norm(a))), []).append(a)
    return table


def _associates(a: FieldElement) -> list[FieldElement]:
    spec = a.spec
    roots = _roots_of_unity(spec)
    if spec.degree == 2 and _is_real(spec):
        eps = fundamental_unit(spec)
        # move a near the box |a| ~ |a'| first; each eps shifts log|a/a'| by 2 log eps
        r1, r2 = _roots(spec)
        ratio = math.log(abs(_value(a, r1))) - math.log(abs(_value(a, r2)))
        shift = round(-ratio / (2 * math.log(abs(_value(eps, r1)))))
        powers = [eps**j for j in range(shift - 3, shift + 4)]
    else:
        powers = [spec.one]
    return [u * w * a for u in roots for w in powers]


def canonical_associate(a: FieldElement) -> FieldElement:
    """First nonzero coordinate positive; then the smallest non-negative second coordinate."""
    cands = [c for c in _associates(a) if _first_nonzero_positive(c)]
    if a.spec.degree != 2:
        return cands[0]
    good = [c for c in cands if c.coords[1] >= 0]
    if good:
        return min(good, key=lambda c: (c.coords[1], c.coords[0]))
    return min(cands, key=lambda c: (abs(c.coords[1]), c.coords))


def principal_generator(spec: FieldSpec, exponents: dict) -> FieldElement | None:
    """An element generating prod P^k over the given places, or None if not principal."""
    m = 1
    for place, k in exponents.items():
        m *= place.rational_prime ** (place.d * k)
    for a in elements_of_norm(spec, m):
        if all(place_valuation(a, place) == k for place, k in exponents.items()):
            return canonical_associate(a)
    return None


# ---------------------------------------------------------- N and the units


def trivializing_N(spec: FieldSpec) -> int:
    """Product of the primes below the Minkowski bound that carry a non-principal place."""
    if spec.degree == 1:
        return 1
    if spec.degree > 2:
        raise UnsupportedDegree("supply N for fields of degree > 2")
    bound = minkowski_bound(spec)
    N = 1
    for ell in primerange(2, math.floor(bound) + 1):
        if any(principal_generator(spec, {P: 1}) is None for P in places_above(spec, ell)):
            N *= ell
    return N


def _hnf_rows(rows: list[list[int]], ncols: int) -> list[list[int]]:
    rows = [list(r) for r in rows if any(r)]
    basis = []
    for col in range(ncols):
        while True:
            active = [r for r in rows if r[col] != 0]
            if len(active) <= 1:
                break
            piv = min(active, key=lambda r: abs(r[col]))
            for r in active:
                if r is not piv:
                    q = r[col] // piv[col]
                    for j in range(ncols):
                        r[j] -= q * piv[j]
        active = [r for r in rows if r[col] != 0]
        if active:
            piv = active[0]
            rows.remove(piv)
            if piv[col] < 0:
                piv = [-x for x in piv]
            basis.append(piv)
    for i, row in enumerate(basis):
        for later in basis[i + 1:]:
            col = next(j for j, x in enumerate(later) if x)
            q = row[col] // later[col]
            for j in range(ncols):
                row[j] -= q * later[j]
    return basis


def _s_unit_basis(spec: FieldSpec, N: int) -> list[FieldElement]:
    """Generators whose valuation vectors form a basis of the principal S-ideals."""
    places = [P for ell in primefactors(N) for P in places_above(spec, ell)]
    if not places:
        return []
    orders = []
    for P in places:
        for k in range(1, 65):
            if principal_generator(spec, {P: k}) is not None:
                orders.append(k)
                break
        else:
            raise SearchExhausted(f"no principal power of {P} up to exponent 64")
    vectors = [[k if i == j else 0 for j in range(len(places))] for i, k in enumerate(orders)]
    for combo in itertools.product(*(range(k) for k in orders)):
        if any(combo) and principal_generator(spec, dict(zip(places, combo))) is not None:
            vectors.append(list(combo))
    basis = _hnf_rows(vectors, len(places))
    gens = []
    for row in basis:
        g = principal_generator(spec, {P: k for P, k in zip(places, row) if k})
        assert g is not None
        gens.append(g)
    return gens


def unit_generators(spec: FieldSpec, N: int) -> list[FieldElement]:
    """Generators of O_K[1/N]^x: torsion, fundamental unit (real case), S-part."""
    if spec.degree == 1:
        return [spec.rational(-1)] + [spec.rational(ell) for ell in primefactors(N)]
    _quadratic(spec)
    gens = [torsion_generator(spec)]
    if _is_real(spec):
        gens.append(fundamental_unit(spec))
    gens.extend(_s_unit_basis(spec, N))
    return gens


def check_unit_norms(units: Sequence[FieldElement], N: int) -> None:
    """Every generator must have norm +-1 once the primes dividing N are inverted."""
    for u in units:
        if u.is_zero():
            raise PreconditionViolated("zero is not a unit")
        n = Fraction(norm(u))
        for part in (n.numerator, n.denominator):
            rest = abs(part)
            for ell in primefactors(N):
                while rest % ell == 0:
                    rest //= ell
            if rest != 1:
                raise PreconditionViolated(f"{u} has norm {n}, not a unit of O_K[1/{N}]")


# ------------------------------------------------------------------ profile


@dataclass(frozen=True)
class FieldArithmeticProfile:
    field: FieldSpec
    minkowski_bound: Fraction
    trivializing_N: int
    unit_generators: tuple
    provenance: dict = field(default_factory=dict, compare=False)


def compute_profile(spec: FieldSpec, N: int | None = None, units: Sequence[FieldElement] | None = None) -> FieldArithmeticProfile:
    provenance = {}
    if N is None:
        N = trivializing_N(spec)
        provenance["N"] = "computed"
    else:
        provenance["N"] = "user_supplied"
    if units is None:
        units = unit_generators(spec, N)
        provenance["unit_generators"] = "computed"
    else:
        units = list(units)
        provenance["unit_generators"] = "user_supplied"
    if not units:
        raise PreconditionViolated("unit generator list is empty")
    check_unit_norms(units, N)
    return FieldArithmeticProfile(spec, minkowski_bound(spec), N, tuple(units), provenance)


def load_profile(path: str | os.PathLike) -> FieldArithmeticProfile:
    """Profile override file: JSON with ``field``, optional ``N`` and ``unit_generators``."""
    try:
        data = json.loads(Path(path).read_text())
        spec = parse_field(data["field"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedInput(f"cannot read profile {path}: {exc}") from exc
    N = int(data["N"]) if "N" in data else None
    units = None
    if "unit_generators" in data:
        units = [spec.parse_element(str(u)) for u in data["unit_generators"]]
    return compute_profile(spec, N, units)


# ------------------------------------------------------------ prime search


class Candidate(NamedTuple):
    rational_prime: int
    norm: int
    coords: tuple
    element: FieldElement
    place: FinitePlace


def prime_candidates(spec: FieldSpec, bound: int) -> Iterator[Candidate]:
    """Principal primes above ell <= bound with canonical generators.

    Order: rational prime, then absolute norm, then coordinates.
    """
    for ell in primerange(2, bound + 1):
        batch = []
        for P in places_above(spec, ell):
            g = principal_generator(spec, {P: 1})
            if g is not None:
                batch.append(Candidate(ell, ell**P.d, g.coords, g, P))
        yield from sorted(batch, key=lambda c: (c.norm, c.coords))


class PrimePair(NamedTuple):
    p: FieldElement
    q: FieldElement
    place_of_p: FinitePlace
    unit_certificates: tuple
    q_certificate: SquareClassCertificate


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _first_match(pred, candidates: list, threads: int):
    if threads <= 1:
        return next((c for c in candidates if pred(c)), None)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        hits = list(pool.map(pred, candidates))
    return next((c for c, ok in zip(candidates, hits) if ok), None)


def find_prime_pair(profile: FieldArithmeticProfile, bound: int, threads: int | None = None) -> PrimePair:
    """First admissible p, then the first q that is a nonsquare at v_p.

    p must be odd, prime to N, of residue degree 1 and unramified, with
    every unit generator a square in K_p.
    """
    spec, N = profile.field, profile.trivializing_N
    threads = _threads() if threads is None else threads
    cands = [c for c in prime_candidates(spec, bound) if c.rational_prime != 2 and N % c.rational_prime]

    def good_p(c: Candidate) -> bool:
        if c.place.e != 1 or c.place.d != 1:
            return False
        return all(is_square_at(u, c.place).is_square for u in profile.unit_generators)

    p = _first_match(good_p, cands, threads)
    if p is None:
        raise SearchExhausted(f"no admissible p above primes <= {bound}")

    def good_q(c: Candidate) -> bool:
        return c.place != p.place and not is_square_at(c.element, p.place).is_square

    q = _first_match(good_q, cands, threads)
    if q is None:
        raise SearchExhausted(f"no admissible q above primes <= {bound}")
    unit_certs = tuple(is_square_at(u, p.place) for u in profile.unit_generators)
    q_cert = is_square_at(q.element, p.place)
    assert all(c.is_square for c in unit_certs) and not q_cert.is_square
    log.info("prime pair: p=%s (norm %d), q=%s (norm %d)", p.element, p.norm, q.element, q.norm)
    return PrimePair(p.element, q.element, p.place, unit_certs, q_cert)
