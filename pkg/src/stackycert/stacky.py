"""The quotient stack X_(p,q) = [Y_(p,q) / mu_2] of the conic z^2 = p x^2 + q y^2.

Computable content only: the genus, the twists t z^2 = p x^2 + q y^2 that
integral points decompose into, explicit local points, and the
certificate that no twist has a point over O_K[1/N].
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from sympy import primefactors

from .errors import (
    GlobalCheckInconclusive,
    InternalInconsistency,
    InvalidModel,
    NotPID,
    PreconditionViolated,
    UnitElement,
    ZeroElement,
)
from .hilbert import ConicPoint, hilbert_symbol
from .localfield import (
    SquareClassCertificate,
    hensel_margin,
    is_square_at,
    quotient_representatives,
    residue_field,
)
from .numfield import (
    FieldElement,
    FieldSpec,
    FinitePlace,
    RealPlace,
    ideal_support,
    is_prime_element,
    norm,
    place_sort_key,
    place_valuation,
    places_above,
    real_places,
)

log = logging.getLogger(__name__)

GENERIC_RULE = (
    "all other places: the residue conic has a point (Chevalley-Warning) "
    "and Y_(p,q) is smooth there, so the point lifts to O_v"
)


# ------------------------------------------------------------------ genus


@dataclass(frozen=True)
class RamificationDatum:
    coarse_genus: int
    stacky_points: tuple = ()  # (stabilizer order, degree) pairs

    def __post_init__(self):
        if self.coarse_genus < 0:
            raise ValueError("coarse genus must be nonnegative")
        for order, degree in self.stacky_points:
            if order < 2 or degree < 1:
                raise ValueError(f"invalid stacky point ({order}, {degree})")


def genus(r: RamificationDatum) -> Fraction:
    """g = g(coarse) + 1/2 * sum (1 - 1/|G_P|) * deg P, exactly."""
    total = Fraction(r.coarse_genus)
    for order, degree in r.stacky_points:
        total += Fraction(1, 2) * (1 - Fraction(1, order)) * degree
    return total


# ------------------------------------------------------------------ model


@dataclass(frozen=True)
class StackyCurveModel:
    field: FieldSpec
    p: FieldElement
    q: FieldElement
    place_of_p: FinitePlace | None
    place_of_q: FinitePlace | None = None
    strict: bool = True

    def equation(self, t: FieldElement | None = None) -> tuple:
        """Coefficients (t, p, q) of t z^2 = p x^2 + q y^2."""
        return (t if t is not None else self.field.one, self.p, self.q)


def make_model(p: FieldElement, q: FieldElement, *, strict: bool = True) -> StackyCurveModel:
    """Validate (p, q) and build X_(p,q).

    Strict mode wants odd prime elements with distinct places.  Relaxed
    mode (``strict=False``) only needs nonzero coprime integral elements
    and is meant for local analysis.
    """
    if p.spec != q.spec:
        raise InvalidModel("p and q live in different fields")
    if p.is_zero() or q.is_zero():
        raise InvalidModel("p and q must be nonzero")
    if not (p.is_integral() and q.is_integral()):
        raise InvalidModel("p and q must be integral")
    if not strict:
        sp, sq = ideal_support(p), ideal_support(q)
        if set(sp) & set(sq):
            raise InvalidModel(f"{p} and {q} are not coprime")
        place_p = next(iter(sp)) if len(sp) == 1 else None
        place_q = next(iter(sq)) if len(sq) == 1 else None
        return StackyCurveModel(p.spec, p, q, place_p, place_q, strict=False)
    places = []
    for name, elem in (("p", p), ("q", q)):
        try:
            verdict = is_prime_element(elem)
        except (UnitElement, ZeroElement) as exc:
            raise InvalidModel(f"{name} = {elem}: {exc}") from exc
        if not verdict.is_prime:
            raise InvalidModel(f"{name} = {elem} is not a prime element")
        if verdict.place.rational_prime == 2:
            raise InvalidModel(f"{name} = {elem} is not odd")
        places.append(verdict.place)
    if places[0] == places[1]:
        raise InvalidModel("p and q generate the same prime")
    return StackyCurveModel(p.spec, p, q, places[0], places[1])


def model_ramification(m: StackyCurveModel) -> RamificationDatum:
    """Coarse space P^1; the locus z = 0 is two geometric points with stabilizer mu_2."""
    if m.p.is_zero() or m.q.is_zero():
        raise InvalidModel("degenerate model")
    # p x^2 + q y^2 = 0 has discriminant -4pq != 0: two distinct geometric points
    return RamificationDatum(0, ((2, 1), (2, 1)))


def model_genus(m: StackyCurveModel) -> Fraction:
    return genus(model_ramification(m))


@dataclass(frozen=True)
class TwistedConic:
    model: StackyCurveModel
    t: FieldElement

    def __post_init__(self):
        if self.t.is_zero():
            raise InvalidModel("twist class must be a unit")

    def equation(self) -> tuple:
        return self.model.equation(self.t)

    def satisfied_by(self, x, y, z) -> bool:
        t, p, q = self.equation()
        return (t * z * z - p * x * x - q * y * y).is_zero()


# ---------------------------------------------------------------- twists


@dataclass(frozen=True)
class LocalRing:
    spec: FieldSpec
    place: FinitePlace


@dataclass(frozen=True)
class GlobalRing:
    """O_K[1/N] with the given unit generators; ``pid`` is the caller's certification."""

    spec: FieldSpec
    N: int
    units: tuple
    pid: bool = False


def _unit_class_count(place: FinitePlace) -> int:
    if place.rational_prime != 2:
        return 2
    return 2 ** (1 + place.e * place.d)


def twist_classes(ring) -> list[FieldElement]:
    """Representatives of R^x / R^x2."""
    if isinstance(ring, GlobalRing):
        if not ring.pid:
            raise NotPID("O_K[1/N] must be certified principal")
        reps = []
        for mask in itertools.product((0, 1), repeat=len(ring.units)):
            t = ring.spec.one
            for bit, u in zip(mask, ring.units):
                if bit:
                    t = t * u
            reps.append(t)
        return reps
    spec, place = ring.spec, ring.place
    if place.rational_prime != 2:
        field_ = residue_field(place)
        u = next(r for r in field_.elements() if any(r) and not field_.is_square(r))
        return [spec.one, spec.element(list(u))]
    target = _unit_class_count(place)
    units = [
        s for s in quotient_representatives(spec, place, hensel_margin(place))
        if not s.is_zero() and place_valuation(s, place) == 0
    ]
    units.sort(key=lambda s: (sum(abs(c) for c in s.coords), s.coords))
    reps: list[FieldElement] = []
    for u in units:
        if all(not is_square_at(u / r, place).is_square for r in reps):
            reps.append(u)
            if len(reps) == target:
                break
    return reps


# ------------------------------------------------------------ local points


@dataclass(frozen=True)
class LocalPointCertificate:
    place: FinitePlace | RealPlace
    twist_label: str  # "p" or "q"
    twist: FieldElement
    point: ConicPoint
    exact: bool = True  # the equation holds exactly in K, not just mod P^k


def local_point_certificate(m: StackyCurveModel, place) -> LocalPointCertificate:
    """Twist by q with (0:1:1) unless v | q; then twist by p with (1:0:1)."""
    spec = m.field
    zero, one = spec.zero, spec.one
    if isinstance(place, RealPlace) or place_valuation(m.q, place) == 0:
        cert = LocalPointCertificate(place, "q", m.q, ConicPoint(zero, one, one, place))
    else:
        if place_valuation(m.p, place) != 0:
            raise InvalidModel(f"p and q share the place {place}")
        cert = LocalPointCertificate(place, "p", m.p, ConicPoint(one, zero, one, place))
    if not check_local_point(cert, m.p, m.q):
        raise InternalInconsistency(f"local point at {place} does not verify")
    return cert


def check_local_point(cert: LocalPointCertificate, p: FieldElement, q: FieldElement) -> bool:
    """Substitute the point; check integrality, primitivity and that the twist is a v-unit."""
    x, y, z = cert.point.coords()
    t = cert.twist
    if cert.twist_label not in ("p", "q") or t != (p if cert.twist_label == "p" else q):
        return False
    if not (t * z * z - p * x * x - q * y * y).is_zero():
        return False
    if all(c.is_zero() for c in (x, y, z)):
        return False
    if isinstance(cert.place, RealPlace):
        return True
    vals = [place_valuation(c, cert.place) for c in (x, y, z) if not c.is_zero()]
    return min(vals) == 0 and all(v >= 0 for v in vals) and place_valuation(t, cert.place) == 0


@dataclass(frozen=True)
class LocalTable:
    entries: tuple
    generic_rule: str = GENERIC_RULE


def exceptional_places(m: StackyCurveModel) -> list:
    """S = real places together with the finite places dividing 2pq."""
    spec = m.field
    places = set(real_places(spec))
    places |= set(places_above(spec, 2))
    places |= set(ideal_support(m.p)) | set(ideal_support(m.q))
    return sorted(places, key=place_sort_key)


def verify_local_everywhere(m: StackyCurveModel, extra_places: Sequence = ()) -> LocalTable:
    if m.p.is_zero() or m.q.is_zero():
        raise InvalidModel("degenerate model")
    places = set(exceptional_places(m)) | set(extra_places)
    entries = tuple(local_point_certificate(m, v) for v in sorted(places, key=place_sort_key))
    return LocalTable(entries)


# ---------------------------------------------------------- global emptiness


@dataclass(frozen=True)
class GlobalEmptinessCertificate:
    N: int
    unit_generators: tuple
    place_of_p: FinitePlace
    unit_squares: tuple  # SquareClassCertificate per generator, all "square"
    q_nonsquare: SquareClassCertificate
    hilbert_value: int


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    failed_units: tuple = ()
    q_certificate: SquareClassCertificate | None = None


def _check_preconditions(m: StackyCurveModel, N: int, units: Sequence[FieldElement]):
    if not isinstance(N, int) or N < 1:
        raise PreconditionViolated(f"N must be a positive integer, got {N!r}")
    if not units:
        raise PreconditionViolated("unit generator list is empty")
    if not m.strict or m.place_of_p is None:
        raise PreconditionViolated("global check needs a strict model (odd prime elements)")
    P = m.place_of_p
    if P.rational_prime == 2:
        raise PreconditionViolated("p must be odd")
    if P.e != 1:
        raise PreconditionViolated("p must be unramified")
    for name, place in (("p", m.place_of_p), ("q", m.place_of_q)):
        if N % place.rational_prime == 0:
            raise PreconditionViolated(f"{name} is not coprime to N = {N}")
    for u in units:
        if u.spec != m.field or u.is_zero():
            raise PreconditionViolated(f"bad unit generator {u}")
        n = Fraction(norm(u))
        for part in (n.numerator, n.denominator):
            rest = abs(part)
            for ell in primefactors(N):
                while rest % ell == 0:
                    rest //= ell
            if rest != 1:
                raise PreconditionViolated(f"{u} is not a unit of O_K[1/{N}] (norm {n})")


def verify_global_empty(m: StackyCurveModel, N: int, units: Sequence[FieldElement]):
    """Certify X_(p,q)(O_K[1/N]) is empty, or return Inconclusive.

    Every unit generator a square at v_p makes each twist isomorphic to
    Y_(p,q) over K_p; q a nonsquare there makes Y_(p,q)(K_p) empty.  The
    second condition is cross-checked against the Hilbert symbol (p, q).
    """
    units = tuple(units)
    _check_preconditions(m, N, units)
    P = m.place_of_p
    unit_certs = tuple(is_square_at(u, P) for u in units)
    q_cert = is_square_at(m.q, P)
    symbol = hilbert_symbol(m.p, m.q, P)
    if (not q_cert.is_square) != (symbol == -1):
        raise InternalInconsistency(
            f"q nonsquare at v_p is {not q_cert.is_square} but (p,q)_p = {symbol}"
        )
    failed = tuple(c.value for c in unit_certs if not c.is_square)
    if failed:
        return Inconclusive("a unit generator is not a square at v_p", failed, q_cert)
    if q_cert.is_square:
        return Inconclusive("q is a square at v_p", (), q_cert)
    return GlobalEmptinessCertificate(N, units, P, unit_certs, q_cert, symbol)


# ----------------------------------------------------------------- report


FORMAT_VERSION = "1"


@dataclass(frozen=True)
class CounterexampleReport:
    field: FieldSpec
    N: int
    unit_generators: tuple
    p: FieldElement
    q: FieldElement
    genus: Fraction
    local_table: LocalTable
    global_certificate: GlobalEmptinessCertificate
    version: str = FORMAT_VERSION


def build_counterexample_report(m: StackyCurveModel, N: int, units: Sequence[FieldElement]) -> CounterexampleReport:
    result = verify_global_empty(m, N, units)
    if isinstance(result, Inconclusive):
        raise GlobalCheckInconclusive(result.reason)
    table = verify_local_everywhere(m)
    g = model_genus(m)
    if g != Fraction(1, 2):
        raise InternalInconsistency(f"genus came out as {g}")
    return CounterexampleReport(m.field, N, tuple(units), m.p, m.q, g, table, result)
