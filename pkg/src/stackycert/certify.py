"""On-disk certificates for counterexample reports, and an independent validator.

Format: JSON with sorted keys.  Integers are decimal strings, rationals are
{"num": ..., "den": ...}.  Finite places are {"ell", "local_factor", "e",
"d"} and real places carry an isolating interval.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction

from sympy import primefactors

from .errors import MalformedInput, StackyError
from .hilbert import ConicPoint, hilbert_symbol
from .localfield import SquareClassCertificate, check_square_witness, is_square_at, residue_field, residue_image
from .numfield import (
    FieldElement,
    FieldSpec,
    FinitePlace,
    RealPlace,
    is_prime_element,
    norm,
    place_valuation,
    places_above,
    real_places,
)
from .search import _hnf_rows, _is_real, _order, _roots, trivializing_N, unit_generators
from .stacky import (
    FORMAT_VERSION,
    GENERIC_RULE,
    CounterexampleReport,
    GlobalEmptinessCertificate,
    LocalPointCertificate,
    LocalTable,
    RamificationDatum,
    StackyCurveModel,
    exceptional_places,
    genus,
    local_point_certificate,
    model_ramification,
)

_INT = re.compile(r"-?(0|[1-9][0-9]*)\Z")


@dataclass(frozen=True)
class Accepted:
    ok: bool = True


@dataclass(frozen=True)
class Rejected:
    reason: str
    ok: bool = False


# ------------------------------------------------------------------ encode


def _enc_int(n: int) -> str:
    return str(int(n))


def _enc_rat(r) -> object:
    r = Fraction(r)
    if r.denominator == 1:
        return _enc_int(r.numerator)
    return {"num": _enc_int(r.numerator), "den": _enc_int(r.denominator)}


def _enc_elem(a: FieldElement) -> list:
    return [_enc_rat(c) for c in a.coords]


def _enc_place(v) -> dict:
    if isinstance(v, RealPlace):
        return {"kind": "real", "lo": _enc_rat(v.lo), "hi": _enc_rat(v.hi)}
    return {
        "kind": "finite",
        "ell": _enc_int(v.rational_prime),
        "local_factor": [_enc_int(c) for c in v.local_factor],
        "e": _enc_int(v.e),
        "d": _enc_int(v.d),
    }


def _enc_witness(c: SquareClassCertificate):
    if c.witness_kind == "root":
        return _enc_elem(c.witness)
    if c.witness_kind == "residue_nonsquare":
        return [_enc_int(x) for x in c.witness]
    return _enc_int(c.witness)


def _enc_square(c: SquareClassCertificate) -> dict:
    return {
        "value": _enc_elem(c.value),
        "place": _enc_place(c.place),
        "verdict": c.verdict,
        "witness_kind": c.witness_kind,
        "witness": _enc_witness(c),
        "precision": _enc_int(c.precision),
        "valuation": _enc_int(c.valuation),
    }


def _enc_entry(e: LocalPointCertificate) -> dict:
    return {
        "place": _enc_place(e.place),
        "twist_label": e.twist_label,
        "twist": _enc_elem(e.twist),
        "point": [_enc_elem(c) for c in e.point.coords()],
        "exact": e.exact,
    }


def report_to_dict(r: CounterexampleReport) -> dict:
    g = r.global_certificate
    ram = model_ramification(StackyCurveModel(r.field, r.p, r.q, g.place_of_p))
    return {
        "version": r.version,
        "field": {"min_poly": [_enc_int(c) for c in r.field.min_poly]},
        "N": _enc_int(r.N),
        "unit_generators": [_enc_elem(u) for u in r.unit_generators],
        "p": _enc_elem(r.p),
        "q": _enc_elem(r.q),
        "genus": {"num": _enc_int(r.genus.numerator), "den": _enc_int(r.genus.denominator)},
        "ramification": {
            "coarse_genus": _enc_int(ram.coarse_genus),
            "stacky_points": [[_enc_int(o), _enc_int(d)] for o, d in ram.stacky_points],
        },
        "local_table": {
            "generic_rule": r.local_table.generic_rule,
            "entries": [_enc_entry(e) for e in r.local_table.entries],
        },
        "global": {
            "place_of_p": _enc_place(g.place_of_p),
            "unit_squares": [_enc_square(c) for c in g.unit_squares],
            "q_nonsquare": _enc_square(g.q_nonsquare),
            "hilbert_value": _enc_int(g.hilbert_value),
        },
    }


def serialize_report(r: CounterexampleReport) -> bytes:
    return (json.dumps(report_to_dict(r), sort_keys=True, indent=2) + "\n").encode("utf-8")


# ------------------------------------------------------------------ decode


def _expect(cond, what):
    if not cond:
        raise MalformedInput(what)


def _keys(d, keys, what):
    _expect(isinstance(d, dict), f"{what}: expected an object")
    _expect(set(d) == set(keys), f"{what}: keys {sorted(d)} != {sorted(keys)}")


def _dec_int(s, what="integer") -> int:
    _expect(isinstance(s, str) and _INT.match(s), f"{what}: not a decimal string: {s!r}")
    return int(s)


def _dec_rat(x, what="rational"):
    if isinstance(x, dict):
        _keys(x, ("num", "den"), what)
        den = _dec_int(x["den"], what)
        _expect(den > 1, f"{what}: denominator must exceed 1")
        r = Fraction(_dec_int(x["num"], what), den)
        _expect(r.denominator == den, f"{what}: fraction not in lowest terms")
        return r
    return _dec_int(x, what)


def _dec_elem(spec: FieldSpec, x, what="element") -> FieldElement:
    _expect(isinstance(x, list) and len(x) == spec.degree, f"{what}: wrong coordinate count")
    return spec.element([_dec_rat(c, what) for c in x])


def _dec_place(x, what="place"):
    _expect(isinstance(x, dict) and "kind" in x, f"{what}: expected an object with a kind")
    if x["kind"] == "real":
        _keys(x, ("kind", "lo", "hi"), what)
        return RealPlace(Fraction(_dec_rat(x["lo"], what)), Fraction(_dec_rat(x["hi"], what)))
    _expect(x["kind"] == "finite", f"{what}: unknown kind {x['kind']!r}")
    _keys(x, ("kind", "ell", "local_factor", "e", "d"), what)
    _expect(isinstance(x["local_factor"], list), f"{what}: local_factor must be a list")
    return FinitePlace(
        _dec_int(x["ell"], what),
        tuple(_dec_int(c, what) for c in x["local_factor"]),
        _dec_int(x["e"], what),
        _dec_int(x["d"], what),
    )


def _dec_square(spec, x, what) -> SquareClassCertificate:
    _keys(x, ("value", "place", "verdict", "witness_kind", "witness", "precision", "valuation"), what)
    kind = x["witness_kind"]
    _expect(isinstance(kind, str) and isinstance(x["verdict"], str), f"{what}: bad verdict fields")
    if kind == "root":
        witness = _dec_elem(spec, x["witness"], what)
    elif kind == "residue_nonsquare":
        _expect(isinstance(x["witness"], list), f"{what}: residue witness must be a list")
        witness = tuple(_dec_int(c, what) for c in x["witness"])
    else:
        witness = _dec_int(x["witness"], what)
    return SquareClassCertificate(
        _dec_elem(spec, x["value"], what),
        _dec_place(x["place"], what),
        x["verdict"],
        kind,
        witness,
        _dec_int(x["precision"], what),
        _dec_int(x["valuation"], what),
    )


def _dec_entry(spec, x, what) -> LocalPointCertificate:
    _keys(x, ("place", "twist_label", "twist", "point", "exact"), what)
    _expect(isinstance(x["twist_label"], str) and isinstance(x["exact"], bool), f"{what}: bad labels")
    _expect(isinstance(x["point"], list) and len(x["point"]) == 3, f"{what}: point needs 3 coordinates")
    place = _dec_place(x["place"], what)
    pt = ConicPoint(*(_dec_elem(spec, c, what) for c in x["point"]), place)
    return LocalPointCertificate(place, x["twist_label"], _dec_elem(spec, x["twist"], what), pt, x["exact"])


def _load(data: bytes) -> dict:
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"not a JSON document: {exc}") from exc
    _keys(doc, ("version", "field", "N", "unit_generators", "p", "q", "genus",
                "ramification", "local_table", "global"), "report")
    return doc


def _dec_field(doc) -> FieldSpec:
    _keys(doc["field"], ("min_poly",), "field")
    coeffs = doc["field"]["min_poly"]
    _expect(isinstance(coeffs, list) and len(coeffs) >= 2, "field: min_poly must be a list")
    return FieldSpec(tuple(_dec_int(c, "field") for c in coeffs))


def _decode(doc, spec: FieldSpec):
    """Everything but the field; returns (report, ramification datum)."""
    _expect(isinstance(doc["version"], str), "version must be a string")
    N = _dec_int(doc["N"], "N")
    _expect(isinstance(doc["unit_generators"], list), "unit_generators must be a list")
    units = tuple(_dec_elem(spec, u, "unit generator") for u in doc["unit_generators"])
    p = _dec_elem(spec, doc["p"], "p")
    q = _dec_elem(spec, doc["q"], "q")
    _keys(doc["genus"], ("num", "den"), "genus")
    num, den = _dec_int(doc["genus"]["num"], "genus"), _dec_int(doc["genus"]["den"], "genus")
    _expect(den != 0, "genus: zero denominator")
    ram_doc = doc["ramification"]
    _keys(ram_doc, ("coarse_genus", "stacky_points"), "ramification")
    _expect(isinstance(ram_doc["stacky_points"], list), "ramification: stacky_points must be a list")
    pts = []
    for pair in ram_doc["stacky_points"]:
        _expect(isinstance(pair, list) and len(pair) == 2, "ramification: bad stacky point")
        pts.append((_dec_int(pair[0]), _dec_int(pair[1])))
    ram = (_dec_int(ram_doc["coarse_genus"]), tuple(pts))
    lt = doc["local_table"]
    _keys(lt, ("generic_rule", "entries"), "local_table")
    _expect(isinstance(lt["generic_rule"], str) and isinstance(lt["entries"], list), "local_table: bad shape")
    table = LocalTable(tuple(_dec_entry(spec, e, "local entry") for e in lt["entries"]), lt["generic_rule"])
    g = doc["global"]
    _keys(g, ("place_of_p", "unit_squares", "q_nonsquare", "hilbert_value"), "global")
    _expect(isinstance(g["unit_squares"], list), "global: unit_squares must be a list")
    gcert = GlobalEmptinessCertificate(
        N,
        units,
        _dec_place(g["place_of_p"], "place_of_p"),
        tuple(_dec_square(spec, c, "unit square") for c in g["unit_squares"]),
        _dec_square(spec, g["q_nonsquare"], "q certificate"),
        _dec_int(g["hilbert_value"], "hilbert_value"),
    )
    # genus kept unreduced so a tampered denominator is still visible
    report = CounterexampleReport(spec, N, units, p, q, (num, den), table, gcert, doc["version"])
    return report, ram


def deserialize_report(data: bytes) -> CounterexampleReport:
    doc = _load(data)
    try:
        spec = _dec_field(doc)
        report, _ = _decode(doc, spec)
    except MalformedInput:
        raise
    except (StackyError, ValueError, ZeroDivisionError) as exc:
        raise MalformedInput(f"undecodable report: {exc}") from exc
    num, den = report.genus
    return CounterexampleReport(
        report.field, report.N, report.unit_generators, report.p, report.q,
        Fraction(num, den), report.local_table, report.global_certificate, report.version,
    )


# ---------------------------------------------------------------- validate


class _Reject(Exception):
    pass


def _require(cond, reason):
    if not cond:
        raise _Reject(reason)


def _unit_exponents(u: FieldElement, canon: list, places: list, w: int, real: bool):
    """Exponent vector of u in the canonical generators, torsion part mod w; None if u is not in the group."""
    spec = u.spec
    s_gens = canon[(2 if real else 1):]
    zeta = canon[0]
    vec = [place_valuation(u, P) for P in places]
    # s_gens have upper-triangular, nonnegative valuation rows: peel them off
    rows = [[place_valuation(g, P) for P in places] for g in s_gens]
    coeffs = []
    rest = u
    for i, row in enumerate(rows):
        col = next(j for j, x in enumerate(row) if x)
        if vec[col] % row[col]:
            return None
        c = vec[col] // row[col]
        coeffs.append(c)
        vec = [a - c * b for a, b in zip(vec, row)]
        rest = rest / s_gens[i] ** c
    if any(vec) or not rest.is_integral() or abs(norm(rest)) != 1:
        return None
    free = []
    if real:
        eps = canon[1]
        root = _roots(spec)[0]
        x, y = (sum(float(c) * root**i for i, c in enumerate(a.coords)) for a in (eps, rest))
        j = round(math.log(abs(y)) / math.log(abs(x)))
        rest = rest / eps**j
        free.append(j)
    for k in range(w):
        if rest == zeta**k:
            return [k] + free + coeffs
    return None


def _same_unit_group(spec: FieldSpec, N: int, claimed) -> bool:
    """Do the claimed generators generate O_K[1/N]^x?  Degree <= 2 only."""

    canon = unit_generators(spec, N)
    places = [P for ell in primefactors(N) for P in places_above(spec, ell)]
    real = spec.degree == 2 and _is_real(spec)
    w = _order(canon[0])
    vecs = []
    for u in claimed:
        v = _unit_exponents(u, canon, places, w, real)
        if v is None:
            return False
        vecs.append(v)
    width = 1 + (1 if real else 0) + len(canon) - (2 if real else 1)
    rows = [v for v in vecs] + [[w] + [0] * (width - 1)]
    basis = _hnf_rows(rows, width)
    identity = [[1 if i == j else 0 for j in range(width)] for i in range(width)]
    return basis == identity


def _check_units(spec, N, units):
    _require(N >= 1, "N must be positive")
    _require(len(units) > 0, "unit generator list is empty")
    for u in units:
        _require(not u.is_zero(), "zero unit generator")
        n = Fraction(norm(u))
        for part in (n.numerator, n.denominator):
            rest = abs(part)
            for ell in primefactors(N):
                while rest % ell == 0:
                    rest //= ell
            _require(rest == 1, f"unit generator {u} has norm {n}, not a unit of O_K[1/N]")
    if spec.degree <= 2:
        _require(N % trivializing_N(spec) == 0, "O_K[1/N] not certified principal")
        _require(_same_unit_group(spec, N, units), "unit generators do not generate O_K[1/N]^x")


def _independent_nonsquare(c: SquareClassCertificate) -> bool:
    """Cross-check a residue-nonsquare witness by Euler's criterion on the brute residue."""
    if c.witness_kind == "odd_valuation":
        return c.witness % 2 == 1 and place_valuation(c.value, c.place) == c.witness
    if c.witness_kind != "residue_nonsquare" or c.place.rational_prime == 2:
        return True
    F = residue_field(c.place)
    r = tuple(c.witness)
    return any(r) and F.pow(r, (F.size - 1) // 2) != F.one


def _validate(doc) -> None:
    _require(doc["version"] == FORMAT_VERSION, f"unsupported version {doc['version']!r}")
    try:
        spec = _dec_field(doc)
    except MalformedInput:
        raise
    except (StackyError, ValueError) as exc:
        raise _Reject(f"invalid field: {exc}") from exc
    r, ram = _decode(doc, spec)
    N, units, p, q = r.N, r.unit_generators, r.p, r.q
    g = r.global_certificate
    try:
        _check_units(spec, N, units)

        # (p, q): odd prime elements, distinct, prime to N; p unramified
        places = []
        for name, x in (("p", p), ("q", q)):
            _require(x.is_integral(), f"{name} is not integral")
            _require(not x.is_zero() and abs(norm(x)) != 1, f"{name} is zero or a unit")
            verdict = is_prime_element(x)
            _require(verdict.is_prime, f"{name} is not a prime element")
            _require(verdict.place.rational_prime != 2, f"{name} is not odd")
            _require(N % verdict.place.rational_prime != 0, f"{name} is not coprime to N")
            places.append(verdict.place)
        P = places[0]
        _require(places[0] != places[1], "p and q generate the same prime")
        _require(P.e == 1, "p is ramified")
        _require(g.place_of_p == P, "place of p does not match p")

        # genus from the ramification data
        model = StackyCurveModel(spec, p, q, P, places[1])
        expected = model_ramification(model)
        _require(ram == (expected.coarse_genus, expected.stacky_points), "genus mismatch: ramification data")
        num, den = r.genus
        _require((num, den) == (1, 2), "genus mismatch")
        _require(genus(RamificationDatum(*ram)) == Fraction(1, 2), "genus mismatch")

        # global emptiness: units squares at v_p, q not
        _require(len(g.unit_squares) == len(units), "unit square certificates do not match generators")
        for u, c in zip(units, g.unit_squares):
            _require(c.value == u and c.place == P, "unit square certificate for the wrong element or place")
            _require(c.verdict == "square" and check_square_witness(c), f"square witness for {u} fails")
            _require(c == is_square_at(u, P), f"square certificate for {u} is not canonical")
        qc = g.q_nonsquare
        fresh = is_square_at(q, P)
        _require(not fresh.is_square, "nonsquare condition fails: q is a square at v_p")
        _require(qc.value == q and qc.place == P, "q certificate for the wrong element or place")
        _require(qc.verdict == "nonsquare" and qc == fresh, "q certificate is not the canonical nonsquare certificate")
        _require(_independent_nonsquare(qc), "q nonsquare witness fails")
        if qc.witness_kind == "residue_nonsquare":
            _require(tuple(qc.witness) == residue_image(q, P), "q residue witness is wrong")
        symbol = hilbert_symbol(p, q, P)
        _require(symbol == -1 and g.hilbert_value == -1, "Hilbert symbol (p,q) at v_p is not -1")

        # local points at the exceptional places
        table = r.local_table
        _require(table.generic_rule == GENERIC_RULE, "generic rule text altered")
        want = exceptional_places(model)
        _require([e.place for e in table.entries] == want, "local table does not cover the exceptional places")
        _require(all(isinstance(v, FinitePlace) or v in real_places(spec) for v in want), "bad real place")
        for e in table.entries:
            _require(e.point.place == e.place, "local point filed under the wrong place")
            _require(e == local_point_certificate(model, e.place), f"local point at {e.place} is not canonical")
            x, y, z = e.point.coords()
            _require((e.twist * z * z - p * x * x - q * y * y).is_zero(), f"local point at {e.place} fails")
    except (StackyError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, MalformedInput):
            raise
        raise _Reject(f"recomputation failed: {exc}") from exc


def validate_report(data: bytes) -> Accepted | Rejected:
    """Recompute every claim in a serialized report.  Raises MalformedInput on bad structure."""
    doc = _load(data)
    try:
        _validate(doc)
    except _Reject as exc:
        return Rejected(str(exc))
    return Accepted()
