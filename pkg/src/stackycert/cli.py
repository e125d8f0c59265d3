"""Command-line interface.

Exit codes: 0 constructed/verified, 1 rejected, 2 inconclusive, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .certify import _enc_elem, _enc_place, serialize_report, validate_report
from .errors import (
    GlobalCheckInconclusive,
    InternalInconsistency,
    MalformedInput,
    SearchExhausted,
    StackyError,
)
from .hilbert import hilbert_symbol, symbol_table
from .numfield import parse_field, places_above, real_places
from .search import compute_profile, find_prime_pair, load_profile
from .stacky import build_counterexample_report, make_model, model_genus, model_ramification, verify_local_everywhere

log = logging.getLogger("stackycert")

EXIT_OK, EXIT_REJECTED, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _rat(r: Fraction) -> dict:
    r = Fraction(r)
    return {"num": str(r.numerator), "den": str(r.denominator)}


def _pair(args, spec):
    if args.p is None or args.q is None:
        raise MalformedInput("--p and --q are both required")
    return make_model(spec.parse_element(args.p), spec.parse_element(args.q))


def _profile(args):
    if args.profile:
        profile = load_profile(args.profile)
        if args.field != "x" and parse_field(args.field) != profile.field:
            raise MalformedInput("--field disagrees with the profile's field")
        return profile
    return compute_profile(parse_field(args.field))


def cmd_construct(args) -> int:
    profile = _profile(args)
    spec = profile.field
    if args.p is not None or args.q is not None:
        model = _pair(args, spec)
    else:
        pair = find_prime_pair(profile, args.bound)
        model = make_model(pair.p, pair.q)
    report = build_counterexample_report(model, profile.trivializing_N, profile.unit_generators)
    data = serialize_report(report)
    if not validate_report(data).ok:
        raise InternalInconsistency("freshly built certificate failed validation")
    if args.out:
        Path(args.out).write_bytes(data)
        log.info("certificate for p=%s q=%s written to %s", model.p, model.q, args.out)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_verify(args) -> int:
    if not args.cert:
        raise MalformedInput("--cert is required")
    try:
        data = Path(args.cert).read_bytes()
    except OSError as exc:
        raise MalformedInput(f"cannot read {args.cert}: {exc}") from exc
    result = validate_report(data)
    if result.ok:
        _emit({"verdict": "accepted"})
        return EXIT_OK
    _emit({"verdict": "rejected", "reason": result.reason})
    return EXIT_REJECTED


def cmd_genus(args) -> int:
    model = _pair(args, parse_field(args.field))
    ram = model_ramification(model)
    _emit({
        "genus": _rat(model_genus(model)),
        "coarse_genus": str(ram.coarse_genus),
        "stacky_points": [[str(o), str(d)] for o, d in ram.stacky_points],
    })
    return EXIT_OK


def _select_places(spec, text):
    """'inf' for the real places, or a rational prime for the places above it."""
    if text in ("inf", "infinity", "real"):
        return list(real_places(spec))
    try:
        ell = int(text)
    except ValueError as exc:
        raise MalformedInput(f"--place must be 'inf' or a rational prime, got {text!r}") from exc
    return places_above(spec, ell)


def cmd_hilbert(args) -> int:
    spec = parse_field(args.field)
    if args.p is None or args.q is None:
        raise MalformedInput("--p and --q are both required")
    a, b = spec.parse_element(args.p), spec.parse_element(args.q)
    if args.place:
        table = {v: hilbert_symbol(a, b, v) for v in _select_places(spec, args.place)}
    else:
        table = symbol_table(a, b)
    _emit([{"place": _enc_place(v), "symbol": str(s)} for v, s in table.items()])
    return EXIT_OK


def cmd_local_points(args) -> int:
    spec = parse_field(args.field)
    model = _pair(args, spec)
    extra = _select_places(spec, args.place) if args.place else ()
    table = verify_local_everywhere(model, extra)
    _emit({
        "generic_rule": table.generic_rule,
        "entries": [
            {
                "place": _enc_place(e.place),
                "twist_label": e.twist_label,
                "twist": _enc_elem(e.twist),
                "point": [_enc_elem(c) for c in e.point.coords()],
            }
            for e in table.entries
        ],
    })
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "genus": cmd_genus,
    "hilbert": cmd_hilbert,
    "local-points": cmd_local_points,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stackycert", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--field", default="x", help="minimal polynomial in x (default: x, i.e. Q)")
        sp.add_argument("--p", help="element in t, e.g. '1+4*t'")
        sp.add_argument("--q")
        sp.add_argument("--bound", type=int, default=100, help="search bound on rational primes")
        sp.add_argument("--profile", help="JSON file with field, N and unit generators")
        sp.add_argument("--out")
        sp.add_argument("--cert")
        sp.add_argument("--place", help="'inf' or a rational prime")
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.bound < 2:
        print("error: --bound must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (GlobalCheckInconclusive, SearchExhausted) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except InternalInconsistency as exc:
        # the engine disagreed with itself: nothing is certified
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (StackyError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
