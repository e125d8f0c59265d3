"""Acceptance criteria AC1..AC9, one PASS/FAIL line each."""

import contextlib
import json
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from helpers import dumps, random_single_mutations, verdict
from oracles import hilbert_by_brute_force, is_square_mod_power_of_two, legendre, squares_mod, twisted_solutions_q
from stackycert.certify import Accepted, validate_report
from stackycert.cli import dispatch
from stackycert.hilbert import hilbert_symbol, product_formula_check
from stackycert.localfield import is_square_at
from stackycert.numfield import RATIONALS, norm, parse_field, places_above
from stackycert.search import compute_profile, find_prime_pair
from stackycert.stacky import make_model, model_genus

Q = RATIONALS
K = parse_field("x^2+1")


@contextlib.contextmanager
def criterion(name, capsys, limit=None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert limit is None or elapsed < limit, f"{name} took {elapsed:.2f}s, limit {limit}s"
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\n{name}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s)")


def squarefree(n):
    return n != 0 and all(e == 1 for e in sympy.factorint(abs(n)).values())


def gaussian_primes(limit):
    """Odd Gaussian primes a+bi with a^2+b^2 a split prime, plus inert rational primes."""
    out = []
    for ell in sympy.primerange(3, limit):
        if ell % 4 == 3:
            out.append(K.rational(ell))
            continue
        a = next(a for a in range(1, ell) if sympy.sqrt(ell - a * a).is_integer)
        b = int(sympy.sqrt(ell - a * a))
        out += [K.element([a, b]), K.element([b, a])]
    return out


def test_ac1_genus(capsys):
    rng = random.Random(1)
    rat = [Q.rational(ell) for ell in sympy.primerange(3, 300)]
    gau = gaussian_primes(200)
    with criterion("AC1 genus is exactly 1/2", capsys, limit=1.0):
        for pool in (rat, gau):
            for _ in range(25):
                p, q = rng.sample(pool, 2)
                g = model_genus(make_model(p, q))
                assert type(g) is Fraction and g == Fraction(1, 2)


def test_ac2_hilbert_oracle(capsys):
    vals = [a for a in range(-20, 21) if squarefree(a)]
    with criterion("AC2 Hilbert symbol matches brute force", capsys, limit=120.0):
        bad = []
        for ell in sympy.primerange(3, 51):
            P = places_above(Q, ell)[0]
            for a in vals:
                for b in vals:
                    if hilbert_symbol(Q.rational(a), Q.rational(b), P) != hilbert_by_brute_force(a, b, ell):
                        bad.append((a, b, ell))
        assert bad == []


def test_ac3_product_formula(capsys):
    rng = random.Random(3)

    def nz(spec):
        while True:
            c = [rng.randint(-50, 50) for _ in range(spec.degree)]
            if any(c):
                return spec.element(c)

    with criterion("AC3 product formula", capsys, limit=60.0):
        for _ in range(500):
            assert product_formula_check(nz(Q), nz(Q))
        for _ in range(100):
            assert product_formula_check(nz(K), nz(K))


def _exhaustive_smallest_q_pair(limit):
    # smallest p = 1 mod 4 (so -1 is a square), then smallest odd prime q that is a nonresidue mod p
    for p in sympy.primerange(3, limit):
        if legendre(-1, p) != 1:
            continue
        for q in sympy.primerange(3, limit):
            if q != p and legendre(q, p) == -1:
                return p, q
    return None


def test_ac4_end_to_end_over_q(tmp_path, capsys):
    out = tmp_path / "q.json"
    with criterion("AC4 construct over Q gives (5, 3)", capsys, limit=5.0):
        assert _exhaustive_smallest_q_pair(100) == (5, 3)
        proc = subprocess.run([sys.executable, "-m", "stackycert", "construct", "--bound", "100", "--out", str(out)],
                              capture_output=True)
        assert proc.returncode == 0, proc.stderr
        data = out.read_bytes()
        doc = json.loads(data)
        assert (doc["p"], doc["q"]) == (["5"], ["3"])
        assert validate_report(data) == Accepted()
        table = {e["place"].get("ell", "inf"): e for e in doc["local_table"]["entries"]}
        assert set(table) == {"2", "3", "5", "inf"}
        points = {k: [c[0] for c in e["point"]] for k, e in table.items()}
        assert points["3"] == ["1", "0", "1"]
        for k in ("2", "5", "inf"):
            assert points[k] == ["0", "1", "1"]


def _gaussian_oracle(limit):
    """Norm of p and the rational q, from squares mod rational primes and a root of x^2+1."""
    for ell in sympy.primerange(3, limit):
        sq = set(np.flatnonzero(squares_mod(ell)).tolist())
        roots = [r for r in range(ell) if (r * r + 1) % ell == 0]
        if not roots:
            continue
        # the unit i is a square at the place where it maps to r
        good = [r for r in roots if r in sq]
        if not good:
            continue
        # the first odd candidate is the inert prime 3; only its residue class matters here
        return ell, (3 if 3 % ell not in sq else None)
    return None


def test_ac5_end_to_end_over_gaussian(capsys):
    with criterion("AC5 construct over Q(i) gives Norm(p)=17, q=3", capsys, limit=10.0):
        assert _gaussian_oracle(100) == (17, 3)
        profile = compute_profile(K)
        pair = find_prime_pair(profile, 100)
        assert norm(pair.p) == 17 and pair.q == K.rational(3)
        out = subprocess.run([sys.executable, "-m", "stackycert", "construct", "--field", "x^2+1"],
                             capture_output=True)
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert doc["q"] == ["3", "0"]
        assert validate_report(out.stdout) == Accepted()


def test_ac6_negative_control(capsys):
    with criterion("AC6 (5, 11) is inconclusive with exit 2", capsys):
        assert legendre(11, 5) == 1
        code = dispatch(["construct", "--p", "5", "--q", "11"])
        out, err = capsys.readouterr()
        assert code == 2 and out == "" and "inconclusive" in err


def test_ac7_no_small_points(capsys):
    with criterion("AC7 no points of height <= 1000 on either twist", capsys, limit=30.0):
        for t in (1, -1):
            assert twisted_solutions_q(t, 5, 3, 1000) == 0


def test_ac8_tamper_detection(capsys):
    assert dispatch(["construct"]) == 0
    doc = json.loads(capsys.readouterr().out)
    with criterion("AC8 200 single-field mutations rejected", capsys):
        accepted = [(path, new) for path, new, bad in random_single_mutations(doc, 200, seed=8)
                    if verdict(dumps(bad)).ok]
        assert accepted == []


def test_ac9_two_adic_squares(capsys):
    P2 = places_above(Q, 2)[0]
    with criterion("AC9 2-adic squares match x^2 = a mod 2^12", capsys):
        residues = set(np.unique(np.arange(1 << 12, dtype=np.int64) ** 2 % (1 << 12)).tolist())
        for a in range(-99, 100, 2):
            brute = (a % (1 << 12)) in residues
            assert brute == is_square_mod_power_of_two(a, 12)
            assert is_square_at(Q.rational(a), P2).is_square == brute


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
