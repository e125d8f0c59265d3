import random
from fractions import Fraction

import pytest
import sympy

from oracles import is_square_mod_power_of_two, legendre
from stackycert.errors import NegativeValuation, ZeroElement
from stackycert.localfield import (
    SquareClassCertificate,
    check_square_witness,
    congruent_mod,
    hensel_margin,
    is_square_at,
    refine_place,
    residue_field,
    residue_image,
    sign_at,
    sqrt_mod_power,
    valuation_at,
)
from stackycert.numfield import RATIONALS, parse_field, places_above, real_places

Q = RATIONALS
K = parse_field("x^2+1")
G = parse_field("x^2-x-1")


def place(spec, ell, factor=None):
    ps = places_above(spec, ell)
    if factor is None:
        return ps[0]
    return next(P for P in ps if P.local_factor == factor)


def nonzero(spec, rng, lo=-12, hi=12):
    while True:
        a = spec.element([rng.randint(lo, hi) for _ in range(spec.degree)])
        if not a.is_zero():
            return a


# ---- valuations and residues


def test_valuation_examples():
    assert valuation_at(Q.rational(50), place(Q, 5)) == 2
    assert valuation_at(4 + K.theta, place(K, 17, (4, 1))) == 1
    assert valuation_at(K.rational(2), place(K, 2)) == 2


def test_valuation_of_zero():
    with pytest.raises(ZeroElement):
        valuation_at(Q.zero, place(Q, 5))


@pytest.mark.parametrize("spec,ell", [(Q, 5), (K, 2), (K, 5), (K, 3), (G, 5), (G, 11)])
def test_valuation_additive(spec, ell):
    rng = random.Random(ell)
    for P in places_above(spec, ell):
        for _ in range(500):
            a, b = nonzero(spec, rng), nonzero(spec, rng)
            assert valuation_at(a * b, P) == valuation_at(a, P) + valuation_at(b, P)


def test_residue_examples():
    assert residue_image(Q.rational(3), place(Q, 5)) == (3,)
    assert residue_image(K.theta, place(K, 17, (4, 1))) == (13,)
    assert residue_image(K.theta, place(K, 3)) == (0, 1)


def test_residue_of_fraction_and_error():
    P5 = place(Q, 5)
    assert residue_image(Q.rational(Fraction(1, 2)), P5) == (3,)
    with pytest.raises(NegativeValuation):
        residue_image(Q.rational(Fraction(1, 5)), P5)


def test_residue_matches_root_substitution():
    # at a split place P = (ell, theta - r), the residue of a is a(r) mod ell
    rng = random.Random(5)
    for ell in (5, 13, 17, 29):
        for P in places_above(K, ell):
            r = (-P.local_factor[0]) % ell
            for _ in range(50):
                a = K.element([rng.randint(-30, 30), rng.randint(-30, 30)])
                assert residue_image(a, P) == ((a.coords[0] + a.coords[1] * r) % ell,)


def test_residue_field_is_a_field():
    F = residue_field(place(K, 3))
    elems = [e for e in F.elements() if any(e)]
    assert len(elems) == 8
    for e in elems:
        assert F.mul(e, F.inv(e)) == F.one


# ---- square classes


def test_square_examples():
    P5, P2 = place(Q, 5), place(Q, 2)
    assert not is_square_at(Q.rational(3), P5).is_square
    c = is_square_at(Q.rational(-1), P5)
    assert c.is_square and c.witness_kind == "root"
    assert c.witness == Q.rational(2)
    assert check_square_witness(c)
    # 2 lifts: 7^2 = 49 = -1 mod 25 and 7 = 2 mod 5
    assert congruent_mod(Q.rational(49), Q.rational(-1), P5, 2)
    c = is_square_at(Q.rational(17), P2)
    assert c.is_square and check_square_witness(c)
    assert not is_square_at(Q.rational(5), P2).is_square


def test_listed_2adic_witness_also_verifies():
    # 7^2 = 49 = 17 mod 32: an equally valid witness at higher precision
    c = SquareClassCertificate(Q.rational(17), place(Q, 2), "square", "root", Q.rational(7), 5, 0)
    assert check_square_witness(c)
    bad = SquareClassCertificate(Q.rational(17), place(Q, 2), "square", "root", Q.rational(3), 5, 0)
    assert not check_square_witness(bad)
    low = SquareClassCertificate(Q.rational(17), place(Q, 2), "square", "root", Q.rational(1), 2, 0)
    assert not check_square_witness(low)


def test_square_of_zero():
    with pytest.raises(ZeroElement):
        is_square_at(Q.zero, place(Q, 5))


def test_hensel_margin():
    assert hensel_margin(place(Q, 5)) == 1
    assert hensel_margin(place(Q, 2)) == 3
    assert hensel_margin(place(K, 2)) == 2 * 2 * 2 + 1


@pytest.mark.parametrize("a", [a for a in range(-100, 101) if a % 2])
def test_two_adic_oracle(a):
    assert is_square_at(Q.rational(a), place(Q, 2)).is_square == is_square_mod_power_of_two(a, 12)


@pytest.mark.parametrize("ell", [3, 5, 7, 11, 13, 97])
def test_odd_rational_units_match_legendre(ell):
    P = place(Q, ell)
    for a in range(1, 3 * ell):
        if a % ell:
            assert is_square_at(Q.rational(a), P).is_square == (legendre(a, ell) == 1)


def test_gaussian_square_examples():
    t = K.theta
    assert is_square_at(t, place(K, 17, (4, 1))).is_square
    assert is_square_at(t, place(K, 3)).is_square
    assert not is_square_at(1 + t, place(K, 2)).is_square
    assert is_square_at(K.rational(-1), place(K, 2)).is_square


@pytest.mark.parametrize("spec,ell", [(Q, 2), (Q, 7), (K, 2), (K, 5), (K, 3), (G, 2), (G, 11)])
def test_square_classes_respect_square_multiples(spec, ell):
    rng = random.Random(100 + ell)
    P = places_above(spec, ell)[0]
    for _ in range(200 if ell != 2 else 60):
        a, b = nonzero(spec, rng, -6, 6), nonzero(spec, rng, -6, 6)
        assert is_square_at(a * b * b, P).is_square == is_square_at(a, P).is_square


@pytest.mark.parametrize("spec,ell", [(Q, 7), (K, 5), (K, 3), (G, 11)])
def test_product_of_nonsquare_units_is_square(spec, ell):
    rng = random.Random(ell)
    P = places_above(spec, ell)[0]
    units = []
    while len(units) < 30:
        a = nonzero(spec, rng)
        if valuation_at(a, P) == 0 and not is_square_at(a, P).is_square:
            units.append(a)
    for _ in range(100):
        a, b = rng.choice(units), rng.choice(units)
        assert is_square_at(a * b, P).is_square


@pytest.mark.parametrize("spec,ell", [(Q, 2), (Q, 3), (K, 2), (K, 13), (K, 3), (G, 2), (G, 5)])
def test_every_square_witness_verifies(spec, ell):
    rng = random.Random(9)
    for P in places_above(spec, ell):
        for _ in range(60):
            c = is_square_at(nonzero(spec, rng), P)
            if c.is_square:
                assert check_square_witness(c)
                assert c.precision >= c.valuation + hensel_margin(P)


def test_sqrt_mod_power_against_exhaustive():
    P2 = place(Q, 2)
    for a in range(1, 64, 2):
        s = sqrt_mod_power(Q.rational(a), P2, 6)
        expect = any((x * x - a) % 64 == 0 for x in range(64))
        assert (s is not None) == expect
        if s is not None:
            assert (int(s.coords[0]) ** 2 - a) % 64 == 0


# ---- real places


def test_sign_examples():
    (R,) = real_places(Q)
    assert sign_at(Q.rational(-3), R) == -1
    lo, hi = real_places(G)
    assert sign_at(G.theta, hi) == 1
    assert sign_at(G.theta, lo) == -1


def test_sign_agrees_with_refinement():
    rng = random.Random(4)
    for spec in (G, parse_field("x^2-2"), parse_field("x^3-2")):
        for R in real_places(spec):
            fine = refine_place(spec, R, Fraction(1, 10**12))
            mid = float((fine.lo + fine.hi) / 2)
            for _ in range(50):
                a = nonzero(spec, rng)
                val = sum(float(c) * mid**i for i, c in enumerate(a.coords))
                if abs(val) > 1e-6:
                    assert sign_at(a, R) == (1 if val > 0 else -1)
                assert sign_at(a, R) == sign_at(a, fine)


def test_real_square_class():
    (R,) = real_places(Q)
    assert is_square_at(Q.rational(2), R).is_square
    assert not is_square_at(Q.rational(-2), R).is_square


def test_refined_interval_isolates_root():
    for R in real_places(G):
        fine = refine_place(G, R, Fraction(1, 1000))
        assert fine.hi - fine.lo <= Fraction(1, 1000)
        x = sympy.Symbol("x")
        roots = [r for r in sympy.real_roots(x**2 - x - 1) if fine.lo <= r <= fine.hi]
        assert len(roots) == 1
