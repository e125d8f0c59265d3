"""Dense univariate polynomials over Q and over prime fields.

A polynomial is a list of coefficients, constant term first, with no
trailing zeros.  The zero polynomial is ``[]``.  Functions never mutate
their arguments.

Rational coefficients are ``Fraction`` or ``int``; prime-field
coefficients are ints reduced into ``range(p)``.
"""

from __future__ import annotations

import random
from fractions import Fraction


def trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def deg(a) -> int:
    return len(a) - 1


# ---------------------------------------------------------------- over Q


def q_add(a, b):
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def q_neg(a):
    return [-c for c in a]


def q_sub(a, b):
    return q_add(a, q_neg(b))


def q_scale(a, c):
    return trim([c * x for x in a])


def q_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return trim(out)


def q_divmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = [Fraction(c) for c in a]
    lead = Fraction(b[-1])
    db = deg(b)
    quot = [Fraction(0)] * max(len(a) - db, 0)
    while len(a) - 1 >= db and a:
        c = a[-1] / lead
        shift = len(a) - 1 - db
        quot[shift] = c
        for i, y in enumerate(b):
            a[shift + i] -= c * y
        a = trim(a)
    return trim(quot), a


def q_rem(a, b):
    return q_divmod(a, b)[1]


def q_rem_monic_int(a, f):
    """Remainder of ``a`` modulo a monic ``f``; keeps int coefficients int."""
    a = list(a)
    df = deg(f)
    while len(a) - 1 >= df:
        c = a.pop()
        if c:
            shift = len(a) - df
            for i in range(df):
                a[shift + i] -= c * f[i]
    return trim(a)


def q_monic(a):
    lead = Fraction(a[-1])
    return [Fraction(c) / lead for c in a]


def q_xgcd(a, b):
    """Return (g, s, t) with s*a + t*b = g, g monic (or [] when both vanish)."""
    r0, r1 = trim(a), trim(b)
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        quo, rem = q_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, q_sub(s0, q_mul(quo, s1))
        t0, t1 = t1, q_sub(t0, q_mul(quo, t1))
    if not r0:
        return [], s0, t0
    lead = Fraction(r0[-1])
    return q_scale(r0, 1 / lead), q_scale(s0, 1 / lead), q_scale(t0, 1 / lead)


def q_gcd(a, b):
    return q_xgcd(a, b)[0]


def q_eval(a, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def q_derivative(a):
    return trim([i * a[i] for i in range(1, len(a))])


def resultant(f, g):
    """Res(f, g) over Q by the Euclidean recursion."""
    f, g = trim(f), trim(g)
    if not f or not g:
        return Fraction(0)
    n, m = deg(f), deg(g)
    if m == 0:
        return Fraction(g[0]) ** n
    if n == 0:
        return Fraction(f[0]) ** m
    if n < m:
        return (-1) ** (n * m) * resultant(g, f)
    r = q_rem(f, g)
    if not r:
        return Fraction(0)
    return (-1) ** (n * m) * Fraction(g[-1]) ** (n - deg(r)) * resultant(g, r)


def sturm_sequence(a):
    seq = [trim(a), q_derivative(a)]
    while seq[-1]:
        r = q_rem(seq[-2], seq[-1])
        seq.append(q_neg(r))
    return seq[:-1]


def _sign_changes(values):
    signs = [v for v in values if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def sturm_count(seq, lo, hi) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    return _sign_changes([q_eval(s, lo) for s in seq]) - _sign_changes([q_eval(s, hi) for s in seq])


def cauchy_bound(a) -> Fraction:
    lead = abs(Fraction(a[-1]))
    return 1 + max((abs(Fraction(c)) / lead for c in a[:-1]), default=Fraction(0))


# ------------------------------------------------------- over GF(p)


def p_trim(a, p):
    return trim([c % p for c in a])


def p_add(a, b, p):
    n = max(len(a), len(b))
    return trim([((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % p for i in range(n)])


def p_sub(a, b, p):
    n = max(len(a), len(b))
    return trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)])


def p_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return trim([c % p for c in out])


def p_divmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    inv = pow(b[-1], -1, p)
    db = deg(b)
    quot = [0] * max(len(a) - db, 0)
    while a and len(a) - 1 >= db:
        c = a[-1] * inv % p
        shift = len(a) - 1 - db
        quot[shift] = c
        for i, y in enumerate(b):
            a[shift + i] = (a[shift + i] - c * y) % p
        a = trim(a)
    return trim(quot), a


def p_rem(a, b, p):
    return p_divmod(a, b, p)[1]


def p_monic(a, p):
    inv = pow(a[-1], -1, p)
    return [c * inv % p for c in a]


def p_gcd(a, b, p):
    a, b = p_trim(a, p), p_trim(b, p)
    while b:
        a, b = b, p_rem(a, b, p)
    return p_monic(a, p) if a else []


def p_powmod(a, n, mod, p):
    result = [1]
    base = p_rem(a, mod, p)
    while n:
        if n & 1:
            result = p_rem(p_mul(result, base, p), mod, p)
        base = p_rem(p_mul(base, base, p), mod, p)
        n >>= 1
    return result


def p_derivative(a, p):
    return trim([i * a[i] % p for i in range(1, len(a))])


def _pth_root(a, p):
    return [a[i] for i in range(0, len(a), p)]


def p_squarefree(f, p):
    """Squarefree decomposition of monic f: list of (squarefree factor, multiplicity)."""
    out = []
    fp = p_derivative(f, p)
    if fp:
        c = p_gcd(f, fp, p)
        w = p_divmod(f, c, p)[0]
        i = 1
        while w != [1]:
            y = p_gcd(w, c, p)
            fac = p_divmod(w, y, p)[0]
            if fac != [1]:
                out.append((fac, i))
            w = y
            c = p_divmod(c, y, p)[0]
            i += 1
        if c != [1]:
            out.extend((g, k * p) for g, k in p_squarefree(_pth_root(c, p), p))
    else:
        out.extend((g, k * p) for g, k in p_squarefree(_pth_root(f, p), p))
    return out


def p_distinct_degree(f, p):
    """Split squarefree monic f into (product of all degree-i factors, i)."""
    out = []
    x = [0, 1]
    h = x
    rest = f
    i = 1
    while deg(rest) >= 2 * i:
        h = p_powmod(h, p, rest, p)
        g = p_gcd(rest, p_sub(h, x, p), p)
        if g != [1]:
            out.append((g, i))
            rest = p_divmod(rest, g, p)[0]
            h = p_rem(h, rest, p)
        i += 1
    if deg(rest) > 0:
        out.append((rest, deg(rest)))
    return out


def p_equal_degree(f, d, p):
    """Cantor-Zassenhaus splitting of f into its irreducible factors of degree d.

    Randomness comes from a generator seeded by (p, f), so results are
    reproducible run to run.
    """
    n = deg(f)
    if n == d:
        return [f]
    rng = random.Random(f"{p}:{f}")
    factors = [f]
    while len(factors) < n // d:
        h = trim([rng.randrange(p) for _ in range(n)])
        if deg(h) < 1:
            continue
        if p == 2:
            t, acc = h, h
            for _ in range(d - 1):
                t = p_rem(p_mul(t, t, p), f, p)
                acc = p_add(acc, t, p)
            g = acc
        else:
            g = p_sub(p_powmod(h, (p**d - 1) // 2, f, p), [1], p)
        nxt = []
        for u in factors:
            if deg(u) > d:
                s = p_gcd(g, u, p)
                if s != [1] and deg(s) < deg(u):
                    nxt.extend([s, p_divmod(u, s, p)[0]])
                    continue
            nxt.append(u)
        factors = nxt
    return factors


def p_factor(f, p):
    """Irreducible factorization of a nonzero polynomial over GF(p).

    Returns a list of (monic irreducible factor, multiplicity) sorted by
    degree and then coefficient tuple.  The leading coefficient is dropped.
    """
    f = p_trim(f, p)
    if not f:
        raise ValueError("cannot factor the zero polynomial")
    f = p_monic(f, p)
    out = []
    for sqf, mult in p_squarefree(f, p):
        for block, d in p_distinct_degree(sqf, p):
            out.extend((g, mult) for g in p_equal_degree(block, d, p))
    out.sort(key=lambda gm: (len(gm[0]), gm[0]))
    return out
