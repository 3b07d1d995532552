"""Shared random generators and tiny independent oracles for the test suite.

The oracles here never call the graded kernel's normalization for their own
arithmetic: concrete sign counting is done by explicit bubble sort over
factor words.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from qpcalc.expr import (
    CoordFactor,
    CoordinateFamily,
    Expression,
    IBASE,
    TensorFactor,
    TensorSymbol,
    Term,
    normalize,
)

# -- independent concrete-word oracle ---------------------------------------


def word_sort_sign(word):
    """Bubble-sort a list of (label, parity) pairs into label order.

    Returns (sorted_labels, sign) with the Koszul sign accumulated from
    odd-odd transpositions, or (None, 0) if an odd label repeats.
    """
    w = list(word)
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - 1):
            if w[i][0] > w[i + 1][0]:
                if w[i][1] and w[i + 1][1]:
                    sign = -sign
                w[i], w[i + 1] = w[i + 1], w[i]
                changed = True
    labels = tuple(lab for lab, _ in w)
    for i in range(len(w) - 1):
        if w[i][0] == w[i + 1][0] and w[i][1]:
            return None, 0
    return labels, sign


def concrete_dict(e: Expression, ranges: dict[str, int]):
    """Expand a coordinate-only expression over concrete index ranges into
    {sorted word: coefficient}, using the oracle's own sign counting."""
    out: dict[tuple, Fraction] = {}
    for t in e.terms:
        if t.tens:
            raise ValueError("oracle handles coordinate-only expressions")
        dummies = sorted(
            {
                ix
                for c in t.coords
                for ix in c.idx
                if isinstance(ix, str)
            }
        )
        classes = {}
        for c in t.coords:
            for ix, cls in zip(c.idx, c.fam.islots):
                if isinstance(ix, str):
                    classes[ix] = cls
        for combo in itertools.product(
            *(range(1, ranges[classes[d]] + 1) for d in dummies)
        ):
            env = dict(zip(dummies, combo))
            word = []
            for c in t.coords:
                vals = tuple(
                    ix if isinstance(ix, int) else env[ix] for ix in c.idx
                )
                word.append(((c.fam.name, vals), c.fam.parity))
            labels, sign = word_sort_sign(word)
            if sign == 0:
                continue
            out[labels] = out.get(labels, Fraction(0)) + t.coeff * sign
    return {k: v for k, v in out.items() if v != 0}


# -- random structure generators --------------------------------------------


def standard_universe():
    """A fixed mixed-degree coordinate universe for kernel property tests."""
    fams = (
        CoordinateFamily("x", 0, "base", (IBASE,), upper=True),
        CoordinateFamily("q", 1, "base", (IBASE,), upper=True),
        CoordinateFamily("p", 1, "fiber", (IBASE,), upper=False),
        CoordinateFamily("v", 2, "fiber", ("a",), upper=False),
        CoordinateFamily("u", 3, "base", ("a",), upper=True),
    )
    pool = []
    for fam in fams:
        for ix in (1, 2):
            pool.append(CoordFactor(fam, (ix,)))
    return fams, pool


H3 = TensorSymbol("H", (IBASE, IBASE, IBASE), (("a", (0, 1, 2)),), depends_on_x=True)
G2 = TensorSymbol("G", (IBASE, IBASE), (("s", (0, 1)),), depends_on_x=True)
A1 = TensorSymbol("A", (IBASE,), (), depends_on_x=True)


def random_term(rng: random.Random, pool, syms=(), max_coords=4) -> Term:
    k = rng.randint(0 if syms else 1, max_coords)
    coords = tuple(rng.choice(pool) for _ in range(k))
    tens = ()
    if syms and rng.random() < 0.5:
        s = rng.choice(syms)
        tens = (TensorFactor(s, tuple(rng.randint(1, 2) for _ in s.slots)),)
    if not coords and not tens:
        coords = (rng.choice(pool),)
    coeff = Fraction(rng.randint(-4, 4))
    if coeff == 0:
        coeff = Fraction(1)
    return Term(coeff, tens, coords)


def random_expression(rng: random.Random, pool, syms=(), terms=2) -> Expression:
    return normalize([random_term(rng, pool, syms) for _ in range(terms)])


def random_homogeneous(rng, pool, syms=(), degree=None, attempts=60):
    """Random nonzero homogeneous expression; None if not found."""
    by_deg = {}
    for _ in range(attempts):
        t = random_term(rng, pool, syms)
        d = t.degree
        if degree is not None and d != degree:
            continue
        by_deg.setdefault(d, []).append(t)
        cand = normalize(by_deg[d][-3:])
        if not cand.is_zero:
            return cand
    return None
