"""Tensor-level view: coefficient expressions, formal partials, and the
randomized instantiation oracle for equality testing.

A coefficient expression is an Expression whose terms contain tensor factors
and degree-0 structure only.  canonicalize_indices is a thin wrapper over
kernel normalization (which already renames dummies canonically and sorts
symmetry blocks); equal_by_instantiation evaluates both sides on random
exact-rational tensor data and is used whenever canonical forms are not
expected to coincide textually.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .expr import (
    DELTA,
    DIM,
    ContractionError,
    CoordFactor,
    Expression,
    IBASE,
    Index,
    TensorSymbol,
    Term,
    derive_tensors,
    normalize,
)

_DELTA_NAMES = {s.name for s in DELTA.values()}
_DIM_NAMES = {s.name for s in DIM.values()}


def is_coefficient_expression(e: Expression) -> bool:
    return all(c.fam.degree == 0 for t in e.terms for c in t.coords)


def canonicalize_indices(e: Expression) -> Expression:
    """Re-normalize and check that all terms agree on their free indices."""
    e.free_indices()  # raises on disagreement or malformed contractions
    return normalize(list(e.terms))


def formal_partial(e: Expression, ix: Index) -> Expression:
    """Formal base-space derivative: Leibniz over factors, constants
    annihilate, derivative indices accumulate symmetrically."""
    return derive_tensors(e, ix)


def match_scale(e1: Expression, e2: Expression) -> Fraction | None:
    """Return r with e1 == r * e2 (exact canonical comparison), or None.

    Both zero gives r = 1; e2 zero with e1 nonzero gives None.
    """
    if e2.is_zero:
        return Fraction(1) if e1.is_zero else None
    if e1.is_zero:
        return None  # a zero family is not "the same equation up to scale"
    lead = e2.terms[0]
    cand = None
    for t in e1.terms:
        if t.structure() == lead.structure():
            cand = t.coeff / lead.coeff
            break
    if cand is None or cand == 0:
        return None
    return cand if (e1 - e2.scale(cand)).is_zero else None


# ---------------------------------------------------------------------------
# randomized exact instantiation


class _Poly:
    """Tiny exact polynomial in x_1..x_d, degree <= 2; enough to give
    first and second formal derivatives generic values."""

    __slots__ = ("c",)

    def __init__(self, c: dict[tuple[int, ...], Fraction]):
        self.c = {m: v for m, v in c.items() if v != 0}

    @classmethod
    def random(cls, rng: random.Random, d: int) -> "_Poly":
        c: dict[tuple[int, ...], Fraction] = {(): Fraction(rng.randint(-4, 4))}
        for m in range(1, d + 1):
            c[(m,)] = Fraction(rng.randint(-3, 3))
        m1 = rng.randint(1, d)
        m2 = rng.randint(1, d)
        c[tuple(sorted((m1, m2)))] = Fraction(rng.randint(-2, 2))
        return cls(c)

    def deriv(self, ix: int) -> "_Poly":
        out: dict[tuple[int, ...], Fraction] = {}
        for mono, v in self.c.items():
            cnt = mono.count(ix)
            if cnt:
                rest = list(mono)
                rest.remove(ix)
                key = tuple(rest)
                out[key] = out.get(key, Fraction(0)) + v * cnt
        return _Poly(out)

    def eval(self, point: list[Fraction]) -> Fraction:
        total = Fraction(0)
        for mono, v in self.c.items():
            val = v
            for m in mono:
                val *= point[m - 1]
            total += val
        return total

    def scale(self, r: Fraction) -> "_Poly":
        return _Poly({m: v * r for m, v in self.c.items()})

    def __add__(self, other: "_Poly") -> "_Poly":
        c = dict(self.c)
        for m, v in other.c.items():
            c[m] = c.get(m, Fraction(0)) + v
        return _Poly(c)


ZERO_POLY = _Poly({})


def _random_assignment(
    sym: TensorSymbol, ranges: dict[str, int], rng: random.Random
) -> dict[tuple[int, ...], _Poly]:
    """Random entries respecting declared symmetries."""
    dims = [ranges[c] for c in sym.slots]
    d_base = ranges[IBASE]

    def draw() -> _Poly:
        if sym.depends_on_x:
            return _Poly.random(rng, d_base)
        return _Poly({(): Fraction(rng.randint(-4, 4))})

    flat = [p for _, block in sym.sym for p in block]
    if len(flat) == len(set(flat)):
        # disjoint blocks: one draw per canonical representative, propagated
        # with the sorting sign; avoids the factorial projector sweep
        reps: dict[tuple[int, ...], _Poly] = {}
        out: dict[tuple[int, ...], _Poly] = {}
        for idx in itertools.product(*(range(1, n + 1) for n in dims)):
            jdx = list(idx)
            sign = 1
            dead = False
            for mode, block in sym.sym:
                vals = [idx[p] for p in block]
                if mode == "a":
                    if len(set(vals)) != len(vals):
                        dead = True
                        break
                    inv = sum(
                        1
                        for u in range(len(vals))
                        for v in range(u + 1, len(vals))
                        if vals[u] > vals[v]
                    )
                    if inv % 2:
                        sign = -sign
                for p, v in zip(block, sorted(vals)):
                    jdx[p] = v
            if dead:
                out[idx] = ZERO_POLY
                continue
            rep = tuple(jdx)
            if rep not in reps:
                reps[rep] = draw()
            out[idx] = reps[rep] if sign > 0 else reps[rep].scale(Fraction(-1))
        return out
    raw: dict[tuple[int, ...], _Poly] = {}
    for idx in itertools.product(*(range(1, n + 1) for n in dims)):
        raw[idx] = draw()
    for mode, block in sym.sym:
        projected: dict[tuple[int, ...], _Poly] = {}
        for idx in raw:
            acc = ZERO_POLY
            perms = list(itertools.permutations(range(len(block))))
            for perm in perms:
                sign = 1
                if mode == "a":
                    inv = sum(
                        1
                        for u in range(len(perm))
                        for v in range(u + 1, len(perm))
                        if perm[u] > perm[v]
                    )
                    sign = -1 if inv % 2 else 1
                jdx = list(idx)
                vals = [idx[block[m]] for m in range(len(block))]
                for m, pos in enumerate(block):
                    jdx[pos] = vals[perm[m]]
                acc = acc + raw[tuple(jdx)].scale(Fraction(sign, len(perms)))
            projected[idx] = acc
        raw = projected
    return raw


def coord_word(
    coords: tuple[CoordFactor, ...], res
) -> tuple[int, str] | None:
    """Canonical word key and Koszul sign for concrete coordinate factors;
    None when the word vanishes (repeated odd coordinate)."""
    resolved = tuple(
        CoordFactor(cf.fam, tuple(res(i) for i in cf.idx)) for cf in coords
    )
    e = normalize([Term(Fraction(1), (), resolved)])
    if e.is_zero:
        return None
    lead = e.terms[0]
    key = " ".join(
        "%s<%s>" % (cf.fam.name, ",".join(str(i) for i in cf.idx))
        for cf in lead.coords
    )
    return (1 if lead.coeff > 0 else -1), key


def _eval_term(
    t: Term,
    bindings: dict[str, int],
    ranges: dict[str, int],
    tables: dict[str, dict[tuple[int, ...], _Poly]],
    point: list[Fraction],
) -> dict[str, Fraction]:
    """Evaluate one term on a random assignment, summing leftover dummies.

    Coordinate factors are kept as formal graded generators: the result maps
    each canonical coordinate word (empty word for scalars) to its value.
    """
    # resolve remaining dummies by explicit summation
    occ: dict[str, str] = {}
    for tf in t.tens:
        for ix, cls in zip(tf.idx, tf.sym.slots):
            if isinstance(ix, str) and ix not in bindings:
                occ[ix] = cls
        for ix in tf.der:
            if isinstance(ix, str) and ix not in bindings:
                occ[ix] = IBASE
    for cf in t.coords:
        for ix, cls in zip(cf.idx, cf.fam.islots):
            if isinstance(ix, str) and ix not in bindings:
                occ[ix] = cls
    names = sorted(occ)
    total: dict[str, Fraction] = {}
    for combo in itertools.product(*(range(1, ranges[occ[n]] + 1) for n in names)):
        local = dict(bindings)
        local.update(zip(names, combo))

        def res(ix: Index) -> int:
            return ix if isinstance(ix, int) else local[ix]

        word = coord_word(t.coords, res)
        if word is None:
            continue
        wsign, wkey = word
        val = t.coeff * wsign
        for tf in t.tens:
            name = tf.sym.name
            if name in _DELTA_NAMES:
                val *= 1 if res(tf.idx[0]) == res(tf.idx[1]) else 0
            elif name in _DIM_NAMES:
                val *= ranges[tf.sym.name.split("_")[1]]
            else:
                entry = tables[name][tuple(res(i) for i in tf.idx)]
                for dix in tf.der:
                    entry = entry.deriv(res(dix))
                val *= entry.eval(point)
            if val == 0:
                break
        if val != 0:
            total[wkey] = total.get(wkey, Fraction(0)) + val
    return total


def equal_by_instantiation(
    e1: Expression,
    e2: Expression,
    trials: int = 20,
    seed: int = 20260825,
) -> bool:
    """Exact randomized identity test on coefficient expressions.

    Every tensor symbol is instantiated with random rational polynomial
    entries respecting its declared symmetries, over index ranges 2..4;
    formal derivatives become polynomial derivatives.  True iff both sides
    agree exactly on every trial and every free-index assignment.
    """
    f1, f2 = e1.free_indices(), e2.free_indices()
    if f1 != f2:
        raise ContractionError(
            f"free indices differ: {sorted(f1)} vs {sorted(f2)}"
        )
    symbols: dict[str, TensorSymbol] = {}
    max_dummies = 0
    for e in (e1, e2):
        for t in e.terms:
            names = set()
            for tf in t.tens:
                if tf.sym.name not in _DELTA_NAMES and tf.sym.name not in _DIM_NAMES:
                    symbols[tf.sym.name] = tf.sym
                for ix in list(tf.idx) + list(tf.der):
                    if isinstance(ix, str):
                        names.add(ix)
            for cf in t.coords:
                for ix in cf.idx:
                    if isinstance(ix, str):
                        names.add(ix)
            max_dummies = max(max_dummies, len(names))
    rng = random.Random(seed)
    free_names = sorted(f1)
    for _ in range(trials):
        hi = 2 if max_dummies >= 6 else 4
        ranges = {cls: rng.randint(2, hi) for cls in (IBASE, "a", "p")}
        point = [
            Fraction(rng.randint(-5, 5), rng.randint(1, 3))
            for _ in range(ranges[IBASE])
        ]
        tables = {
            name: _random_assignment(sym, ranges, rng)
            for name, sym in symbols.items()
        }
        for combo in itertools.product(
            *(range(1, ranges[f1[n]] + 1) for n in free_names)
        ):
            bindings = dict(zip(free_names, combo))
            v1: dict[str, Fraction] = {}
            v2: dict[str, Fraction] = {}
            for acc, e in ((v1, e1), (v2, e2)):
                for t in e.terms:
                    for k, v in _eval_term(
                        t, bindings, ranges, tables, point
                    ).items():
                        acc[k] = acc.get(k, Fraction(0)) + v
            if {k: v for k, v in v1.items() if v} != {
                k: v for k, v in v2.items() if v
            }:
                return False
    return True
