"""Reduction of tensor expressions modulo declared equation sets.

An equation is an Expression that vanishes entry-wise for every valuation
of its free indices.  Reduction is by embed-and-eliminate: every injective
embedding of one equation term into a term of the target produces a
context multiple of the whole equation, a guaranteed zero; exact Gaussian
elimination over the canonical term basis then removes as much of the
target as that span allows.  No completion is attempted: what the
generated span misses stays in the remainder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .expr import (
    ContractionError,
    Expression,
    Term,
    TensorFactor,
    normalize,
    rename_indices,
    term_dummies,
)
from .tensors import equal_by_instantiation, formal_partial

Equation = tuple[str, Expression]


@dataclass(frozen=True)
class ReduceResult:
    remainder: Expression
    used: tuple[str, ...]
    confirmed: bool
    generators: int

    @property
    def reduced_to_zero(self) -> bool:
        return self.remainder.is_zero


def _slot_alignments(tf: TensorFactor) -> list[tuple[int, ...]]:
    """Slot permutations generated by the factor's declared symmetry blocks.

    Aligning along a block permutation changes the embedded factor only by
    the block sign, which the linear solve absorbs.
    """
    n = len(tf.idx)
    perms: list[tuple[int, ...]] = [tuple(range(n))]
    for _, block in tf.sym.sym:
        extended = []
        for base in perms:
            for sub in itertools.permutations(block):
                cand = list(base)
                for src, dst in zip(block, sub):
                    cand[src] = base[dst]
                extended.append(tuple(cand))
        perms = list(dict.fromkeys(extended))
    return perms


def _factor_embeddings(
    sf: TensorFactor, tf: TensorFactor
) -> Iterator[list[tuple[object, object]]]:
    """Index-pair constraints identifying sf (from the equation) with tf."""
    if sf.sym.name != tf.sym.name or len(sf.der) != len(tf.der):
        return
    for align in _slot_alignments(sf):
        slot_pairs = [(sf.idx[align[k]], tf.idx[k]) for k in range(len(align))]
        if not sf.der:
            yield slot_pairs
            continue
        for beta in itertools.permutations(range(len(sf.der))):
            yield slot_pairs + [
                (sf.der[beta[k]], tf.der[k]) for k in range(len(sf.der))
            ]


def _term_embeddings(
    s_term: Term, t_term: Term
) -> Iterator[tuple[dict, tuple[int, ...]]]:
    """All consistent maps (equation indices -> target indices) together
    with the target factor positions they consume."""
    cand: list[list[int]] = []
    for sf in s_term.tens:
        slots = [
            j
            for j, tf in enumerate(t_term.tens)
            if tf.sym.name == sf.sym.name and len(tf.der) == len(sf.der)
        ]
        if not slots:
            return
        cand.append(slots)

    def extend(sigma: dict, pairs) -> dict | None:
        out = dict(sigma)
        for a, b in pairs:
            if isinstance(a, int):
                if a != b:
                    return None
                continue
            if a in out:
                if out[a] != b:
                    return None
            else:
                out[a] = b
        return out

    def assign(k: int, used: tuple[int, ...], sigma: dict):
        if k == len(s_term.tens):
            yield sigma, used
            return
        for j in cand[k]:
            if j in used:
                continue
            for pairs in _factor_embeddings(s_term.tens[k], t_term.tens[j]):
                nxt = extend(sigma, pairs)
                if nxt is not None:
                    yield from assign(k + 1, used + (j,), nxt)

    seen: set[tuple] = set()
    for sigma, used in assign(0, (), {}):
        key = (tuple(sorted(sigma.items())), tuple(sorted(used)))
        if key not in seen:
            seen.add(key)
            yield sigma, used


def _names_in(term: Term) -> set[str]:
    out: set[str] = set()
    for tf in term.tens:
        out.update(i for i in list(tf.idx) + list(tf.der) if isinstance(i, str))
    for cf in term.coords:
        out.update(i for i in cf.idx if isinstance(i, str))
    return out


def _generators_for(
    t_term: Term, equations: Sequence[Equation]
) -> Iterator[tuple[str, Expression]]:
    taken = _names_in(t_term)
    for label, eq in equations:
        for s_term in eq.terms:
            for sigma, used in _term_embeddings(s_term, t_term):
                context_tens = tuple(
                    tf for j, tf in enumerate(t_term.tens) if j not in used
                )
                counter = itertools.count()
                raw: list[Term] = []
                for e_term in eq.terms:
                    ren = dict(sigma)
                    for d in sorted(term_dummies(e_term)):
                        if d in ren:
                            continue
                        while True:
                            cand = f"rw{next(counter)}"
                            if cand not in taken:
                                break
                        ren[d] = cand
                    moved = rename_indices(e_term, ren)
                    raw.append(
                        Term(
                            moved.coeff,
                            context_tens + moved.tens,
                            t_term.coords,
                        )
                    )
                try:
                    gen = normalize(raw)
                except ContractionError:
                    continue
                if not gen.is_zero:
                    yield label, gen


def _vector_of(e: Expression) -> dict[tuple, Fraction]:
    return {t.structure(): t.coeff for t in e.terms}


def _prolong(equations: Sequence[Equation]) -> list[Equation]:
    out = list(equations)
    for label, eq in equations:
        names = set()
        for t in eq.terms:
            names |= _names_in(t)
        d = "dp0"
        while d in names:
            d += "0"
        out.append((label, formal_partial(eq, d)))
    return out


def reduce_modulo(
    e: Expression,
    equations: Iterable[Equation],
    max_rounds: int = 3,
    prolong: bool = True,
    confirm: bool = True,
    trials: int = 6,
) -> ReduceResult:
    """Reduce `e` modulo equations that hold entry-wise.

    Returns the canonical remainder after eliminating the part of `e`
    lying in the span of all generated equation multiples, the labels of
    the equations actually used, and an instantiation confirmation of the
    eliminated combination.  A nonzero remainder is an honest report that
    the generated span does not cover `e`, not a proof of irreducibility.
    """
    eqs = [(label, ex) for label, ex in equations if not ex.is_zero]
    if e.is_zero or not eqs:
        return ReduceResult(e, (), True, 0)
    if prolong:
        eqs = _prolong(eqs)

    gens: list[tuple[str, Expression]] = []
    seen: set[tuple] = set()

    def harvest(target: Expression) -> None:
        for t_term in target.terms:
            for label, gen in _generators_for(t_term, eqs):
                lead = gen.terms[0].coeff
                scaled = gen.scale(Fraction(1) / lead)
                key = tuple(
                    (tm.coeff, repr(tm.structure())) for tm in scaled.terms
                )
                if key not in seen:
                    seen.add(key)
                    gens.append((label, scaled))

    remainder = e
    used: set[str] = set()
    prev_keys: set[tuple] | None = None
    for _ in range(max_rounds):
        harvest(remainder)
        remainder, used = _solve(e, gens)
        keys = {t.structure() for t in remainder.terms}
        if remainder.is_zero or keys == prev_keys:
            break
        prev_keys = keys

    combo = e - remainder
    confirmed = True
    if not combo.is_zero and confirm:
        confirmed = equal_by_instantiation(e, remainder + combo, trials)
    return ReduceResult(remainder, tuple(sorted(used)), confirmed, len(gens))


def _reduce_vec(
    vec: dict[int, Fraction],
    pivots: dict[int, tuple[frozenset[str], dict[int, Fraction]]],
    used: set[str],
) -> dict[int, Fraction]:
    """Repeatedly eliminate the smallest pivot-reducible column.

    Each step zeroes that column and only touches larger ones, so the
    scan position never moves backwards and the loop terminates.
    """
    out = {c: v for c, v in vec.items() if v != 0}
    floor = -1
    while True:
        c = min((cc for cc in out if cc > floor and cc in pivots), default=None)
        if c is None:
            return out
        labels, pvec = pivots[c]
        f = out[c] / pvec[c]
        for cc, vv in pvec.items():
            nv = out.get(cc, Fraction(0)) - f * vv
            if nv == 0:
                out.pop(cc, None)
            else:
                out[cc] = nv
        used |= labels
        floor = c


def _solve(
    e: Expression, gens: list[tuple[str, Expression]]
) -> tuple[Expression, set[str]]:
    """Remainder of `e` after eliminating the span of `gens`, plus the
    labels of the equations folded into the pivot rows that fired."""
    used: set[str] = set()
    if not gens:
        return e, used
    basis: dict[tuple, int] = {}
    exemplar: dict[int, tuple] = {}

    def col(structure: tuple) -> int:
        if structure not in basis:
            basis[structure] = len(basis)
            exemplar[basis[structure]] = structure
        return basis[structure]

    pivots: dict[int, tuple[frozenset[str], dict[int, Fraction]]] = {}
    # short equations first keeps long pivot rows closer to their stored
    # form; the span, and hence zero detection, is order-independent
    for label, gen in sorted(gens, key=lambda lg: (len(lg[1].terms), lg[0])):
        absorbed: set[str] = {label}
        vec = _reduce_vec(
            {col(s): c for s, c in _vector_of(gen).items()}, pivots, absorbed
        )
        lead = min(vec, default=None)
        if lead is not None:
            pivots[lead] = (frozenset(absorbed), vec)

    target = {col(s): c for s, c in _vector_of(e).items()}
    out = _reduce_vec(target, pivots, used)
    terms = [Term(v, exemplar[c][0], exemplar[c][1]) for c, v in out.items()]
    return normalize(terms), used


def skew_expand(e: Expression, names: Sequence[str]) -> Expression:
    """Signed sum of `e` over all permutations of the listed free indices.

    Turns an orbit-representative display into the entry-wise equation the
    reduction needs.
    """
    out = Expression()
    for perm in itertools.permutations(names):
        inv = sum(
            1
            for u in range(len(perm))
            for v in range(u + 1, len(perm))
            if names.index(perm[u]) > names.index(perm[v])
        )
        ren = dict(zip(names, perm))
        image = normalize([rename_indices(t, ren) for t in e.terms])
        out = out + (image if inv % 2 == 0 else -image)
    return out
