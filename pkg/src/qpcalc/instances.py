"""Exact numeric/polynomial instantiation of formal tensor data, with the
built-in example instances.

An assignment gives every tensor symbol a table of polynomial entries (the
same sparse dictionary format the classical oracles use, so data moves
between the two code paths without conversion) plus a size for each index
class.  Instantiating an expression expands all contractions over those
ranges, applies formal derivatives as polynomial derivatives, and keeps
graded coordinate factors as formal words, so structure equations evaluate
to one polynomial per concrete coordinate word.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .catalog import get_document
from .engine import (
    StructureEquationSet,
    check_canonical_function,
    check_master,
)
from .expr import (
    DELTA,
    DIM,
    Expression,
    IBASE,
    Term,
    TensorSymbol,
)
from .oracles import (
    Poly,
    p_add,
    p_const,
    p_deriv,
    p_is_zero,
    p_mul,
    p_scale,
    p_var,
)
from .tensors import coord_word

_DELTA_CLASS = {s.name: c for c, s in DELTA.items()}
_DIM_CLASS = {s.name: c for c, s in DIM.items()}


class InstanceError(ValueError):
    pass


Table = dict[tuple[int, ...], Poly]


@dataclass(frozen=True)
class NumericAssignment:
    """Concrete exact-rational polynomial data for the tensor symbols of a
    document.  Tables are stored in full: every nonzero entry appears under
    its own index tuple; missing entries are zero."""

    ranges: dict[str, int]
    tables: dict[str, Table]

    def range_of(self, cls: str) -> int:
        if cls not in self.ranges:
            raise InstanceError(f"no range declared for index class {cls!r}")
        return self.ranges[cls]

    def table_of(self, sym: TensorSymbol) -> Table:
        if sym.name not in self.tables:
            raise InstanceError(f"unassigned symbol {sym.name!r}")
        return self.tables[sym.name]

    def validate_symbol(self, sym: TensorSymbol) -> None:
        """Entry-wise symmetry, arity, range, and constancy checks."""
        table = self.table_of(sym)
        dims = [self.range_of(c) for c in sym.slots]
        for idx, poly in table.items():
            if len(idx) != len(sym.slots):
                raise InstanceError(
                    f"{sym.name}: entry {idx} has wrong arity"
                )
            for v, n in zip(idx, dims):
                if not 1 <= v <= n:
                    raise InstanceError(f"{sym.name}: index {idx} out of range")
            if not sym.depends_on_x and any(m for m in poly):
                raise InstanceError(
                    f"{sym.name}: non-constant entry for an x-independent symbol"
                )
        for idx in itertools.product(*(range(1, n + 1) for n in dims)):
            val = table.get(idx, {})
            for mode, block in sym.sym:
                if len(block) < 2:
                    continue
                for a, b in itertools.combinations(block, 2):
                    jdx = list(idx)
                    jdx[a], jdx[b] = jdx[b], jdx[a]
                    other = table.get(tuple(jdx), {})
                    want = p_scale(other, -1) if mode == "a" else other
                    if not p_is_zero(p_add(val, p_scale(want, -1))):
                        raise InstanceError(
                            f"{sym.name}: entries at {idx} break the declared "
                            "symmetry"
                        )


class InstanceRow(NamedTuple):
    label: str
    residual: Fraction


@dataclass(frozen=True)
class InstanceReport:
    instance: str
    rows: tuple[InstanceRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.residual == 0 for r in self.rows)

    @property
    def max_residual(self) -> Fraction:
        return max((r.residual for r in self.rows), default=Fraction(0))


def _poly_of_coeff(c: Fraction) -> Poly:
    return p_const(c)


def _entry_value(
    sym: TensorSymbol,
    idx: tuple[int, ...],
    der: tuple[int, ...],
    a: NumericAssignment,
) -> Poly:
    if sym.name in _DELTA_CLASS:
        if der:
            return {}
        return p_const(1) if idx[0] == idx[1] else {}
    if sym.name in _DIM_CLASS:
        return p_const(a.range_of(_DIM_CLASS[sym.name]))
    val = a.table_of(sym).get(idx, {})
    for dx in der:
        if p_is_zero(val):
            return {}
        val = p_deriv(val, dx)
    return val


def _term_indices(t: Term) -> dict[str, str]:
    """Name -> index class for every abstract index in the term."""
    out: dict[str, str] = {}

    def put(ix, cls):
        if isinstance(ix, str):
            prev = out.setdefault(ix, cls)
            if prev != cls:
                raise InstanceError(f"index {ix} used in two classes")

    for tf in t.tens:
        for ix, cls in zip(tf.idx, tf.sym.slots):
            put(ix, cls)
        for ix in tf.der:
            put(ix, IBASE)
    for cf in t.coords:
        for ix, cls in zip(cf.idx, cf.fam.islots):
            put(ix, cls)
    return out


def instantiate(
    e: Expression, a: NumericAssignment
) -> dict[tuple[tuple[tuple[str, int], ...], str], Poly]:
    """Expand all contractions of `e` over the declared ranges.

    Returns a polynomial per (free-index valuation, coordinate word); the
    word is empty for coefficient expressions.  Exact arithmetic
    throughout; zero polynomials are dropped.
    """
    for t in e.terms:
        for tf in t.tens:
            if tf.sym.name not in _DELTA_CLASS and tf.sym.name not in _DIM_CLASS:
                a.validate_symbol(tf.sym)
    freecls = e.free_indices()
    fnames = sorted(freecls)
    out: dict[tuple[tuple[tuple[str, int], ...], str], Poly] = {}
    for fvals in itertools.product(
        *(range(1, a.range_of(freecls[n]) + 1) for n in fnames)
    ):
        bind = dict(zip(fnames, fvals))
        fkey = tuple(sorted(bind.items()))
        for t in e.terms:
            allcls = _term_indices(t)
            dnames = sorted(n for n in allcls if n not in bind)
            for dvals in itertools.product(
                *(range(1, a.range_of(allcls[n]) + 1) for n in dnames)
            ):
                local = dict(bind)
                local.update(zip(dnames, dvals))

                def res(ix):
                    if isinstance(ix, str):
                        return local[ix]
                    return ix

                val = _poly_of_coeff(t.coeff)
                for tf in t.tens:
                    if p_is_zero(val):
                        break
                    idx = tuple(res(i) for i in tf.idx)
                    der = tuple(res(i) for i in tf.der)
                    val = p_mul(val, _entry_value(tf.sym, idx, der, a))
                if p_is_zero(val):
                    continue
                word = ""
                if t.coords:
                    w = coord_word(t.coords, res)
                    if w is None:
                        continue
                    sign, word = w
                    if sign < 0:
                        val = p_scale(val, -1)
                key = (fkey, word)
                acc = p_add(out.get(key, {}), val)
                if p_is_zero(acc):
                    out.pop(key, None)
                else:
                    out[key] = acc
    return out


def residual_of(e: Expression, a: NumericAssignment) -> Fraction:
    """Largest absolute polynomial coefficient over all instantiated
    entries; exactly zero iff the expression vanishes identically."""
    vals = instantiate(e, a)
    best = Fraction(0)
    for poly in vals.values():
        for c in poly.values():
            if abs(c) > best:
                best = abs(c)
    return best


def evaluate_structure_set(
    eqset: StructureEquationSet, a: NumericAssignment, prefix: str = ""
) -> list[InstanceRow]:
    rows = []
    for fam in list(eqset.families) + list(eqset.discharged):
        rows.append(
            InstanceRow(prefix + fam.key, residual_of(fam.times_monomial(), a))
        )
    return rows


def evaluate_document(
    name: str, a: NumericAssignment, include_known: bool = False
) -> InstanceReport:
    """Instantiate every structure equation of a built-in document, both
    from the master bracket and from the canonical-function check.

    Reference-equation rows are off by default: a displayed reference is an
    equation only after the projection its coordinate word imposes, which
    the engine families already carry; raw entry-wise evaluation of e.g. a
    k h h channel is legitimately nonzero."""
    doc = get_document(name)
    rows: list[InstanceRow] = []
    rows += evaluate_structure_set(check_master(doc.spec), a, "master: ")
    if doc.alpha is not None and doc.lagrangian:
        rows += evaluate_structure_set(
            check_canonical_function(doc.spec, doc.alpha, doc.lagrangian),
            a,
            "canonical: ",
        )
    if include_known:
        for k in doc.known:
            rows.append(InstanceRow("ref: " + k.label, residual_of(k.expr, a)))
    return InstanceReport(name, tuple(rows))


# ---------------------------------------------------------------------------
# table builders


def full_skew(entries: dict[tuple[int, ...], Poly]) -> Table:
    """Expand canonical ascending entries to all signed permutations."""
    out: Table = {}
    for idx, poly in entries.items():
        if p_is_zero(poly):
            continue
        if list(idx) != sorted(idx) or len(set(idx)) != len(idx):
            raise InstanceError("canonical entries must be strictly ascending")
        for perm in itertools.permutations(range(len(idx))):
            inv = sum(
                1
                for u in range(len(perm))
                for v in range(u + 1, len(perm))
                if perm[u] > perm[v]
            )
            jdx = tuple(idx[p] for p in perm)
            out[jdx] = p_scale(poly, -1) if inv % 2 else dict(poly)
    return out


def full_sym(entries: dict[tuple[int, ...], Poly]) -> Table:
    out: Table = {}
    for idx, poly in entries.items():
        if p_is_zero(poly):
            continue
        for jdx in set(itertools.permutations(idx)):
            out[jdx] = dict(poly)
    return out


def diag(n: int) -> Table:
    return {(i, i): p_const(1) for i in range(1, n + 1)}


def epsilon_table() -> Table:
    return full_skew({(1, 2, 3): p_const(1)})


# ---------------------------------------------------------------------------
# built-in instances


@dataclass(frozen=True)
class BuiltinInstance:
    name: str
    document: str
    assignment: NumericAssignment
    expect_pass: bool
    description: str


def _su2_courant() -> BuiltinInstance:
    a = NumericAssignment(
        ranges={"a": 3, IBASE: 1},
        tables={"k": diag(3), "rho": {}, "h": epsilon_table(), "H": {}},
    )
    return BuiltinInstance(
        "su2-courant",
        "courant",
        a,
        True,
        "su(2) with its Killing pairing as a Courant algebroid over a point",
    )


def _poisson_x3() -> BuiltinInstance:
    a = NumericAssignment(
        ranges={IBASE: 3},
        tables={"pi": full_skew({(1, 2): p_var(3)}), "H": {}},
    )
    return BuiltinInstance(
        "poisson-x3",
        "poisson",
        a,
        True,
        "bivector pi^{12} = x^3 on three coordinates; Poisson",
    )


def _twisted_pair() -> BuiltinInstance:
    from .oracles import twisted_pair

    pi, H = twisted_pair()
    a = NumericAssignment(
        ranges={IBASE: 4},
        tables={"pi": full_skew(pi), "H": full_skew(H)},
    )
    return BuiltinInstance(
        "twisted-pair",
        "twisted-poisson",
        a,
        True,
        "nondegenerate twisted-Poisson pair solved from a unit-Pfaffian "
        "bivector",
    )


def _nambu_dec() -> BuiltinInstance:
    a = NumericAssignment(
        ranges={IBASE: 4},
        tables={"pi": full_skew({(1, 2, 3): p_const(1)})},
    )
    return BuiltinInstance(
        "nambu-decomposable",
        "nambu-3",
        a,
        True,
        "decomposable 3-tensor d1^d2^d3 on four coordinates",
    )


def _nambu_neg() -> BuiltinInstance:
    a = NumericAssignment(
        ranges={IBASE: 6},
        tables={
            "pi": full_skew(
                {(1, 2, 3): p_const(1), (4, 5, 6): p_var(1)}
            )
        },
    )
    return BuiltinInstance(
        "nambu-negative",
        "nambu-3",
        a,
        False,
        "sum of two disjoint decomposables with an x-dependent block; "
        "fails the fundamental identity and the canonical check",
    )


def _su2_double(cross_sign: int = -1) -> BuiltinInstance:
    # E = su(2) + su(2)* with the duality pairing; tau projects onto the
    # first summand; the twist 3-form pairs two algebra legs with one dual
    # leg, oriented to cancel the C tau tau channel
    k: Table = {}
    for r in range(1, 4):
        k[(r, r + 3)] = p_const(1)
        k[(r + 3, r)] = p_const(1)
    tau: Table = {(r, r): p_const(1) for r in range(1, 4)}
    h_entries: dict[tuple[int, ...], Poly] = {}
    eps = {
        (1, 2, 3): 1,
        (1, 3, 2): -1,
        (2, 1, 3): -1,
        (2, 3, 1): 1,
        (3, 1, 2): 1,
        (3, 2, 1): -1,
    }
    for (p, q, r), s in eps.items():
        if p < q:
            h_entries[(p, q, r + 3)] = p_const(cross_sign * s)
    a = NumericAssignment(
        ranges={"a": 6, "p": 3, IBASE: 1},
        tables={
            "k": k,
            "tau": tau,
            "C": epsilon_table(),
            "h": full_skew(h_entries),
            "rho": {},
        },
    )
    return BuiltinInstance(
        "su2-double",
        "strong-courant",
        a,
        True,
        "su(2) plus its dual with the duality pairing, tau the projection, "
        "epsilon structure constants, and the matching twist 3-form",
    )


_BUILTIN_INSTANCES = {
    b.name: b
    for b in (
        _su2_courant(),
        _poisson_x3(),
        _twisted_pair(),
        _nambu_dec(),
        _nambu_neg(),
        _su2_double(),
    )
}


def builtin_instance_names() -> list[str]:
    return sorted(_BUILTIN_INSTANCES)


def get_instance(name: str) -> BuiltinInstance:
    try:
        return _BUILTIN_INSTANCES[name]
    except KeyError:
        raise InstanceError(
            f"unknown instance {name!r}; available: "
            + ", ".join(builtin_instance_names())
        ) from None
