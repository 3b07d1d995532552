"""Exact graded-commutative polynomial algebra with Koszul signs.

Coordinates carry a non-negative integer degree (parity = degree mod 2) and
may be decorated with indices.  An index is either a concrete integer (an
enumerated chart) or an abstract name subject to Einstein summation: a name
occurring twice in a term is summed, once is free, three or more times is an
error.  Coefficient tensors (H_{ijk}(x), rho^i_a(x), ...) sit next to the
coordinate monomial as commuting degree-0 factors with declared index
symmetries.

Everything is an immutable value and all arithmetic is exact (Fraction).
Normalization brings every term to a canonical form: Koszul-sorted monomial,
sorted symmetry blocks, eliminated Kronecker deltas, and canonically renamed
dummy indices, so expression equality is tuple equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence, Union

Index = Union[int, str]

# Disjoint index namespaces: base-manifold i,j,k..., bundle-fiber a,b,c...,
# algebroid p,q,r...
IBASE = "i"
IFIBER = "a"
IALG = "p"
INDEX_CLASSES = (IBASE, IFIBER, IALG)

# How many leaf evaluations the dummy-canonicalization search may spend per
# term before falling back to a deterministic (but possibly non-minimal)
# assignment.  The fallback can only miss term merges, never corrupt a term.
CANON_LEAF_CAP = 6000


class ExprError(ValueError):
    pass


class ContractionError(ExprError):
    """An abstract index occurs more than twice, or in two index classes."""


class DegreeError(ExprError):
    """An operation that requires degree homogeneity got mixed degrees."""


# ---------------------------------------------------------------------------
# symbols


@dataclass(frozen=True, slots=True)
class CoordinateFamily:
    """A family of graded coordinates such as q^i or v_{i1 i2}.

    kind is "base" (position-like, kept by the usual restrictions) or
    "fiber" (momentum-like).  islots gives the index class of each slot;
    multi-slot families are fully skew in their indices.  upper is only a
    printing hint.
    """

    name: str
    degree: int
    kind: str
    islots: tuple[str, ...] = ()
    upper: bool = True

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ExprError(f"coordinate {self.name}: degree must be >= 0")
        if self.kind not in ("base", "fiber"):
            raise ExprError(f"coordinate {self.name}: kind must be base|fiber")
        for c in self.islots:
            if c not in INDEX_CLASSES:
                raise ExprError(f"coordinate {self.name}: bad index class {c!r}")

    @property
    def parity(self) -> int:
        return self.degree % 2


@dataclass(frozen=True, slots=True)
class TensorSymbol:
    """A formal indexed coefficient, e.g. rho^i_a(x) or a constant k^{ab}.

    sym declares symmetry blocks as ("a"|"s", slot positions) — "a" fully
    skew, "s" fully symmetric.  Slots inside one block must share an index
    class.  variance is a printing hint (+1 upper, -1 lower per slot).
    """

    name: str
    slots: tuple[str, ...]
    sym: tuple[tuple[str, tuple[int, ...]], ...] = ()
    depends_on_x: bool = False
    variance: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for c in self.slots:
            if c not in INDEX_CLASSES:
                raise ExprError(f"tensor {self.name}: bad index class {c!r}")
        seen: set[int] = set()
        for mode, block in self.sym:
            if mode not in ("a", "s"):
                raise ExprError(f"tensor {self.name}: symmetry mode {mode!r}")
            classes = set()
            for pos in block:
                if pos < 0 or pos >= len(self.slots):
                    raise ExprError(f"tensor {self.name}: bad block slot {pos}")
                if pos in seen:
                    raise ExprError(f"tensor {self.name}: overlapping blocks")
                seen.add(pos)
                classes.add(self.slots[pos])
            if len(classes) > 1:
                raise ExprError(f"tensor {self.name}: block mixes index classes")
        if self.variance and len(self.variance) != len(self.slots):
            raise ExprError(f"tensor {self.name}: variance length mismatch")

    def block_of(self, pos: int) -> tuple[str, tuple[int, ...]]:
        for mode, block in self.sym:
            if pos in block:
                return (mode, block)
        return ("s", (pos,))  # a lone slot behaves like its own block


def _delta(cls: str) -> TensorSymbol:
    return TensorSymbol(f"delta_{cls}", (cls, cls), (("s", (0, 1)),), False, (1, -1))


DELTA: dict[str, TensorSymbol] = {c: _delta(c) for c in INDEX_CLASSES}
DIM: dict[str, TensorSymbol] = {
    c: TensorSymbol(f"dim_{c}", (), (), False, ()) for c in INDEX_CLASSES
}
_DELTA_NAMES = {s.name for s in DELTA.values()}


# ---------------------------------------------------------------------------
# factors and terms


@dataclass(frozen=True, slots=True)
class TensorFactor:
    sym: TensorSymbol
    idx: tuple[Index, ...]
    der: tuple[Index, ...] = ()

    def __post_init__(self) -> None:
        if len(self.idx) != len(self.sym.slots):
            raise ExprError(
                f"tensor {self.sym.name}: {len(self.idx)} indices for "
                f"{len(self.sym.slots)} slots"
            )
        if self.der and not self.sym.depends_on_x:
            raise ExprError(f"tensor {self.sym.name}: derivative of a constant")


@dataclass(frozen=True, slots=True)
class CoordFactor:
    fam: CoordinateFamily
    idx: tuple[Index, ...] = ()

    def __post_init__(self) -> None:
        if len(self.idx) != len(self.fam.islots):
            raise ExprError(
                f"coordinate {self.fam.name}: {len(self.idx)} indices for "
                f"{len(self.fam.islots)} slots"
            )


def _ikey(ix: Index) -> tuple:
    if isinstance(ix, int):
        return (0, ix, "")
    return (1, 0, ix)


def _tkey(tf: TensorFactor) -> tuple:
    return (
        tf.sym.name,
        len(tf.der),
        tuple(_ikey(d) for d in tf.der),
        tuple(_ikey(i) for i in tf.idx),
    )


def _ckey(cf: CoordFactor) -> tuple:
    return (
        0 if cf.fam.kind == "base" else 1,
        cf.fam.name,
        tuple(_ikey(i) for i in cf.idx),
    )


@dataclass(frozen=True, slots=True)
class Term:
    coeff: Fraction
    tens: tuple[TensorFactor, ...]
    coords: tuple[CoordFactor, ...]

    @property
    def degree(self) -> int:
        return sum(c.fam.degree for c in self.coords)

    def structure(self) -> tuple:
        return (self.tens, self.coords)


@dataclass(frozen=True, slots=True)
class Expression:
    terms: tuple[Term, ...] = ()

    # -- queries ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Degree of a homogeneous expression (0 for the zero expression)."""
        degs = {t.degree for t in self.terms}
        if not degs:
            return 0
        if len(degs) > 1:
            raise DegreeError(f"inhomogeneous expression, degrees {sorted(degs)}")
        return degs.pop()

    def is_homogeneous(self) -> bool:
        return len({t.degree for t in self.terms}) <= 1

    def free_indices(self) -> dict[str, str]:
        """Free abstract index names -> index class (same for all terms)."""
        if not self.terms:
            return {}
        out = None
        for t in self.terms:
            occ = _occurrences(t)
            free = {n: cls for n, (cls, sites) in occ.items() if len(sites) == 1}
            if out is None:
                out = free
            elif out != free:
                raise ContractionError(
                    f"terms disagree on free indices: {sorted(out)} vs {sorted(free)}"
                )
        return out or {}

    def families(self) -> set[str]:
        return {c.fam.name for t in self.terms for c in t.coords}

    def tensor_names(self) -> set[str]:
        return {f.sym.name for t in self.terms for f in t.tens}

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Expression") -> "Expression":
        if not isinstance(other, Expression):
            return NotImplemented
        return _merge(list(self.terms) + list(other.terms))

    def __sub__(self, other: "Expression") -> "Expression":
        return self + (-other)

    def __neg__(self) -> "Expression":
        return self.scale(-1)

    def scale(self, r) -> "Expression":
        r = Fraction(r)
        if r == 0:
            return Expression()
        return Expression(
            tuple(Term(t.coeff * r, t.tens, t.coords) for t in self.terms)
        )

    def __mul__(self, other) -> "Expression":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Expression):
            return NotImplemented
        raw = [_term_mul(t1, t2) for t1 in self.terms for t2 in other.terms]
        return normalize(raw)

    def __rmul__(self, other) -> "Expression":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented


ZERO = Expression()
ONE = Expression((Term(Fraction(1), (), ()),))


def scalar(r) -> Expression:
    r = Fraction(r)
    if r == 0:
        return ZERO
    return Expression((Term(r, (), ()),))


# ---------------------------------------------------------------------------
# occurrence bookkeeping


def _iter_sites(term: Term):
    """Yield (index, class, site) for every index slot of the term.

    site identifies where the index sits, up to the symmetries that make
    slots interchangeable: (kind, factor position, block id).
    """
    for fpos, tf in enumerate(term.tens):
        for spos, ix in enumerate(tf.idx):
            mode, block = tf.sym.block_of(spos)
            yield ix, tf.sym.slots[spos], ("T", fpos, ("b", mode, block))
        for ix in tf.der:
            yield ix, IBASE, ("T", fpos, ("d",))
    for fpos, cf in enumerate(term.coords):
        for spos, ix in enumerate(cf.idx):
            # multi-slot coordinate families are fully skew: one block
            yield ix, cf.fam.islots[spos], ("C", fpos, ("b",))


def _occurrences(term: Term) -> dict[str, tuple[str, list]]:
    occ: dict[str, tuple[str, list]] = {}
    for ix, cls, site in _iter_sites(term):
        if isinstance(ix, int):
            continue
        if ix in occ:
            prev_cls, sites = occ[ix]
            if prev_cls != cls:
                raise ContractionError(
                    f"index {ix!r} used in classes {prev_cls} and {cls}"
                )
            sites.append(site)
        else:
            occ[ix] = (cls, [site])
    return occ


def _validate(term: Term) -> dict[str, tuple[str, list]]:
    occ = _occurrences(term)
    for name, (cls, sites) in occ.items():
        if len(sites) > 2:
            raise ContractionError(
                f"index {name!r} occurs {len(sites)} times (Einstein summation "
                "allows at most two)"
            )
    return occ


def term_dummies(term: Term) -> set[str]:
    return {n for n, (cls, sites) in _occurrences(term).items() if len(sites) == 2}


# ---------------------------------------------------------------------------
# renaming helpers


def _rename_factor_t(tf: TensorFactor, ren: Mapping[Index, Index]) -> TensorFactor:
    return TensorFactor(
        tf.sym,
        tuple(ren.get(i, i) for i in tf.idx),
        tuple(ren.get(i, i) for i in tf.der),
    )


def _rename_factor_c(cf: CoordFactor, ren: Mapping[Index, Index]) -> CoordFactor:
    return CoordFactor(cf.fam, tuple(ren.get(i, i) for i in cf.idx))


def rename_indices(term: Term, ren: Mapping[Index, Index]) -> Term:
    return Term(
        term.coeff,
        tuple(_rename_factor_t(f, ren) for f in term.tens),
        tuple(_rename_factor_c(f, ren) for f in term.coords),
    )


def _fresh_dummies(term: Term, tag: str, counter: itertools.count) -> Term:
    ren = {d: f"~{tag}{next(counter)}" for d in sorted(term_dummies(term))}
    return rename_indices(term, ren) if ren else term


def _term_mul(t1: Term, t2: Term) -> Term:
    """Juxtaposition product; Koszul signs are produced later by sorting."""
    ctr = itertools.count()
    a = _fresh_dummies(t1, "L", ctr)
    b = _fresh_dummies(t2, "R", ctr)
    return Term(a.coeff * b.coeff, a.tens + b.tens, a.coords + b.coords)


# ---------------------------------------------------------------------------
# canonicalization


def _eliminate_deltas(term: Term) -> Term | None:
    """Contract Kronecker deltas; return None if the term is zero."""
    changed = True
    while changed:
        changed = False
        occ = _validate(term)
        for fpos, tf in enumerate(term.tens):
            if tf.sym.name not in _DELTA_NAMES:
                continue
            r, s = tf.idx
            rest = term.tens[:fpos] + term.tens[fpos + 1 :]
            if isinstance(r, int) and isinstance(s, int):
                if r != s:
                    return None
                term = Term(term.coeff, rest, term.coords)
                changed = True
                break
            if r == s:
                # pure trace: delta^i_i -> formal dimension
                cls = tf.sym.slots[0]
                term = Term(
                    term.coeff,
                    rest + (TensorFactor(DIM[cls], ()),),
                    term.coords,
                )
                changed = True
                break
            subst = None
            if isinstance(r, str) and len(occ[r][1]) == 2:
                subst = (r, s)
            elif isinstance(s, str) and len(occ[s][1]) == 2:
                subst = (s, r)
            if subst is not None:
                old, new = subst
                term = Term(term.coeff, rest, term.coords)
                term = rename_indices(term, {old: new})
                changed = True
                break
    return term


def _sort_blocks(tf: TensorFactor) -> tuple[TensorFactor | None, int]:
    """Sort indices inside each symmetry block; return (factor, sign)."""
    idx = list(tf.idx)
    sign = 1
    for mode, block in tf.sym.sym:
        vals = [idx[p] for p in block]
        keyed = sorted(range(len(vals)), key=lambda m: _ikey(vals[m]))
        newvals = [vals[m] for m in keyed]
        for m in range(len(newvals) - 1):
            if newvals[m] == newvals[m + 1]:
                if mode == "a":
                    return None, 0
        if mode == "a":
            inv = 0
            for m in range(len(keyed)):
                for mm in range(m + 1, len(keyed)):
                    if keyed[m] > keyed[mm]:
                        inv += 1
            if inv % 2:
                sign = -sign
        for p, v in zip(block, newvals):
            idx[p] = v
    der = tuple(sorted(tf.der, key=_ikey))
    return TensorFactor(tf.sym, tuple(idx), der), sign


def _sort_coords(coords: Sequence[CoordFactor]) -> tuple[tuple[CoordFactor, ...] | None, int]:
    """Stable-sort coordinate factors, tracking the Koszul sign."""
    order = sorted(range(len(coords)), key=lambda m: (_ckey(coords[m]), m))
    sign = 1
    for m in range(len(order)):
        for mm in range(m + 1, len(order)):
            if order[m] > order[mm]:
                if coords[order[m]].fam.parity and coords[order[mm]].fam.parity:
                    sign = -sign
    out = tuple(coords[m] for m in order)
    for m in range(len(out) - 1):
        if out[m].fam.parity and out[m] == out[m + 1]:
            return None, 0
    return out, sign


def _skew_sort_multi(cf: CoordFactor) -> tuple[CoordFactor | None, int]:
    """Sort the (fully skew) index tuple of a multi-index coordinate."""
    if len(cf.idx) < 2:
        return cf, 1
    keyed = sorted(range(len(cf.idx)), key=lambda m: _ikey(cf.idx[m]))
    vals = [cf.idx[m] for m in keyed]
    for m in range(len(vals) - 1):
        if vals[m] == vals[m + 1]:
            return None, 0
    inv = 0
    for m in range(len(keyed)):
        for mm in range(m + 1, len(keyed)):
            if keyed[m] > keyed[mm]:
                inv += 1
    return CoordFactor(cf.fam, tuple(vals)), -1 if inv % 2 else 1


def _leaf(
    term: Term, ren: Mapping[str, str]
) -> tuple[tuple, int, tuple[TensorFactor, ...], tuple[CoordFactor, ...]] | None:
    """Fully order a term under a complete dummy renaming.

    Returns (comparison key, sign, tensor factors, coordinate factors), or
    None when the term vanishes.  The key is built from primitives only so
    candidate leaves are totally ordered.
    """
    t = rename_indices(term, ren) if ren else term
    sign = 1
    tens = []
    for tf in t.tens:
        sorted_tf, s = _sort_blocks(tf)
        if sorted_tf is None:
            return None
        sign *= s
        tens.append(sorted_tf)
    tens.sort(key=_tkey)
    coords = []
    for cf in t.coords:
        sorted_cf, s = _skew_sort_multi(cf)
        if sorted_cf is None:
            return None
        sign *= s
        coords.append(sorted_cf)
    sorted_coords, s = _sort_coords(coords)
    if sorted_coords is None:
        return None
    sign *= s
    key = (
        tuple(_tkey(tf) for tf in tens),
        tuple(_ckey(cf) for cf in sorted_coords),
    )
    return key, sign, tuple(tens), sorted_coords


def _refine(term: Term, dummies: set[str], named: Mapping[str, str]) -> list[list[str]]:
    """Partition the unnamed dummies into renaming-invariant classes.

    Iterated Weisfeiler-Lehman style refinement over the factor graph;
    classes come back in a deterministic order.
    """
    sites_of: dict[str, list] = {d: [] for d in dummies if d not in named}
    factor_slots: dict[tuple, list] = {}
    for ix, cls, site in _iter_sites(term):
        kind, fpos, slot = site
        factor_slots.setdefault((kind, fpos), []).append((slot, ix))
        if isinstance(ix, str) and ix in sites_of:
            sites_of[ix].append(site)

    def base_color(ix: Index):
        if isinstance(ix, int):
            return ("#", ix)
        if ix in named:
            return ("n", named[ix])
        if ix in sites_of:
            return ("d",)
        return ("f", ix)

    def factor_sig(kind: str, fpos: int, colors: Mapping[str, tuple]):
        head: tuple
        if kind == "T":
            head = (kind, term.tens[fpos].sym.name)
        else:
            head = (kind, term.coords[fpos].fam.name)
        items = []
        for slot, ix in factor_slots.get((kind, fpos), []):
            if isinstance(ix, str) and ix in colors:
                items.append((slot, colors[ix]))
            else:
                items.append((slot, base_color(ix)))
        return head + (tuple(sorted(items)),)

    colors: dict[str, tuple] = {d: ("d",) for d in sites_of}
    for _ in range(len(sites_of) + 1):
        sigs: dict[str, tuple] = {}
        for d, sites in sites_of.items():
            parts = []
            for kind, fpos, slot in sites:
                parts.append((slot, factor_sig(kind, fpos, colors)))
            sigs[d] = (colors[d], tuple(sorted(parts)))
        # compress signatures back into comparable colors
        ordered = sorted(set(sigs.values()))
        newcolors = {d: ("r", ordered.index(s)) for d, s in sigs.items()}
        if newcolors == colors:
            break
        colors = newcolors
    groups: dict[tuple, list[str]] = {}
    for d in sites_of:
        groups.setdefault(colors[d], []).append(d)
    out = []
    for color in sorted(groups):
        members = groups[color]
        members.sort(key=lambda d: _first_position(term, d))
        out.append(members)
    return out


def _first_position(term: Term, name: str) -> tuple:
    for n, (ix, cls, site) in enumerate(_iter_sites(term)):
        if ix == name:
            return (n,)
    return (1 << 30,)


def _bundle_info(term: Term, members: list[str]) -> tuple[bool, int] | None:
    """Detect a fully automorphic class and the sign of one transposition.

    A class is a bundle when every member has the same pair of anchor sites:
    the same (factor, block) on the tensor side and/or single-index
    coordinate factors of one family.  Swapping two members is then an
    automorphism up to sign; sign -1 makes the whole term vanish.
    """
    anchors: list[tuple] = []
    swap_sign = 1
    occ = _occurrences(term)
    shapes = []
    for d in members:
        cls, sites = occ[d]
        if len(sites) != 2:
            return None
        shape = []
        for kind, fpos, slot in sorted(sites):
            if kind == "T":
                tf = term.tens[fpos]
                shape.append(("T", tf.sym.name, slot, fpos))
            else:
                cf = term.coords[fpos]
                if len(cf.idx) != 1:
                    return None
                shape.append(("C", cf.fam.name))
        shapes.append(tuple(shape))
    # same-shaped sites across members, anchor factors must coincide on the
    # tensor side (same factor position) for the transposition to be a
    # within-block swap; coordinate side must be whole-factor swaps.
    first = shapes[0]
    kinds = tuple(s[0] for s in first)
    for shape in shapes:
        if tuple(s[0] for s in shape) != kinds:
            return None
        for a, b in zip(shape, first):
            if a[0] == "T" and (a[1], a[2]) != (b[1], b[2]):
                return None
            if a[0] == "C" and a[1] != b[1]:
                return None
    for pos, site in enumerate(first):
        if site[0] == "T":
            same_factor = all(shape[pos][3] == site[3] for shape in shapes)
            if same_factor:
                mode = site[2][1] if site[2][0] == "b" else "s"
                if site[2][0] == "d":
                    mode = "s"  # derivative decoration is symmetric
                if mode == "a":
                    swap_sign = -swap_sign
            else:
                # distinct tensor factors can only swap wholesale; that is
                # sign-free (coefficient tensors commute) but it is only an
                # automorphism when the factors are identical apart from
                # the bundle member itself
                masked = None
                for d, shape in zip(members, shapes):
                    tf = term.tens[shape[pos][3]]
                    sig = (
                        tf.sym.name,
                        tuple("*" if ix == d else ix for ix in tf.idx),
                        tuple("*" if ix == d else ix for ix in tf.der),
                    )
                    if masked is None:
                        masked = sig
                    elif sig != masked:
                        return None
        else:
            fam_name = site[1]
            fam = next(
                c.fam for c in term.coords if c.fam.name == fam_name
            )
            if fam.parity:
                swap_sign = -swap_sign
    return True, swap_sign


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int) -> None:
        self.left = n

    def spend(self) -> bool:
        self.left -= 1
        return self.left >= 0


def _canonical_search(
    term: Term,
    dummies: set[str],
    named: dict[str, str],
    budget: _Budget,
    pool: list[str],
) -> tuple[tuple, int, tuple[TensorFactor, ...], tuple[CoordFactor, ...]] | None:
    """Orbit-minimal dummy naming.  Returns the best leaf (key, sign,
    tensors, coords) or None for a term that cancels against itself.
    Canonical names come from `pool`, which avoids the term's free index
    names."""
    unnamed = [d for d in dummies if d not in named]
    if not unnamed:
        leaf = _leaf(term, named)
        if leaf is None:
            return None
        return leaf
    classes = _refine(term, dummies, named)
    cls = classes[0]
    nxt = pool[len(named)]
    if len(cls) == 1:
        named[cls[0]] = nxt
        out = _canonical_search(term, dummies, named, budget, pool)
        del named[cls[0]]
        return out
    bundle = _bundle_info(term, cls)
    if bundle is not None:
        _, swap_sign = bundle
        if swap_sign < 0:
            return None
        for d in cls:
            named[d] = pool[len(named)]
        out = _canonical_search(term, dummies, named, budget, pool)
        for d in cls:
            del named[d]
        return out
    best = None
    both_signs = False
    for d in cls:
        if not budget.spend():
            # budget exhausted: finish deterministically in class order
            added = []
            for group in classes:
                for dd in group:
                    if dd not in named:
                        named[dd] = pool[len(named)]
                        added.append(dd)
            out = _leaf(term, named)
            for dd in added:
                del named[dd]
            return out
        named[d] = nxt
        sub = _canonical_search(term, dummies, named, budget, pool)
        del named[d]
        if sub is None:
            return None
        if best is None or sub[0] < best[0]:
            best = sub
            both_signs = False
        elif sub[0] == best[0] and sub[1] != best[1]:
            both_signs = True
    if best is None:
        return None
    if both_signs:
        return None
    return best


def _canonical_term(term: Term) -> Term | None:
    if term.coeff == 0:
        return None
    term = _eliminate_deltas(term)
    if term is None:
        return None
    _validate(term)
    dummies = term_dummies(term)
    if not dummies:
        leaf = _leaf(term, {})
        if leaf is None:
            return None
        _, sign, tens, coords = leaf
        return Term(term.coeff * sign, tens, coords)
    free = {
        name
        for name, (cls, sites) in _occurrences(term).items()
        if len(sites) == 1
    }
    pool: list[str] = []
    k = 0
    while len(pool) < len(dummies):
        cand = f".{k}"
        if cand not in free:
            pool.append(cand)
        k += 1
    out = _canonical_search(term, dummies, {}, _Budget(CANON_LEAF_CAP), pool)
    if out is None:
        return None
    _, sign, tens, coords = out
    return Term(term.coeff * sign, tens, coords)


def _merge(raw: Iterable[Term]) -> Expression:
    acc: dict[tuple, Term] = {}
    for t in raw:
        if t.coeff == 0:
            continue
        key = t.structure()
        if key in acc:
            prev = acc[key]
            c = prev.coeff + t.coeff
            if c == 0:
                del acc[key]
            else:
                acc[key] = Term(c, prev.tens, prev.coords)
        else:
            acc[key] = t
    ordered = sorted(acc.values(), key=lambda t: (_sortkey_term(t)))
    return Expression(tuple(ordered))


def _sortkey_term(t: Term) -> tuple:
    return (
        tuple(_ckey(c) for c in t.coords),
        tuple(_tkey(f) for f in t.tens),
    )


def normalize(raw: Iterable[Term]) -> Expression:
    """Canonicalize and merge a list of raw terms into an Expression."""
    canon = []
    for t in raw:
        ct = _canonical_term(t)
        if ct is not None:
            canon.append(ct)
    return _merge(canon)


# ---------------------------------------------------------------------------
# building blocks


def coord(fam: CoordinateFamily, *idx: Index) -> Expression:
    return normalize([Term(Fraction(1), (), (CoordFactor(fam, tuple(idx)),))])


def tensor(sym: TensorSymbol, *idx: Index, der: Sequence[Index] = ()) -> Expression:
    return normalize([Term(Fraction(1), (TensorFactor(sym, tuple(idx), tuple(der)),), ())])


def product(*factors: Expression) -> Expression:
    out = ONE
    for f in factors:
        out = out * f
    return out


def term_of(coeff, tens: Sequence[TensorFactor], coords: Sequence[CoordFactor]) -> Term:
    return Term(Fraction(coeff), tuple(tens), tuple(coords))


# ---------------------------------------------------------------------------
# substitution


@dataclass(frozen=True)
class SubstRule:
    """Replacement for a coordinate family: slot_names bind the family's
    indices inside the replacement expression."""

    slot_names: tuple[str, ...]
    replacement: Expression


def restrict(e: Expression, zero_families: Iterable[str]) -> Expression:
    """Set whole coordinate families to zero (restriction to a zero locus)."""
    zs = set(zero_families)
    kept = [t for t in e.terms if not any(c.fam.name in zs for c in t.coords)]
    return Expression(tuple(kept))


def substitute(e: Expression, rules: Mapping[str, "SubstRule | None"]) -> Expression:
    """Simultaneous substitution of coordinate families.

    A None rule sets the family to zero.  Replacements must be homogeneous
    of the family's degree.
    """
    for name, rule in rules.items():
        if rule is not None and not rule.replacement.is_homogeneous():
            raise DegreeError(f"replacement for {name} is inhomogeneous")
    out_terms: list[Term] = []
    for t in e.terms:
        if not any(c.fam.name in rules for c in t.coords):
            out_terms.append(t)
            continue
        dead = False
        pieces: list[Expression] = [Expression((Term(t.coeff, t.tens, ()),))]
        for cf in t.coords:
            rule = rules.get(cf.fam.name, "keep")
            if rule == "keep":
                pieces.append(Expression((Term(Fraction(1), (), (cf,)),)))
            elif rule is None:
                dead = True
                break
            else:
                if rule.replacement.terms:
                    rdeg = rule.replacement.degree()
                    if rdeg != cf.fam.degree:
                        raise DegreeError(
                            f"replacement for {cf.fam.name} has degree {rdeg}, "
                            f"expected {cf.fam.degree}"
                        )
                inst = _instantiate_rule(rule, cf.idx)
                if inst.is_zero:
                    dead = True
                    break
                pieces.append(inst)
        if dead:
            continue
        prod = pieces[0]
        for p in pieces[1:]:
            prod = prod * p
        out_terms.extend(prod.terms)
    return _merge(out_terms)


def _instantiate_rule(rule: SubstRule, idx: tuple[Index, ...]) -> Expression:
    if len(rule.slot_names) != len(idx):
        raise ExprError("substitution rule arity mismatch")
    ctr = itertools.count()
    out = []
    for t in rule.replacement.terms:
        t2 = _fresh_dummies(t, "S", ctr)
        ren = dict(zip(rule.slot_names, idx))
        out.append(rename_indices(t2, ren))
    return normalize(out)


# ---------------------------------------------------------------------------
# graded derivatives


def _delta_product(
    slots: tuple[str, ...], have: tuple[Index, ...], want: tuple[Index, ...]
) -> list[tuple[int, tuple[TensorFactor, ...]]]:
    """Expansion of d(coordinate with indices `have`) / d(coordinate with
    indices `want`) into signed products of Kronecker deltas.  Multi-index
    coordinate families are fully skew, hence the alternating sum."""
    m = len(have)
    if m == 0:
        return [(1, ())]
    out = []
    for perm in itertools.permutations(range(m)):
        inv = 0
        for u in range(m):
            for v in range(u + 1, m):
                if perm[u] > perm[v]:
                    inv += 1
        sign = -1 if inv % 2 else 1
        fs = tuple(
            TensorFactor(DELTA[slots[u]], (have[u], want[perm[u]])) for u in range(m)
        )
        out.append((sign, fs))
    return out


def left_derivative(
    e: Expression,
    fam: CoordinateFamily,
    idx: tuple[Index, ...],
    hit_tensors: bool = False,
) -> Expression:
    """Left graded derivative d_L/d(fam_idx).

    With hit_tensors=True (derivative along the degree-0 base coordinates)
    x-dependent tensor factors gain a derivative index as well; idx must
    then have one entry.
    """
    out: list[Term] = []
    p_fam = fam.parity
    for t in e.terms:
        sign_prefix = 1
        for pos, cf in enumerate(t.coords):
            if cf.fam.name == fam.name:
                if p_fam:
                    before = sum(c.fam.parity for c in t.coords[:pos])
                    s = -1 if (before % 2) else 1
                else:
                    s = 1
                rest = t.coords[:pos] + t.coords[pos + 1 :]
                for dsign, deltas in _delta_product(fam.islots, cf.idx, idx):
                    out.append(
                        Term(t.coeff * s * dsign, t.tens + deltas, rest)
                    )
        if hit_tensors:
            if len(idx) != 1:
                raise ExprError("tensor derivative needs exactly one base index")
            for pos, tf in enumerate(t.tens):
                if not tf.sym.depends_on_x:
                    continue
                new = TensorFactor(tf.sym, tf.idx, tf.der + (idx[0],))
                out.append(
                    Term(t.coeff, t.tens[:pos] + (new,) + t.tens[pos + 1 :], t.coords)
                )
    return normalize(out)


def right_derivative(
    e: Expression,
    fam: CoordinateFamily,
    idx: tuple[Index, ...],
    hit_tensors: bool = False,
) -> Expression:
    """Right graded derivative; per homogeneous term
    d_R f = (-1)^{|c|(|f|-|c|)} d_L f."""
    out: list[Term] = []
    for t in e.terms:
        left = left_derivative(Expression((t,)), fam, idx, hit_tensors)
        s = fam.degree * (t.degree - fam.degree)
        out.extend((left.scale(-1 if s % 2 else 1)).terms)
    return _merge(out)


def derive_tensors(e: Expression, ix: Index) -> Expression:
    """Formal base-coordinate derivative hitting only tensor factors."""
    out: list[Term] = []
    for t in e.terms:
        for pos, tf in enumerate(t.tens):
            if not tf.sym.depends_on_x:
                continue
            new = TensorFactor(tf.sym, tf.idx, tf.der + (ix,))
            out.append(Term(t.coeff, t.tens[:pos] + (new,) + t.tens[pos + 1 :], t.coords))
    return normalize(out)


def factorial_fraction(n: int) -> Fraction:
    return Fraction(1, factorial(n))
