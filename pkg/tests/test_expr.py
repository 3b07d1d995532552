"""Kernel tests: canonical terms, products, substitution, derivatives."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qpcalc.expr import (
    ContractionError,
    CoordFactor,
    CoordinateFamily,
    DegreeError,
    Expression,
    IBASE,
    SubstRule,
    Term,
    TensorFactor,
    TensorSymbol,
    ZERO,
    coord,
    left_derivative,
    normalize,
    restrict,
    right_derivative,
    scalar,
    substitute,
    tensor,
)

from genutil import concrete_dict, random_term, standard_universe, word_sort_sign

FAMS, POOL = standard_universe()
X, Q, P, V, U = FAMS
XI = CoordinateFamily("xi", 2, "fiber", (IBASE,), upper=False)
H = TensorSymbol("H", (IBASE, IBASE, IBASE), (("a", (0, 1, 2)),), depends_on_x=True)


def term(coeff, *coords):
    return Term(Fraction(coeff), (), tuple(coords))


class TestNormalize:
    def test_odd_transposition(self):
        # q^1 q^0 -> -(q^0 q^1)
        raw = term(1, CoordFactor(Q, (2,)), CoordFactor(Q, (1,)))
        e = normalize([raw])
        assert len(e.terms) == 1
        t = e.terms[0]
        assert t.coeff == -1
        assert [c.idx for c in t.coords] == [(1,), (2,)]

    def test_odd_square_vanishes(self):
        raw = term(1, CoordFactor(Q, (1,)), CoordFactor(Q, (1,)))
        assert normalize([raw]).is_zero

    def test_even_odd_commute_and_sort(self):
        # v_1 q^1 = q^1 v_1 exactly (even v)
        a = normalize([term(1, CoordFactor(V, (1,)), CoordFactor(Q, (1,)))])
        b = normalize([term(1, CoordFactor(Q, (1,)), CoordFactor(V, (1,)))])
        assert a == b

    def test_merge_cancels(self):
        raw = [
            term(1, CoordFactor(Q, (1,)), CoordFactor(Q, (2,))),
            term(1, CoordFactor(Q, (2,)), CoordFactor(Q, (1,))),
        ]
        assert normalize(raw).is_zero

    def test_dummy_renaming_canonical(self):
        a = coord(XI, "i") * coord(Q, "i")
        b = coord(XI, "m") * coord(Q, "m")
        assert a == b
        assert not a.is_zero

    def test_contracted_sym_skew_vanishes(self):
        Ksym = TensorSymbol("Ks", ("a", "a"), (("s", (0, 1)),))
        hskew = TensorSymbol("hs", ("a", "a"), (("a", (0, 1)),))
        e = tensor(Ksym, "a", "b") * tensor(hskew, "a", "b")
        assert e.is_zero

    def test_delta_contraction(self):
        d = tensor(TensorSymbol("H", (IBASE,) * 3, (("a", (0, 1, 2)),), depends_on_x=True), "i", "j", "k")
        # delta substitutes the dummy
        from qpcalc.expr import DELTA

        e = normalize(
            [
                Term(
                    Fraction(1),
                    (
                        TensorFactor(DELTA[IBASE], ("m", "i")),
                        d.terms[0].tens[0],
                    ),
                    (),
                )
            ]
        )
        assert e == tensor(
            TensorSymbol("H", (IBASE,) * 3, (("a", (0, 1, 2)),), depends_on_x=True),
            "m",
            "j",
            "k",
        )

    def test_malformed_contraction_raises(self):
        bad = term(
            1,
            CoordFactor(Q, ("i",)),
            CoordFactor(Q, ("i",)),
        )
        # two occurrences fine (and here equals zero by skewness); three raise
        normalize([bad])
        with pytest.raises(ContractionError):
            normalize(
                [
                    Term(
                        Fraction(1),
                        (),
                        (
                            CoordFactor(Q, ("i",)),
                            CoordFactor(P, ("i",)),
                            CoordFactor(Q, ("i",)),
                        ),
                    )
                ]
            )


class TestMultiply:
    def test_xi_q_square_is_zero_abstract(self):
        e = coord(XI, "i") * coord(Q, "i")
        assert (e * e).is_zero

    def test_xi_q_square_matches_concrete_sign_count(self):
        # expand (xi_1 q^1 + xi_2 q^2)^2 with explicit word sorting
        ranges = {IBASE: 2}
        e = coord(XI, "i") * coord(Q, "i")
        kernel = concrete_dict(e * e, ranges)
        # oracle: all 4 cross products, signs counted by bubble sort
        acc = {}
        for a in (1, 2):
            for b in (1, 2):
                word = [
                    (("xi", (a,)), False),
                    (("q", (a,)), True),
                    (("xi", (b,)), False),
                    (("q", (b,)), True),
                ]
                labels, sign = word_sort_sign(word)
                if sign:
                    acc[labels] = acc.get(labels, Fraction(0)) + sign
        acc = {k: v for k, v in acc.items() if v != 0}
        assert kernel == acc == {}

    def test_qp_square_nonzero_matches_concrete(self):
        ranges = {IBASE: 2}
        e = coord(Q, "i") * coord(P, "i")
        sq = e * e
        assert not sq.is_zero
        kernel = concrete_dict(sq, ranges)
        acc = {}
        for a in (1, 2):
            for b in (1, 2):
                word = [
                    (("q", (a,)), True),
                    (("p", (a,)), True),
                    (("q", (b,)), True),
                    (("p", (b,)), True),
                ]
                labels, sign = word_sort_sign(word)
                if sign:
                    acc[labels] = acc.get(labels, Fraction(0)) + sign
        acc = {k: v for k, v in acc.items() if v != 0}
        assert kernel == acc and acc

    def test_dummy_collision_safe(self):
        # same dummy letter on both sides must not cross-contract
        a = coord(XI, "i") * coord(Q, "i")
        b = coord(P, "i") * coord(Q, "i")
        prod = a * b
        assert not prod.is_zero
        for t in prod.terms:
            names = {}
            for c in t.coords:
                for ix in c.idx:
                    if isinstance(ix, str):
                        names[ix] = names.get(ix, 0) + 1
            assert all(v == 2 for v in names.values())


class TestSubstitute:
    def test_shift_example(self):
        # q^i := pi^{ij} p_j inside xi_i q^i
        pi = TensorSymbol("pi", (IBASE, IBASE), (("a", (0, 1)),), depends_on_x=True)
        e = coord(XI, "i") * coord(Q, "i")
        rule = SubstRule(("s0",), tensor(pi, "s0", "t") * coord(P, "t"))
        out = substitute(e, {"q": rule})
        expect = coord(XI, "i") * tensor(pi, "i", "j") * coord(P, "j")
        assert out == expect

    def test_degree_mismatch_names_coordinate(self):
        rule = SubstRule(("s0",), coord(V, ("s0",)) if False else coord(P, "s0") * coord(P, "t") * coord(Q, "t"))
        # replacement has degree 3, target q has degree 1
        with pytest.raises(DegreeError) as exc:
            substitute(coord(Q, "i"), {"q": rule})
        assert "q" in str(exc.value)

    def test_zero_rule(self):
        e = coord(XI, "i") * coord(Q, "i") + coord(Q, "j") * coord(P, "j")
        out = substitute(e, {"xi": None})
        assert out == coord(Q, "j") * coord(P, "j")

    def test_naive_splice_oracle(self):
        # a second independent substitution routine: splice the replacement
        # word at the factor position, fresh-rename its dummies, normalize
        rng = random.Random(404)
        pi = TensorSymbol("pi", (IBASE, IBASE), (("a", (0, 1)),), depends_on_x=True)
        rule = SubstRule(("s0",), tensor(pi, "s0", "t") * coord(P, "t"))

        def naive(e, famname, rule):
            raw = []
            for t in e.terms:
                spliced = [(t.coeff, list(t.tens), list(t.coords))]
                grown = []
                for co, tens, coords in spliced:
                    out_coords = []
                    extra_tens = list(tens)
                    mult = co
                    counter = [0]
                    for c in coords:
                        if c.fam.name != famname:
                            out_coords.append(c)
                            continue
                        assert len(rule.slot_names) == len(c.idx)
                        env = dict(zip(rule.slot_names, c.idx))
                        assert len(rule.replacement.terms) == 1
                        rt = rule.replacement.terms[0]
                        counter[0] += 1
                        tag = f"~o{counter[0]}"

                        def ren(ix):
                            if isinstance(ix, int):
                                return ix
                            if ix in env:
                                return env[ix]
                            return tag + ix

                        mult *= rt.coeff
                        for tf in rt.tens:
                            extra_tens.append(
                                TensorFactor(
                                    tf.sym,
                                    tuple(ren(i) for i in tf.idx),
                                    tuple(ren(i) for i in tf.der),
                                )
                            )
                        for cf in rt.coords:
                            out_coords.append(
                                CoordFactor(cf.fam, tuple(ren(i) for i in cf.idx))
                            )
                    grown.append((mult, extra_tens, out_coords))
                for co, tens, coords in grown:
                    raw.append(Term(co, tuple(tens), tuple(coords)))
            return normalize(raw)

        for _ in range(50):
            terms = [random_term(rng, POOL) for _ in range(2)]
            e = normalize(terms)
            got = substitute(e, {"q": rule})
            want = naive(e, "q", rule)
            assert got == want

    def test_simultaneous_not_iterated(self):
        # q := p and p := q simultaneously must swap, not collapse
        # (degrees match: both 1)
        rq = SubstRule(("s0",), coord(P, "s0"))
        rp = SubstRule(("s0",), coord(Q, "s0"))
        e = coord(Q, "i") * coord(P, "i")
        out = substitute(e, {"q": rq, "p": rp})
        expect = coord(P, "i") * coord(Q, "i")
        assert out == expect


class TestRestrict:
    def test_drops_terms(self):
        e = coord(XI, "i") * coord(Q, "i") + coord(Q, "j") * coord(P, "j")
        assert restrict(e, {"xi"}) == coord(Q, "j") * coord(P, "j")
        assert restrict(e, {"q"}).is_zero


class TestDerivatives:
    def test_left_q(self):
        e = coord(Q, "i") * coord(P, "i")
        d = left_derivative(e, Q, ("m",))
        assert d == coord(P, "m")

    def test_left_p_sign(self):
        # d_left/dp of (q p) picks up (-1)^{|q||p|}
        e = coord(Q, "i") * coord(P, "i")
        d = left_derivative(e, P, ("m",))
        assert d == coord(Q, "m").scale(Fraction(-1))

    def test_right_left_relation(self):
        rng = random.Random(99)
        for _ in range(80):
            e = normalize([random_term(rng, POOL)])
            if e.is_zero or not e.is_homogeneous():
                continue
            for fam in (Q, P, V, U):
                l = left_derivative(e, fam, ("m",))
                r = right_derivative(e, fam, ("m",))
                s = (-1) ** (fam.degree * (e.degree() - fam.degree))
                assert r == l.scale(Fraction(s))

    def test_multi_index_derivative(self):
        W = CoordinateFamily("w", 2, "fiber", (IBASE, IBASE), upper=False)
        e = coord(W, "i", "j") * tensor(
            TensorSymbol("B", (IBASE, IBASE), (("a", (0, 1)),)), "i", "j"
        )
        d = left_derivative(e, W, ("m", "l"))
        # dW_{ij}/dW_{ml} = delta^i_m delta^j_l - delta^i_l delta^j_m
        expect = tensor(
            TensorSymbol("B", (IBASE, IBASE), (("a", (0, 1)),)), "m", "l"
        ).scale(Fraction(2))
        assert d == expect

    def test_hit_tensors(self):
        e = tensor(H, "i", "j", "k") * coord(Q, "i") * coord(Q, "j") * coord(Q, "k")
        d = left_derivative(e, X, ("m",), hit_tensors=True)
        assert len(d.terms) == 1
        tf = d.terms[0].tens[0]
        assert tf.der == ("m",)


class TestExpressionBasics:
    def test_degree_mixed_raises(self):
        e = coord(Q, "i") * coord(P, "i") + coord(U, (1,))
        with pytest.raises(DegreeError):
            e.degree()
        assert not e.is_homogeneous()

    def test_free_indices(self):
        e = tensor(H, "i", "j", "k") * coord(Q, "j") * coord(Q, "k")
        assert e.free_indices() == {"i": IBASE}


# -- hypothesis property suites ---------------------------------------------


@st.composite
def raw_terms(draw, max_terms=3):
    rng = random.Random(draw(st.integers(0, 10**9)))
    return [random_term(rng, POOL) for _ in range(draw(st.integers(1, max_terms)))]


@settings(max_examples=200, deadline=None)
@given(raw_terms())
def test_normalize_idempotent(raw):
    e = normalize(raw)
    assert normalize(list(e.terms)) == e


@settings(max_examples=200, deadline=None)
@given(raw_terms(), raw_terms())
def test_graded_commutativity(raw1, raw2):
    f = normalize(raw1)
    g = normalize(raw2)
    if f.is_zero or g.is_zero or not (f.is_homogeneous() and g.is_homogeneous()):
        return
    s = (-1) ** (f.degree() * g.degree())
    assert f * g == (g * f).scale(Fraction(s))


@settings(max_examples=150, deadline=None)
@given(raw_terms(), raw_terms(), raw_terms())
def test_associativity_and_distributivity(raw1, raw2, raw3):
    f, g, h = normalize(raw1), normalize(raw2), normalize(raw3)
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h


@settings(max_examples=200, deadline=None)
@given(raw_terms())
def test_degree_additivity_and_odd_nilpotence(raw):
    f = normalize(raw)
    if f.is_zero or not f.is_homogeneous():
        return
    sq = f * f
    if not sq.is_zero:
        assert sq.degree() == 2 * f.degree()
    if f.degree() % 2 == 1:
        assert sq.is_zero


@settings(max_examples=150, deadline=None)
@given(raw_terms(), st.sampled_from(["q", "p", "v", "u"]))
def test_derivative_is_linear_and_nilpotent_on_constants(raw, famname):
    fam = {f.name: f for f in FAMS}[famname]
    e = normalize(raw)
    d1 = left_derivative(e, fam, ("z",))
    d2 = left_derivative(e.scale(Fraction(3)), fam, ("z",))
    assert d2 == d1.scale(Fraction(3))
    assert left_derivative(scalar(Fraction(5)), fam, ("z",)).is_zero
