"""Darboux charts and the graded Poisson bracket: canonical relations,
axiom property suites, the Hamiltonian-vector-field cross-check, and
restriction diagnostics."""

import random
from fractions import Fraction

import pytest

from qpcalc.charts import (
    ChartError,
    DarbouxChart,
    MetricBlock,
    Pair,
    liouville_restriction_check,
    random_concrete_chart,
)
from qpcalc.expr import (
    CoordFactor,
    CoordinateFamily,
    Expression,
    IBASE,
    TensorFactor,
    TensorSymbol,
    Term,
    coord,
    normalize,
    scalar,
    tensor,
)

from genutil import random_term

X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
XI2 = CoordinateFamily("xi", 2, "fiber", (IBASE,), upper=False)
Q1 = CoordinateFamily("q", 1, "base", (IBASE,), upper=True)
P1 = CoordinateFamily("p", 1, "fiber", (IBASE,), upper=False)
K = TensorSymbol("k", ("a", "a"), (("s", (0, 1)),))
U1 = CoordinateFamily("u", 1, "base", ("a",), upper=True)


def poisson2_chart():
    return DarbouxChart(2, (Pair(X, XI2), Pair(Q1, P1)))


class TestValidation:
    def test_degree_sum(self):
        with pytest.raises(ChartError):
            DarbouxChart(3, (Pair(Q1, P1),))

    def test_metric_needs_n_mod_4(self):
        # degree-2 self-paired coordinates are even: a symmetric pairing is
        # inconsistent with the bracket's symmetry at n = 4
        u2 = CoordinateFamily("u", 2, "base", ("a",), upper=True)
        with pytest.raises(ChartError):
            DarbouxChart(4, (), (MetricBlock(u2, K),))
        # n = 6 with degree-3 odd coordinates is fine
        u3 = CoordinateFamily("u", 3, "base", ("a",), upper=True)
        DarbouxChart(6, (), (MetricBlock(u3, K),))

    def test_metric_ok_n2(self):
        ch = DarbouxChart(2, (Pair(X, XI2),), (MetricBlock(U1, K),))
        assert ch.bracket(coord(U1, "a"), coord(U1, "b")) == tensor(K, "a", "b")

    def test_metric_k_must_be_symmetric(self):
        skew = TensorSymbol("kk", ("a", "a"), (("a", (0, 1)),))
        with pytest.raises(ChartError):
            DarbouxChart(2, (), (MetricBlock(U1, skew),))

    def test_repeated_family(self):
        with pytest.raises(ChartError):
            DarbouxChart(2, (Pair(Q1, P1), Pair(Q1, P1)))

    def test_unknown_coordinate_in_bracket(self):
        ch = poisson2_chart()
        v = CoordinateFamily("v", 2, "fiber", ("a",), upper=False)
        with pytest.raises(ChartError) as exc:
            ch.bracket(coord(v, "a"), coord(Q1, "i"))
        assert "not in chart" in str(exc.value)


class TestCanonicalRelations:
    def test_q_p(self):
        ch = poisson2_chart()
        from qpcalc.expr import DELTA

        d = normalize([Term(Fraction(1), (TensorFactor(DELTA[IBASE], ("i", "j")),), ())])
        assert ch.bracket(coord(Q1, "i"), coord(P1, "j")) == d
        # n=2, |q|=|p|=1: {p,q} = -(-1)^{(1-2)(1-2)} {q,p} = +{q,p}
        assert ch.bracket(coord(P1, "j"), coord(Q1, "i")) == d
        assert ch.bracket(coord(X, "i"), coord(XI2, "j")) == d
        assert ch.bracket(coord(XI2, "j"), coord(X, "i")) == d.scale(Fraction(-1))

    def test_same_family_vanishes(self):
        ch = poisson2_chart()
        assert ch.bracket(coord(Q1, "i"), coord(Q1, "j")).is_zero
        assert ch.bracket(coord(X, "i"), coord(X, "j")).is_zero

    def test_multi_index_pair_normalization(self):
        # {pos_I, mom_J} = delta on sorted multi-indices (weight 1/m!)
        W = CoordinateFamily("w", 1, "base", (IBASE, IBASE), upper=True)
        Z = CoordinateFamily("z", 2, "fiber", (IBASE, IBASE), upper=False)
        ch = DarbouxChart(3, (Pair(W, Z),))
        b = ch.bracket(coord(W, 1, 2), coord(Z, 1, 2))
        assert b == scalar(Fraction(1))
        assert ch.bracket(coord(W, 1, 2), coord(Z, 2, 1)) == scalar(Fraction(-1))
        assert ch.bracket(coord(W, 1, 2), coord(Z, 1, 3)).is_zero

    def test_x_derivative_hits_tensors(self):
        ch = poisson2_chart()
        H = TensorSymbol("H", (IBASE,) * 3, (("a", (0, 1, 2)),), depends_on_x=True)
        th0 = coord(XI2, "i") * coord(Q1, "i")
        thH = (
            tensor(H, "i", "j", "k")
            * coord(Q1, "i")
            * coord(Q1, "j")
            * coord(Q1, "k")
        ).scale(Fraction(1, 6))
        out = ch.bracket(th0, thH)
        assert len(out.terms) == 1
        t = out.terms[0]
        assert t.coeff == Fraction(1, 6)
        assert t.tens[0].der != ()
        assert len(t.coords) == 4


# -- axiom property suites ---------------------------------------------------


def _random_homog_triple(rng, pool, syms):
    es = []
    for _ in range(3):
        terms = [random_term(rng, pool, syms) for _ in range(2)]
        e = normalize(terms)
        if e.is_zero or not e.is_homogeneous():
            e = normalize([terms[0]])
        if e.is_zero or not e.is_homogeneous():
            return None
        es.append(e)
    return es


A1 = TensorSymbol("A", (IBASE,), (), depends_on_x=True)
B2 = TensorSymbol("B", (IBASE, IBASE), (), depends_on_x=True)


def run_axiom_suite(seed, trials, need):
    rng = random.Random(seed)
    checked = failures = 0
    while checked < need:
        trials -= 1
        if trials < 0:
            break
        n = rng.randint(1, 4)
        ch, pool = random_concrete_chart(rng, n)
        got = _random_homog_triple(rng, pool, (A1, B2))
        if got is None:
            continue
        f, g, h = got
        df, dg = f.degree(), g.degree()
        checked += 1
        s = (-1) ** ((df - n) * (dg - n))
        if not (ch.bracket(f, g) + ch.bracket(g, f).scale(Fraction(s))).is_zero:
            failures += 1
            continue
        lhs = ch.bracket(f, g * h)
        rhs = ch.bracket(f, g) * h + (g * ch.bracket(f, h)).scale(
            Fraction((-1) ** ((df - n) * dg))
        )
        if not (lhs - rhs).is_zero:
            failures += 1
            continue
        lhs = ch.bracket(f, ch.bracket(g, h))
        rhs = ch.bracket(ch.bracket(f, g), h) + ch.bracket(
            g, ch.bracket(f, h)
        ).scale(Fraction((-1) ** ((df - n) * (dg - n))))
        if not (lhs - rhs).is_zero:
            failures += 1
    return checked, failures


def test_axiom_suite_sample():
    checked, failures = run_axiom_suite(seed=17, trials=600, need=120)
    assert checked >= 120
    assert failures == 0


def test_axioms_on_metric_chart():
    rng = random.Random(5)
    ch = DarbouxChart(2, (Pair(X, XI2),), (MetricBlock(U1, K),))
    pool = [
        CoordFactor(X, (1,)),
        CoordFactor(XI2, (1,)),
        CoordFactor(U1, (1,)),
        CoordFactor(U1, (2,)),
        CoordFactor(U1, (3,)),
    ]
    checked = 0
    while checked < 60:
        got = _random_homog_triple(rng, pool, (A1,))
        if got is None:
            continue
        f, g, h = got
        n = 2
        df, dg = f.degree(), g.degree()
        checked += 1
        lhs = ch.bracket(f, ch.bracket(g, h))
        rhs = ch.bracket(ch.bracket(f, g), h) + ch.bracket(
            g, ch.bracket(f, h)
        ).scale(Fraction((-1) ** ((df - n) * (dg - n))))
        assert (lhs - rhs).is_zero


# -- Hamiltonian-vector-field cross-check ------------------------------------


def _hvf_apply(ch, f, g, n):
    """{f, g} computed by Leibniz recursion on g's factors, using the
    slot-wise bracket only on single factors."""
    out = []
    fd = f.degree()
    for t in g.terms:
        factors = [
            Expression((Term(Fraction(1), (tf,), ()),)) for tf in t.tens
        ] + [Expression((Term(Fraction(1), (), (cf,)),)) for cf in t.coords]
        if not factors:
            continue
        acc_deg = 0
        for k, fac in enumerate(factors):
            piece = ch.bracket(f, fac)
            if piece.is_zero:
                acc_deg += fac.degree()
                continue
            prefix = scalar(t.coeff)
            for other in factors[:k]:
                prefix = prefix * other
            suffix = scalar(Fraction(1))
            for other in factors[k + 1 :]:
                suffix = suffix * other
            sign = (-1) ** ((fd - n) * acc_deg)
            out.append((prefix * piece * suffix).scale(Fraction(sign)))
            acc_deg += fac.degree()
    total = normalize([])
    for e in out:
        total = total + e
    return total


def test_hvf_equals_slotwise_bracket():
    rng = random.Random(71)
    checked = 0
    while checked < 60:
        n = rng.randint(1, 3)
        ch, pool = random_concrete_chart(rng, n)
        got = _random_homog_triple(rng, pool, (A1,))
        if got is None:
            continue
        f, g, _ = got
        checked += 1
        assert ch.bracket(f, g) == _hvf_apply(ch, f, g, n)


# -- restriction diagnostics -------------------------------------------------


class TestLiouvilleRestriction:
    def test_good_lagrangian(self):
        ch = poisson2_chart()
        ok, diag = liouville_restriction_check(ch, ("q", "xi"))
        assert ok and diag == []

    def test_missing_pair_member(self):
        ch = poisson2_chart()
        ok, diag = liouville_restriction_check(ch, ("q",))
        assert not ok
        assert any("x" in d and "xi" in d for d in diag)

    def test_both_members(self):
        ch = poisson2_chart()
        ok, diag = liouville_restriction_check(ch, ("q", "p", "xi"))
        assert not ok
        assert any("both" in d for d in diag)

    def test_unknown_coordinate(self):
        ch = poisson2_chart()
        ok, diag = liouville_restriction_check(ch, ("q", "xi", "zz"))
        assert not ok
        assert any("zz" in d for d in diag)

    def test_metric_block_needs_split(self):
        ch = DarbouxChart(2, (Pair(X, XI2),), (MetricBlock(U1, K),))
        ok, diag = liouville_restriction_check(ch, ("xi",))
        assert not ok
        assert any("isotropic" in d for d in diag)
        ch2 = DarbouxChart(
            2,
            (Pair(X, XI2),),
            (MetricBlock(U1, K, halves=((1, 2, 3), (4, 5, 6))),),
        )
        ok2, diag2 = liouville_restriction_check(ch2, ("xi",))
        assert ok2 and diag2 == []
