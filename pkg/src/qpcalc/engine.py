"""Structure-equation engine: master equation checks, canonical twists,
Lagrangian shifts, cotangent lifts, and deformation reports.

The central mechanism is extraction: a homogeneous function on a graded
chart is split into coordinate-monomial families, each with a tensorial
coefficient carrying the full contraction pattern (coordinate slots become
distinct free indices; coordinate-coordinate contractions become explicit
Kronecker deltas).  The vanishing of every family coefficient is the
structure-equation content of the function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .charts import DarbouxChart, liouville_restriction_check
from .expr import (
    DELTA,
    CoordFactor,
    CoordinateFamily,
    Expression,
    ExprError,
    SubstRule,
    TensorFactor,
    Term,
    coord,
    factorial_fraction,
    normalize,
    restrict,
    substitute,
    tensor,
)
from .tensors import equal_by_instantiation, match_scale

TWIST_CAP = 32


class EngineError(ExprError):
    pass


@dataclass(frozen=True)
class Assumption:
    """A named tensorial expression declared to vanish, with free abstract
    indices; used to discharge structure-equation families that are known
    consequences of declared input structure."""

    name: str
    expr: Expression


@dataclass(frozen=True)
class QPSpec:
    chart: DarbouxChart
    theta: Expression
    name: str = ""
    assumptions: tuple[Assumption, ...] = ()

    def __post_init__(self) -> None:
        self.chart.check_expression(self.theta)
        if not self.theta.is_zero:
            d = self.theta.degree()
            if d != self.chart.n + 1:
                raise EngineError(
                    f"structure function has degree {d}, expected "
                    f"{self.chart.n + 1}"
                )


@dataclass(frozen=True)
class CanonicalGenerator:
    alpha: Expression

    def check(self, chart: DarbouxChart) -> None:
        chart.check_expression(self.alpha)
        if not self.alpha.is_zero and self.alpha.degree() != chart.n:
            raise EngineError(
                f"canonical generator has degree {self.alpha.degree()}, "
                f"expected {chart.n}"
            )


@dataclass(frozen=True)
class LagrangianSpec:
    zero_set: tuple[str, ...]


@dataclass
class EquationFamily:
    key: str
    monomial: Expression
    coefficient: Expression
    matched_eq: str | None = None
    discharged_by: str | None = None

    def times_monomial(self) -> Expression:
        return self.coefficient * self.monomial


@dataclass
class StructureEquationSet:
    families: list[EquationFamily]
    discharged: list[EquationFamily]
    source: Expression
    provenance: str = ""

    @property
    def is_empty(self) -> bool:
        return not self.families

    def reassemble(self) -> Expression:
        total = normalize([])
        for fam in self.families + self.discharged:
            total = total + fam.times_monomial()
        return total

    def family(self, key: str) -> EquationFamily:
        for fam in self.families + self.discharged:
            if fam.key == key:
                return fam
        raise KeyError(key)

    def keys(self) -> list[str]:
        return [f.key for f in self.families]


_CLASS_LETTER = {"i": "i", "a": "a", "p": "p"}


def extract_structure_equations(
    e: Expression, chart: DarbouxChart, provenance: str = ""
) -> StructureEquationSet:
    """Split into coordinate-monomial families with tensorial coefficients.

    Coefficient-times-monomial reassembly is checked exactly; a failure
    here is an internal error, not a property of the input.
    """
    chart.check_expression(e)
    buckets: dict[str, tuple[Expression, list[Term]]] = {}
    for t in e.terms:
        used = {
            ix
            for tf in t.tens
            for ix in list(tf.idx) + list(tf.der)
            if isinstance(ix, str)
        }
        counters: dict[str, int] = {}
        ren: dict[str | int, str] = {}
        coeff_tens = list(t.tens)
        new_coords = []
        deltas = []
        seen: dict[str, str] = {}

        def fresh(cls: str) -> str:
            while True:
                counters[cls] = counters.get(cls, 0) + 1
                nm = f"{_CLASS_LETTER[cls]}{counters[cls]}"
                if nm not in used:
                    return nm

        for cf in t.coords:
            slots = []
            for ix, cls in zip(cf.idx, cf.fam.islots):
                if isinstance(ix, int):
                    # concrete coordinate index: keep it in the key
                    slots.append(ix)
                    continue
                nm = fresh(cls)
                if ix in seen:
                    # coordinate-coordinate contraction -> explicit delta
                    deltas.append(
                        TensorFactor(DELTA[cls], (seen[ix], nm))
                    )
                else:
                    seen[ix] = nm
                    ren[ix] = nm
                slots.append(nm)
            new_coords.append(CoordFactor(cf.fam, tuple(slots)))
        # rename tensor-side occurrences of coordinate dummies
        def rn(ix):
            return ren.get(ix, ix) if isinstance(ix, str) else ix

        coeff_tens = [
            TensorFactor(tf.sym, tuple(rn(i) for i in tf.idx), tuple(rn(i) for i in tf.der))
            for tf in coeff_tens
        ] + deltas
        monomial = Expression(
            (Term(Fraction(1), (), tuple(new_coords)),)
        )
        key = monomial_key(monomial)
        coeff_term = Term(t.coeff, tuple(coeff_tens), ())
        if key in buckets:
            buckets[key][1].append(coeff_term)
        else:
            buckets[key] = (monomial, [coeff_term])
    families = []
    for key in sorted(buckets):
        monomial, coeff_terms = buckets[key]
        coeff = normalize(coeff_terms)
        if coeff.is_zero:
            continue
        families.append(EquationFamily(key, monomial, coeff))
    out = StructureEquationSet(families, [], e, provenance)
    if not (out.reassemble() - e).is_zero:
        raise EngineError("internal: extraction reassembly mismatch")
    return out


def monomial_key(monomial: Expression) -> str:
    if monomial.is_zero:
        return "0"
    parts = []
    for cf in monomial.terms[0].coords:
        if cf.idx:
            bits = ",".join(str(i) for i in cf.idx)
            wrap = "^" if cf.fam.upper else "_"
            parts.append(f"{cf.fam.name}{wrap}{{{bits}}}")
        else:
            parts.append(cf.fam.name)
    return " ".join(parts) if parts else "1"


def _class_of(name: str) -> str:
    return name[0]


def match_families(
    fam: EquationFamily, expr: Expression, trials: int = 6
) -> Fraction | None:
    """Proportionality of a family coefficient to a reference tensorial
    expression, after class-respecting identification of free indices.

    The coefficient is multiplied back onto its monomial so that both sides
    acquire the monomial's symmetrization before comparison.
    """
    lhs = fam.times_monomial()
    if lhs.is_zero:
        return None
    ref_free = expr.free_indices()
    slot_names = sorted(fam.coefficient.free_indices())
    by_class: dict[str, list[str]] = {}
    for n in slot_names:
        by_class.setdefault(_class_of(n), []).append(n)
    ref_by_class: dict[str, list[str]] = {}
    for n, cls in ref_free.items():
        ref_by_class.setdefault(_CLASS_LETTER[cls], []).append(n)
    if sorted(by_class) != sorted(ref_by_class):
        return None
    for cls in by_class:
        if len(by_class[cls]) != len(ref_by_class[cls]):
            return None
    # try class-respecting bijections; permuting slot names inside one
    # coordinate factor, or across factors of the same family, is a word
    # automorphism up to sign, so such bijections are redundant and only
    # one representative per block assignment is tried
    block_of_name: dict[str, tuple[str, int]] = {}
    for fpos, cf in enumerate(fam.monomial.terms[0].coords):
        for ix in cf.idx:
            if isinstance(ix, str):
                block_of_name[ix] = (cf.fam.name, fpos)
    choices = []
    for cls in sorted(by_class):
        perms = list(itertools.permutations(ref_by_class[cls]))
        choices.append([(cls, p) for p in perms])
    from .expr import rename_indices

    seen: set[tuple] = set()
    for combo in itertools.product(*choices):
        ren = {}
        for cls, perm in combo:
            for tgt, src in zip(by_class[cls], perm):
                ren[src] = tgt
        per_block: dict[tuple[str, int], list[str]] = {}
        for src, tgt in ren.items():
            per_block.setdefault(
                block_of_name.get(tgt, (tgt, -1)), []
            ).append(src)
        per_family: dict[str, list[frozenset]] = {}
        for (fname, _), srcs in per_block.items():
            per_family.setdefault(fname, []).append(frozenset(srcs))
        sig = tuple(
            (fname, tuple(sorted(tuple(sorted(g)) for g in groups)))
            for fname, groups in sorted(per_family.items())
        )
        if sig in seen:
            continue
        seen.add(sig)
        renamed = normalize([rename_indices(t, ren) for t in expr.terms])
        rhs = renamed * fam.monomial
        r = match_scale(lhs, rhs)
        if r is not None and r != 0:
            if equal_by_instantiation(lhs, rhs.scale(r), trials=trials):
                return r
    return None


def discharge(
    eqset: StructureEquationSet, assumptions: tuple[Assumption, ...]
) -> StructureEquationSet:
    """Move families proportional to a declared assumption into the
    discharged list."""
    active = []
    for fam in eqset.families:
        hit = None
        for a in assumptions:
            if match_families(fam, a.expr) is not None:
                hit = a.name
                break
        if hit is None:
            active.append(fam)
        else:
            fam.discharged_by = hit
            eqset.discharged.append(fam)
    eqset.families = active
    return eqset


def check_master(spec: QPSpec) -> StructureEquationSet:
    """Families of {theta, theta}; empty means the master equation holds
    identically (modulo declared assumptions)."""
    src = spec.chart.bracket(spec.theta, spec.theta)
    eqset = extract_structure_equations(src, spec.chart, "master")
    return discharge(eqset, spec.assumptions)


# -- canonical transformations ----------------------------------------------


def exponential_flow_terms(
    chart: DarbouxChart,
    f: Expression,
    alpha: Expression,
    cap: int = TWIST_CAP,
) -> list[Expression]:
    """Terms (1/m!) ad_alpha^m f of the canonical-transformation series,
    up to and including the first vanishing order."""
    out = [f]
    cur = f
    m = 0
    while not cur.is_zero:
        m += 1
        if m > cap:
            raise EngineError(
                f"canonical transformation series did not terminate "
                f"within {cap} orders"
            )
        cur = chart.bracket(cur, alpha).scale(Fraction(1, m))
        out.append(cur)
    return out[:-1] if len(out) > 1 else out


def exponential_flow(
    chart: DarbouxChart,
    f: Expression,
    alpha: Expression,
    cap: int = TWIST_CAP,
) -> Expression:
    total = normalize([])
    for term in exponential_flow_terms(chart, f, alpha, cap):
        total = total + term
    return total


def exp_twist(
    spec: QPSpec, alpha: CanonicalGenerator, cap: int = TWIST_CAP
) -> Expression:
    alpha.check(spec.chart)
    return exponential_flow(spec.chart, spec.theta, alpha.alpha, cap)


def check_canonical_function(
    spec: QPSpec,
    alpha: CanonicalGenerator,
    lag: LagrangianSpec,
    cap: int = TWIST_CAP,
) -> StructureEquationSet:
    """Families of exp(twist) theta restricted to the Lagrangian zero set.

    Empty output certifies the canonical-function condition identically;
    nonempty output lists the induced structure equations."""
    ok, diag = liouville_restriction_check(spec.chart, lag.zero_set)
    if not ok:
        raise EngineError("; ".join(diag))
    twisted = exp_twist(spec, alpha, cap)
    restricted = restrict(twisted, set(lag.zero_set))
    eqset = extract_structure_equations(restricted, spec.chart, "canonical")
    return discharge(eqset, spec.assumptions)


@dataclass
class ShiftResult:
    rules: dict[str, SubstRule]
    theta_on_shift: Expression
    twist_restricted: Expression
    equal: bool


def lagrangian_shift(
    spec: QPSpec,
    alpha: CanonicalGenerator,
    lag: LagrangianSpec,
    cap: int = TWIST_CAP,
) -> ShiftResult:
    """Graph description of the shifted Lagrangian: each zeroed coordinate
    c gains the value {c, alpha}, and theta restricted to the shifted
    Lagrangian is compared against the twisted restriction."""
    alpha.check(spec.chart)
    ok, diag = liouville_restriction_check(spec.chart, lag.zero_set)
    if not ok:
        raise EngineError("; ".join(diag))
    rules: dict[str, SubstRule] = {}
    for name in lag.zero_set:
        fam = spec.chart.family(name)
        slots = tuple(f"#s{k}" for k in range(len(fam.islots)))
        value = spec.chart.bracket(coord(fam, *slots), alpha.alpha)
        rules[name] = SubstRule(slots, value)
    theta_on_shift = substitute(spec.theta, rules)
    twisted = restrict(exp_twist(spec, alpha, cap), set(lag.zero_set))
    return ShiftResult(
        rules, theta_on_shift, twisted, (theta_on_shift - twisted).is_zero
    )


# -- cotangent lift ----------------------------------------------------------


@dataclass
class LiftResult:
    spec: QPSpec
    small: DarbouxChart
    conj: dict[str, CoordinateFamily]

    @property
    def zero_set(self) -> tuple[str, ...]:
        return tuple(sorted(f.name for f in self.conj.values()))


def _conj_name(base: str, taken: set[str]) -> str:
    cand = "c" + base
    while cand in taken:
        cand = "c" + cand
    return cand


def cotangent_lift(small: DarbouxChart, name: str = "") -> LiftResult:
    """Shifted-cotangent construction over a graded chart: every small
    coordinate family becomes a base coordinate of a degree n+1 chart and
    gains a fresh conjugate momentum; the canonical structure function is
    built from the conjugates with per-pair signs fixed so that the derived
    bracket restricted to the small chart reproduces the small bracket.
    The master equation holds identically by construction."""
    from .charts import Pair

    nb = small.n + 1
    taken = set(small.families)
    conj: dict[str, CoordinateFamily] = {}
    pairs = []
    for fname, fam in small.families.items():
        cname = _conj_name(fname, taken)
        taken.add(cname)
        cfam = CoordinateFamily(
            cname, nb - fam.degree, "fiber", fam.islots, upper=not fam.upper
        )
        conj[fname] = cfam
        pairs.append(Pair(fam, cfam))
    big = DarbouxChart(nb, tuple(pairs))

    theta = normalize([])
    # conjugate pairs of the small chart contribute lambda * cA * cB
    for p in small.pairs:
        m = len(p.pos.islots)
        ks = tuple(f"#l{j}" for j in range(m))
        ca, cb = conj[p.pos.name], conj[p.mom.name]
        cand = (coord(ca, *ks) * coord(cb, *ks)).scale(factorial_fraction(m))
        lam = _solve_scale(big, small, cand, p.pos, p.mom)
        theta = theta + cand.scale(lam)
    for b in small.metric_blocks:
        cu = conj[b.fam.name]
        cand = (
            tensor(b.k, "#l0", "#l1") * coord(cu, "#l0") * coord(cu, "#l1")
        ).scale(Fraction(1, 2))
        lam = _solve_scale(big, small, cand, b.fam, b.fam)
        theta = theta + cand.scale(lam)
    spec = QPSpec(big, theta, name or "lift")
    lift = LiftResult(spec, small, conj)
    master = check_master(spec)
    if not master.is_empty:
        raise EngineError("internal: lifted structure function fails master")
    _check_lift_fidelity(lift)
    return lift


def _solve_scale(
    big: DarbouxChart,
    small: DarbouxChart,
    cand: Expression,
    fam_a: CoordinateFamily,
    fam_b: CoordinateFamily,
) -> Fraction:
    zero = {name for name in big.families if name not in small.families}
    sa = tuple(f"#f{k}" for k in range(len(fam_a.islots)))
    sb = tuple(f"#g{k}" for k in range(len(fam_b.islots)))
    a = coord(fam_a, *sa)
    b = coord(fam_b, *sb)
    want = small.bracket(a, b)
    got = restrict(big.bracket(big.bracket(a, cand), b), zero)
    for lam in (Fraction(1), Fraction(-1)):
        if (got.scale(lam) - want).is_zero:
            return lam
    raise EngineError(
        f"cannot match derived bracket for pair "
        f"({fam_a.name}, {fam_b.name})"
    )


def _check_lift_fidelity(lift: LiftResult) -> None:
    """Derived brackets of all small coordinate pairs through the lifted
    structure function must equal the small-chart brackets."""
    big = lift.spec.chart
    zero = set(lift.zero_set)
    names = list(lift.small.families)
    for na in names:
        for nb_ in names:
            fa = lift.small.family(na)
            fb = lift.small.family(nb_)
            sa = tuple(f"#f{k}" for k in range(len(fa.islots)))
            sb = tuple(f"#g{k}" for k in range(len(fb.islots)))
            a_small = coord(fa, *sa)
            b_small = coord(fb, *sb)
            a_big = coord(big.family(na), *sa)
            b_big = coord(big.family(nb_), *sb)
            want = lift.small.bracket(a_small, b_small)
            got = restrict(
                big.bracket(big.bracket(a_big, lift.spec.theta), b_big), zero
            )
            if not (got - want).is_zero:
                raise EngineError(
                    f"internal: lift fidelity fails on ({na}, {nb_})"
                )


# -- deformations ------------------------------------------------------------


@dataclass
class TwistReport:
    master_ok: bool
    master_residual: StructureEquationSet
    invariance_ok: bool
    invariance_failures: list[tuple[str, str]]
    canonical: StructureEquationSet
    canonical_ok: bool
    anomaly: Expression
    anomaly_families: StructureEquationSet
    series_terms: list[Expression]
    series_identity_ok: bool

    @property
    def ok(self) -> bool:
        return self.master_ok and self.invariance_ok and self.canonical_ok


def twist_deform(
    spec: QPSpec,
    theta_prime: Expression,
    alpha: CanonicalGenerator,
    lag: LagrangianSpec,
    cap: int = TWIST_CAP,
) -> TwistReport:
    """Deform theta by theta_prime and report, modulo declared assumptions:
    the deformed master equation, invariance of the restricted derived
    bracket on coordinate pairs, the canonical-function condition, and the
    obstruction: half the restricted self-bracket of the generator, with
    its series identity."""
    chart = spec.chart
    chart.check_expression(theta_prime)
    alpha.check(chart)
    thetad = spec.theta + theta_prime
    dspec = QPSpec(chart, thetad, spec.name, spec.assumptions)

    # (a) deformed master equation
    qp = chart.bracket(spec.theta, theta_prime)
    res_a = qp + chart.bracket(theta_prime, theta_prime).scale(Fraction(1, 2))
    eq_a = discharge(
        extract_structure_equations(res_a, chart, "deformed-master"),
        spec.assumptions,
    )

    # (b) restricted derived brackets on coordinate pairs are unchanged;
    # the derived bracket acts on functions of the surviving coordinates
    zero = set(lag.zero_set)
    surviving = [n for n in chart.families if n not in zero]
    failures = []
    for na in surviving:
        for nb_ in surviving:
            fa = chart.family(na)
            fb = chart.family(nb_)
            sa = tuple(f"#f{k}" for k in range(len(fa.islots)))
            sb = tuple(f"#g{k}" for k in range(len(fb.islots)))
            a = coord(fa, *sa)
            b = coord(fb, *sb)
            diff = restrict(
                chart.bracket(chart.bracket(a, theta_prime), b), zero
            )
            if not diff.is_zero:
                failures.append((na, nb_))

    # (c) canonical-function condition for the deformed structure
    canonical = check_canonical_function(dspec, alpha, lag, cap)

    # obstruction: half the generator's self-bracket through the deformed
    # structure, restricted; the series identity says it coincides with
    # the order-2 term of the restricted transformation series, hence with
    # minus the sum of all the other orders whenever alpha is canonical
    anomaly = restrict(
        chart.bracket(chart.bracket(alpha.alpha, thetad), alpha.alpha), zero
    ).scale(Fraction(-1, 2))
    terms = [
        restrict(t, zero)
        for t in exponential_flow_terms(chart, thetad, alpha.alpha, cap)
    ]
    m2 = terms[2] if len(terms) > 2 else normalize([])
    series_ok = (anomaly - m2).is_zero
    anomaly_families = discharge(
        extract_structure_equations(anomaly, chart, "anomaly"),
        spec.assumptions,
    )
    return TwistReport(
        master_ok=eq_a.is_empty,
        master_residual=eq_a,
        invariance_ok=not failures,
        invariance_failures=failures,
        canonical=canonical,
        canonical_ok=canonical.is_empty,
        anomaly=anomaly,
        anomaly_families=anomaly_families,
        series_terms=terms,
        series_identity_ok=series_ok,
    )


@dataclass
class BoundaryReport:
    lagrangian_ok: bool
    lagrangian_diagnostics: list[str]
    canonical: StructureEquationSet | None
    theta_restricted: Expression

    @property
    def ok(self) -> bool:
        return self.lagrangian_ok and (
            self.canonical is None or self.canonical.is_empty
        )


def boundary_consistency(
    spec: QPSpec,
    alpha: CanonicalGenerator | None,
    lag: LagrangianSpec,
    cap: int = TWIST_CAP,
) -> BoundaryReport:
    """Boundary view of the canonical-function condition: with a generator
    it is the canonical check; without one it reports whether theta itself
    restricts to zero."""
    ok, diag = liouville_restriction_check(spec.chart, lag.zero_set)
    restricted = restrict(spec.theta, set(lag.zero_set))
    if not ok:
        return BoundaryReport(False, diag, None, restricted)
    if alpha is None or alpha.alpha.is_zero:
        eqset = discharge(
            extract_structure_equations(restricted, spec.chart, "boundary"),
            spec.assumptions,
        )
        return BoundaryReport(True, [], eqset, restricted)
    eqset = check_canonical_function(spec, alpha, lag, cap)
    return BoundaryReport(True, [], eqset, restricted)
