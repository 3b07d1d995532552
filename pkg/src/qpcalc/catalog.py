"""Built-in document catalog: charts, structure functions, generators,
Lagrangians, declared assumptions, and the reference equation registry.

Every document is constructed programmatically; the text-format frontend
renders and reparses these as the canonical corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .charts import DarbouxChart, Pair
from .engine import Assumption, CanonicalGenerator, LagrangianSpec, QPSpec
from .expr import (
    CoordinateFamily,
    Expression,
    IBASE,
    IFIBER,
    IALG,
    TensorSymbol,
    coord,
    factorial_fraction,
    tensor,
)
from .tensors import formal_partial as _d


@dataclass(frozen=True)
class KnownEquation:
    """A reference equation form with free abstract indices; derived
    families are matched against these modulo one overall rational."""

    label: str
    expr: Expression
    note: str = ""


@dataclass(frozen=True)
class Document:
    name: str
    spec: QPSpec
    alpha: CanonicalGenerator | None = None
    lagrangian: LagrangianSpec | None = None
    theta_prime: Expression | None = None
    known: tuple[KnownEquation, ...] = ()
    section_families: tuple[str, ...] = ()
    structure: str = ""
    description: str = ""

    @property
    def theta_base(self) -> Expression:
        if self.theta_prime is None:
            return self.spec.theta
        return self.spec.theta - self.theta_prime


def _skew(*pos: int) -> tuple[tuple[str, tuple[int, ...]], ...]:
    return (("a", tuple(pos)),)


def _sym(*pos: int) -> tuple[tuple[str, tuple[int, ...]], ...]:
    return (("s", tuple(pos)),)


# -- degree 2: Poisson and twisted Poisson -----------------------------------


def _poisson_data():
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 2, "fiber", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "base", (IBASE,), upper=True)
    P = CoordinateFamily("p", 1, "fiber", (IBASE,), upper=False)
    chart = DarbouxChart(2, (Pair(X, XI), Pair(Q, P)))
    H = TensorSymbol("H", (IBASE,) * 3, _skew(0, 1, 2), depends_on_x=True,
                     variance=(-1, -1, -1))
    PI = TensorSymbol("pi", (IBASE, IBASE), _skew(0, 1), depends_on_x=True,
                      variance=(1, 1))
    kin = coord(XI, "i") * coord(Q, "i")
    hterm = (
        tensor(H, "i", "j", "k") * coord(Q, "i") * coord(Q, "j") * coord(Q, "k")
    ).scale(factorial_fraction(3))
    alpha = (tensor(PI, "i", "j") * coord(P, "i") * coord(P, "j")).scale(
        Fraction(1, 2)
    )
    return chart, H, PI, P, kin, hterm, alpha


def _dh_equation(H: TensorSymbol, label: str) -> KnownEquation:
    """Closure of the skew tensor H: the antisymmetrized gradient."""
    m = len(H.slots)
    names = [f"j{k}" for k in range(m + 1)]
    e = _d(tensor(H, *names[:m]), names[m])
    return KnownEquation(label, e, "closure of the form built from " + H.name)


def _poisson_known(H, PI):
    twisted = (
        (tensor(PI, "l", "i") * _d(tensor(PI, "j", "k"), "l")).scale(
            Fraction(1, 2)
        )
        - (
            tensor(H, "l", "m", "n")
            * tensor(PI, "l", "i")
            * tensor(PI, "m", "j")
            * tensor(PI, "n", "k")
        ).scale(Fraction(1, 6))
    )
    return (
        _dh_equation(H, "poisson.dh"),
        KnownEquation(
            "poisson.twisted",
            twisted,
            "bivector self-bracket balanced against the three-form",
        ),
    )


def poisson_doc() -> Document:
    chart, H, PI, P, kin, hterm, alpha = _poisson_data()
    spec = QPSpec(chart, kin + hterm, name="poisson")
    return Document(
        name="poisson",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi")),
        theta_prime=hterm,
        known=_poisson_known(H, PI),
        section_families=(),
        structure="poisson",
        description="degree-2 chart, bivector generator, three-form twist",
    )


def twisted_poisson_doc() -> Document:
    chart, H, PI, P, kin, hterm, alpha = _poisson_data()
    known = _poisson_known(H, PI)
    assumptions = (
        Assumption("poisson.dh", known[0].expr),
        Assumption("poisson.twisted", known[1].expr),
    )
    spec = QPSpec(chart, kin + hterm, name="twisted-poisson",
                  assumptions=assumptions)
    return Document(
        name="twisted-poisson",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi")),
        theta_prime=hterm,
        known=known,
        structure="poisson",
        description="same data with the closure and structure equation "
        "assumed, so the deformation checks discharge",
    )


# -- degree 3: Courant and twisted Courant -----------------------------------


def _courant_data():
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 3, "fiber", (IBASE,), upper=False)
    U = CoordinateFamily("u", 1, "base", (IFIBER,), upper=True)
    V = CoordinateFamily("v", 2, "fiber", (IFIBER,), upper=False)
    P = CoordinateFamily("p", 2, "base", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "fiber", (IBASE,), upper=True)
    chart = DarbouxChart(3, (Pair(X, XI), Pair(U, V), Pair(P, Q)))
    K = TensorSymbol("k", (IFIBER, IFIBER), _sym(0, 1), variance=(1, 1))
    RHO = TensorSymbol("rho", (IBASE, IFIBER), (), depends_on_x=True,
                       variance=(1, -1))
    Hsmall = TensorSymbol("h", (IFIBER,) * 3, _skew(0, 1, 2),
                          depends_on_x=True, variance=(-1, -1, -1))
    H4 = TensorSymbol("H", (IBASE,) * 4, _skew(0, 1, 2, 3),
                      depends_on_x=True, variance=(-1,) * 4)
    kin = coord(XI, "i") * coord(Q, "i") + (
        tensor(K, "a", "b") * coord(V, "a") * coord(V, "b")
    ).scale(Fraction(1, 2))
    hterm = (
        tensor(H4, "i", "j", "k", "l")
        * coord(Q, "i") * coord(Q, "j") * coord(Q, "k") * coord(Q, "l")
    ).scale(factorial_fraction(4))
    alpha = tensor(RHO, "i", "a") * coord(P, "i") * coord(U, "a") + (
        tensor(Hsmall, "a", "b", "c")
        * coord(U, "a") * coord(U, "b") * coord(U, "c")
    ).scale(factorial_fraction(3))
    return chart, K, RHO, Hsmall, H4, kin, hterm, alpha


def _courant_known(K, RHO, Hsmall, H4):
    eq1 = (
        tensor(K, "c", "d") * tensor(RHO, "i", "c") * tensor(RHO, "j", "d")
    )
    eq2 = (
        _d(tensor(RHO, "i", "a"), "j") * tensor(RHO, "j", "b")
        - _d(tensor(RHO, "i", "b"), "j") * tensor(RHO, "j", "a")
        + tensor(K, "c", "d") * tensor(RHO, "i", "c")
        * tensor(Hsmall, "d", "a", "b")
    )
    # representative terms carry their orbit multiplicity under the full
    # skew symmetrization in (a b c d): 4, 3 and 1 distinct signed images
    eq3 = (
        (
            _d(tensor(Hsmall, "a", "b", "c"), "i") * tensor(RHO, "i", "d")
        ).scale(4)
        + (
            tensor(K, "e", "f") * tensor(Hsmall, "a", "b", "e")
            * tensor(Hsmall, "f", "c", "d")
        ).scale(3)
        + tensor(H4, "i", "j", "k", "l")
        * tensor(RHO, "i", "a") * tensor(RHO, "j", "b")
        * tensor(RHO, "k", "c") * tensor(RHO, "l", "d")
    )
    return (
        _dh_equation(H4, "courant.dh"),
        KnownEquation("courant.1", eq1, "isotropy of the anchor"),
        KnownEquation("courant.2", eq2, "anchor compatibility"),
        KnownEquation("courant.3", eq3,
                      "structure-function closure with the four-form"),
    )


def courant_doc() -> Document:
    chart, K, RHO, Hsmall, H4, kin, hterm, alpha = _courant_data()
    spec = QPSpec(chart, kin + hterm, name="courant")
    return Document(
        name="courant",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi", "v")),
        theta_prime=hterm,
        known=_courant_known(K, RHO, Hsmall, H4),
        section_families=("u",),
        structure="courant",
        description="degree-3 chart with fiber metric, anchor and "
        "three-tensor generator, four-form twist",
    )


def twisted_courant_doc() -> Document:
    chart, K, RHO, Hsmall, H4, kin, hterm, alpha = _courant_data()
    known = _courant_known(K, RHO, Hsmall, H4)
    assumptions = tuple(
        Assumption(k.label, k.expr) for k in known
    )
    spec = QPSpec(chart, kin + hterm, name="twisted-courant",
                  assumptions=assumptions)
    return Document(
        name="twisted-courant",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi", "v")),
        theta_prime=hterm,
        known=known,
        section_families=("u",),
        structure="courant",
        description="same data with closure and structure equations "
        "assumed, exhibiting the four-form anomaly",
    )


# -- degree 2 with an algebra factor -----------------------------------------


def terashima_doc() -> Document:
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 2, "fiber", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "base", (IBASE,), upper=True)
    P = CoordinateFamily("p", 1, "fiber", (IBASE,), upper=False)
    V = CoordinateFamily("v", 1, "base", (IFIBER,), upper=False)
    U = CoordinateFamily("u", 1, "fiber", (IFIBER,), upper=True)
    chart = DarbouxChart(2, (Pair(X, XI), Pair(Q, P), Pair(V, U)))
    C = TensorSymbol("C", (IFIBER,) * 3, _skew(0, 1), variance=(-1, -1, 1))
    R = TensorSymbol("R", (IFIBER,) * 3, _skew(0, 1, 2), variance=(1, 1, 1))
    H = TensorSymbol("H", (IBASE,) * 3, _skew(0, 1, 2), depends_on_x=True,
                     variance=(-1, -1, -1))
    PI = TensorSymbol("pi", (IBASE, IBASE), _skew(0, 1), depends_on_x=True,
                      variance=(1, 1))
    RHO = TensorSymbol("rho", (IBASE, IFIBER), (), depends_on_x=True,
                       variance=(1, -1))
    theta = (
        coord(XI, "i") * coord(Q, "i")
        + (
            tensor(C, "a", "b", "c")
            * coord(U, "a") * coord(U, "b") * coord(V, "c")
        ).scale(Fraction(1, 2))
        + (
            tensor(R, "a", "b", "c")
            * coord(V, "a") * coord(V, "b") * coord(V, "c")
        ).scale(factorial_fraction(3))
        + (
            tensor(H, "i", "j", "k")
            * coord(Q, "i") * coord(Q, "j") * coord(Q, "k")
        ).scale(factorial_fraction(3))
    )
    alpha = (
        (tensor(PI, "i", "j") * coord(P, "i") * coord(P, "j")).scale(
            Fraction(1, 2)
        )
        + tensor(RHO, "j", "a") * coord(U, "a") * coord(P, "j")
    )
    jac = (
        tensor(C, "a", "b", "e") * tensor(C, "e", "c", "d")
        + tensor(C, "b", "c", "e") * tensor(C, "e", "a", "d")
        + tensor(C, "c", "a", "e") * tensor(C, "e", "b", "d")
    )
    invariance = (
        tensor(C, "e", "a", "b") * tensor(R, "e", "c", "d")
        + tensor(C, "e", "a", "c") * tensor(R, "b", "e", "d")
        + tensor(C, "e", "a", "d") * tensor(R, "b", "c", "e")
    )
    quasi = (
        (tensor(PI, "l", "i") * _d(tensor(PI, "j", "k"), "l")).scale(
            Fraction(1, 2)
        )
        - (
            tensor(H, "l", "m", "n")
            * tensor(PI, "l", "i") * tensor(PI, "m", "j")
            * tensor(PI, "n", "k")
        ).scale(Fraction(1, 6))
        - (
            tensor(R, "a", "b", "c")
            * tensor(RHO, "i", "a") * tensor(RHO, "j", "b")
            * tensor(RHO, "k", "c")
        ).scale(Fraction(1, 6))
    )
    spec = QPSpec(
        chart,
        theta,
        name="terashima",
        assumptions=(Assumption("lie.jacobi", jac),),
    )
    return Document(
        name="terashima",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi", "v")),
        known=(
            _dh_equation(H, "terashima.dh"),
            KnownEquation("terashima.cr", invariance,
                          "invariance of the cubic algebra tensor"),
            KnownEquation("terashima.jacobi", jac,
                          "algebra Jacobi identity"),
            KnownEquation("terashima.quasi", quasi,
                          "bivector self-bracket balanced against both "
                          "cubic tensors"),
        ),
        structure="poisson",
        description="degree-2 chart with a constant algebra factor; the "
        "master equation splits into two tensor conditions",
    )


# -- degree n ladder ----------------------------------------------------------


def ngeneral_doc(n: int, name: str | None = None) -> Document:
    if not 3 <= n <= 6:
        raise ValueError(f"unsupported degree {n}: expected 3..6")
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", n, "fiber", (IBASE,), upper=False)
    U = CoordinateFamily("u", 1, "base", (IFIBER,), upper=True)
    V = CoordinateFamily("v", n - 1, "fiber", (IFIBER,), upper=False)
    P = CoordinateFamily("p", n - 1, "base", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "fiber", (IBASE,), upper=True)
    W = CoordinateFamily("w", n - 2, "base", (IFIBER,), upper=False)
    Z = CoordinateFamily("z", 2, "fiber", (IFIBER,), upper=True)
    chart = DarbouxChart(
        n, (Pair(X, XI), Pair(U, V), Pair(P, Q), Pair(W, Z))
    )
    C = TensorSymbol("C", (IFIBER, IBASE, IBASE), (("a", (1, 2)),),
                     depends_on_x=True, variance=(1, -1, -1))
    H = TensorSymbol("H", (IBASE,) * (n + 1),
                     _skew(*range(n + 1)), depends_on_x=True,
                     variance=(-1,) * (n + 1))
    RHO = TensorSymbol("rho", (IBASE, IFIBER), (), depends_on_x=True,
                       variance=(1, -1))
    F = TensorSymbol("f", (IFIBER,) * 3, (("a", (1, 2)),),
                     depends_on_x=True, variance=(1, -1, -1))
    HS = TensorSymbol("h", (IFIBER,) * n, _skew(*range(n)),
                      depends_on_x=True, variance=(-1,) * n)
    qnames = [f"i{k}" for k in range(n + 1)]
    unames = [f"a{k}" for k in range(n)]
    theta = (
        coord(XI, "i") * coord(Q, "i")
        + coord(V, "a") * coord(Z, "a")
        + (
            tensor(C, "a", "i", "j")
            * coord(V, "a") * coord(Q, "i") * coord(Q, "j")
        ).scale(Fraction(1, 2))
        + _monomial_term(tensor(H, *qnames), Q, qnames,
                         factorial_fraction(n + 1))
    )
    alpha = (
        tensor(RHO, "i", "a") * coord(U, "a") * coord(P, "i")
        + (
            tensor(F, "a", "b", "c")
            * coord(W, "a") * coord(U, "b") * coord(U, "c")
        ).scale(Fraction(1, 2))
        + _monomial_term(tensor(HS, *unames), U, unames,
                         factorial_fraction(n))
    )
    higher1 = (
        _d(tensor(RHO, "i", "a"), "j") * tensor(RHO, "j", "b")
        - _d(tensor(RHO, "i", "b"), "j") * tensor(RHO, "j", "a")
        + tensor(RHO, "i", "c") * tensor(F, "c", "a", "b")
        - tensor(C, "c", "k", "l") * tensor(RHO, "i", "c")
        * tensor(RHO, "k", "a") * tensor(RHO, "l", "b")
    )
    higher2 = (
        _d(tensor(F, "a", "b", "c"), "i") * tensor(RHO, "i", "d")
        + tensor(F, "a", "b", "e") * tensor(F, "e", "c", "d")
        - tensor(C, "e", "i", "j") * tensor(F, "a", "b", "e")
        * tensor(RHO, "i", "c") * tensor(RHO, "j", "d")
    )
    an = [f"a{k}" for k in range(n + 1)]
    # each representative carries its orbit multiplicity under the full
    # skew symmetrization in (a0 .. an), with the relative signs the
    # derivation produces; the alternating sigma keeps one template valid
    # across degrees
    sigma = (-1) ** (n + 1)
    higher3 = (
        (_d(tensor(HS, *an[:n]), "i") * tensor(RHO, "i", an[n])).scale(n + 1)
        + (
            tensor(HS, "e", *an[2:]) * tensor(F, "e", an[0], an[1])
        ).scale(Fraction(sigma * n * (n + 1), 2))
        - (
            tensor(C, "e", "i", "j")
            * tensor(HS, "e", *an[: n - 1])
            * tensor(RHO, "i", an[n - 1]) * tensor(RHO, "j", an[n])
        ).scale(Fraction(sigma * n * (n + 1), 2))
        + _rho_chain(tensor(H, *qnames), RHO, qnames, an).scale(sigma)
    )
    dc = _d(tensor(C, "a", "i", "j"), "k")
    spec = QPSpec(chart, theta, name=name or f"ngeneral-{n}")
    return Document(
        name=name or f"ngeneral-{n}",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("xi", "v", "q", "z")),
        known=(
            _dh_equation(H, "ngeneral.dh"),
            KnownEquation("ngeneral.dc", dc, "closure of the mixed tensor"),
            KnownEquation("higher.1", higher1, "anchor compatibility"),
            KnownEquation("higher.2", higher2, "algebra compatibility"),
            KnownEquation("higher.3", higher3, "top closure"),
        ),
        section_families=("u", "w"),
        structure="higher",
        description=f"degree-{n} ladder chart with anchor, algebra and "
        "top-degree tensors",
    )


def _monomial_term(coeff: Expression, fam: CoordinateFamily,
                   names: list[str], scale: Fraction) -> Expression:
    out = coeff
    for nm in names:
        out = out * coord(fam, nm)
    return out.scale(scale)


def _rho_chain(coeff: Expression, RHO: TensorSymbol,
               inames: list[str], anames: list[str]) -> Expression:
    out = coeff
    for iname, aname in zip(inames, anames):
        out = out * tensor(RHO, iname, aname)
    return out


def liehomotopy_doc() -> Document:
    return ngeneral_doc(4, name="liehomotopy")


# -- Nambu --------------------------------------------------------------------


def nambu_doc() -> Document:
    n = 3
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", n, "fiber", (IBASE,), upper=False)
    V = CoordinateFamily("v", 1, "base", (IBASE, IBASE), upper=False)
    U = CoordinateFamily("u", n - 1, "fiber", (IBASE, IBASE), upper=True)
    P = CoordinateFamily("p", n - 1, "base", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "fiber", (IBASE,), upper=True)
    W = CoordinateFamily("w", n - 2, "base", (IBASE, IBASE), upper=True)
    Z = CoordinateFamily("z", 2, "fiber", (IBASE, IBASE), upper=False)
    chart = DarbouxChart(
        n, (Pair(X, XI), Pair(V, U), Pair(P, Q), Pair(W, Z))
    )
    PI = TensorSymbol("pi", (IBASE,) * n, _skew(*range(n)),
                      depends_on_x=True, variance=(1,) * n)
    theta = (
        (coord(Q, "i") * coord(XI, "i")).scale(Fraction(-1))
        + (coord(Z, "i", "j") * coord(U, "i", "j")).scale(
            factorial_fraction(n - 1)
        )
        - (
            coord(Z, "i", "j") * coord(Q, "i") * coord(Q, "j")
        ).scale(factorial_fraction(n - 1))
    )
    alpha = (
        tensor(PI, "i", "j", "k") * coord(V, "i", "j") * coord(P, "k")
    ).scale(-factorial_fraction(n - 1))
    spec = QPSpec(chart, theta, name="nambu-3")
    return Document(
        name="nambu-3",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("xi", "u", "q", "z")),
        structure="nambu",
        description="order-3 chart whose generator encodes a "
        "three-vector; canonical condition = fundamental identity",
    )


# -- strong Courant -----------------------------------------------------------


def strong_courant_doc() -> Document:
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 3, "fiber", (IBASE,), upper=False)
    U = CoordinateFamily("u", 1, "base", (IFIBER,), upper=True)
    V = CoordinateFamily("v", 2, "fiber", (IFIBER,), upper=False)
    W = CoordinateFamily("w", 1, "base", (IALG,), upper=True)
    Z = CoordinateFamily("z", 2, "fiber", (IALG,), upper=False)
    chart = DarbouxChart(3, (Pair(X, XI), Pair(U, V), Pair(W, Z)))
    K = TensorSymbol("k", (IFIBER, IFIBER), _sym(0, 1), variance=(1, 1))
    RHO = TensorSymbol("rho", (IBASE, IALG), (), depends_on_x=True,
                       variance=(1, -1))
    C = TensorSymbol("C", (IALG,) * 3, (("a", (1, 2)),),
                     depends_on_x=True, variance=(1, -1, -1))
    TAU = TensorSymbol("tau", (IALG, IFIBER), (), depends_on_x=True,
                       variance=(1, -1))
    HS = TensorSymbol("h", (IFIBER,) * 3, _skew(0, 1, 2),
                      depends_on_x=True, variance=(-1, -1, -1))
    theta = (
        (tensor(K, "a", "b") * coord(V, "a") * coord(V, "b")).scale(
            Fraction(1, 2)
        )
        + tensor(RHO, "i", "r") * coord(XI, "i") * coord(W, "r")
        + (
            tensor(C, "r", "p", "q")
            * coord(Z, "r") * coord(W, "p") * coord(W, "q")
        ).scale(Fraction(1, 2))
    )
    alpha = (
        tensor(TAU, "r", "a") * coord(Z, "r") * coord(U, "a")
        + (
            tensor(HS, "a", "b", "c")
            * coord(U, "a") * coord(U, "b") * coord(U, "c")
        ).scale(factorial_fraction(3))
    )
    anchor = (
        tensor(RHO, "j", "r") * _d(tensor(RHO, "i", "s"), "j")
        - tensor(RHO, "j", "s") * _d(tensor(RHO, "i", "r"), "j")
        - tensor(RHO, "i", "p") * tensor(C, "p", "r", "s")
    )
    jacobi = (
        tensor(C, "t", "p", "q") * tensor(C, "s", "t", "r")
        - _d(tensor(C, "s", "p", "q"), "i") * tensor(RHO, "i", "r")
        + tensor(C, "t", "q", "r") * tensor(C, "s", "t", "p")
        - _d(tensor(C, "s", "q", "r"), "i") * tensor(RHO, "i", "p")
        + tensor(C, "t", "r", "p") * tensor(C, "s", "t", "q")
        - _d(tensor(C, "s", "r", "p"), "i") * tensor(RHO, "i", "q")
    )
    sc1 = tensor(K, "a", "b") * tensor(TAU, "r", "a") * tensor(TAU, "s", "b")
    sc2 = (
        tensor(K, "c", "d") * tensor(TAU, "r", "c")
        * tensor(HS, "d", "a", "b")
        + tensor(RHO, "i", "s") * tensor(TAU, "s", "a")
        * _d(tensor(TAU, "r", "b"), "i")
        - tensor(RHO, "i", "s") * tensor(TAU, "s", "b")
        * _d(tensor(TAU, "r", "a"), "i")
        + tensor(C, "r", "p", "q")
        * tensor(TAU, "p", "a") * tensor(TAU, "q", "b")
    )
    # orbit multiplicities under the full skew symmetrization in (a b c d)
    sc3 = (
        (
            tensor(RHO, "i", "r") * tensor(TAU, "r", "d")
            * _d(tensor(HS, "a", "b", "c"), "i")
        ).scale(4)
        - (
            tensor(K, "e", "f") * tensor(HS, "e", "a", "b")
            * tensor(HS, "f", "c", "d")
        ).scale(3)
    )
    spec = QPSpec(
        chart,
        theta,
        name="strong-courant",
        assumptions=(
            Assumption("lie.anchor", anchor),
            Assumption("lie.jacobi", jacobi),
        ),
    )
    return Document(
        name="strong-courant",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("xi", "v", "w")),
        known=(
            KnownEquation("lie.anchor", anchor, "anchor morphism"),
            KnownEquation("lie.jacobi", jacobi, "bracket Jacobi identity"),
            KnownEquation("sc.1", sc1, "isotropy of the bundle map"),
            KnownEquation("sc.2", sc2, "bundle map compatibility"),
            KnownEquation("sc.3", sc3, "cubic tensor closure"),
        ),
        section_families=("u",),
        structure="strong-courant",
        description="degree-3 chart fibred over an algebra factor with a "
        "bundle map generator",
    )


# -- split representations ----------------------------------------------------


def dorfman_tm_doc() -> Document:
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 3, "fiber", (IBASE,), upper=False)
    UT = CoordinateFamily("ut", 1, "base", (IBASE,), upper=True)
    VT = CoordinateFamily("vt", 2, "fiber", (IBASE,), upper=False)
    UD = CoordinateFamily("ud", 1, "base", (IBASE,), upper=False)
    VD = CoordinateFamily("vd", 2, "fiber", (IBASE,), upper=True)
    P = CoordinateFamily("p", 2, "base", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "fiber", (IBASE,), upper=True)
    chart = DarbouxChart(
        3, (Pair(X, XI), Pair(UT, VT), Pair(UD, VD), Pair(P, Q))
    )
    theta = coord(XI, "i") * coord(Q, "i") + coord(VT, "i") * coord(VD, "i")
    alpha = coord(P, "i") * coord(UT, "i")
    spec = QPSpec(chart, theta, name="dorfman-tm")
    return Document(
        name="dorfman-tm",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi", "vt", "vd")),
        section_families=("ut", "ud"),
        structure="dorfman-split",
        description="tangent-plus-cotangent split chart; the derived "
        "double bracket is the classical Dorfman bracket",
    )


def double_aa_doc() -> Document:
    X = CoordinateFamily("x", 0, "base", (IBASE,), upper=True)
    XI = CoordinateFamily("xi", 3, "fiber", (IBASE,), upper=False)
    UA = CoordinateFamily("ua", 1, "base", (IFIBER,), upper=True)
    VA = CoordinateFamily("va", 2, "fiber", (IFIBER,), upper=False)
    US = CoordinateFamily("us", 1, "base", (IFIBER,), upper=False)
    VS = CoordinateFamily("vs", 2, "fiber", (IFIBER,), upper=True)
    P = CoordinateFamily("p", 2, "base", (IBASE,), upper=False)
    Q = CoordinateFamily("q", 1, "fiber", (IBASE,), upper=True)
    chart = DarbouxChart(
        3, (Pair(X, XI), Pair(UA, VA), Pair(US, VS), Pair(P, Q))
    )
    RHO = TensorSymbol("rho", (IBASE, IFIBER), (), depends_on_x=True,
                       variance=(1, -1))
    F = TensorSymbol("f", (IFIBER,) * 3, (("a", (1, 2)),),
                     depends_on_x=True, variance=(1, -1, -1))
    theta = coord(XI, "i") * coord(Q, "i") + coord(VA, "a") * coord(VS, "a")
    alpha = (
        tensor(RHO, "i", "a") * coord(P, "i") * coord(UA, "a")
        + (
            tensor(F, "c", "a", "b")
            * coord(UA, "a") * coord(UA, "b") * coord(US, "c")
        ).scale(Fraction(1, 2))
    )
    anchor = (
        tensor(RHO, "j", "a") * _d(tensor(RHO, "i", "b"), "j")
        - tensor(RHO, "j", "b") * _d(tensor(RHO, "i", "a"), "j")
        - tensor(RHO, "i", "c") * tensor(F, "c", "a", "b")
    )
    jacobi = (
        tensor(F, "e", "a", "b") * tensor(F, "d", "e", "c")
        - _d(tensor(F, "d", "a", "b"), "i") * tensor(RHO, "i", "c")
        + tensor(F, "e", "b", "c") * tensor(F, "d", "e", "a")
        - _d(tensor(F, "d", "b", "c"), "i") * tensor(RHO, "i", "a")
        + tensor(F, "e", "c", "a") * tensor(F, "d", "e", "b")
        - _d(tensor(F, "d", "c", "a"), "i") * tensor(RHO, "i", "b")
    )
    spec = QPSpec(
        chart,
        theta,
        name="double-aa",
        assumptions=(
            Assumption("lie.anchor", anchor),
            Assumption("lie.jacobi", jacobi),
        ),
    )
    return Document(
        name="double-aa",
        spec=spec,
        alpha=CanonicalGenerator(alpha),
        lagrangian=LagrangianSpec(("q", "xi", "va", "vs")),
        known=(
            KnownEquation("lie.anchor", anchor, "anchor morphism"),
            KnownEquation("lie.jacobi", jacobi, "bracket Jacobi identity"),
        ),
        section_families=("ua", "us"),
        structure="dorfman-split",
        description="algebroid-plus-dual split chart; canonical "
        "families discharge against the algebroid equations",
    )


_BUILDERS = {
    "poisson": poisson_doc,
    "twisted-poisson": twisted_poisson_doc,
    "courant": courant_doc,
    "twisted-courant": twisted_courant_doc,
    "terashima": terashima_doc,
    "nambu-3": nambu_doc,
    "liehomotopy": liehomotopy_doc,
    "ngeneral-3": lambda: ngeneral_doc(3),
    "ngeneral-4": lambda: ngeneral_doc(4),
    "ngeneral-5": lambda: ngeneral_doc(5),
    "ngeneral-6": lambda: ngeneral_doc(6),
    "strong-courant": strong_courant_doc,
    "dorfman-tm": dorfman_tm_doc,
    "double-aa": double_aa_doc,
}


def builtin_names() -> list[str]:
    return list(_BUILDERS)


def get_document(name: str) -> Document:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(
            f"unknown built-in document {name!r}; "
            f"available: {', '.join(_BUILDERS)}"
        ) from None
