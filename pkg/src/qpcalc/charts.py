"""Graded Darboux charts and the degree -n Poisson bracket.

A chart fixes the symplectic degree n, a list of conjugate coordinate pairs
(position, momentum) with deg(pos) + deg(mom) = n, and optionally self-paired
metric blocks {u^a, u^b} = k^{ab} for degree n/2 coordinates (consistent
gradings force n = 2 mod 4 for a symmetric k).  The bracket is computed
slot-wise from left/right graded derivatives; fully skew multi-index
coordinate families contribute with a 1/m! weight so that
{pos_I, mom_J} = delta_I^J on sorted multi-indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    CoordFactor,
    CoordinateFamily,
    Expression,
    ExprError,
    IBASE,
    TensorSymbol,
    Term,
    factorial_fraction,
    left_derivative,
    normalize,
    right_derivative,
    tensor,
)


class ChartError(ExprError):
    pass


@dataclass(frozen=True)
class Pair:
    pos: CoordinateFamily
    mom: CoordinateFamily


@dataclass(frozen=True)
class MetricBlock:
    fam: CoordinateFamily
    k: TensorSymbol
    # optional split of the concrete index range into two isotropic halves,
    # used by instance builders; purely descriptive here
    halves: tuple[tuple[int, ...], tuple[int, ...]] | None = None


@dataclass(frozen=True)
class DarbouxChart:
    n: int
    pairs: tuple[Pair, ...]
    metric_blocks: tuple[MetricBlock, ...] = ()
    ranges: dict[str, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ChartError("symplectic degree must be >= 1")
        seen: dict[str, CoordinateFamily] = {}
        zero_count = 0
        for p in self.pairs:
            if p.pos.degree + p.mom.degree != self.n:
                raise ChartError(
                    f"pair ({p.pos.name}, {p.mom.name}): degrees "
                    f"{p.pos.degree}+{p.mom.degree} != {self.n}"
                )
            if p.pos.islots != p.mom.islots:
                raise ChartError(
                    f"pair ({p.pos.name}, {p.mom.name}): slot classes differ"
                )
            for fam in (p.pos, p.mom):
                if fam.name in seen:
                    raise ChartError(f"coordinate family {fam.name} repeated")
                seen[fam.name] = fam
                if fam.degree == 0:
                    zero_count += 1
        for b in self.metric_blocks:
            if 2 * b.fam.degree != self.n:
                raise ChartError(
                    f"metric block {b.fam.name}: 2*{b.fam.degree} != {self.n}"
                )
            if self.n % 4 != 2:
                # {u,u} = k symmetric needs odd u of degree n/2
                raise ChartError(
                    f"metric block {b.fam.name}: degree {self.n} chart cannot "
                    "carry a symmetric pairing on a self-paired family"
                )
            if len(b.fam.islots) != 1:
                raise ChartError("metric block families take a single index")
            if len(b.k.slots) != 2 or b.k.sym != (("s", (0, 1)),):
                raise ChartError(f"metric tensor {b.k.name} must be symmetric")
            if b.k.depends_on_x:
                raise ChartError(f"metric tensor {b.k.name} must be constant")
            if b.fam.name in seen:
                raise ChartError(f"coordinate family {b.fam.name} repeated")
            seen[b.fam.name] = b.fam
        if zero_count > 1:
            raise ChartError("at most one degree-0 coordinate family allowed")
        object.__setattr__(self, "_families", seen)

    # -- lookups ----------------------------------------------------------

    @property
    def families(self) -> dict[str, CoordinateFamily]:
        return dict(self._families)  # type: ignore[attr-defined]

    def family(self, name: str) -> CoordinateFamily:
        try:
            return self._families[name]  # type: ignore[attr-defined]
        except KeyError:
            raise ChartError(f"coordinate {name!r} not in chart") from None

    @property
    def x_family(self) -> CoordinateFamily | None:
        for fam in self._families.values():  # type: ignore[attr-defined]
            if fam.degree == 0:
                return fam
        return None

    def conjugate(self, name: str) -> CoordinateFamily:
        for p in self.pairs:
            if p.pos.name == name:
                return p.mom
            if p.mom.name == name:
                return p.pos
        for b in self.metric_blocks:
            if b.fam.name == name:
                return b.fam
        raise ChartError(f"coordinate {name!r} not in chart")

    def check_expression(self, e: Expression) -> None:
        known = set(self._families)  # type: ignore[attr-defined]
        for name in e.families():
            if name not in known:
                raise ChartError(f"coordinate {name!r} not in chart")

    # -- the bracket ------------------------------------------------------

    def bracket(self, f: Expression, g: Expression) -> Expression:
        """Graded Poisson bracket of degree -n in Darboux form."""
        self.check_expression(f)
        self.check_expression(g)
        out: list[Term] = []
        for p in self.pairs:
            m = len(p.pos.islots)
            ks = tuple(f"#b{j}" for j in range(m))
            w = factorial_fraction(m)
            eps = -1 if (p.pos.parity and p.mom.parity) else 1
            out.extend(
                self._pair_terms(f, g, p.pos, p.mom, ks, w, hit=p.pos.degree == 0)
            )
            out.extend(
                self._pair_terms(
                    f, g, p.mom, p.pos, ks, -eps * w, hit=p.pos.degree == 0
                )
            )
        for b in self.metric_blocks:
            df = right_derivative(f, b.fam, ("#m0",))
            dg = left_derivative(g, b.fam, ("#m1",))
            if df.is_zero or dg.is_zero:
                continue
            prod = df * tensor(b.k, "#m0", "#m1") * dg
            out.extend(prod.terms)
        return normalize(out)

    def _pair_terms(
        self,
        f: Expression,
        g: Expression,
        a: CoordinateFamily,
        b: CoordinateFamily,
        ks: tuple[str, ...],
        weight: Fraction | int,
        hit: bool,
    ) -> list[Term]:
        # d_R f / d a  *  d_L g / d b, with x-derivatives acting on tensors
        # when the position family has degree 0
        df = right_derivative(f, a, ks, hit_tensors=hit and a.degree == 0)
        dg = left_derivative(g, b, ks, hit_tensors=hit and b.degree == 0)
        if df.is_zero or dg.is_zero:
            return []
        return (df * dg).scale(Fraction(weight)).terms


def liouville_restriction_check(
    chart: DarbouxChart, zero_set: tuple[str, ...]
) -> tuple[bool, list[str]]:
    """Check that the zero set picks exactly one coordinate from every
    conjugate pair and splits each metric block along declared isotropic
    halves.  Returns (ok, diagnostics); diagnostics name each violation."""
    problems: list[str] = []
    names = set(zero_set)
    for name in zero_set:
        try:
            chart.family(name)
        except ChartError:
            problems.append(f"zero set names unknown coordinate {name!r}")
    for p in chart.pairs:
        inside = (p.pos.name in names) + (p.mom.name in names)
        if inside == 0:
            problems.append(
                f"pair ({p.pos.name}, {p.mom.name}): neither coordinate is set "
                "to zero, the restriction is not Lagrangian"
            )
        elif inside == 2:
            problems.append(
                f"pair ({p.pos.name}, {p.mom.name}): both coordinates are set "
                "to zero, the restriction is isotropic but too small"
            )
    for b in chart.metric_blocks:
        if b.fam.name in names:
            problems.append(
                f"metric coordinate {b.fam.name} cannot vanish wholesale; "
                "split its index range into isotropic halves instead"
            )
        elif b.halves is None:
            problems.append(
                f"metric block {b.fam.name} has no declared isotropic split"
            )
    return (not problems, problems)


def random_concrete_chart(rng, n: int) -> tuple[DarbouxChart, list[CoordFactor]]:
    """Small random chart with concrete enumerated indices, for property
    tests.  Returns the chart plus the pool of individual coordinates."""
    pairs = []
    pool: list[CoordFactor] = []
    npairs = 1 if n == 1 else rng.randint(1, 3)
    used_zero = False
    for k in range(npairs):
        dp = rng.randint(0, n)
        if used_zero and dp in (0, n):
            dp = rng.randint(1, n - 1)
        if dp in (0, n):
            used_zero = True
        pos = CoordinateFamily(f"c{k}", dp, "base", (IBASE,), upper=True)
        mom = CoordinateFamily(f"d{k}", n - dp, "fiber", (IBASE,), upper=False)
        pairs.append(Pair(pos, mom))
        r = rng.randint(1, 2)
        for ix in range(1, r + 1):
            pool.append(CoordFactor(pos, (ix,)))
            pool.append(CoordFactor(mom, (ix,)))
    return DarbouxChart(n, tuple(pairs)), pool
