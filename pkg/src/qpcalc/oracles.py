"""Classical coordinate-formula checkers used as independent ground truth.

Everything here works on plain polynomial dictionaries with exact rational
coefficients; nothing imports the graded kernel.  A polynomial in the base
coordinates x^1..x^d maps a sorted monomial tuple (coordinate numbers, with
repetition) to its coefficient; the empty tuple is the constant term.  A
tensor array maps an index tuple (1-based) to a polynomial and omits zero
entries.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

Poly = dict[tuple[int, ...], Fraction]


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sparse exact polynomials


def p_const(c) -> Poly:
    c = Fraction(c)
    return {(): c} if c else {}


def p_var(i: int) -> Poly:
    return {(i,): Fraction(1)}


def p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, Fraction(0)) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def p_scale(a: Poly, r) -> Poly:
    r = Fraction(r)
    if not r:
        return {}
    return {m: c * r for m, c in a.items()}


def p_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2))
            s = out.get(m, Fraction(0)) + c1 * c2
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def p_deriv(a: Poly, i: int) -> Poly:
    out: Poly = {}
    for m, c in a.items():
        k = m.count(i)
        if not k:
            continue
        rest = list(m)
        rest.remove(i)
        key = tuple(rest)
        s = out.get(key, Fraction(0)) + c * k
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return out


def p_is_zero(a: Poly) -> bool:
    return not any(a.values())


# ---------------------------------------------------------------------------
# skew arrays

Array = dict[tuple[int, ...], Poly]


def _sort_sign(idx: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    if len(set(idx)) != len(idx):
        return idx, 0
    perm = sorted(range(len(idx)), key=lambda p: idx[p])
    inv = sum(
        1
        for u in range(len(perm))
        for v in range(u + 1, len(perm))
        if perm[u] > perm[v]
    )
    return tuple(sorted(idx)), -1 if inv % 2 else 1


def skew_get(arr: Array, idx: tuple[int, ...]) -> Poly:
    """Signed lookup in an array stored on ascending index tuples."""
    key, sign = _sort_sign(idx)
    if sign == 0:
        return {}
    entry = arr.get(key, {})
    return entry if sign > 0 else p_scale(entry, -1)


def validate_skew(arr: Array, slots: int) -> None:
    for idx in arr:
        if len(idx) != slots:
            raise OracleError(f"index tuple {idx} has wrong arity")
        if tuple(sorted(idx)) != idx or len(set(idx)) != slots:
            raise OracleError(
                f"store skew arrays on strictly ascending tuples, got {idx}"
            )


def d_residual(H: Array, d: int) -> Array:
    """Exterior-derivative residual of a 3-form: a 4-form, empty iff closed."""
    out: Array = {}
    for a, b, c, e in itertools.combinations(range(1, d + 1), 4):
        r = p_deriv(skew_get(H, (b, c, e)), a)
        r = p_add(r, p_scale(p_deriv(skew_get(H, (a, c, e)), b), -1))
        r = p_add(r, p_deriv(skew_get(H, (a, b, e)), c))
        r = p_add(r, p_scale(p_deriv(skew_get(H, (a, b, c)), e), -1))
        if not p_is_zero(r):
            out[(a, b, c, e)] = r
    return out


# ---------------------------------------------------------------------------
# Schouten side


def jacobiator(pi: Array, d: int) -> Array:
    """J^{abc} = pi^{al} d_l pi^{bc} + cyclic(a,b,c); zero iff Poisson."""
    out: Array = {}
    for a, b, c in itertools.combinations(range(1, d + 1), 3):
        r: Poly = {}
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            for l in range(1, d + 1):
                r = p_add(r, p_mul(skew_get(pi, (x, l)),
                                   p_deriv(skew_get(pi, (y, z)), l)))
        if not p_is_zero(r):
            out[(a, b, c)] = r
    return out


def wedge3_pullback(pi: Array, H: Array, d: int) -> Array:
    """T^{abc} = H_{ijk} pi^{ai} pi^{bj} pi^{ck}, summed over all ijk."""
    out: Array = {}
    for a, b, c in itertools.combinations(range(1, d + 1), 3):
        r: Poly = {}
        for i, j, k in itertools.permutations(range(1, d + 1), 3):
            h = skew_get(H, (i, j, k))
            if p_is_zero(h):
                continue
            r = p_add(r, p_mul(p_mul(h, skew_get(pi, (a, i))),
                               p_mul(skew_get(pi, (b, j)),
                                     skew_get(pi, (c, k)))))
        if not p_is_zero(r):
            out[(a, b, c)] = r
    return out


def oracle_schouten(pi: Array, H: Array, d: int) -> Array:
    """Residual of the twisted-Poisson condition, jacobiator minus the
    three-fold pullback of H; empty iff (pi, H) is twisted Poisson.

    Raises when H is not closed or an array is not stored skew.
    """
    validate_skew(pi, 2)
    validate_skew(H, 3)
    if d_residual(H, d):
        raise OracleError("H is not closed")
    J = jacobiator(pi, d)
    T = wedge3_pullback(pi, H, d)
    out: Array = {}
    for key in set(J) | set(T):
        r = p_add(J.get(key, {}), p_scale(T.get(key, {}), -1))
        if not p_is_zero(r):
            out[key] = r
    return out


def random_bivector(rng: random.Random, d: int) -> Array:
    """Generic skew bivector with affine entries; negative-control input."""
    out: Array = {}
    for a, b in itertools.combinations(range(1, d + 1), 2):
        p = p_const(rng.randint(-3, 3))
        for i in range(1, d + 1):
            p = p_add(p, p_scale(p_var(i), rng.randint(-2, 2)))
        out[(a, b)] = p
    return out


def _det(mat: list[list[Poly]]) -> Poly:
    n = len(mat)
    out: Poly = {}
    for perm in itertools.permutations(range(n)):
        inv = sum(
            1
            for u in range(n)
            for v in range(u + 1, n)
            if perm[u] > perm[v]
        )
        prod = p_const(-1 if inv % 2 else 1)
        for r in range(n):
            prod = p_mul(prod, mat[r][perm[r]])
            if p_is_zero(prod):
                break
        out = p_add(out, prod)
    return out


def twisted_pair(d: int = 4) -> tuple[Array, Array]:
    """A concrete nondegenerate twisted-Poisson pair.

    Starts from a unit-Pfaffian bivector with one coordinate-dependent
    entry, then solves the linear system T(H) = J for the unique closed
    3-form making the twisted residual vanish (Cramer over exact
    polynomials; the minor matrix has constant determinant because the
    Pfaffian is 1).
    """
    if d != 4:
        raise OracleError("twisted pair is constructed in dimension 4")
    pi: Array = {(1, 2): p_const(1), (3, 4): p_const(1), (1, 3): p_var(3)}
    J = jacobiator(pi, d)
    triples = list(itertools.combinations(range(1, d + 1), 3))
    minors: list[list[Poly]] = []
    rhs: list[Poly] = []
    for abc in triples:
        row = []
        for ijk in triples:
            row.append(
                _det([[skew_get(pi, (r, c)) for c in ijk] for r in abc])
            )
        minors.append(row)
        rhs.append(J.get(abc, {}))
    det = _det(minors)
    if set(det) - {()}:
        raise OracleError("minor determinant is not constant")
    scale = det.get((), Fraction(0))
    if not scale:
        raise OracleError("bivector is degenerate")
    H: Array = {}
    for col, ijk in enumerate(triples):
        rep = [
            [rhs[r] if c == col else minors[r][c] for c in range(len(triples))]
            for r in range(len(triples))
        ]
        entry = p_scale(_det(rep), Fraction(1) / scale)
        if not p_is_zero(entry):
            H[ijk] = entry
    if d_residual(H, d):
        raise OracleError("solved H is not closed")
    if oracle_schouten(pi, H, d):
        raise OracleError("twisted pair does not satisfy its own condition")
    return pi, H


# ---------------------------------------------------------------------------
# Nambu side


def nambu_bracket(pi: Array, d: int, funcs: list[Poly]) -> Poly:
    """{f_1..f_n} = pi^{i_1..i_n} d_{i_1}f_1 ... d_{i_n}f_n."""
    n = len(funcs)
    grads = [
        {i: g for i in range(1, d + 1) if not p_is_zero(g := p_deriv(f, i))}
        for f in funcs
    ]
    out: Poly = {}
    for key, entry in pi.items():
        for perm in itertools.permutations(range(n)):
            inv = sum(
                1
                for u in range(n)
                for v in range(u + 1, n)
                if perm[u] > perm[v]
            )
            prod = entry if inv % 2 == 0 else p_scale(entry, -1)
            ok = True
            for slot, fpos in enumerate(perm):
                g = grads[fpos].get(key[slot])
                if g is None:
                    ok = False
                    break
                prod = p_mul(prod, g)
            if ok:
                out = p_add(out, prod)
    return out


def _fi_residual(pi: Array, d: int, fs: list[Poly], gs: list[Poly]) -> Poly:
    inner = nambu_bracket(pi, d, gs)
    lhs = nambu_bracket(pi, d, fs + [inner])
    rhs: Poly = {}
    for k in range(len(gs)):
        swapped = list(gs)
        swapped[k] = nambu_bracket(pi, d, fs + [gs[k]])
        rhs = p_add(rhs, nambu_bracket(pi, d, swapped))
    return p_add(lhs, p_scale(rhs, -1))


def _random_poly(rng: random.Random, d: int) -> Poly:
    out: Poly = {}
    for m in itertools.chain(
        [()],
        ((i,) for i in range(1, d + 1)),
        itertools.combinations_with_replacement(range(1, d + 1), 2),
    ):
        c = rng.randint(-2, 2)
        if c:
            out[m] = Fraction(c)
    return out


def oracle_nambu(pi: Array, n: int, d: int, trials: int = 60) -> bool:
    """Skew-symmetry, Leibniz, and the fundamental identity checked by
    direct substitution on degree <= 2 test functions.

    Monomial sweeps are exhaustive where cheap (all-linear arguments, one
    quadratic argument for Leibniz); the fundamental identity additionally
    runs seeded random degree-2 polynomial arguments, which by
    multilinearity span the same space.
    """
    validate_skew(pi, n)
    lin = [p_var(i) for i in range(1, d + 1)]
    quad = [
        p_mul(p_var(i), p_var(j))
        for i, j in itertools.combinations_with_replacement(
            range(1, d + 1), 2
        )
    ]
    rng = random.Random(20260825)

    # (1) skew-symmetry in adjacent arguments
    for args in itertools.islice(
        itertools.product(lin + quad, repeat=n), 400
    ):
        base = nambu_bracket(pi, d, list(args))
        for pos in range(n - 1):
            swapped = list(args)
            swapped[pos], swapped[pos + 1] = swapped[pos + 1], swapped[pos]
            if not p_is_zero(
                p_add(nambu_bracket(pi, d, swapped), base)
            ):
                return False

    # (2) Leibniz in the first argument, product of two linear factors
    for f1, g1 in itertools.product(lin, repeat=2):
        for rest in itertools.product(lin, repeat=n - 1):
            lhs = nambu_bracket(pi, d, [p_mul(f1, g1), *rest])
            rhs = p_add(
                p_mul(f1, nambu_bracket(pi, d, [g1, *rest])),
                p_mul(g1, nambu_bracket(pi, d, [f1, *rest])),
            )
            if not p_is_zero(p_add(lhs, p_scale(rhs, -1))):
                return False

    # (3) fundamental identity: exhaustive all-linear sweep ...
    for args in itertools.product(lin, repeat=2 * n - 1):
        fs, gs = list(args[: n - 1]), list(args[n - 1 :])
        if not p_is_zero(_fi_residual(pi, d, fs, gs)):
            return False
    # ... then seeded random degree <= 2 polynomial arguments
    for _ in range(trials):
        fs = [_random_poly(rng, d) for _ in range(n - 1)]
        gs = [_random_poly(rng, d) for _ in range(n)]
        if not p_is_zero(_fi_residual(pi, d, fs, gs)):
            return False
    return True


def decomposable_nambu(slots: tuple[int, ...]) -> Array:
    """The wedge of coordinate directions `slots` as a constant array."""
    return {tuple(sorted(slots)): p_const(1)}


# ---------------------------------------------------------------------------
# quadratic Lie algebra side


def epsilon3() -> dict[tuple[int, int, int], Fraction]:
    eps: dict[tuple[int, int, int], Fraction] = {}
    for perm in itertools.permutations((1, 2, 3)):
        inv = sum(
            1
            for u in range(3)
            for v in range(u + 1, 3)
            if perm[u] > perm[v]
        )
        eps[perm] = Fraction(-1 if inv % 2 else 1)
    return eps


def oracle_lie_jacobi(
    C: dict[tuple[int, int, int], Fraction],
    k: dict[tuple[int, int], Fraction],
    dim: int,
) -> bool:
    """Jacobi identity for structure constants C^c_{ab} (key order (a,b,c))
    plus invariance of the pairing k; direct index loops."""
    rng = range(1, dim + 1)
    zero = Fraction(0)
    for a, b, c, e in itertools.product(rng, repeat=4):
        s = zero
        for f in rng:
            s += C.get((a, b, f), zero) * C.get((f, c, e), zero)
            s += C.get((b, c, f), zero) * C.get((f, a, e), zero)
            s += C.get((c, a, f), zero) * C.get((f, b, e), zero)
        if s:
            return False
    for a, b, c in itertools.product(rng, repeat=3):
        s = zero
        for e in rng:
            s += C.get((a, b, e), zero) * k.get(tuple(sorted((e, c))), zero)
            s += C.get((a, c, e), zero) * k.get(tuple(sorted((b, e))), zero)
        if s:
            return False
    return True
