import itertools
import pickle
from fractions import Fraction

import flint
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jetforge.expr import (
    Atom,
    DivisionByZeroExpr,
    Expr,
    FuncSymbol,
    PoleAtPoint,
    QuadraticNumber,
    UnassignedAtom,
    const,
    diff_atom,
    eval_exact,
    normalize,
    substitute,
)

from conftest import BASE_ATOMS, X, Y, points, polynomials, rational_exprs


def u(*idx):
    return Expr.atom(Atom.jet("u", idx))


x = Expr.atom(X)
lam = Expr.atom(Atom.param("lambda"))


class TestAtoms:
    def test_mixed_partials_identified(self):
        assert Atom.jet("u", (4, 1)) is Atom.jet("u", (1, 4))

    def test_func_partials_sorted(self):
        Q = FuncSymbol("Q", (Atom.indep("t"), Atom.jet("u", (4,))))
        assert Q.partial(1, 0) is Q.partial(0, 1)
        assert str(Q.partial(0, 1)) == "Q[1,2]"

    def test_structural_identity(self):
        assert Atom.indep("x") is X
        assert FuncSymbol("A", (X, Y)) is FuncSymbol("A", (X, Y))

    def test_indices_are_one_based(self):
        with pytest.raises(ValueError):
            Atom.jet("u", (0,))

    def test_pretty_letters(self):
        assert Atom.jet("u", (1, 4)).pretty() == "u_xt"


class TestNormalize:
    def test_commutativity_cancels(self):
        assert normalize(("-", ("*", Atom.jet("u", (1,)), Atom.jet("u", (2,))), ("*", Atom.jet("u", (2,)), Atom.jet("u", (1,))))).is_zero()

    def test_two_term_numerator(self):
        e = normalize(("/", ("-", ("*", Atom.jet("u", (1, 4)), Atom.jet("u", (2, 3))), ("*", Atom.jet("u", (1, 3)), Atom.jet("u", (2, 4)))), 1))
        assert e.is_polynomial() and len(e.num) == 2
        assert e == u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4)

    def test_gcd_reduction(self):
        assert (x**2 - 1) / (x - 1) == x + 1

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZeroExpr):
            normalize(("/", X, ("-", X, X)))

    def test_zero_is_unique(self):
        assert (x - x) is (u(1) - u(1))

    def test_monic_denominator(self):
        e = 1 / (2 * x + 4)
        assert e == Fraction(1, 2) / (x + 2)
        assert all(f.poly.leading_coefficient() == 1 for f, _ in e.den)

    @given(rational_exprs())
    def test_idempotent_and_interned(self, e):
        a = normalize(e)
        assert normalize(a) is a
        assert normalize(pickle.loads(pickle.dumps(e))) is a


class TestDiff:
    def test_heavenly_symbol(self):
        e = u(1, 1) * u(2, 2) - u(1, 2) ** 2
        assert diff_atom(e, Atom.jet("u", (1, 2))) == -2 * u(1, 2)

    def test_param(self):
        assert diff_atom(lam * u(2, 4), Atom.param("lambda")) == u(2, 4)

    def test_distinct_func_atoms(self):
        Q = FuncSymbol("Q", (Atom.indep("t"), Atom.jet("u", (4,))))
        assert diff_atom(Q(), Q.partial(0)).is_zero()

    def test_self(self):
        assert diff_atom(x, X) == 1

    @given(rational_exprs(), rational_exprs(), st.sampled_from(BASE_ATOMS))
    def test_leibniz(self, e, f, a):
        assert (e * f).diff(a) == e.diff(a) * f + e * f.diff(a)

    @given(rational_exprs(), st.sampled_from(BASE_ATOMS), st.sampled_from(BASE_ATOMS))
    def test_partials_commute(self, e, a, b):
        assert e.diff(a).diff(b) == e.diff(b).diff(a)


class TestSubstitute:
    def test_inverse(self):
        assert substitute(u(1, 4) * u(2, 3), {Atom.jet("u", (1, 4)): 1 / u(2, 3)}) == 1

    def test_invariant_vanishes(self):
        inv = u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4)
        assert substitute(inv, {Atom.jet("u", (1, 4)): u(1, 3) * u(2, 4) / u(2, 3)}).is_zero()

    def test_empty(self):
        assert substitute(x, {}) is x

    def test_simultaneous(self):
        y = Expr.atom(Y)
        assert substitute(x - y, {X: y, Y: x}) == y - x

    def test_annihilated_denominator(self):
        with pytest.raises(DivisionByZeroExpr):
            substitute(1 / (x - 1), {X: 1})

    @given(rational_exprs(), polynomials(), points())
    def test_substitute_then_evaluate(self, e, img, pt):
        try:
            direct = eval_exact(e, {**pt, X: eval_exact(img, pt)})
        except PoleAtPoint:
            return
        try:
            s = substitute(e, {X: img})
        except DivisionByZeroExpr:
            return
        try:
            assert eval_exact(s, pt) == direct
        except PoleAtPoint:
            pass


class TestEval:
    def test_product(self):
        assert eval_exact(u(1) * u(2), {Atom.jet("u", (1,)): Fraction(2, 3), Atom.jet("u", (2,)): 3}) == 2

    def test_pole(self):
        with pytest.raises(PoleAtPoint):
            eval_exact(1 / u(2, 3), {Atom.jet("u", (2, 3)): 0})

    def test_unassigned(self):
        with pytest.raises(UnassignedAtom):
            eval_exact(x + 1, {})

    def test_quadratic_extension(self):
        r = QuadraticNumber.sqrt(5)
        assert r * r == 5
        assert eval_exact(x * x, {X: r}) == 5
        assert eval_exact(1 / x, {X: r}) == QuadraticNumber(0, Fraction(1, 5), 5)

    @given(rational_exprs(), rational_exprs(), rational_exprs(), points())
    def test_distributive_at_points(self, e, f, g, pt):
        try:
            lhs = eval_exact((e + f) * g, pt)
            rhs = eval_exact(e * g, pt) + eval_exact(f * g, pt)
        except PoleAtPoint:
            return
        assert lhs == rhs

    @given(polynomials(atoms=[X, Y], max_terms=4, max_deg=3), st.integers(1, 4))
    def test_schwartz_zippel_count(self, e, B):
        # on the full grid [-B, B]^2 a nonzero polynomial of degree D has at most D (2B+1) zeros
        if e.is_zero() or e.is_const():
            return
        grid = range(-B, B + 1)
        zeros = sum(1 for a, b in itertools.product(grid, grid) if eval_exact(e, {X: a, Y: b}) == 0)
        assert zeros <= e.num_degree() * (2 * B + 1)


class TestPrinting:
    def test_str(self):
        e = (u(1, 4) * u(2, 3) - 1) / (u(3, 4) + x)
        assert str(e) == "(u[1,4]*u[2,3] - 1)/(x + u[3,4])"

    def test_pretty(self):
        assert "u_xt" in (u(1, 4) + x).pretty()

    def test_coefficients(self):
        e = lam * u(2, 4) + 3 * u(1) + 2
        c = e.coefficients([Atom.param("lambda")])
        assert c[(1,)] == u(2, 4) and c[(0,)] == 3 * u(1) + 2

    def test_const_value(self):
        assert const(Fraction(3, 4)).const_value() == flint.fmpq(3, 4)
