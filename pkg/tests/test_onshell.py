import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetforge.expr import Atom, Expr, FuncSymbol, const, eval_exact
from jetforge.onshell import OnShellPoint, Policy, RewriteSystem, Rule, VerificationResult, _err_bound, combine, free_value, reduce, sample, verify_zero
from jetforge.registry import builtin, list_models

from conftest import small_rationals


def u(*idx):
    return Expr.atom(Atom.jet("u", idx))


D = builtin("heavenly-first")
ID = u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4)
x = Expr.atom(Atom.indep("x"))

JET_ATOMS = [Atom.jet("u", s) for s in [(1, 4), (1, 3), (2, 3), (2, 4), (1, 1, 4), (1, 4, 4), (2, 3, 4), (3,)]]


@st.composite
def jet_polys(draw) -> Expr:
    out = const(0)
    for _ in range(draw(st.integers(1, 4))):
        term = const(draw(small_rationals))
        for _ in range(draw(st.integers(0, 3))):
            term = term * Expr.atom(draw(st.sampled_from(JET_ATOMS)))
        out = out + term
    return out


class TestReduce:
    def test_rule_itself(self):
        assert reduce(D.lhs, D.rw).is_zero()

    def test_invariant_is_one(self):
        assert reduce(ID, D.rw) == 1

    def test_free_atoms_untouched(self):
        e = x + u(1, 3)
        assert reduce(e, D.rw) is e

    def test_prolonged_principal(self):
        r = reduce(u(1, 1, 4), D.rw)
        assert Atom.jet("u", (1, 4)) not in r.vars and Atom.jet("u", (1, 1, 4)) not in r.vars

    @given(jet_polys())
    @settings(max_examples=40)
    def test_idempotent(self, e):
        r = reduce(e, D.rw)
        assert reduce(r, D.rw) == r
        assert not any(D.rw.is_principal(a) for a in r.vars)

    @given(jet_polys(), st.integers(1, 4))
    @settings(max_examples=30)
    def test_soundness(self, c, i):
        # anything in the differential ideal reduces to zero and vanishes at sampled points
        e = c * D.ctx.D(D.lhs, i)
        assert reduce(e, D.rw).is_zero()
        pt = sample(D.rw, ("sound", i), 1000, probe=[e])
        assert eval_exact(e, pt) == 0

    @pytest.mark.parametrize("mid", list_models())
    def test_confluence(self, mid):
        assert builtin(mid).fresh_rw().check_confluence(4) == []


class TestSample:
    def test_satisfies_equation(self):
        for k in range(5):
            pt = sample(D.rw, ("eq", k), 1000)
            assert eval_exact(ID, pt) == 1

    def test_deterministic(self):
        a = sample(D.rw, "same", 1000, probe=[ID, u(1, 1, 4)])
        b = sample(D.rw, "same", 1000, probe=[ID, u(1, 1, 4)])
        assert a.values == b.values

    def test_bound_respected(self):
        a = Atom.jet("u", (2, 3))
        for s in range(50):
            v = free_value(s, 0, a, 10)
            assert v != 0 and abs(v.p) <= 10 and 1 <= v.q <= 10

    def test_bound_minimum(self):
        with pytest.raises(ValueError):
            OnShellPoint(D.rw, 0, 4)

    def test_function_constraint_holds(self):
        m = builtin("dmhe-general")
        L, F = m.ctx.funcs["L"], m.ctx.funcs["F"]
        lf = lambda *s: Expr.atom(L.partial(*s))
        ff = lambda *s: Expr.atom(F.partial(*s))
        resid = lf(0) + ff(1) * lf() + ff() * lf(1) - ff(1, 1) / 2
        pt = sample(m.rw, "constraint", 1000)
        assert eval_exact(resid, pt) == 0
        for s in (0, 1):
            d = m.ctx.D(resid, s + 1)
            assert eval_exact(d, pt) == 0


class TestVerifyZero:
    def test_zero(self):
        assert verify_zero(const(0), D.rw).verdict == "ProvedZero"

    def test_symbolic(self):
        r = verify_zero(ID - 1, D.rw, "symbolic")
        assert r.verdict == "ProvedZero" and r.mode == "symbolic"

    def test_offset_is_nonzero(self):
        r = verify_zero(ID - 2, D.rw, "probabilistic")
        assert r.verdict == "NonZero" and r.witness is not None

    def test_probabilistic_identity(self):
        r = verify_zero(D.ctx.D(ID, 3), D.rw, Policy("probabilistic", trials=16, bound=1000))
        assert r.verdict == "LikelyZero" and r.trials == 16
        assert r.degree_bound is not None and r.error_bound is not None

    def test_witness_reproducible(self):
        r1 = verify_zero(ID - 2 + u(1, 3), D.rw, Policy("probabilistic", seed=5))
        r2 = verify_zero(ID - 2 + u(1, 3), D.rw, Policy("probabilistic", seed=5))
        assert r1.verdict == "NonZero" and r1.witness == r2.witness

    def test_budget_falls_back(self):
        e = (ID - 1) * (u(1, 3) + u(2, 4) + u(3)) ** 6
        r = verify_zero(e, D.rw, Policy("auto", budget=5))
        assert r.verdict == "LikelyZero" and r.mode == "probabilistic"

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            Policy("guess")


class TestVerdicts:
    def test_error_bound(self):
        assert _err_bound(0, 1000, 16) == "0"
        assert _err_bound(4000, 1000, 16) == "1"
        assert _err_bound(2, 1000, 1) == "1.00e-3"

    def test_combine(self):
        ok = VerificationResult("ProvedZero", "symbolic")
        lz = VerificationResult("LikelyZero", "probabilistic", 16, 1000, 0, 10, "x")
        nz = VerificationResult("NonZero", "symbolic", witness={"k": 1})
        assert combine([ok, ok]).verdict == "ProvedZero"
        assert combine([ok, lz]).verdict == "LikelyZero" and combine([ok, lz]).degree_bound == 10
        assert combine([ok, nz, lz]) is nz

    def test_rule_orientation(self):
        r = Rule.solve(D.lhs, Atom.jet("u", (1, 4)))
        assert r.rhs == (u(1, 3) * u(2, 4) + 1) / u(2, 3)

    def test_rewrite_cycle_detected(self):
        from jetforge.jet import JetContext
        from jetforge.onshell import ReductionCycle

        ctx = JetContext()
        rw = RewriteSystem(ctx, [Rule(Atom.jet("u", (1,)), u(2)), Rule(Atom.jet("u", (2,)), u(1))])
        with pytest.raises(ReductionCycle):
            rw.reduce(u(1))
