import pytest

from jetforge.expr import Atom, Expr, FuncSymbol
from jetforge.jet import VectorField, lie_bracket
from jetforge.onshell import Policy
from jetforge.registry import LaxPair, builtin
from jetforge.registry import catalog
from jetforge.verify import (
    check_algebra_hom,
    check_covering,
    check_family,
    check_gauge,
    check_invariant,
    check_lax,
    check_recursion,
    check_symmetry,
    check_zero_curvature,
    finite_part_structure,
    frobenius_minors,
    linear_sym_dimension,
    rank_spot_check,
)

x, y, z, t = (Expr.atom(Atom.indep(n)) for n in "xyzt")


def u(*idx):
    return Expr.atom(Atom.jet("u", idx))


def family(mid, block):
    return next(f for f in builtin(mid).families if f.block == block)


class TestSymmetry:
    def test_hussain_scaling(self):
        assert check_symmetry(builtin("hussain"), u() - y * u(2)).verdict == "ProvedZero"

    def test_first_heavenly_rotation(self):
        assert check_symmetry(builtin("heavenly-first"), x * u(1) - y * u(2)).verdict == "ProvedZero"

    def test_first_heavenly_wrong_sign(self):
        r = check_symmetry(builtin("heavenly-first"), x * u(1) + y * u(2))
        assert r.verdict == "NonZero" and r.witness


class TestFamilies:
    def test_general_heavenly_arbitrary_function(self):
        assert check_family(builtin("general-heavenly"), family("general-heavenly", "a''''0")).verdict == "ProvedZero"

    def test_second_heavenly_grade_one(self):
        fam = family("heavenly-second", "a1")
        assert check_family(builtin("heavenly-second"), fam).verdict == "ProvedZero"

    def test_shift_by_t_is_still_a_symmetry(self):
        m = builtin("general-heavenly")
        fam = family("general-heavenly", "a''''0")
        assert check_symmetry(m, fam.generic("A") + t).verdict == "ProvedZero"

    def test_corrupted_family(self):
        m = builtin("general-heavenly")
        fam = family("general-heavenly", "a''''0")
        assert check_symmetry(m, fam.generic("A") + x * t).verdict == "NonZero"


class TestBrackets:
    def test_commuting_blocks(self):
        m = builtin("heavenly-first")
        r = check_algebra_hom(m, family("heavenly-first", "a'0"), family("heavenly-first", "a''0"))
        assert r.verdict == "ProvedZero"

    def test_grading(self):
        m = builtin("heavenly-second")
        assert check_algebra_hom(m, family("heavenly-second", "a1"), family("heavenly-second", "a2")).verdict == "ProvedZero"

    def test_out_of_range(self):
        m = builtin("heavenly-second")
        fi, fj = family("heavenly-second", "a2"), family("heavenly-second", "a3")
        assert check_algebra_hom(m, fi, fj, target=None).verdict == "ProvedZero"

    def test_wrong_target(self):
        m = builtin("heavenly-second")
        fi, fj = family("heavenly-second", "a1"), family("heavenly-second", "a2")
        assert check_algebra_hom(m, fi, fj, target=family("heavenly-second", "a2")).verdict == "NonZero"

    def test_finite_part_closure(self):
        info = finite_part_structure(builtin("heavenly-first"))
        assert info["closed"]


class TestInvariants:
    def test_hussain(self):
        m = builtin("hussain")
        assert m.invariant == (u(1, 3) * u(2, 4) - u(1, 2) * u(3, 4)) / u(1, 4)
        assert check_invariant(m, m.invariant, m.families).verdict == "ProvedZero"

    def test_general_heavenly(self):
        m = builtin("general-heavenly")
        assert check_invariant(m, m.invariant).verdict == "ProvedZero"

    def test_non_invariant(self):
        m = builtin("general-heavenly")
        assert check_invariant(m, u(1, 1)).verdict == "NonZero"


class TestLax:
    @pytest.mark.parametrize("mid", ["dfhe", "dmhe", "dhhe", "dghe", "dfhe-extra"])
    def test_pairs(self, mid):
        r = check_lax(builtin(mid), "main")
        assert r.is_zero

    @pytest.mark.parametrize("mid", ["dfhe", "dmhe", "dhhe", "dghe", "dfhe-extra"])
    def test_perturbed(self, mid):
        assert check_lax(builtin(mid), "perturbed").verdict == "NonZero"

    def test_wrong_function_arguments(self):
        m = catalog.build_dghe(q_args=(catalog.Z, catalog.U4))
        assert check_lax(m, "main").verdict == "NonZero"

    def test_minors_vanish_without_zero_curvature(self):
        m = builtin("dmhe")
        lp = m.lax_pair()
        assert check_lax(m, lp).is_zero
        assert not m.rw.reduce(lie_bracket(lp.V, lp.W).coeff(Atom.indep("x"))).is_zero()

    def test_minor_count(self):
        lp = builtin("dghe").lax_pair()
        dirs, minors = frobenius_minors(lp.V, lp.W)
        assert len(minors) == len(dirs.directions) * (len(dirs.directions) - 1) * (len(dirs.directions) - 2) // 6

    def test_symbolic_policy(self):
        r = check_lax(builtin("dghe"), "main", Policy("symbolic"))
        assert r.mode == "symbolic" and r.verdict == "ProvedZero"

    def test_degenerate_distribution(self):
        from jetforge.verify import DegenerateDistribution

        m = builtin("dmhe")
        V = m.lax_pair().V
        with pytest.raises(DegenerateDistribution):
            check_lax(m, LaxPair("same", V, V))


class TestZeroCurvature:
    def test_two_component(self):
        assert check_zero_curvature(builtin("pleb2-2c"), "main").is_zero

    def test_flipped_sign(self):
        assert check_zero_curvature(builtin("pleb2-2c"), "perturbed").verdict == "NonZero"

    def test_scalar_reduction(self):
        assert check_zero_curvature(builtin("pleb2"), "main").is_zero


class TestCoverings:
    @pytest.mark.parametrize("mid", ["pleb2-2c", "pleb2-3c", "pleb1-2c", "pleb1-3c", "dghe", "pleb2"])
    def test_coverings(self, mid):
        m = builtin(mid)
        for cov in m.coverings:
            r = check_covering(m, cov)
            assert r.is_zero == (cov.name != "perturbed"), (mid, cov.name)

    def test_raw_covering_over_scalar_equation(self):
        m = builtin("pleb2")
        cov = catalog._covering_1(builtin("pleb2-2c").ctx)
        assert check_covering(m, cov).verdict == "NonZero"


class TestRecursion:
    @pytest.mark.parametrize("mid", ["dfhe", "dmhe", "dhhe", "dghe"])
    def test_recursion(self, mid):
        m = builtin(mid)
        assert check_recursion(m, "main").is_zero
        assert check_recursion(m, "perturbed").verdict == "NonZero"


class TestGauge:
    def test_symbolic(self):
        assert check_gauge(builtin("dhhe-branch")).verdict == "ProvedZero"

    def test_constant_shift(self):
        assert check_gauge(builtin("dhhe-branch"), g=Expr.const(7)).verdict == "ProvedZero"

    def test_sign_flip(self):
        assert check_gauge(builtin("dhhe-branch"), sign=-1).verdict == "NonZero"


class TestRank:
    def test_first_heavenly_first_order(self):
        assert rank_spot_check(builtin("heavenly-first"), 1) == (9, 9)

    def test_general_heavenly_order_zero(self):
        assert rank_spot_check(builtin("general-heavenly"), 0) == (5, 5)

    def test_single_generator(self):
        assert rank_spot_check(builtin("heavenly-first"), 1, generators=[x * u(1) - y * u(2)])[0] == 1

    def test_order_range(self):
        with pytest.raises(ValueError):
            rank_spot_check(builtin("heavenly-first"), 2)


def test_linear_symmetry_dimension_first_heavenly():
    info = {}
    assert linear_sym_dimension(builtin("heavenly-first"), info=info) == 13
    assert len(set(info["ranks"])) == 1 and info["degree_bound"] > 0
