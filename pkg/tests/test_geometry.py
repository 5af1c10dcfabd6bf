import itertools

import flint
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetforge.expr import Atom, Expr, const
from jetforge.geometry import (
    DegenerateSymbol,
    Metric,
    SingularMetric,
    asd_norm_at,
    check_null_planes,
    check_ricci_flat,
    check_self_dual,
    curvature_at,
    duality_samples,
    metric_from_symbol,
    squarefree_sqrt,
    symbol_matrix,
)
from jetforge.jet import VectorField
from jetforge.onshell import OnShellPoint, Policy, sample
from jetforge.registry import LaxPair, builtin

R4 = range(4)
x, y, z, t = (Expr.atom(Atom.indep(n)) for n in "xyzt")


def jet(dep, *idx):
    return Expr.atom(Atom.jet(dep, idx))


def proportional(a, b) -> bool:
    ratio = None
    for i, j in itertools.product(R4, R4):
        if a[i][j].is_zero() != b[i][j].is_zero():
            return False
        if not a[i][j].is_zero():
            r = a[i][j] / b[i][j]
            if ratio is None:
                ratio = r
            elif r != ratio:
                return False
    return True


def point(model, seed, metric=None):
    probe = [] if metric is None else [c for row in metric.g for c in row]
    return sample(model.rw, ("geom", seed), 1000, probe=probe)


class TestMetricFromSymbol:
    def test_two_component_second_system(self):
        m = builtin("pleb2-2c")
        v, w = (lambda *i: jet("v", *i)), (lambda *i: jet("w", *i))
        half = const(1) / 2
        printed = [
            [const(0), const(0), half, const(0)],
            [const(0), const(0), const(0), half],
            [half, const(0), -v(2), (v(1) + w(2)) / 2],
            [const(0), half, (v(1) + w(2)) / 2, -w(1)],
        ]
        assert proportional(metric_from_symbol(m).g, printed)

    def test_wave_is_constant_diagonal(self):
        g = metric_from_symbol(builtin("wave")).g
        assert proportional(g, [[const(1 if i == j == 0 else -1 if i == j else 0) for j in R4] for i in R4])

    def test_two_component_first_system(self):
        m = builtin("pleb1-2c")
        assert proportional(metric_from_symbol(m).g, m.metric)

    def test_degenerate(self):
        with pytest.raises(DegenerateSymbol):
            metric_from_symbol(builtin("sd6"))

    @pytest.mark.parametrize("mid", ["heavenly-second", "heavenly-first", "dmhe", "dghe", "kz"])
    def test_symbol_reconstruction(self, mid):
        # the inverse of the metric is the symbol up to one overall factor
        m = builtin(mid)
        g = metric_from_symbol(m)
        h = symbol_matrix(m)
        pt = point(m, mid, g)
        G = flint.fmpq_mat([[g.g[i][j].evaluate(pt) for j in R4] for i in R4])
        H = flint.fmpq_mat([[h[i][j].evaluate(pt) for j in R4] for i in R4])
        P = G * H
        assert all(P[i, j] == (P[0, 0] if i == j else 0) for i in R4 for j in R4) and P[0, 0] != 0

    def test_symmetric_required(self):
        ctx = builtin("wave").ctx
        bad = [[x if (i, j) == (0, 1) else const(1 if i == j else 0) for j in R4] for i in R4]
        with pytest.raises(ValueError):
            Metric(bad, ctx)


class TestCurvature:
    def test_flat(self):
        m = builtin("wave")
        c = curvature_at(metric_from_symbol(m), point(m, 0))
        assert all(v == 0 for v in itertools.chain.from_iterable(itertools.chain.from_iterable(itertools.chain.from_iterable(c.riemann))))

    def test_singular(self):
        m = builtin("wave")
        zero = Metric([[const(0)] * 4 for _ in R4], m.ctx)
        with pytest.raises(SingularMetric):
            curvature_at(zero, point(m, 0))

    @given(st.integers(0, 10**6))
    @settings(max_examples=8)
    def test_conformally_flat_weyl_vanishes(self, seed):
        m = builtin("wave")
        g = metric_from_symbol(m).scaled(1 + x**2 + 3 * y**2)
        c = curvature_at(g, point(m, seed))
        assert all(c.weyl[i][j][k][l] == 0 for i, j, k, l in itertools.product(R4, R4, R4, R4))
        assert any(c.riemann[i][j][k][l] != 0 for i, j, k, l in itertools.product(R4, R4, R4, R4))

    @given(st.sampled_from(["heavenly-second", "dmhe", "kz", "pleb2-2c"]), st.integers(0, 10**6))
    @settings(max_examples=10)
    def test_riemann_symmetries_and_weyl_traces(self, mid, seed):
        m = builtin(mid)
        g = metric_from_symbol(m)
        c = curvature_at(g, point(m, seed, g))
        R, C = c.riemann, c.weyl
        for i, j, k, l in itertools.product(R4, R4, R4, R4):
            assert R[i][j][k][l] == -R[j][i][k][l] == -R[i][j][l][k] == R[k][l][i][j]
            assert R[i][j][k][l] + R[i][k][l][j] + R[i][l][j][k] == 0
        for j, l in itertools.product(R4, R4):
            assert sum((c.ginv[i][k] * C[i][j][k][l] for i in R4 for k in R4), flint.fmpq(0)) == 0

    def test_second_heavenly_weyl_nonzero_but_half_flat(self):
        m = builtin("heavenly-second")
        g = metric_from_symbol(m)
        pt = point(m, "petrov", g)
        c = curvature_at(g, pt)
        assert any(c.weyl[i][j][k][l] != 0 for i, j, k, l in itertools.product(R4, R4, R4, R4))
        nm = asd_norm_at(g, pt, c, root=g.volume_root(m.rw))
        assert nm.vanishing() == "-" and nm.plus != 0


class TestDuality:
    def test_flat_point(self):
        m = builtin("wave")
        nm = asd_norm_at(metric_from_symbol(m), point(m, 0))
        assert nm.vanishing() == "both"

    def test_squarefree(self):
        assert squarefree_sqrt(flint.fmpq(50, 9)) == (flint.fmpq(5, 3), 2)
        assert squarefree_sqrt(flint.fmpq(-4)) == (flint.fmpq(2), -1)

    @pytest.mark.parametrize("mid", ["dfhe", "dmhe"])
    def test_deformed_models(self, mid):
        r = check_self_dual(builtin(mid), trials=16)
        assert r.verdict == "LikelyZero" and r.degree_bound and r.error_bound

    def test_kz_not_self_dual(self):
        m = builtin("kz")
        samples, failures = duality_samples(m, metric_from_symbol(m), 16, 0, 1000)
        assert sum(1 for _, nm in samples if nm.vanishing() is None) >= 15
        assert check_self_dual(m).verdict == "NonZero"

    @pytest.mark.parametrize("mid", ["heavenly-first", "dmhe", "pleb2-2c"])
    def test_orientation_is_consistent(self, mid):
        m = builtin(mid)
        g = metric_from_symbol(m)
        samples, _ = duality_samples(m, g, 12, "orient", 1000)
        assert len({nm.vanishing() for _, nm in samples} - {"both"}) == 1

    @given(st.sampled_from(["heavenly-second", "dmhe", "kz"]), st.integers(0, 10**6))
    @settings(max_examples=8)
    def test_conformal_robustness(self, mid, seed):
        m = builtin(mid)
        g = metric_from_symbol(m)
        factor = (2 + x**2 + y * t) / (3 + z**2)
        pt = point(m, seed, g)
        g2 = g.scaled(factor)
        a = asd_norm_at(g, pt)
        b = asd_norm_at(g2, pt)
        # det scales by factor^4, so the square class and the orientation are unchanged
        assert a.d == b.d
        assert a.vanishing() == b.vanishing()


class TestNullPlanes:
    @pytest.mark.parametrize("mid", ["dmhe", "dghe"])
    def test_lax_planes_are_null(self, mid):
        m = builtin(mid)
        assert check_null_planes(m, metric_from_symbol(m), m.lax_pair("main")).is_zero

    def test_shifted_field(self):
        m = builtin("dmhe")
        lp = m.lax_pair("main")
        X = m.ctx.indep_atoms[0]
        shifted = VectorField.make({**lp.V.as_dict(), X: lp.V.coeff(X) + 1}, lp.V.mode, lp.V.ctx)
        r = check_null_planes(m, metric_from_symbol(m), LaxPair("shifted", shifted, lp.W))
        assert r.verdict == "NonZero"


class TestRicci:
    def test_reduced_metric(self):
        from jetforge.claims import get_claim

        r = get_claim("sd.pleb2.ricci").run(Policy())
        assert r.verdict == "LikelyZero" and r.trials == 8 and r.degree_bound is not None

    def test_kz_not_ricci_flat(self):
        m = builtin("kz")
        assert check_ricci_flat(m, metric_from_symbol(m), trials=4).verdict == "NonZero"
