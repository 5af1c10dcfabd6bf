import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from jetforge.expr import Atom, Expr, const

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

X, Y, Z, T = (Atom.indep(n) for n in "xyzt")
BASE_ATOMS = [X, Y, Atom.jet("u", (1,)), Atom.jet("u", (2,)), Atom.jet("u", (1, 2)), Atom.jet("u", (3, 4)), Atom.param("lambda")]

small_rationals = st.fractions(min_value=-20, max_value=20, max_denominator=9)


@st.composite
def polynomials(draw, atoms=BASE_ATOMS, max_terms: int = 4, max_deg: int = 3) -> Expr:
    out = const(0)
    for _ in range(draw(st.integers(0, max_terms))):
        term = const(draw(small_rationals))
        for _ in range(draw(st.integers(0, max_deg))):
            term = term * Expr.atom(draw(st.sampled_from(atoms)))
        out = out + term
    return out


@st.composite
def rational_exprs(draw, atoms=BASE_ATOMS) -> Expr:
    num = draw(polynomials(atoms))
    den = draw(polynomials(atoms, max_terms=3, max_deg=2))
    if den.is_zero():
        den = const(1)
    return num / den


@st.composite
def points(draw, atoms=BASE_ATOMS) -> dict:
    return {a: draw(small_rationals) for a in atoms}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
