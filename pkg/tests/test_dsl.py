import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetforge.expr import Atom, Expr, FuncSymbol, const
from jetforge.registry import builtin, list_models
from jetforge.registry.dsl import DSLSyntaxError, KEYWORDS, ParseError, SemanticError, dsl_view, parse, parse_file, to_source, tokenize
from jetforge.verify import check_lax

from conftest import small_rationals

HEADER = "model m\nindep x y z t\ndep u 4\n"


def u(*idx):
    return Expr.atom(Atom.jet("u", idx))


def error_at(src: str, kind=ParseError) -> ParseError:
    with pytest.raises(kind) as info:
        parse(src)
    return info.value


class TestParse:
    def test_first_heavenly_one_liner(self):
        m = parse("eq: u[1,4]*u[2,3] - u[1,3]*u[2,4] = 1 ; principal u[1,4]")
        assert m.lhs == u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4) - 1
        assert m.equations[0].principal is Atom.jet("u", (1, 4))
        assert m.ctx.indep == ("x", "y", "z", "t")

    def test_function_symbol_chain_rule(self):
        m = parse(HEADER + "fn Q(t, u[4])\neq: u[2,4] + u[1,3]*u[3,4] - u[1,4]*u[3,3] = Q*u[3,4] ; principal u[2,4]\n")
        Q = m.ctx.funcs["Q"]
        assert Q is FuncSymbol("Q", (Atom.indep("t"), Atom.jet("u", (4,))))
        assert m.ctx.D(Q(), "t") == Expr.atom(Q.partial(0)) + Expr.atom(Q.partial(1)) * u(4, 4)

    def test_comments_and_continuations(self):
        src = HEADER + "# comment\neq: u[1,4]*u[2,3] \\\n  - u[1,3]*u[2,4] = 1 ; principal u[1,4]  # trailing\n"
        assert parse(src).lhs == u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4) - 1

    def test_newlines_inside_brackets(self):
        src = HEADER + "eq: (u[1,4]*u[2,3]\n - u[1,3]*u[2,4]) = 1 ; principal u[1,4]\n"
        assert parse(src).lhs == u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4) - 1

    def test_powers_and_division(self):
        m = parse(HEADER + "eq: u[1,3] - u[1,2]^2/u[2,2] + u[1,1] = 0 ; principal u[1,3]\n")
        assert m.lhs == u(1, 3) - u(1, 2) ** 2 / u(2, 2) + u(1, 1)

    def test_lax_pair_and_params(self):
        src = to_source(builtin("dmhe"))
        m = parse(src)
        assert [lp.name for lp in m.lax] == ["main", "perturbed"]
        assert check_lax(m, "main").is_zero
        assert not check_lax(m, "perturbed").is_zero

    def test_model_ids_with_digits(self):
        assert parse("model pleb1-2c\neq: u[1,1] = 0 ; principal u[1,1]").id == "pleb1-2c"

    def test_keywords_documented(self):
        assert set(KEYWORDS) >= {"indep", "dep", "fn", "param", "eq", "field", "invariant"}

    def test_tokens_carry_positions(self):
        toks = tokenize("eq: u[1,4]")
        assert [(t.kind, t.col) for t in toks[:3]] == [("NAME", 1), ("OP", 3), ("NAME", 5)]

    def test_parse_file(self, tmp_path):
        p = tmp_path / "d.jf"
        p.write_text("eq: u[1,4]*u[2,3] - u[1,3]*u[2,4] = 1 ; principal u[1,4]\n", encoding="utf-8")
        assert parse_file(p).lhs == builtin("heavenly-first").lhs


class TestErrors:
    def test_trailing_equals(self):
        err = error_at("eq: u[1,4] = ", DSLSyntaxError)
        assert (err.line, err.col) == (1, 14)
        assert err.expected

    def test_bad_character(self):
        err = error_at(HEADER + "eq: u[1,4] $ 1 = 0 ; principal u[1,4]", DSLSyntaxError)
        assert err.line == 4 and err.col == 12

    def test_mismatched_principal(self):
        err = error_at(HEADER + "eq: u[1,1] - u[2,2] = 0 ; principal u[1,2]", SemanticError)
        assert "mismatched principal" in err.message

    def test_nonlinear_principal(self):
        err = error_at(HEADER + "eq: u[1,1]^2 - u[2,2] = 0 ; principal u[1,1]", SemanticError)
        assert "not linear" in err.message

    def test_undeclared_name(self):
        err = error_at(HEADER + "eq: u[1,1] - v[2,2] = 0 ; principal u[1,1]", SemanticError)
        assert "v" in err.message

    def test_order_overflow(self):
        err = error_at("model m\ndep u 2\neq: u[1,1,1] = 0 ; principal u[1,1,1]", SemanticError)
        assert err.line == 3

    def test_index_out_of_range(self):
        error_at(HEADER + "eq: u[1,5] = 0 ; principal u[1,5]", SemanticError)

    def test_duplicate_declaration(self):
        error_at(HEADER + "param c\nparam c\neq: u[1,1] = 0 ; principal u[1,1]", SemanticError)

    def test_principal_used_twice(self):
        src = "model m\ndep u 4\ndep v 4\neq: u[1,1] - v[2] = 0 ; principal u[1,1]\neq: u[1,1] + v[1] = 0 ; principal u[1,1]"
        error_at(src, SemanticError)

    def test_message_has_position(self):
        err = error_at("eq: u[1,4] = ", DSLSyntaxError)
        assert str(err).startswith("1:14:")


@pytest.mark.parametrize("mid", list_models())
def test_builtin_round_trip(mid):
    m = builtin(mid)
    src = to_source(m)
    again = parse(src)
    assert dsl_view(again) == dsl_view(m)
    assert to_source(again) == src


@pytest.mark.parametrize("mid", list_models())
def test_shipped_files_match_catalog(mid):
    from importlib import resources

    text = resources.files("jetforge").joinpath("models", f"{mid}.jf").read_text(encoding="utf-8")
    assert dsl_view(parse(text)) == dsl_view(builtin(mid))


FREE = [Atom.indep("x"), Atom.indep("t"), Atom.jet("u", (1,)), Atom.jet("u", (2, 3)), Atom.jet("u", (1, 3)), Atom.jet("u", (2, 4)), Atom.param("c")]


@st.composite
def free_polys(draw, max_terms: int = 4) -> Expr:
    out = const(0)
    for _ in range(draw(st.integers(0, max_terms))):
        term = const(draw(small_rationals))
        for _ in range(draw(st.integers(0, 3))):
            term = term * Expr.atom(draw(st.sampled_from(FREE)))
        out = out + term
    return out


@given(free_polys(), free_polys(), free_polys(2))
@settings(max_examples=60)
def test_random_equation_round_trip(a, b, d):
    # a*u14 + b/(d+1) with a, b, d free of the principal
    if a.is_zero():
        a = const(1)
    den = d + 1
    if den.is_zero():
        den = const(2)
    lhs = a * u(1, 4) + b / den
    src = HEADER + "param c\n" + f"eq: {lhs} = 0 ; principal u[1,4]\n"
    m = parse(src)
    assert m.lhs == lhs
    again = parse(to_source(m))
    assert dsl_view(again) == dsl_view(m)
