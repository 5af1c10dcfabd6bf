"""Text format for equation models (``.jf`` files): parser and printer.

A document is a sequence of newline-terminated statements::

    model dfhe
    title "deformed first heavenly equation"
    indep x y z t
    dep u 4
    param lambda
    fn Q(t, u[4])
    fn L(x, y) constraint L[1] + F*L[2] = 0 ; principal L[1]
    eq: u[1,4]*u[2,3] - u[1,3]*u[2,4] = Q*u[3,4] ; principal u[1,4]
    field V: (u[1,4]) d x + (lambda*u[1,3]) d z
    lax main: V, W
    invariant: u[1,4]/u[2,3]

Jets are written ``u[i,j,...]`` with 1-based indices into the ``indep``
list; ``u`` alone is the dependent variable itself.  A function symbol
``Q`` stands for its value and ``Q[k,...]`` for partials by its k-th
argument (1-based).  Newlines inside parentheses or brackets, or after a
trailing backslash, do not end a statement.  ``#`` starts a comment.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from ..expr import ONE, ZERO, Atom, Expr, FuncSymbol, PoleAtPoint, eval_exact
from ..jet import JetContext
from .model import Equation, EquationModel, LaxPair, field_total

__all__ = [
    "ParseError",
    "DSLSyntaxError",
    "SemanticError",
    "parse",
    "parse_file",
    "to_source",
    "dsl_view",
    "KEYWORDS",
]

KEYWORDS = ("model", "title", "indep", "dep", "param", "fn", "eq", "solve", "field", "lax", "invariant")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class DSLSyntaxError(ParseError):
    """Malformed text; carries the position and the expected tokens."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        if expected:
            message = f"{message}; expected {' or '.join(expected)}"
        super().__init__(message, line, col)
        self.expected = expected


class SemanticError(ParseError):
    """Well-formed text that does not describe a valid model."""


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # NAME NUMBER STRING OP NEWLINE EOF
    text: str
    line: int
    col: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "NEWLINE":
            return "end of line"
        return repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<cont>\\[ \t]*\n)
  | (?P<newline>\n)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9]+)
  | (?P<string>"[^"\n]*")
  | (?P<op>[-+*/^()\[\],:;=])
    """,
    re.VERBOSE,
)


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    depth = 0
    line, start = 1, 0
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        col = pos - start + 1
        if m is None:
            raise DSLSyntaxError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "name":
            out.append(Token("NAME", text, line, col))
        elif kind == "number":
            out.append(Token("NUMBER", text, line, col))
        elif kind == "string":
            out.append(Token("STRING", text[1:-1], line, col))
        elif kind == "op":
            depth += text in "([" and 1 or 0
            depth -= text in ")]" and 1 or 0
            out.append(Token("OP", text, line, col))
        elif kind == "newline" and depth <= 0:
            out.append(Token("NEWLINE", "\n", line, col))
        if kind in ("newline", "cont"):
            line += 1
            start = m.end()
        pos = m.end()
    out.append(Token("EOF", "", line, pos - start + 1))
    return out


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.model_id = "user"
        self.title = ""
        self.indep: list[str] | None = None
        self.dep: dict[str, int] = {}
        self.params: list[str] = []
        self.funcs: dict[str, FuncSymbol] = {}
        self.fn_constraints: list[tuple[Expr, Atom, Token]] = []
        self.equations: list[tuple[Expr, Atom, Token]] = []
        self.fields: dict[str, tuple[list[tuple[Atom, Expr]], Token]] = {}
        self.laxes: list[tuple[str, str, str, Token]] = []
        self.invariant: Expr | None = None
        self.jointly = False
        self.names: dict[str, str] = {}

    # token helpers ----------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.at(kind, text):
            t = self.tok
            label = what or (repr(text) if text else kind.lower())
            raise DSLSyntaxError(f"unexpected {t.describe()}", t.line, t.col, (label,))
        return self.next()

    def end_stmt(self) -> None:
        if self.at("EOF"):
            return
        self.expect("NEWLINE", what="end of line")

    # declarations -----------------------------------------------------------

    def declare(self, name: str, kind: str, tok: Token) -> None:
        if name in KEYWORDS:
            raise SemanticError(f"{name!r} is a keyword", tok.line, tok.col)
        if name in self.names:
            raise SemanticError(f"{name!r} already declared as {self.names[name]}", tok.line, tok.col)
        self.names[name] = kind

    def ctx(self) -> JetContext:
        return JetContext(self.indep or ("x", "y", "z", "t"), self.dep or {"u": 4}, self.funcs.values(), tuple(self.params))

    def ensure_indep(self) -> None:
        if self.indep is None:
            self.indep = ["x", "y", "z", "t"]
            for n in self.indep:
                self.names[n] = "indep"

    def ensure_dep(self) -> None:
        """Documents that never say ``dep`` get a single ``u`` of order 4."""
        self.ensure_indep()
        if not self.dep and "u" not in self.names:
            self.names["u"] = "dep"
            self.dep["u"] = 4

    # document ---------------------------------------------------------------

    def document(self) -> EquationModel:
        while not self.at("EOF"):
            if self.at("NEWLINE"):
                self.next()
                continue
            self.statement()
        return self.build()

    def statement(self) -> None:
        t = self.expect("NAME", what="statement keyword")
        kw = t.text
        if kw == "model":
            first = self.expect("NAME", what="model id")
            parts, end = [first.text], first.col + len(first.text)
            # ids such as ``pleb1-2c`` lex as several adjacent tokens
            while self.tok.kind in ("NAME", "NUMBER", "OP") and self.tok.line == first.line and self.tok.col == end:
                if self.tok.kind == "OP" and self.tok.text != "-":
                    break
                t2 = self.next()
                parts.append(t2.text)
                end = t2.col + len(t2.text)
            self.model_id = "".join(parts)
            if self.model_id.endswith("-"):
                raise DSLSyntaxError("model id ends with '-'", first.line, end, ("model id",))
        elif kw == "title":
            self.title = self.expect("STRING", what="quoted title").text
        elif kw == "indep":
            if self.indep is not None:
                raise SemanticError("independent variables declared twice", t.line, t.col)
            self.indep = []
            while self.at("NAME"):
                n = self.next()
                self.declare(n.text, "indep", n)
                self.indep.append(n.text)
            if not self.indep:
                self.expect("NAME", what="variable name")
        elif kw == "dep":
            self.ensure_indep()
            n = self.expect("NAME", what="variable name")
            self.declare(n.text, "dep", n)
            order = 4
            if self.at("NUMBER"):
                order = int(self.next().text)
            self.dep[n.text] = order
        elif kw == "param":
            self.ensure_indep()
            if not self.at("NAME"):
                self.expect("NAME", what="parameter name")
            while self.at("NAME"):
                n = self.next()
                self.declare(n.text, "param", n)
                self.params.append(n.text)
        elif kw == "fn":
            self.ensure_dep()
            self.fn_decl()
        elif kw == "eq":
            self.ensure_dep()
            self.expect("OP", ":")
            lhs, principal, tok = self.oriented_equation()
            self.equations.append((lhs, principal, tok))
        elif kw == "solve":
            self.expect("NAME", "jointly")
            self.jointly = True
        elif kw == "field":
            self.field_decl()
        elif kw == "lax":
            name = self.expect("NAME", what="pair name")
            self.expect("OP", ":")
            v = self.expect("NAME", what="field name")
            self.expect("OP", ",")
            w = self.expect("NAME", what="field name")
            self.laxes.append((name.text, v.text, w.text, name))
        elif kw == "invariant":
            self.ensure_dep()
            self.expect("OP", ":")
            self.invariant = self.expr()
        else:
            raise DSLSyntaxError(f"unknown statement {kw!r}", t.line, t.col, tuple(repr(k) for k in KEYWORDS))
        self.end_stmt()

    def fn_decl(self) -> None:
        self.ensure_indep()
        n = self.expect("NAME", what="function name")
        self.expect("OP", "(")
        args = [self.atom_ref(allow_func=False)]
        while self.at("OP", ","):
            self.next()
            args.append(self.atom_ref(allow_func=False))
        self.expect("OP", ")")
        self.declare(n.text, "fn", n)
        self.funcs[n.text] = FuncSymbol(n.text, [a for a, _ in args])
        if self.at("NAME", "constraint"):
            self.next()
            lhs, principal, tok = self.oriented_equation()
            if principal.kind != "func" or principal.func.name != n.text:
                raise SemanticError(f"constraint of {n.text} must be oriented on a partial of {n.text}", tok.line, tok.col)
            self.fn_constraints.append((lhs, principal, tok))

    def oriented_equation(self) -> tuple[Expr, Atom, Token]:
        lhs = self.expr()
        self.expect("OP", "=")
        rhs = self.expr()
        self.expect("OP", ";")
        self.expect("NAME", "principal")
        tok = self.tok
        principal, _ = self.atom_ref(allow_func=True)
        return lhs - rhs, principal, tok

    def field_decl(self) -> None:
        self.ensure_dep()
        name = self.expect("NAME", what="field name")
        self.expect("OP", ":")
        terms: list[tuple[Atom, Expr]] = []
        while True:
            sign = ONE
            if self.at("OP", "-"):
                self.next()
                sign = -ONE
            elif self.at("OP", "+") and terms:
                self.next()
            if self.at("OP", "("):
                self.next()
                coeff = self.expr()
                self.expect("OP", ")")
            else:
                coeff = self.primary()
            self.expect("NAME", "d")
            dt = self.expect("NAME", what="direction")
            kind = self.names.get(dt.text)
            if kind not in ("indep", "param"):
                raise SemanticError(f"direction {dt.text!r} is not an independent variable or parameter", dt.line, dt.col)
            a = Atom.indep(dt.text) if kind == "indep" else Atom.param(dt.text)
            if any(b is a for b, _ in terms):
                raise SemanticError(f"direction {dt.text!r} repeated", dt.line, dt.col)
            terms.append((a, sign * coeff))
            if not self.at("OP", "+") and not self.at("OP", "-"):
                break
        if name.text in self.fields:
            raise SemanticError(f"field {name.text!r} declared twice", name.line, name.col)
        self.fields[name.text] = (terms, name)

    # expressions ------------------------------------------------------------

    def expr(self) -> Expr:
        e = self.term()
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.next().text
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("OP", "*") or self.at("OP", "/"):
            op = self.next()
            r = self.unary()
            if op.text == "*":
                e = e * r
            else:
                if r.is_zero():
                    raise SemanticError("division by zero", op.line, op.col)
                e = e / r
        return e

    def unary(self) -> Expr:
        if self.at("OP", "-"):
            self.next()
            return -self.unary()
        if self.at("OP", "+"):
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at("OP", "^"):
            op = self.next()
            neg = False
            if self.at("OP", "-"):
                self.next()
                neg = True
            k = int(self.expect("NUMBER", what="integer exponent").text)
            if neg:
                if base.is_zero():
                    raise SemanticError("division by zero", op.line, op.col)
                return base ** (-k)
            return base**k
        return base

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "NUMBER":
            self.next()
            return Expr.const(Fraction(int(t.text)))
        if self.at("OP", "("):
            self.next()
            e = self.expr()
            self.expect("OP", ")")
            return e
        if t.kind == "NAME":
            a, _ = self.atom_ref(allow_func=True)
            return Expr.atom(a)
        raise DSLSyntaxError(f"unexpected {t.describe()}", t.line, t.col, ("number", "name", "'('"))

    def indices(self) -> list[int]:
        self.expect("OP", "[")
        out = [int(self.expect("NUMBER", what="index").text)]
        while self.at("OP", ","):
            self.next()
            out.append(int(self.expect("NUMBER", what="index").text))
        self.expect("OP", "]")
        return out

    def atom_ref(self, allow_func: bool) -> tuple[Atom, Token]:
        t = self.expect("NAME", what="name")
        kind = self.names.get(t.text)
        idx = self.indices() if self.at("OP", "[") else []
        if kind is None:
            raise SemanticError(f"undeclared name {t.text!r}", t.line, t.col)
        if kind in ("indep", "param"):
            if idx:
                raise SemanticError(f"{t.text!r} takes no indices", t.line, t.col)
            return (Atom.indep(t.text) if kind == "indep" else Atom.param(t.text)), t
        if kind == "dep":
            n = len(self.indep or ())
            if any(i < 1 or i > n for i in idx):
                raise SemanticError(f"jet index out of range 1..{n}", t.line, t.col)
            if len(idx) > self.dep[t.text]:
                raise SemanticError(f"order overflow: {t.text} declared to order {self.dep[t.text]}", t.line, t.col)
            return Atom.jet(t.text, idx), t
        if not allow_func:
            raise SemanticError(f"function {t.text!r} cannot be an argument", t.line, t.col)
        f = self.funcs[t.text]
        if any(i < 1 or i > f.arity for i in idx):
            raise SemanticError(f"argument slot out of range 1..{f.arity}", t.line, t.col)
        return f.partial(*(i - 1 for i in idx)), t

    # assembly ---------------------------------------------------------------

    def build(self) -> EquationModel:
        if not self.equations:
            t = self.tok
            raise SemanticError("document declares no equation", t.line, t.col)
        ctx = self.ctx()
        eqs = []
        seen: set = set()
        for lhs, principal, tok in self.equations:
            if principal.kind != "jet":
                raise SemanticError("principal must be a jet of a dependent variable", tok.line, tok.col)
            if principal in seen:
                raise SemanticError(f"principal {principal} used twice", tok.line, tok.col)
            seen.add(principal)
            if not self.jointly:
                _check_principal(lhs, principal, tok)
            eqs.append(Equation(lhs, principal))
        if self.jointly:
            _check_joint(self.equations)
        cons = []
        for lhs, principal, tok in self.fn_constraints:
            _check_principal(lhs, principal, tok)
            cons.append(Equation(lhs, principal))
        m = EquationModel(
            self.model_id, self.title, ctx, eqs, constraints=cons, invariant=self.invariant, solve_jointly=self.jointly
        )
        for name, v, w, tok in self.laxes:
            for f in (v, w):
                if f not in self.fields:
                    raise SemanticError(f"undeclared field {f!r}", tok.line, tok.col)
            m.lax.append(
                LaxPair(name, field_total(dict(self.fields[v][0]), ctx), field_total(dict(self.fields[w][0]), ctx), f"{v}, {w}")
            )
        return m


def _check_principal(lhs: Expr, principal: Atom, tok: Token) -> None:
    """The principal occurs with a coefficient that is nonzero somewhere."""
    if principal not in lhs.vars:
        raise SemanticError(f"mismatched principal: {principal} does not occur in the equation", tok.line, tok.col)
    c = lhs.diff(principal)
    if principal in c.vars:
        raise SemanticError(f"equation is not linear in its principal {principal}", tok.line, tok.col)
    for k in range(8):
        pt = _random_point(c.vars, f"principal:{principal}:{k}")
        try:
            if eval_exact(c, pt) != 0:
                return
        except (PoleAtPoint, ZeroDivisionError):
            continue
    raise SemanticError(f"non-invertible principal: coefficient of {principal} vanishes", tok.line, tok.col)


def _random_point(atoms, seed: str) -> dict:
    rng = random.Random(seed)
    return {a: Fraction(rng.randint(-97, 97), rng.randint(1, 97)) for a in sorted(atoms)}


def _check_joint(equations: list[tuple[Expr, Atom, Token]]) -> None:
    """Principals solved together: their Jacobian must be invertible somewhere."""
    import flint

    principals = [p for _, p, _ in equations]
    for lhs, p, tok in equations:
        if not any(p in e.vars for e, _, _ in equations):
            raise SemanticError(f"mismatched principal: {p} does not occur in the system", tok.line, tok.col)
    jac = [[lhs.diff(p) for p in principals] for lhs, _, _ in equations]
    for k in range(8):
        atoms = set().union(*(c.vars for row in jac for c in row))
        pt = _random_point(atoms, f"joint:{k}")
        try:
            m = flint.fmpq_mat([[flint.fmpq(eval_exact(c, pt)) for c in row] for row in jac])
        except (PoleAtPoint, ZeroDivisionError):
            continue
        if m.rank() == len(principals):
            return
    _, _, tok = equations[0]
    raise SemanticError("non-invertible principal: the joint system is singular in its principals", tok.line, tok.col)


def parse(src: str) -> EquationModel:
    """Parse a model document; raises DSLSyntaxError or SemanticError."""
    return _Parser(src).document()


def parse_file(path) -> EquationModel:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# printer


def _fmt(e: Expr) -> str:
    return e.to_str(str)


def _funcs_in_order(m: EquationModel) -> list[FuncSymbol]:
    """Function symbols ordered so that arguments are declared first."""
    return sorted(m.ctx.funcs.values(), key=lambda f: f.name)


def _fields(m: EquationModel) -> Iterator[tuple[str, str, LaxPair]]:
    for k, lp in enumerate(m.lax):
        tag = re.sub(r"[^A-Za-z0-9_]", "_", lp.name)
        yield f"V_{tag}", f"W_{tag}", lp


def _field_line(name: str, vf) -> str:
    terms = [f"({_fmt(c)}) d {a.name}" for a, c in vf.coeffs if not c.is_zero()]
    return f"field {name}: " + " + ".join(terms)


def to_source(m: EquationModel) -> str:
    """Canonical document for the DSL-expressible part of ``m``."""
    lines = [f"model {m.id}"]
    if m.title:
        lines.append(f'title "{m.title}"')
    lines.append("indep " + " ".join(m.ctx.indep))
    for d, k in m.ctx.dep.items():
        lines.append(f"dep {d} {k}")
    if m.ctx.params:
        lines.append("param " + " ".join(m.ctx.params))
    cons = {c.principal.func.name: c for c in m.constraints if c.principal.kind == "func"}
    for f in _funcs_in_order(m):
        line = f"fn {f.name}(" + ", ".join(str(a) for a in f.args) + ")"
        c = cons.get(f.name)
        if c is not None:
            line += f" constraint {_fmt(c.lhs)} = 0 ; principal {c.principal}"
        lines.append(line)
    if m.solve_jointly:
        lines.append("solve jointly")
    for eq in m.equations:
        lines.append(f"eq: {_fmt(eq.lhs)} = 0 ; principal {eq.principal}")
    for v, w, lp in _fields(m):
        lines.append(_field_line(v, lp.V))
        lines.append(_field_line(w, lp.W))
        lines.append(f"lax {lp.name}: {v}, {w}")
    if m.invariant is not None:
        lines.append(f"invariant: {_fmt(m.invariant)}")
    return "\n".join(lines) + "\n"


def _nonzero(vf) -> dict:
    return {a: c for a, c in vf.coeffs if not c.is_zero()}


def dsl_view(m: EquationModel) -> dict:
    """The parts of a model that the DSL represents, for equality tests."""
    return {
        "id": m.id,
        "title": m.title,
        "indep": m.ctx.indep,
        "dep": dict(m.ctx.dep),
        "params": tuple(m.ctx.params),
        "funcs": sorted((f.name, tuple(a.key for a in f.args)) for f in m.ctx.funcs.values()),
        "equations": [(eq.lhs, eq.principal) for eq in m.equations],
        "constraints": [(c.lhs, c.principal) for c in m.constraints],
        "lax": [(lp.name, _nonzero(lp.V), _nonzero(lp.W)) for lp in m.lax],
        "solve_jointly": m.solve_jointly,
        "invariant": m.invariant,
    }
