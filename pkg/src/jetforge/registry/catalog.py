"""Builtin equations with their symmetry data, Lax pairs, coverings and metrics."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from ..expr import ONE, ZERO, Atom, Expr, FuncSymbol
from ..jet import JetContext, formal_partial
from ..onshell import Rule
from .model import (
    LAMBDA,
    Covering,
    Equation,
    EquationModel,
    LaxPair,
    RecursionSystem,
    SymmetryFamily,
    field_total,
)

HALF = Fraction(1, 2)
X, Y, Z, T = (Atom.indep(n) for n in "xyzt")
x, y, z, t = (Expr.atom(a) for a in (X, Y, Z, T))
lam = Expr.atom(LAMBDA)


def jets(dep: str = "u"):
    """``J(1, 4)`` is the jet ``dep_{14}``; letters are accepted as well."""

    def J(*idx) -> Expr:
        return Expr.atom(Atom.jet(dep, tuple("xyzt".index(i) + 1 if isinstance(i, str) else i for i in idx)))

    return J


u = jets("u")


def ja(dep: str, *idx: int) -> Atom:
    return Atom.jet(dep, idx)


def fn(name: str, *args: Atom) -> FuncSymbol:
    return FuncSymbol(name, args)


def fd(f: FuncSymbol, *slots: int) -> Expr:
    return Expr.atom(f.partial(*slots))


def mat(entries: dict[tuple[int, int], Expr]) -> list[list[Expr]]:
    """Symmetric 4x4 matrix from the coefficients of ``dx^i dx^j`` (i<=j).

    A symmetric-product term ``c dx^i dx^j`` with i != j contributes c/2 to
    each off-diagonal slot.
    """
    g = [[ZERO] * 4 for _ in range(4)]
    for (i, j), c in entries.items():
        if i == j:
            g[i - 1][i - 1] = g[i - 1][i - 1] + c
        else:
            g[i - 1][j - 1] = g[i - 1][j - 1] + c * HALF
            g[j - 1][i - 1] = g[j - 1][i - 1] + c * HALF
    return g


def _mk(coeffs: dict, ctx: JetContext):
    return field_total({k: Expr.coerce(v) for k, v in coeffs.items()}, ctx)


# ---------------------------------------------------------------------------
# the six Monge-Ampere types


def build_wave() -> EquationModel:
    ctx = JetContext()
    lhs = u(1, 1) - u(2, 2) - u(3, 3) - u(4, 4)
    shifts = SymmetryFamily(
        "s",
        (X, Y, Z, T),
        lambda d: d(),
        0,
        "solutions",
        constraint=lambda d: d(0, 0) - d(1, 1) - d(2, 2) - d(3, 3),
        constraint_leader=(0, 0),
    )
    return EquationModel(
        "wave",
        "linear wave equation, type O",
        ctx,
        [Equation(lhs, ja("u", 1, 1))],
        invariant=lhs,
        families=[shifts],
        finite_part=_conformal_generators(),
    )


def _conformal_generators() -> list[Expr]:
    """Generating functions of the conformal algebra of the wave operator plus u-scaling."""
    xs = [x, y, z, t]
    ps = [u(i) for i in range(1, 5)]
    eta = [1, -1, -1, -1]
    uu = u()
    out = list(ps)
    for i in range(4):
        for j in range(i + 1, 4):
            # infinitesimal isometry with components K^i = eta_j x^j, K^j = -eta_i x^i
            out.append(xs[j] * eta[j] * ps[i] - xs[i] * eta[i] * ps[j])
    dil = ZERO
    for i in range(4):
        dil = dil + xs[i] * ps[i]
    out.append(dil + uu)
    sq = ZERO
    for i in range(4):
        sq = sq + xs[i] * xs[i] * eta[i]
    for a in range(4):
        ax = xs[a] * eta[a]
        f = ax * uu * 2
        for i in range(4):
            Ki = ax * xs[i] * 2 - (sq if i == a else ZERO)
            f = f + Ki * ps[i]
        out.append(f)
    out.append(uu)
    return out


def _nabla_powers(d, k: int) -> Expr:
    """``(x d_t + y d_z)^k A`` with slot 0 = t, slot 1 = z."""
    from math import comb

    res = ZERO
    for j in range(k + 1):
        slots = (0,) * (k - j) + (1,) * j
        res = res + d(*slots) * comb(k, j) * x ** (k - j) * y ** j
    return res


def build_heavenly_second() -> EquationModel:
    ctx = JetContext()
    lhs = u(2, 4) - u(1, 3) + u(1, 1) * u(2, 2) - u(1, 2) ** 2
    ux, uy, uz, ut = (u(i) for i in range(1, 5))
    plane = (T, Z)
    fams = [
        SymmetryFamily(
            "a0",
            plane,
            lambda d: d(0) * uz - d(1) * ut + (d(0, 0) * x + d(0, 1) * y) * uy - (d(0, 1) * x + d(1, 1) * y) * ux - _nabla_powers(d, 3) * Fraction(1, 6),
            0,
            "",
            sign=-1,
        ),
        SymmetryFamily("a1", plane, lambda d: d(0) * uy - d(1) * ux - _nabla_powers(d, 2) * HALF, 1, ""),
        SymmetryFamily("a2", plane, lambda d: _nabla_powers(d, 1), 2, ""),
        SymmetryFamily("a3", plane, lambda d: d(), 3, "", sign=-1),
    ]
    finite = [
        u() * 2 - x * ux - y * uy - z * uz - t * ut,
        u() * 3 - x * ux - y * uy,
        t * ux + z * uy,
    ]
    return EquationModel(
        "heavenly-second",
        "second heavenly equation, type N",
        ctx,
        [Equation(lhs, ja("u", 1, 3))],
        invariant=lhs,
        families=fams,
        finite_part=finite,
    )


def build_heavenly_first() -> EquationModel:
    ctx = JetContext()
    inv = u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4)
    ux, uy, uz, ut = (u(i) for i in range(1, 5))
    fams = [
        # planes are oriented (y, x) and (z, t) so that brackets carry a plus sign;
        # slot 0 of each plane is y resp. z
        SymmetryFamily("a'0", (Y, X), lambda d: d(1) * uy - d(0) * ux, 0, "'"),
        SymmetryFamily("a'1", (Y, X), lambda d: d(), 1, "'"),
        SymmetryFamily("a''0", (Z, T), lambda d: d(1) * uz - d(0) * ut, 0, "''"),
        SymmetryFamily("a''1", (Z, T), lambda d: d(), 1, "''"),
    ]
    finite = [x * ux - y * uy, t * ut - z * uz, x * ux + y * uy - z * uz - t * ut]
    return EquationModel(
        "heavenly-first",
        "first heavenly equation, type D",
        ctx,
        [Equation(inv - 1, ja("u", 1, 4))],
        invariant=inv,
        families=fams,
        finite_part=finite,
    )


def build_modified_heavenly() -> EquationModel:
    ctx = JetContext()
    lhs = u(2, 4) - u(1, 4) * u(3, 3) + u(1, 3) * u(3, 4)
    ux, uy, uz, ut = (u(i) for i in range(1, 5))
    U4 = ja("u", 4)
    fams = [
        SymmetryFamily(
            "a'0",
            (X, Y),
            lambda d: d(1) * ux - d(0) * uy + (d(1, 1) * z * z - d(0, 1) * z * uz * 2 + d(0, 0) * uz * uz) * HALF,
            0,
            "'",
        ),
        SymmetryFamily("a'1", (X, Y), lambda d: d(1) * z - d(0) * uz, 1, "'"),
        SymmetryFamily("a'2", (X, Y), lambda d: d(), 2, "'"),
        SymmetryFamily("a''0", (T, U4), lambda d: d(), 0, "''"),
    ]
    finite = [u() * 2 - z * uz, u() + y * uy, uy]
    return EquationModel(
        "modified-heavenly",
        "modified heavenly equation, type III",
        ctx,
        [Equation(lhs, ja("u", 2, 4))],
        invariant=lhs / u(3, 4),
        families=fams,
        finite_part=finite,
    )


def build_hussain() -> EquationModel:
    ctx = JetContext()
    lhs = u(1, 4) - u(1, 3) * u(2, 4) + u(1, 2) * u(3, 4)
    ux, uy, uz, ut = (u(i) for i in range(1, 5))
    U1, U4 = ja("u", 1), ja("u", 4)
    fams = [
        SymmetryFamily("a'0", (Y, Z), lambda d: d(1) * uy - d(0) * uz, 0, "'"),
        SymmetryFamily("a'1", (Y, Z), lambda d: d(), 1, "'"),
        SymmetryFamily("a''0", (X, U1), lambda d: d(), 0, "''"),
        SymmetryFamily("a'''0", (T, U4), lambda d: d(), 0, "'''"),
    ]
    return EquationModel(
        "hussain",
        "Hussain equation, type II",
        ctx,
        [Equation(lhs, ja("u", 1, 4))],
        invariant=(u(1, 3) * u(2, 4) - u(1, 2) * u(3, 4)) / u(1, 4),
        families=fams,
        finite_part=[u() - y * uy],
    )


def build_general_heavenly() -> EquationModel:
    ctx = JetContext(params=("alpha", "beta"))
    al, be = Expr.atom(Atom.param("alpha")), Expr.atom(Atom.param("beta"))
    lhs = al * u(1, 2) * u(3, 4) + be * u(1, 3) * u(2, 4) - (al + be) * u(1, 4) * u(2, 3)
    branches = ["'", "''", "'''", "''''"]
    fams = [
        SymmetryFamily(f"a{b}0", (xa, ja("u", k + 1)), lambda d: d(), 0, b)
        for k, (xa, b) in enumerate(zip((X, Y, Z, T), branches))
    ]
    return EquationModel(
        "general-heavenly",
        "general heavenly equation, type I",
        ctx,
        [Equation(lhs, ja("u", 1, 2))],
        invariant=(u(1, 2) * u(3, 4) - u(1, 3) * u(2, 4)) / (u(1, 2) * u(3, 4) - u(1, 4) * u(2, 3)),
        families=fams,
        finite_part=[u()],
    )


BUILDERS: dict[str, Callable[[], EquationModel]] = {
    "wave": build_wave,
    "heavenly-second": build_heavenly_second,
    "heavenly-first": build_heavenly_first,
    "modified-heavenly": build_modified_heavenly,
    "hussain": build_hussain,
    "general-heavenly": build_general_heavenly,
}


# ---------------------------------------------------------------------------
# symmetric deformations and their Lax pairs

U1, U2, U3, U4 = (Atom.jet("u", (i,)) for i in range(1, 5))


def lax(name: str, V: dict, W: dict, ctx: JetContext, note: str = "") -> LaxPair:
    return LaxPair(name, _mk(V, ctx), _mk(W, ctx), note)


def phi_rules(model: EquationModel, dep: str) -> list[Rule]:
    """The linearized equation on ``dep``, oriented like the model."""
    from .model import linearize

    lin = linearize(model, dep)
    principal = Atom.jet(dep, model.equations[0].principal.index)
    return [Rule.solve(lin, principal, "linearized-" + dep)]


def recursion(model: EquationModel, name: str, rules: dict[int, Expr]) -> RecursionSystem:
    ctx = model.ctx.extend(dep=("phi", "psi"))
    rs = [Rule(Atom.jet("psi", (i,)), rhs, "recursion") for i, rhs in rules.items()]
    return RecursionSystem(name, "phi", "psi", rs, ctx)


def psi(*idx: int) -> Expr:
    return Expr.atom(Atom.jet("psi", idx))


def phi(*idx: int) -> Expr:
    return Expr.atom(Atom.jet("phi", idx))


def build_dfhe(q_args: tuple = (Z, T)) -> EquationModel:
    q, b = fn("q", *q_args), fn("b", *q_args)
    ctx = JetContext(funcs=[q, b], params=("lambda",))
    qq = fd(q)
    Q = fd(q, 0) * u(4) - fd(q, 1) * u(3) + fd(b)
    lhs = u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4) - Q
    m = EquationModel("dfhe", "deformed first heavenly equation, type D", ctx, [Equation(lhs, ja("u", 1, 4))])
    lq = lam + qq
    m.lax = [
        lax("main", {X: Q, Z: lq * u(1, 4), T: -lq * u(1, 3)}, {Y: Q, Z: lq * u(2, 4), T: -lq * u(2, 3)}, ctx),
        lax(
            "perturbed",
            {X: Q, Z: (lam - qq) * u(1, 4), T: -lq * u(1, 3)},
            {Y: Q, Z: lq * u(2, 4), T: -lq * u(2, 3)},
            ctx,
            "spectral shift of one coefficient flipped",
        ),
    ]
    m.recursions = [
        recursion(
            m,
            "main",
            {
                1: (u(1, 3) * (qq * psi(4) + phi(4)) - u(1, 4) * (qq * psi(3) + phi(3))) / Q,
                2: (u(2, 3) * (qq * psi(4) + phi(4)) - u(2, 4) * (qq * psi(3) + phi(3))) / Q,
            },
        ),
        recursion(
            m,
            "perturbed",
            {
                1: (u(1, 3) * (qq * psi(4) + phi(4)) - u(1, 4) * (qq * psi(3) - phi(3))) / Q,
                2: (u(2, 3) * (qq * psi(4) + phi(4)) - u(2, 4) * (qq * psi(3) + phi(3))) / Q,
            },
        ),
    ]
    return m


def build_dmhe(q_args: tuple = (T, U4)) -> EquationModel:
    Qf = fn("Q", *q_args)
    ctx = JetContext(funcs=[Qf], params=("lambda",))
    Q = fd(Qf)
    lhs = u(2, 4) - u(1, 4) * u(3, 3) + u(1, 3) * u(3, 4) - Q * u(3, 4)
    m = EquationModel("dmhe", "deformed modified heavenly equation, type III", ctx, [Equation(lhs, ja("u", 2, 4))])
    m.invariant = (u(2, 4) - u(1, 4) * u(3, 3) + u(1, 3) * u(3, 4)) / u(3, 4)
    m.lax = [
        lax("main", {X: -u(3, 4), Z: u(1, 4), T: lam + Q}, {X: -u(3, 3), Y: ONE, Z: lam + u(1, 3)}, ctx),
        lax("perturbed", {X: -u(3, 4), Z: u(1, 4), T: lam - Q}, {X: -u(3, 3), Y: ONE, Z: lam + u(1, 3)}, ctx, "sign of Q flipped"),
    ]
    m.recursions = [
        recursion(m, "main", {3: u(3, 3) * phi(1) - phi(2) - u(1, 3) * phi(3), 4: u(3, 4) * phi(1) - u(1, 4) * phi(3) - Q * phi(4)}),
        recursion(m, "perturbed", {3: u(3, 3) * phi(1) - phi(2) - u(1, 3) * phi(3), 4: u(3, 4) * phi(1) - u(1, 4) * phi(3) - phi(4)}),
    ]
    return m


def build_dhhe(q_args: tuple = (T, U4)) -> EquationModel:
    Qf = fn("Q", *q_args)
    ctx = JetContext(funcs=[Qf], params=("lambda",))
    Q = fd(Qf)
    lhs = u(1, 2) * u(3, 4) - u(1, 3) * u(2, 4) - Q * u(1, 4)
    m = EquationModel("dhhe", "deformed Hussain equation, type II", ctx, [Equation(lhs, ja("u", 1, 4))])
    m.invariant = (u(1, 3) * u(2, 4) - u(1, 2) * u(3, 4)) / u(1, 4)
    m.lax = [
        lax("main", {X: lam * u(2, 4), Y: -Q * u(1, 4), T: -(lam - Q) * u(1, 2)}, {X: lam * u(3, 4), Z: -Q * u(1, 4), T: -(lam - Q) * u(1, 3)}, ctx),
        lax("perturbed", {X: lam * u(2, 4), Y: -Q * u(1, 4), T: -(lam + Q) * u(1, 2)}, {X: lam * u(3, 4), Z: -Q * u(1, 4), T: -(lam - Q) * u(1, 3)}, ctx, "sign inside one t-coefficient flipped"),
    ]
    den = Q * u(1, 4)
    m.recursions = [
        recursion(m, "main", {2: (Q * u(1, 2) * psi(4) + u(2, 4) * phi(1) - u(1, 2) * phi(4)) / den, 3: (Q * u(1, 3) * psi(4) + u(3, 4) * phi(1) - u(1, 3) * phi(4)) / den}),
        recursion(m, "perturbed", {2: (Q * u(1, 2) * psi(4) + u(2, 4) * phi(1) + u(1, 2) * phi(4)) / den, 3: (Q * u(1, 3) * psi(4) + u(3, 4) * phi(1) - u(1, 3) * phi(4)) / den}),
    ]
    return m


def _dghe_recursion(Q: Expr, drop: bool = False) -> dict[int, Expr]:
    r = u(1, 2) / u(2, 4)
    first = (Q if not drop else ONE) * u(1, 4) / u(2, 4) * phi(2)
    return {
        1: first - phi(1) - (Q - 1) * r * phi(4) + r * psi(4),
        3: (Q - 1) * u(3, 4) / u(2, 4) * phi(2) - (Q - 1) * u(2, 3) / u(2, 4) * phi(4) + u(2, 3) / u(2, 4) * psi(4),
    }


def build_dghe(q_args: tuple = (T, U4)) -> EquationModel:
    Qf = fn("Q", *q_args)
    ctx = JetContext(funcs=[Qf], params=("lambda",))
    Q = fd(Qf)
    lhs = u(1, 2) * u(3, 4) - u(1, 3) * u(2, 4) - Q * (u(1, 2) * u(3, 4) - u(1, 4) * u(2, 3))
    m = EquationModel("dghe", "deformed general heavenly equation, type I", ctx, [Equation(lhs, ja("u", 1, 2))])
    m.invariant = (u(1, 2) * u(3, 4) - u(1, 3) * u(2, 4)) / (u(1, 2) * u(3, 4) - u(1, 4) * u(2, 3))
    m.lax = [
        lax("main", {X: (lam + 1) * u(2, 4), Y: -Q * u(1, 4), T: -(lam + 1 - Q) * u(1, 2)}, {Z: lam * u(2, 4), Y: -(Q - 1) * u(3, 4), T: -(lam + 1 - Q) * u(2, 3)}, ctx),
        lax("perturbed", {X: (lam + 1) * u(2, 4), Y: -Q * u(1, 4), T: -(lam + 1 - Q) * u(1, 2)}, {Z: lam * u(2, 4), Y: -(Q + 1) * u(3, 4), T: -(lam + 1 - Q) * u(2, 3)}, ctx, "Q-1 replaced by Q+1"),
    ]
    # the spectral covering: r_x and r_z in terms of r_y and r_t
    cctx = ctx.extend(dep=("r",))
    r = jets("r")
    m.coverings = [
        Covering(
            "main",
            "r",
            [
                Rule(Atom.jet("r", (1,)), Q / (lam + 1) * u(1, 4) / u(2, 4) * r(2) + (1 - Q / (lam + 1)) * u(1, 2) / u(2, 4) * r(4), "covering"),
                Rule(Atom.jet("r", (3,)), (Q - 1) / lam * u(3, 4) / u(2, 4) * r(2) + (1 - (Q - 1) / lam) * u(2, 3) / u(2, 4) * r(4), "covering"),
            ],
            cctx,
        ),
        Covering(
            "perturbed",
            "r",
            [
                Rule(Atom.jet("r", (1,)), Q / (lam + 1) * u(1, 4) / u(2, 4) * r(2) + (1 - Q / lam) * u(1, 2) / u(2, 4) * r(4), "covering"),
                Rule(Atom.jet("r", (3,)), (Q - 1) / lam * u(3, 4) / u(2, 4) * r(2) + (1 - (Q - 1) / lam) * u(2, 3) / u(2, 4) * r(4), "covering"),
            ],
            cctx,
        ),
    ]
    m.recursions = [recursion(m, "main", _dghe_recursion(Q)), recursion(m, "perturbed", _dghe_recursion(Q, drop=True))]
    return m


def build_dfhe_extra() -> EquationModel:
    a, q = fn("a", T), fn("q", Y)
    ctx = JetContext(funcs=[a, q], params=("c", "lambda"))
    c = Expr.atom(Atom.param("c"))
    Q = fd(a) * (c * u(2) + fd(q))
    lhs = u(1, 4) * u(2, 3) - u(1, 3) * u(2, 4) - Q
    m = EquationModel("dfhe-extra", "first heavenly deformation with spectral-parameter derivatives, type D", ctx, [Equation(lhs, ja("u", 1, 4))])
    DzQ, DtQ = ctx.D(Q, 3), ctx.D(Q, 4)
    lv = (u(1, 4) * DzQ - u(1, 3) * DtQ) / Q * lam
    lw = (u(2, 4) * DzQ - u(2, 3) * DtQ) / Q * lam
    m.lax = [
        lax("main", {X: -lam, Z: u(1, 4), T: -u(1, 3), LAMBDA: lv}, {Y: -lam, Z: u(2, 4), T: -u(2, 3), LAMBDA: lw}, ctx),
        lax("perturbed", {X: -lam, Z: u(1, 4), T: -u(1, 3), LAMBDA: -lv}, {Y: -lam, Z: u(2, 4), T: -u(2, 3), LAMBDA: lw}, ctx, "sign of one lambda-derivative term flipped"),
    ]
    return m


def _prop_lax(ctx: JetContext, Q: Expr) -> list[LaxPair]:
    # lambda-derivative coefficients are the total derivatives D_t Q and D_z Q
    Qu = [formal_partial(Q, a) for a in (U1, U2, U3)]
    DtQ = sum((u(i + 1, 4) * q for i, q in enumerate(Qu)), ZERO)
    DzQ = formal_partial(Q, Z) + sum((u(i + 1, 3) * q for i, q in enumerate(Qu)), ZERO)
    V = {X: -u(3, 4), Z: u(1, 4), T: lam, LAMBDA: DtQ * lam}
    W = {X: -u(3, 3), Y: ONE, Z: lam + u(1, 3) - Q, LAMBDA: DzQ * lam}
    Wp = dict(W)
    Wp[LAMBDA] = -DzQ * lam
    return [lax("main", V, W, ctx), lax("perturbed", V, Wp, ctx, "lambda-derivative term of W negated")]


def _prop3_model(mid: str, title: str, funcs: list, Q: Expr, constraints: list[Equation] = (), params: tuple = ()) -> EquationModel:
    ctx = JetContext(funcs=funcs, params=params + ("lambda",))
    lhs = u(2, 4) - u(1, 4) * u(3, 3) + u(1, 3) * u(3, 4) - Q * u(3, 4)
    m = EquationModel(mid, title, ctx, [Equation(lhs, ja("u", 2, 4))], constraints=list(constraints))
    m.lax = _prop_lax(ctx, Q)
    m.notes.append("Q = " + Q.pretty())
    return m


def build_dmhe_general() -> EquationModel:
    F, G, H, L = (fn(n, X, Y) for n in "FGHL")
    f = lambda s, *k: fd(s, *k)
    Delta = f(F) * u(3) + f(G) + z
    P = (f(F, 0) - f(F) * f(F, 1)) * u(3) ** 2 + (f(G, 0) - f(G) * f(F, 1) - z * f(F, 1)) * u(3) * 2 - z * f(G, 1) * 2 + f(H)
    Q = (f(F) * u(2) + u(1)) / Delta - P / (Delta * 2) - Delta * f(L)
    # L_x + (F L)_y = F_yy / 2, oriented on L_x
    constraint = Equation(f(L, 0) + f(F, 1) * f(L) + f(F) * f(L, 1) - f(F, 1, 1) * HALF, L.partial(0))
    return _prop3_model("dmhe-general", "type III deformation, general branch with constrained L", [F, G, H, L], Q, [constraint])


def build_dmhe_sing1() -> EquationModel:
    k = fn("k", X)
    return _prop3_model("dmhe-sing1", "type III deformation, first singular branch", [k], u(2) / u(3) - fd(k) * u(3))


def build_dmhe_sing2() -> EquationModel:
    f = fn("f", X, Y)
    return _prop3_model("dmhe-sing2", "type III deformation, second singular branch", [f], z * fd(f, 1) - fd(f, 0) * u(3))


def build_dmhe_sing3() -> EquationModel:
    f = fn("f", Y)
    return _prop3_model("dmhe-sing3", "type III deformation, third singular branch", [f], z * fd(f))


def build_dhhe_branch(sign: int = 1) -> EquationModel:
    f, h = fn("f", Y, Z), fn("h", Y, Z)
    ctx = JetContext(funcs=[f, h], params=("lambda",))
    Q = fd(f, 0) * u(3) - fd(f, 1) * u(2) + fd(h)
    lhs = u(1, 2) * u(3, 4) - u(1, 3) * u(2, 4) - Q * u(1, 4)
    m = EquationModel("dhhe-branch", "type II deformation, second branch", ctx, [Equation(lhs, ja("u", 1, 4))])
    l1 = lam - 1
    V = {X: lam / l1 * u(3, 4), Z: -u(1, 4) / l1, T: -u(1, 3), LAMBDA: fd(f, 1) * u(1, 4) * lam}
    W = {X: lam / l1 * u(2, 4), Y: -u(1, 4) / l1, T: -u(1, 2), LAMBDA: fd(f, 0) * u(1, 4) * lam}
    Wp = dict(W)
    Wp[LAMBDA] = fd(f, 1) * u(1, 4) * lam
    m.lax = [lax("main", V, W, ctx), lax("perturbed", V, Wp, ctx, "f_y replaced by f_z in one term")]
    return m


def build_kz() -> EquationModel:
    ctx = JetContext()
    lhs = u(1, 4) - u() * u(1, 1) - u(1) ** 2 - u(2, 2) + u(3, 3)
    m = EquationModel("kz", "Khokhlov-Zabolotskaya equation in four dimensions", ctx, [Equation(lhs, ja("u", 1, 4))])
    m.notes.append("no Lax pair; expected to fail the self-duality test")
    return m


# ---------------------------------------------------------------------------
# multi-component systems

v, w = jets("v"), jets("w")


def _pleb2_op(f) -> Expr:
    """``f_ty + f_xz + v_y f_xx - (v_x + w_y) f_xy + w_x f_yy``."""
    return f(2, 4) + f(1, 3) + v(2) * f(1, 1) - (v(1) + w(2)) * f(1, 2) + w(1) * f(2, 2)


def _pleb2_metric() -> list[list[Expr]]:
    return mat({(2, 4): ONE, (1, 3): ONE, (4, 4): -w(1), (3, 4): v(1) + w(2), (3, 3): -v(2)})


def _pleb1_metric() -> list[list[Expr]]:
    return mat({(1, 4): w(1), (2, 4): w(2), (1, 3): -v(1), (2, 3): -v(2)})


def _pleb2_lax(ctx: JetContext) -> list[LaxPair]:
    T_ = {T: ONE, X: lam - v(1), Y: w(1)}
    Z_ = {Z: ONE, X: v(2), Y: -(lam + w(2))}
    Tp = dict(T_)
    Tp[Y] = -w(1)
    return [lax("main", T_, Z_, ctx), lax("perturbed", Tp, Z_, ctx, "sign of w_x flipped")]


def _covering_1(ctx: JetContext, sign: int = 1) -> Covering:
    q = jets("q")
    cctx = ctx.extend(dep=("q",))
    return Covering(
        "spectral" if sign == 1 else "perturbed",
        "q",
        [
            Rule(Atom.jet("q", (4,)), (v(1) - lam) * q(1) - w(1) * q(2) * sign, "covering"),
            Rule(Atom.jet("q", (3,)), -v(2) * q(1) + (w(2) + lam) * q(2), "covering"),
        ],
        cctx,
    )


def build_pleb2() -> EquationModel:
    """Second heavenly equation in the (t, y, x, z) normalization of its Lax pair."""
    ctx = JetContext(params=("lambda",))
    lhs = u(2, 4) + u(1, 3) + u(1, 1) * u(2, 2) - u(1, 2) ** 2
    m = EquationModel("pleb2", "second heavenly equation with its zero-curvature pair", ctx, [Equation(lhs, ja("u", 1, 3))])
    m.lax = [lax("main", {T: ONE, X: lam - u(1, 2), Y: u(1, 1)}, {Z: ONE, X: u(2, 2), Y: -(lam + u(1, 2))}, ctx)]
    # the two-component covering read with v = u_y, w = u_x
    m.coverings = [_reduced_covering(ctx)]
    return m


def _reduced_covering(ctx: JetContext) -> Covering:
    q = jets("q")
    cctx = ctx.extend(dep=("q",))
    ux_, uy_ = lambda *i: u(1, *i), lambda *i: u(2, *i)
    return Covering(
        "spectral",
        "q",
        [
            Rule(Atom.jet("q", (4,)), (u(1, 2) - lam) * q(1) - u(1, 1) * q(2), "covering"),
            Rule(Atom.jet("q", (3,)), -u(2, 2) * q(1) + (u(1, 2) + lam) * q(2), "covering"),
        ],
        cctx,
    )


def build_pleb2_2c() -> EquationModel:
    ctx = JetContext(dep=("v", "w"), params=("lambda",))
    ev = _pleb2_op(v)
    ew = _pleb2_op(w)
    m = EquationModel(
        "pleb2-2c",
        "two-component second heavenly system",
        ctx,
        [Equation(ev, ja("v", 1, 3)), Equation(ew, ja("w", 1, 3))],
        metric=_pleb2_metric(),
    )
    m.lax = _pleb2_lax(ctx)
    m.coverings = [_covering_1(ctx), _covering_1(ctx, -1)]
    m.notes.append("reduces to the second heavenly equation under v = u_y, w = u_x")
    return m


def build_pleb2_3c() -> EquationModel:
    ctx = JetContext(dep=("u", "v", "w"), params=("lambda",))
    eqs = [
        Equation(_pleb2_op(u), ja("u", 1, 3)),
        Equation(_pleb2_op(v) + u(2), ja("v", 1, 3)),
        Equation(_pleb2_op(w) + u(1), ja("w", 1, 3)),
    ]
    m = EquationModel("pleb2-3c", "three-component second heavenly system", ctx, eqs, metric=_pleb2_metric())
    q = jets("q")
    cctx = ctx.extend(dep=("q",))
    m.coverings = [
        Covering(
            "nonlinear",
            "q",
            [
                Rule(Atom.jet("q", (4,)), (v(1) - q()) * q(1) - w(1) * q(2) + u(1), "covering"),
                Rule(Atom.jet("q", (3,)), -v(2) * q(1) + (w(2) + q()) * q(2) - u(2), "covering"),
            ],
            cctx,
        ),
        Covering(
            "perturbed",
            "q",
            [
                Rule(Atom.jet("q", (4,)), (v(1) - q()) * q(1) - w(1) * q(2) - u(1), "covering"),
                Rule(Atom.jet("q", (3,)), -v(2) * q(1) + (w(2) + q()) * q(2) - u(2), "covering"),
            ],
            cctx,
        ),
    ]
    return m


def _pleb1_op(f) -> Expr:
    """``v_x f_ty - v_y f_tx + w_x f_yz - w_y f_xz``."""
    return v(1) * f(2, 4) - v(2) * f(1, 4) + w(1) * f(2, 3) - w(2) * f(1, 3)


def build_pleb1_2c() -> EquationModel:
    ctx = JetContext(dep=("v", "w"), params=("lambda",))
    m = EquationModel(
        "pleb1-2c",
        "two-component first heavenly system",
        ctx,
        [Equation(_pleb1_op(v), ja("v", 2, 4)), Equation(_pleb1_op(w), ja("w", 2, 4))],
        metric=_pleb1_metric(),
    )
    Xf = {X: lam, T: v(1), Z: w(1)}
    Yf = {Y: lam, T: v(2), Z: w(2)}
    Yp = {Y: lam, T: v(2), Z: -w(2)}
    m.lax = [lax("main", Xf, Yf, ctx), lax("perturbed", Xf, Yp, ctx, "sign of w_y flipped")]
    q = jets("q")
    cctx = ctx.extend(dep=("q",))

    def cov(sign: int) -> list[Rule]:
        return [
            Rule(Atom.jet("q", (1,)), -lam * (v(1) * q(4) + w(1) * q(3)), "covering"),
            Rule(Atom.jet("q", (2,)), -lam * (v(2) * q(4) + w(2) * q(3) * sign), "covering"),
        ]

    m.coverings = [Covering("spectral", "q", cov(1), cctx), Covering("perturbed", "q", cov(-1), cctx)]
    m.notes.append("metric uses v_x, v_y in the dz terms")
    return m


def build_pleb1_3c() -> EquationModel:
    ctx = JetContext(dep=("u", "v", "w"), params=("lambda",))
    eqs = [
        Equation(_pleb1_op(u), ja("u", 2, 4)),
        Equation(_pleb1_op(v) - v(2) * u(1) + v(1) * u(2), ja("v", 2, 4)),
        Equation(_pleb1_op(w) - w(2) * u(1) + w(1) * u(2), ja("w", 2, 4)),
    ]
    m = EquationModel("pleb1-3c", "three-component first heavenly system", ctx, eqs, metric=_pleb1_metric())
    q = jets("q")
    cctx = ctx.extend(dep=("q",))

    def cov(sign: int) -> list[Rule]:
        return [
            Rule(Atom.jet("q", (1,)), -q() * (v(1) * q(4) + w(1) * q(3) + q() * u(1) * sign), "covering"),
            Rule(Atom.jet("q", (2,)), -q() * (v(2) * q(4) + w(2) * q(3) + q() * u(2)), "covering"),
        ]

    m.coverings = [Covering("nonlinear", "q", cov(1), cctx), Covering("perturbed", "q", cov(-1), cctx)]
    return m


def genlp_pair(ctx: JetContext, sign: int = 1) -> LaxPair:
    a, b, c, d, q, r = (Expr.atom(Atom.jet(n, ())) for n in "abcdqr")
    Xf = {X: ONE, T: (lam + q) * a, Z: (lam + q) * b}
    Yf = {Y: ONE, T: (lam + r) * c, Z: (lam + r) * d * sign}
    return lax("main" if sign == 1 else "perturbed", Xf, Yf, ctx, "" if sign == 1 else "sign of d flipped")


def sd6_equations(ctx: JetContext) -> list[Expr]:
    """The six commutativity equations in the form printed alongside the pair."""
    a, b, c, d, q, r = (jets(n) for n in "abcdqr")
    D = ctx.D
    A, B, C, Dd, Qq, R = a(), b(), c(), d(), q(), r()
    return [
        A * c(4) + B * c(3) - C * a(4) - Dd * a(3),
        A * d(4) + B * d(3) - C * b(4) - Dd * b(3),
        A * Qq * D(Dd * R, 4) - C * R * D(B * Qq, 4) + B * Qq * D(Dd * R, 3) - Dd * R * D(B * Qq, 3) + D(Dd * R, 1) - D(B * Qq, 2),
        A * Qq * D(C * R, 4) - C * R * D(A * Qq, 4) + B * Qq * D(C * R, 3) - Dd * R * D(A * Qq, 3) + D(C * R, 1) - D(A * Qq, 2),
        A * C * D(R - Qq, 4) + (Qq + R) * (A * c(4) + B * c(3) - C * a(4) - Dd * a(3)) - A * Dd * q(3) + B * C * r(3) - a(2) + c(1),
        A * Dd * r(4) - B * C * q(4) + (Qq + R) * (A * d(4) - C * b(4) + B * d(3) - Dd * b(3)) + B * Dd * D(R - Qq, 3) - b(2) + d(1),
    ]


def build_sd6() -> EquationModel:
    ctx = JetContext(dep=tuple("abcdqr"), params=("lambda",))
    eqs = sd6_equations(ctx)
    leaders = [ja("a", 2), ja("b", 2), ja("c", 4), ja("d", 4), ja("q", 4), ja("r", 1)]
    a, b, c, d, q, r = (Expr.atom(Atom.jet(n, ())) for n in "abcdqr")
    metric = mat({(1, 4): b, (2, 4): d, (1, 2): -(q - r) * (a * d - b * c), (1, 3): -a, (2, 3): -c})
    m = EquationModel(
        "sd6",
        "six-component commutativity system of the general first-heavenly-type pair",
        ctx,
        [Equation(e, p) for e, p in zip(eqs, leaders)],
        metric=metric,
        solve_jointly=True,
    )
    m.lax = [genlp_pair(ctx), genlp_pair(ctx, -1)]
    m.notes.append("principal derivatives a_y, b_y, c_t, d_t, q_t, r_x solved simultaneously")
    return m


BUILDERS.update(
    {
        "dfhe": build_dfhe,
        "dmhe": build_dmhe,
        "dhhe": build_dhhe,
        "dghe": build_dghe,
        "dfhe-extra": build_dfhe_extra,
        "dmhe-general": build_dmhe_general,
        "dmhe-sing1": build_dmhe_sing1,
        "dmhe-sing2": build_dmhe_sing2,
        "dmhe-sing3": build_dmhe_sing3,
        "dhhe-branch": build_dhhe_branch,
        "kz": build_kz,
        "pleb2": build_pleb2,
        "pleb2-2c": build_pleb2_2c,
        "pleb2-3c": build_pleb2_3c,
        "pleb1-2c": build_pleb1_2c,
        "pleb1-3c": build_pleb1_3c,
        "sd6": build_sd6,
    }
)
