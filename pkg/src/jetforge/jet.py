"""Jet-space calculus: total derivatives, contact fields, prolongation, brackets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .expr import ONE, ZERO, Atom, Expr, ExprError, FuncSymbol

__all__ = [
    "OrderOverflow",
    "JetContext",
    "VectorField",
    "total_derivative",
    "formal_partial",
    "contact_field",
    "prolong",
    "jacobi_bracket",
    "poisson_bracket",
    "lie_bracket",
    "characteristic",
    "substitute_dependent",
]

HARD_ORDER_CAP = 6
FUNC_ORDER_CAP = 10


class OrderOverflow(ExprError):
    pass


class JetContext:
    """Declared variables of a jet space.

    ``dep`` maps each dependent variable to its nominal order; total
    derivatives may extend past it up to the hard cap of 6.
    """

    def __init__(
        self,
        indep: Sequence[str] = ("x", "y", "z", "t"),
        dep: Mapping[str, int] | Sequence[str] = ("u",),
        funcs: Iterable[FuncSymbol] = (),
        params: Sequence[str] = (),
        max_order: int = HARD_ORDER_CAP,
    ):
        self.indep = tuple(indep)
        if isinstance(dep, Mapping):
            self.dep = dict(dep)
        else:
            self.dep = {d: 4 for d in dep}
        self.funcs = {f.name: f for f in funcs}
        self.params = tuple(params)
        self.max_order = min(max_order, HARD_ORDER_CAP)
        self.indep_atoms = tuple(Atom.indep(n) for n in self.indep)
        self._td_cache: dict = {}

    # declarations -----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.indep)

    def extend(self, dep: Mapping[str, int] | Sequence[str] = (), funcs: Iterable[FuncSymbol] = (), params: Sequence[str] = ()) -> "JetContext":
        d = dict(self.dep)
        if isinstance(dep, Mapping):
            d.update(dep)
        else:
            d.update({k: 4 for k in dep})
        f = dict(self.funcs)
        f.update({s.name: s for s in funcs})
        p = self.params + tuple(n for n in params if n not in self.params)
        return JetContext(self.indep, d, f.values(), p, self.max_order)

    def index_of(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 1 <= name <= self.n:
                raise ValueError(f"no independent variable {name}")
            return name
        return self.indep.index(name) + 1

    def x(self, name: str | int) -> Expr:
        return Expr.atom(self.indep_atoms[self.index_of(name) - 1])

    def u(self, *index: int | str, dep: str = "u") -> Expr:
        return Expr.atom(self.jet(dep, index))

    def jet(self, dep: str, index: Iterable[int | str]) -> Atom:
        if dep not in self.dep:
            raise KeyError(f"undeclared dependent variable {dep!r}")
        return Atom.jet(dep, tuple(self.index_of(i) for i in index))

    def param(self, name: str) -> Expr:
        return Expr.atom(Atom.param(name))

    def fn(self, name: str, *slots: int) -> Expr:
        return Expr.atom(Atom.fderiv(self.funcs[name], slots))

    def declares(self, a: Atom) -> bool:
        if a.kind == "indep":
            return a in self.indep_atoms
        if a.kind == "param":
            return a.name in self.params
        if a.kind == "jet":
            return a.name in self.dep and all(1 <= i <= self.n for i in a.index)
        if a.kind == "func":
            return a.func.name in self.funcs and self.funcs[a.func.name] is a.func
        return False

    def undeclared(self, e: Expr) -> list[Atom]:
        return [a for a in e.vars if not self.declares(a)]

    # total derivatives ------------------------------------------------------

    def _image(self, a: Atom, i: int) -> Expr:
        key = (a, i)
        img = self._td_cache.get(key)
        if img is not None:
            return img
        if a.kind == "indep":
            img = ONE if self.indep_atoms[i - 1] is a else ZERO
        elif a.kind == "jet":
            if a.order + 1 > self.max_order:
                raise OrderOverflow(f"D_{i} {a} exceeds jet order {self.max_order}")
            img = Expr.atom(Atom.jet(a.name, a.index + (i,)))
        elif a.kind == "func":
            img = ZERO
            for j, arg in enumerate(a.func.args):
                d = self._image(arg, i)
                if not d.is_zero():
                    if a.order + 1 > FUNC_ORDER_CAP:
                        raise OrderOverflow(f"derivative order of {a} too high")
                    img = img + Expr.atom(Atom.fderiv(a.func, a.index + (j,))) * d
        else:
            img = ZERO
        self._td_cache[key] = img
        return img

    def D(self, e: Expr, i: int | str) -> Expr:
        i = self.index_of(i)
        images = {}
        for a in e.vars:
            img = self._image(a, i)
            if not img.is_zero():
                images[a] = img
        return e.derive(images) if images else ZERO

    def D_multi(self, e: Expr, index: Iterable[int | str]) -> Expr:
        for i in index:
            e = self.D(e, i)
        return e

    def partial(self, e: Expr, c: Atom) -> Expr:
        return formal_partial(e, c)


def total_derivative(e: Expr, i: int | str, ctx: JetContext) -> Expr:
    return ctx.D(e, i)


def _partial_image(a: Atom, c: Atom, cache: dict) -> Expr:
    img = cache.get(a)
    if img is not None:
        return img
    if a is c:
        img = ONE
    elif a.kind == "func":
        img = ZERO
        for j, arg in enumerate(a.func.args):
            d = _partial_image(arg, c, cache)
            if not d.is_zero():
                img = img + Expr.atom(Atom.fderiv(a.func, a.index + (j,))) * d
    else:
        img = ZERO
    cache[a] = img
    return img


def formal_partial(e: Expr, c: Atom) -> Expr:
    """Partial derivative in the coordinate ``c`` with the chain rule through
    function-symbol arguments; all other atoms are independent."""
    cache: dict = {}
    images = {}
    for a in e.vars:
        img = _partial_image(a, c, cache)
        if not img.is_zero():
            images[a] = img
    return e.derive(images) if images else ZERO


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorField:
    """A derivation ``sum coeff[a] * d/da`` over an ordered set of directions.

    In ``total`` mode base directions act by total derivatives and every
    other direction (e.g. the spectral parameter) by a formal partial.  In
    ``formal`` mode every direction is a coordinate and atoms not listed are
    treated as constants, except function derivatives which follow the
    chain rule through their arguments.
    """

    coeffs: tuple[tuple[Atom, Expr], ...]
    mode: str
    ctx: JetContext = field(compare=False)
    order: int | None = None

    def __post_init__(self):
        if self.mode not in ("total", "formal"):
            raise ValueError(f"unknown derivative mode {self.mode!r}")
        dirs = [a for a, _ in self.coeffs]
        if len(set(dirs)) != len(dirs):
            raise ValueError("directions must be distinct")

    @staticmethod
    def make(coeffs: Mapping[Atom, Expr] | Iterable[tuple[Atom, Expr]], mode: str, ctx: JetContext, order: int | None = None) -> "VectorField":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        return VectorField(tuple((a, Expr.coerce(c)) for a, c in items), mode, ctx, order)

    @property
    def directions(self) -> tuple[Atom, ...]:
        return tuple(a for a, _ in self.coeffs)

    def coeff(self, a: Atom) -> Expr:
        for d, c in self.coeffs:
            if d is a:
                return c
        return ZERO

    def as_dict(self) -> dict[Atom, Expr]:
        return dict(self.coeffs)

    def __call__(self, e: Expr) -> Expr:
        return self.apply(e)

    def apply(self, e: Expr) -> Expr:
        e = Expr.coerce(e)
        if self.mode == "total":
            res = ZERO
            for a, c in self.coeffs:
                if c.is_zero():
                    continue
                if a.kind == "indep":
                    d = self.ctx.D(e, self.ctx.indep_atoms.index(a) + 1)
                else:
                    d = formal_partial(e, a)
                if not d.is_zero():
                    res = res + c * d
            return res
        table = dict(self.coeffs)
        covered = {a.name for a in table if a.kind == "jet"}
        cache: dict = {}

        def image(a: Atom) -> Expr:
            r = cache.get(a)
            if r is not None:
                return r
            if a in table:
                r = table[a]
            elif a.kind == "func":
                r = ZERO
                for j, arg in enumerate(a.func.args):
                    d = image(arg)
                    if not d.is_zero():
                        r = r + Expr.atom(Atom.fderiv(a.func, a.index + (j,))) * d
            else:
                if a.kind == "jet" and a.name in covered and self.order is not None and a.order > self.order:
                    raise OrderOverflow(f"field prolonged to order {self.order} applied to {a}")
                r = ZERO
            cache[a] = r
            return r

        images = {}
        for a in e.vars:
            img = image(a)
            if not img.is_zero():
                images[a] = img
        return e.derive(images) if images else ZERO

    def scale(self, s: Expr) -> "VectorField":
        return VectorField(tuple((a, c * s) for a, c in self.coeffs), self.mode, self.ctx, self.order)

    def __add__(self, other: "VectorField") -> "VectorField":
        return _combine(self, other, 1)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return _combine(self, other, -1)

    def map_coeffs(self, fn) -> "VectorField":
        return VectorField(tuple((a, fn(c)) for a, c in self.coeffs), self.mode, self.ctx, self.order)

    def is_zero(self) -> bool:
        return all(c.is_zero() for _, c in self.coeffs)

    def pretty(self) -> str:
        parts = []
        for a, c in self.coeffs:
            if not c.is_zero():
                parts.append(f"({c.pretty()})*d_{a.pretty()}")
        return " + ".join(parts) or "0"

    def __str__(self) -> str:
        return self.pretty()


def _ordered_union(*groups: Iterable[Atom]) -> list[Atom]:
    seen: dict = {}
    for g in groups:
        for a in g:
            seen.setdefault(a, None)
    return list(seen)


def _combine(v: VectorField, w: VectorField, sign: int) -> VectorField:
    if v.mode != w.mode:
        raise ValueError("cannot combine fields with different derivative modes")
    dirs = _ordered_union(v.directions, w.directions)
    vd, wd = v.as_dict(), w.as_dict()
    coeffs = tuple((a, vd.get(a, ZERO) + wd.get(a, ZERO) * sign) for a in dirs)
    order = None if v.order is None or w.order is None else min(v.order, w.order)
    return VectorField(coeffs, v.mode, v.ctx, order)


def lie_bracket(v: VectorField, w: VectorField, ctx: JetContext | None = None) -> VectorField:
    """``[V, W]^k = V(W^k) - W(V^k)``."""
    if v.mode != w.mode:
        raise ValueError("fields must share a derivative mode")
    dirs = _ordered_union(v.directions, w.directions)
    vd, wd = v.as_dict(), w.as_dict()
    coeffs = []
    for a in dirs:
        c = v.apply(wd.get(a, ZERO)) - w.apply(vd.get(a, ZERO))
        coeffs.append((a, c))
    return VectorField(tuple(coeffs), v.mode, ctx or v.ctx, v.order)


# ---------------------------------------------------------------------------
# contact geometry


def _check_generating(f: Expr, ctx: JetContext, dep: str) -> None:
    for a in f.vars:
        if a.kind == "jet" and a.order > 1:
            raise ValueError(f"generating function depends on {a}, of order > 1")
        if a.kind == "func":
            for arg in a.func.args:
                if arg.kind == "jet" and arg.order > 1:
                    raise ValueError(f"generating function depends on {a.func!r} with second-order argument")


def contact_field(f: Expr, ctx: JetContext, dep: str = "u") -> VectorField:
    """Contact field with characteristic ``f`` on first-order jets of ``dep``.

    ``X(x^i) = -f_{u_i}``, ``X(u) = f - sum u_i f_{u_i}``,
    ``X(u_i) = f_{x^i} + u_i f_u``.
    """
    f = Expr.coerce(f)
    _check_generating(f, ctx, dep)
    u = Atom.jet(dep, ())
    ui = [Atom.jet(dep, (i,)) for i in range(1, ctx.n + 1)]
    f_u = formal_partial(f, u)
    f_p = [formal_partial(f, a) for a in ui]
    coeffs: list[tuple[Atom, Expr]] = []
    for i, xa in enumerate(ctx.indep_atoms):
        coeffs.append((xa, -f_p[i]))
    cu = f
    for i in range(ctx.n):
        if not f_p[i].is_zero():
            cu = cu - Expr.atom(ui[i]) * f_p[i]
    coeffs.append((u, cu))
    for i, xa in enumerate(ctx.indep_atoms):
        coeffs.append((ui[i], formal_partial(f, xa) + Expr.atom(ui[i]) * f_u))
    return VectorField(tuple(coeffs), "formal", ctx, 1)


def characteristic(X: VectorField, dep: str = "u") -> Expr:
    """Generating function ``X(u) - sum u_i X(x^i)`` of a contact field."""
    ctx = X.ctx
    res = X.coeff(Atom.jet(dep, ()))
    for i, xa in enumerate(ctx.indep_atoms):
        c = X.coeff(xa)
        if not c.is_zero():
            res = res - Expr.atom(Atom.jet(dep, (i + 1,))) * c
    return res


def _multi_indices(n: int, k: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    level: list[tuple[int, ...]] = [()]
    for _ in range(k):
        nxt = []
        for s in level:
            lo = s[-1] if s else 1
            for i in range(lo, n + 1):
                nxt.append(s + (i,))
        out.extend(nxt)
        level = nxt
    return out


def multi_indices(n: int, k: int, exact: bool = False) -> list[tuple[int, ...]]:
    """Sorted multi-indices over ``1..n`` of length ``<= k`` (or ``== k``)."""
    idx = _multi_indices(n, k)
    return [s for s in idx if len(s) == k] if exact else idx


def prolong(X: VectorField, k: int, ctx: JetContext | None = None, deps: Sequence[str] | None = None) -> VectorField:
    """Prolong a field given on ``x^i``, ``v`` (and optionally ``v_i``) to order ``k``.

    The coefficient on ``v_{s i}`` is ``D_i(coeff on v_s) - sum_j v_{s j} D_i(coeff on x^j)``.
    """
    ctx = ctx or X.ctx
    if X.mode != "formal":
        raise ValueError("prolongation needs a formal field on jet coordinates")
    if deps is None:
        deps = [d for d in ctx.dep if any(a.kind == "jet" and a.name == d and a.order == 0 for a in X.directions)]
    table = X.as_dict()
    xi = [table.get(xa, ZERO) for xa in ctx.indep_atoms]
    coeffs: dict[Atom, Expr] = {xa: xi[i] for i, xa in enumerate(ctx.indep_atoms)}
    dxi: dict[int, list[Expr]] = {}

    def Dxi(i: int) -> list[Expr]:
        if i not in dxi:
            dxi[i] = [ctx.D(c, i) for c in xi]
        return dxi[i]

    for d in deps:
        for s in _multi_indices(ctx.n, k):
            a = Atom.jet(d, s)
            if a in table and len(s) <= (X.order or 0):
                coeffs[a] = table[a]
                continue
            if not s:
                coeffs[a] = ZERO
                continue
            i = s[-1]
            prev = coeffs[Atom.jet(d, s[:-1])]
            c = ctx.D(prev, i)
            for j, dx in enumerate(Dxi(i)):
                if not dx.is_zero():
                    c = c - Expr.atom(Atom.jet(d, s[:-1] + (j + 1,))) * dx
            coeffs[a] = c
    for a, c in X.coeffs:
        if a not in coeffs:
            coeffs[a] = c
    return VectorField(tuple(coeffs.items()), "formal", ctx, k)


def jacobi_bracket(f: Expr, g: Expr, ctx: JetContext, dep: str = "u") -> Expr:
    """``{f, g} = X_f(g) - g * f_u``, the characteristic of ``[X_f, X_g]``."""
    X = contact_field(f, ctx, dep)
    g = Expr.coerce(g)
    return X.apply(g) - g * formal_partial(f, Atom.jet(dep, ()))


def poisson_bracket(A: Expr | FuncSymbol, B: Expr | FuncSymbol, plane: tuple[Atom, Atom]) -> Expr:
    """``{A, B} = A_p B_q - A_q B_p`` on the plane ``(p, q)``."""
    p, q = plane
    for F in (A, B):
        if isinstance(F, FuncSymbol) and tuple(F.args) != (p, q):
            raise ValueError(f"{F!r} does not live on the plane ({p}, {q})")
    A, B = Expr.coerce(A), Expr.coerce(B)
    return formal_partial(A, p) * formal_partial(B, q) - formal_partial(A, q) * formal_partial(B, p)


def substitute_dependent(e: Expr, images: Mapping[str, Expr], ctx: JetContext) -> Expr:
    """Replace each jet ``v_s`` of a dependent variable in ``images`` by ``D_s(images[v])``."""
    rules = {}
    for a in e.vars:
        if a.kind == "jet" and a.name in images:
            rules[a] = ctx.D_multi(images[a.name], a.index)
        elif a.kind == "func" and any(x.kind == "jet" and x.name in images for x in a.func.args):
            raise ValueError("substitution through function-symbol arguments is not supported")
    return e.subs(rules)
