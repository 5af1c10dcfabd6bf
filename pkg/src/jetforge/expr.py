"""Exact rational functions over jet-space atoms.

An :class:`Expr` is stored as ``numerator / prod(factor**k)``: the numerator
is a flint ``fmpq_mpoly`` over exactly the atoms that occur, and the
denominator is kept factored into interned monic irreducible polynomials.
Keeping the denominator factored makes cancellation a matter of trial
division, which is far cheaper than multivariate gcd on large numerators.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping

import flint

__all__ = [
    "Atom",
    "FuncSymbol",
    "Expr",
    "QuadraticNumber",
    "ExprError",
    "DivisionByZeroExpr",
    "PoleAtPoint",
    "UnassignedAtom",
    "normalize",
    "diff_atom",
    "substitute",
    "eval_exact",
    "const",
    "to_fmpq",
    "ZERO",
    "ONE",
]


class ExprError(Exception):
    pass


class DivisionByZeroExpr(ExprError, ZeroDivisionError):
    pass


class PoleAtPoint(ExprError):
    pass


class UnassignedAtom(ExprError, KeyError):
    def __str__(self) -> str:
        return f"atom {self.args[0]} has no value at this point"


_lock = threading.RLock()
_serial = 0


def _next_cname() -> str:
    global _serial
    _serial += 1
    return f"a{_serial}"


LETTERS = ("x", "y", "z", "t")


class FuncSymbol:
    """An arbitrary function ``name(args)``; the arguments are atoms."""

    __slots__ = ("name", "args", "key", "_hash")
    _table: dict = {}

    def __new__(cls, name: str, args: Iterable["Atom"]):
        args = tuple(args)
        key = (name, tuple(a.key for a in args))
        with _lock:
            obj = cls._table.get(key)
            if obj is None:
                obj = object.__new__(cls)
                obj.name = name
                obj.args = args
                obj.key = key
                obj._hash = hash(key)
                cls._table[key] = obj
        return obj

    def __reduce__(self):
        return (FuncSymbol, (self.name, self.args))

    def __hash__(self) -> int:
        return self._hash

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self) -> str:
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    def partial(self, *slots: int) -> "Atom":
        return Atom.fderiv(self, slots)

    def __call__(self) -> "Expr":
        return Expr.atom(Atom.fderiv(self, ()))


class Atom:
    """Interned symbol. Kinds: ``indep``, ``param``, ``jet``, ``func``, ``aux``."""

    __slots__ = ("kind", "name", "index", "func", "key", "cname", "_hash")
    _table: dict = {}
    _by_cname: dict = {}

    @classmethod
    def _get(cls, kind, name, index, func, key):
        with _lock:
            obj = cls._table.get(key)
            if obj is None:
                obj = object.__new__(cls)
                obj.kind = kind
                obj.name = name
                obj.index = index
                obj.func = func
                obj.key = key
                obj.cname = _next_cname()
                obj._hash = hash(key)
                cls._table[key] = obj
                cls._by_cname[obj.cname] = obj
        return obj

    @classmethod
    def indep(cls, name: str) -> "Atom":
        return cls._get("indep", name, (), None, (0, name))

    @classmethod
    def param(cls, name: str) -> "Atom":
        return cls._get("param", name, (), None, (1, name))

    @classmethod
    def jet(cls, dep: str, index: Iterable[int] = ()) -> "Atom":
        index = tuple(sorted(index))
        if any(i < 1 for i in index):
            raise ValueError(f"jet indices are 1-based, got {index}")
        return cls._get("jet", dep, index, None, (2, dep, len(index), index))

    @classmethod
    def fderiv(cls, func: FuncSymbol, slots: Iterable[int] = ()) -> "Atom":
        slots = tuple(sorted(slots))
        if any(s < 0 or s >= func.arity for s in slots):
            raise ValueError(f"slot out of range for {func!r}: {slots}")
        key = (3, func.name, func.key[1], len(slots), slots)
        return cls._get("func", func.name, slots, func, key)

    @classmethod
    def aux(cls, n: int) -> "Atom":
        return cls._get("aux", f"_aux{n}", (), None, (9, n))

    def __reduce__(self):
        if self.kind == "indep":
            return (Atom.indep, (self.name,))
        if self.kind == "param":
            return (Atom.param, (self.name,))
        if self.kind == "jet":
            return (Atom.jet, (self.name, self.index))
        if self.kind == "func":
            return (Atom.fderiv, (self.func, self.index))
        return (Atom.aux, (self.key[1],))

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Atom") -> bool:
        return self.key < other.key

    @property
    def order(self) -> int:
        return len(self.index)

    def __repr__(self) -> str:
        return str(self)

    def __str__(self) -> str:
        if self.kind in ("jet", "func") and self.index:
            shift = 1 if self.kind == "func" else 0
            return f"{self.name}[{','.join(str(i + shift) for i in self.index)}]"
        return self.name

    def pretty(self, letters: tuple[str, ...] = LETTERS) -> str:
        """Letter form, e.g. ``u_xt`` or ``Q_{t,u_t}``."""
        if self.kind == "jet" and self.index:
            try:
                return self.name + "_" + "".join(letters[i - 1] for i in self.index)
            except IndexError:
                return str(self)
        if self.kind == "func" and self.index:
            parts = [self.func.args[s].pretty(letters) for s in self.index]
            if all(len(p) == 1 for p in parts):
                return f"{self.name}_{''.join(parts)}"
            return f"{self.name}_{{{','.join(parts)}}}"
        return str(self)


# ---------------------------------------------------------------------------
# flint plumbing

_ctx_cache: dict = {}


def _ctx(vars: tuple) -> flint.fmpq_mpoly_ctx:
    c = _ctx_cache.get(vars)
    if c is None:
        c = flint.fmpq_mpoly_ctx.get(tuple(a.cname for a in vars), "degrevlex")
        _ctx_cache[vars] = c
    return c


def _merge(*groups: tuple) -> tuple:
    first = groups[0]
    if all(g is first for g in groups) or all(g == first for g in groups):
        return first
    s = set()
    for g in groups:
        s.update(g)
    return tuple(sorted(s, key=_key))


def _key(a: Atom):
    return a.key


def _lift(poly, src: tuple, dst: tuple):
    if src is dst or src == dst:
        return poly
    return poly.project_to_context(_ctx(dst))


def to_fmpq(v) -> flint.fmpq:
    if isinstance(v, flint.fmpq):
        return v
    if isinstance(v, int):
        return flint.fmpq(v)
    if isinstance(v, Fraction):
        return flint.fmpq(v.numerator, v.denominator)
    if isinstance(v, flint.fmpz):
        return flint.fmpq(v)
    raise TypeError(f"cannot convert {v!r} to a rational")


def _used(poly, vars: tuple) -> tuple:
    if not vars:
        return vars
    unused = poly.unused_gens()
    if not unused:
        return vars
    unused = set(unused)
    return tuple(a for a in vars if a.cname not in unused)


class Factor:
    """Interned monic irreducible polynomial over its own minimal atom set."""

    __slots__ = ("vars", "poly", "key", "_proj", "degree")
    _table: dict = {}

    def __new__(cls, vars: tuple, poly):
        key = _poly_key(poly, vars)
        with _lock:
            obj = cls._table.get(key)
            if obj is None:
                obj = object.__new__(cls)
                obj.vars = vars
                obj.poly = poly
                obj.key = key
                obj._proj = {vars: poly}
                obj.degree = int(poly.total_degree())
                cls._table[key] = obj
        return obj

    def in_ctx(self, vars: tuple):
        p = self._proj.get(vars)
        if p is None:
            p = self.poly.project_to_context(_ctx(vars))
            self._proj[vars] = p
        return p

    def __lt__(self, other: "Factor") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return _poly_str(self.poly, self.vars, str)


def _poly_key(poly, vars: tuple):
    terms = []
    for exps, c in zip(poly.monoms(), poly.coeffs()):
        terms.append((tuple((vars[i].key, int(e)) for i, e in enumerate(exps) if e), int(c.p), int(c.q)))
    terms.sort()
    return tuple(terms)


def _monic_factor(poly, vars: tuple) -> tuple[Factor, flint.fmpq]:
    """Return (Factor, lc) with ``poly == lc * factor``."""
    lc = poly.leading_coefficient()
    if lc != 1:
        poly = poly / lc
    fv = _used(poly, vars)
    if fv != vars:
        poly = poly.project_to_context(_ctx(fv))
    return Factor(fv, poly), lc


def _factor_poly(poly, vars: tuple) -> tuple[flint.fmpq, list[tuple[Factor, int]]]:
    """Factor into rational content times monic irreducible Factors."""
    if len(poly) == 1:
        exps = poly.monoms()[0]
        c = poly.coeffs()[0]
        out = []
        for i, e in enumerate(exps):
            if e:
                out.append((Factor((vars[i],), _ctx((vars[i],)).gens()[0]), int(e)))
        return c, out
    c, facs = poly.factor()
    c = flint.fmpq(c)
    out = []
    for f, e in facs:
        fac, lc = _monic_factor(f, vars)
        c *= lc ** e
        out.append((fac, e))
    return c, out


# ---------------------------------------------------------------------------


class Expr:
    """Immutable exact rational function in atoms.

    Arithmetic is exact and canonical: two expressions are equal iff they are
    the same rational function.
    """

    __slots__ = ("vars", "num", "den", "_hash", "_degree")

    def __init__(self, vars: tuple, num, den: tuple):
        self.vars = vars
        self.num = num
        self.den = den
        self._hash = None
        self._degree = None

    # construction -----------------------------------------------------------

    @staticmethod
    def atom(a: Atom) -> "Expr":
        e = _atom_cache.get(a)
        if e is None:
            vars = (a,)
            e = Expr(vars, _ctx(vars).gens()[0], ())
            _atom_cache[a] = e
        return e

    @staticmethod
    def const(c) -> "Expr":
        c = to_fmpq(c)
        if c == 0:
            return ZERO
        return Expr((), _ctx(()).constant(c), ())

    @staticmethod
    def coerce(v) -> "Expr":
        if isinstance(v, Expr):
            return v
        if isinstance(v, Atom):
            return Expr.atom(v)
        if isinstance(v, FuncSymbol):
            return v()
        return Expr.const(v)

    # predicates -------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return not self.vars

    def is_polynomial(self) -> bool:
        return not self.den

    def const_value(self) -> flint.fmpq:
        if self.vars:
            raise ValueError(f"{self} is not constant")
        if self.num.is_zero():
            return flint.fmpq(0)
        return self.num.leading_coefficient()

    def atoms(self) -> frozenset:
        return frozenset(self.vars)

    @property
    def n_terms(self) -> int:
        return len(self.num) + sum(len(f.poly) for f, _ in self.den)

    def degree(self) -> int:
        """Total degree of the numerator plus that of the denominator."""
        if self._degree is None:
            dn = self.num.total_degree() if not self.num.is_zero() else 0
            dd = sum(f.degree * e for f, e in self.den)
            self._degree = max(int(dn), 0) + dd
        return self._degree

    def num_degree(self) -> int:
        return max(int(self.num.total_degree()), 0) if not self.num.is_zero() else 0

    def den_degree(self) -> int:
        return sum(f.degree * e for f, e in self.den)

    # equality ---------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction, flint.fmpq, flint.fmpz)):
                other = Expr.const(other)
            else:
                return NotImplemented
        return self.vars == other.vars and self.den == other.den and self.num == other.num

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.vars, self.den, _poly_key(self.num, self.vars)))
        return self._hash

    def __bool__(self) -> bool:
        return not self.is_zero()

    # arithmetic -------------------------------------------------------------

    def __add__(self, other) -> "Expr":
        return _add(self, Expr.coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Expr":
        return _add(self, -Expr.coerce(other))

    def __rsub__(self, other) -> "Expr":
        return _add(Expr.coerce(other), -self)

    def __neg__(self) -> "Expr":
        if self.is_zero():
            return self
        return Expr(self.vars, -self.num, self.den)

    def __pos__(self) -> "Expr":
        return self

    def __mul__(self, other) -> "Expr":
        return _mul(self, Expr.coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expr":
        return _mul(self, Expr.coerce(other).inverse())

    def __rtruediv__(self, other) -> "Expr":
        return _mul(Expr.coerce(other), self.inverse())

    def __pow__(self, n: int) -> "Expr":
        if isinstance(n, flint.fmpz):
            n = int(n)
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return ONE
        if n == 1:
            return self
        if self.is_zero():
            return ZERO
        return Expr(self.vars, self.num ** n, tuple((f, e * n) for f, e in self.den))

    def inverse(self) -> "Expr":
        if self.is_zero():
            raise DivisionByZeroExpr("division by the zero expression")
        c, facs = _factor_poly(self.num, self.vars)
        num = self.num.context().constant(1) / c
        for f, e in self.den:
            num = num * f.in_ctx(self.vars) ** e
        den = {}
        for f, e in facs:
            den[f] = den.get(f, 0) + e
        return _make(self.vars, num, den, ())

    # calculus ---------------------------------------------------------------

    def diff(self, a: Atom) -> "Expr":
        if a not in self.vars and not any(a in f.vars for f, _ in self.den):
            return ZERO
        return self.derive({a: ONE})

    def derive(self, images: Mapping[Atom, "Expr"]) -> "Expr":
        """Apply the derivation sending each atom ``a`` to ``images[a]``.

        Atoms absent from ``images`` are treated as constants.
        """
        active = [a for a in self.vars if a in images and not images[a].is_zero()]
        if not active:
            return ZERO
        imgs = [images[a] for a in active]
        if all(not im.den for im in imgs):
            return _derive_poly(self, active, imgs)
        # rational images: quotient rule on the factored form
        def d_poly(poly, vars):
            acc = ZERO
            for a in vars:
                if a in images and not images[a].is_zero():
                    p = poly.derivative(a.cname)
                    if not p.is_zero():
                        acc = acc + _make(vars, p, {}, ()) * images[a]
            return acc

        res = d_poly(self.num, self.vars) * Expr(self.vars, self.num.context().constant(1), self.den)
        for f, k in self.den:
            df = d_poly(f.poly, f.vars)
            if not df.is_zero():
                res = res - self * Expr.const(k) * df / Expr(f.vars, f.poly, ())
        return res

    def subs(self, rules: Mapping[Atom, Any]) -> "Expr":
        return substitute(self, rules)

    # evaluation -------------------------------------------------------------

    def evaluate(self, point) -> Any:
        return eval_exact(self, point)

    # printing ---------------------------------------------------------------

    def to_str(self, namer: Callable[[Atom], str] = str) -> str:
        n = _poly_str(self.num, self.vars, namer)
        if not self.den:
            return n
        parts = []
        for f, e in self.den:
            s = _poly_str(f.poly, f.vars, namer)
            if len(f.poly) > 1:
                s = f"({s})"
            parts.append(s if e == 1 else f"{s}^{e}")
        d = "*".join(parts)
        if len(self.den) > 1 or (len(self.den) == 1 and self.den[0][1] > 1 and len(self.den[0][0].poly) == 1):
            d = f"({d})"
        if len(self.num) > 1:
            n = f"({n})"
        return f"{n}/{d}"

    def __str__(self) -> str:
        return self.to_str()

    def pretty(self, letters: tuple[str, ...] = LETTERS) -> str:
        return self.to_str(lambda a: a.pretty(letters))

    def __repr__(self) -> str:
        return f"Expr({self.to_str()})"

    def __reduce__(self):
        return (normalize, (_to_tree(self),))

    # helpers ----------------------------------------------------------------

    def numerator(self) -> "Expr":
        return Expr(self.vars, self.num, ()) if self.den else self

    def denominator(self) -> "Expr":
        if not self.den:
            return ONE
        r = ONE
        for f, e in self.den:
            r = r * Expr(f.vars, f.poly, ()) ** e
        return r

    def coefficients(self, atoms: Iterable[Atom]) -> dict[tuple[int, ...], "Expr"]:
        """Split a polynomial dependence on ``atoms`` into coefficient Exprs.

        The atoms must not occur in the denominator.
        """
        atoms = list(atoms)
        for f, _ in self.den:
            if any(a in f.vars for a in atoms):
                raise ValueError("atom occurs in a denominator")
        pos = [self.vars.index(a) if a in self.vars else None for a in atoms]
        keep = tuple(a for a in self.vars if a not in atoms)
        groups: dict = {}
        for exps, c in zip(self.num.monoms(), self.num.coeffs()):
            k = tuple(int(exps[p]) if p is not None else 0 for p in pos)
            rest = tuple(int(e) for a, e in zip(self.vars, exps) if a not in atoms)
            groups.setdefault(k, {})[rest] = c
        out = {}
        ctx = _ctx(keep)
        for k, terms in groups.items():
            poly = ctx.from_dict(terms)
            den = dict(self.den)
            out[k] = _make(keep, poly, den, den.keys())
        return out


_atom_cache: dict = {}


def _make(vars: tuple, num, den: dict, check) -> Expr:
    if num.is_zero():
        return ZERO
    for f in list(check):
        e = den.get(f, 0)
        if not e:
            continue
        if not all(a in vars for a in f.vars):
            continue
        fp = f.in_ctx(vars)
        while e:
            q, r = divmod(num, fp)
            if not r.is_zero():
                break
            num = q
            e -= 1
        if e:
            den[f] = e
        else:
            del den[f]
    need = _used(num, vars)
    if len(need) != len(vars) and den:
        s = set(need)
        for f in den:
            s.update(f.vars)
        need = tuple(a for a in vars if a in s)
    if need != vars:
        num = num.project_to_context(_ctx(need))
        vars = need
    return Expr(vars, num, tuple(sorted(((f, e) for f, e in den.items() if e), key=lambda fe: fe[0].key)))


def _add(a: Expr, b: Expr) -> Expr:
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    vars = _merge(a.vars, b.vars)
    if a.den == b.den:
        num = _lift(a.num, a.vars, vars) + _lift(b.num, b.vars, vars)
        if not a.den:
            if num.is_zero():
                return ZERO
            need = _used(num, vars)
            if need != vars:
                num = num.project_to_context(_ctx(need))
            return Expr(need, num, ())
        den = dict(a.den)
        return _make(vars, num, den, list(den))
    da = dict(a.den)
    db = dict(b.den)
    lcm = dict(da)
    for f, e in db.items():
        if lcm.get(f, 0) < e:
            lcm[f] = e
    na = _lift(a.num, a.vars, vars)
    nb = _lift(b.num, b.vars, vars)
    for f, e in lcm.items():
        ea = e - da.get(f, 0)
        eb = e - db.get(f, 0)
        if ea:
            na = na * f.in_ctx(vars) ** ea
        if eb:
            nb = nb * f.in_ctx(vars) ** eb
    return _make(vars, na + nb, lcm, list(lcm))


def _cancel_into(num, vars: tuple, den: dict) -> Any:
    """Divide ``num`` by as many factors of ``den`` as possible (in place)."""
    for f in list(den):
        if not all(a in vars for a in f.vars):
            continue
        e = den[f]
        fp = f.in_ctx(vars)
        while e:
            q, r = divmod(num, fp)
            if not r.is_zero():
                break
            num = q
            e -= 1
        if e:
            den[f] = e
        else:
            del den[f]
    return num


def _mul(a: Expr, b: Expr) -> Expr:
    if a.is_zero() or b.is_zero():
        return ZERO
    if not a.vars:
        if a.num.leading_coefficient() == 1:
            return b
        return Expr(b.vars, b.num * a.num.leading_coefficient(), b.den)
    if not b.vars:
        if b.num.leading_coefficient() == 1:
            return a
        return Expr(a.vars, a.num * b.num.leading_coefficient(), a.den)
    na, nb = a.num, b.num
    da, db = dict(a.den), dict(b.den)
    if db:
        na = _cancel_into(na, a.vars, db)
    if da:
        nb = _cancel_into(nb, b.vars, da)
    vars = _merge(a.vars, b.vars)
    num = _lift(na, a.vars, vars) * _lift(nb, b.vars, vars)
    for f, e in db.items():
        da[f] = da.get(f, 0) + e
    return _make(vars, num, da, ())


def _derive_poly(e: Expr, active: list, imgs: list) -> Expr:
    """Derivation with polynomial images, using the factored quotient rule."""
    targets = [_lift(im.num, im.vars, _merge(e.vars, im.vars)) for im in imgs]
    allvars = _merge(e.vars, *[im.vars for im in imgs])
    num = _lift(e.num, e.vars, allvars)
    dnum = None
    for a, im in zip(active, imgs):
        d = num.derivative(a.cname)
        if d.is_zero():
            continue
        t = d * _lift(im.num, im.vars, allvars)
        dnum = t if dnum is None else dnum + t
    if not e.den:
        if dnum is None:
            return ZERO
        return _make(allvars, dnum, {}, ())
    touched = []
    for f, k in e.den:
        df = None
        fp = f.in_ctx(allvars)
        for a, im in zip(active, imgs):
            if a not in f.vars:
                continue
            d = fp.derivative(a.cname)
            if d.is_zero():
                continue
            t = d * _lift(im.num, im.vars, allvars)
            df = t if df is None else df + t
        if df is not None:
            touched.append((f, k, fp, df))
    if not touched:
        if dnum is None:
            return ZERO
        den = dict(e.den)
        return _make(allvars, dnum, den, list(den))
    prod_all = None
    for f, _, fp, _ in touched:
        prod_all = fp if prod_all is None else prod_all * fp
    res = dnum * prod_all if dnum is not None else None
    for j, (f, k, fp, df) in enumerate(touched):
        others = None
        for i, (_, _, gp, _) in enumerate(touched):
            if i != j:
                others = gp if others is None else others * gp
        t = num * df * k
        if others is not None:
            t = t * others
        res = -t if res is None else res - t
    den = dict(e.den)
    for f, k, _, _ in touched:
        den[f] = k + 1
    return _make(allvars, res, den, list(den))


ZERO = Expr((), _ctx(()).constant(0), ())
ONE = Expr((), _ctx(()).constant(1), ())


def const(c) -> Expr:
    return Expr.const(c)


# ---------------------------------------------------------------------------
# substitution

_aux_counter = [0]


def _subst_poly(poly, vars: tuple, rules: Mapping[Atom, Expr]) -> Expr:
    hits = [i for i, a in enumerate(vars) if a in rules]
    if not hits:
        return _make(vars, poly, {}, ())
    rational = [i for i in hits if rules[vars[i]].den]
    keep = tuple(a for a in vars if a not in rules)
    target = _merge(keep, *[rules[vars[i]].vars for i in hits])
    ctx_t = _ctx(target)
    gens = ctx_t.gens()
    pos = {a: k for k, a in enumerate(target)}
    args = []
    for a in vars:
        if a in rules:
            im = rules[a]
            args.append(_lift(im.num, im.vars, target))
        else:
            args.append(gens[pos[a]])
    if not rational:
        return _make(target, poly.compose(*args, ctx=ctx_t), {}, ())
    degs = [int(d) for d in poly.degrees()]
    aux = tuple(Atom.aux(n) for n in range(len(rational)))
    hom_vars = vars + aux
    terms = {}
    for exps, c in zip(poly.monoms(), poly.coeffs()):
        terms[tuple(exps) + tuple(degs[i] - exps[i] for i in rational)] = c
    hom = _ctx(hom_vars).from_dict(terms)
    den: dict = {}
    for i in rational:
        im = rules[vars[i]]
        dpoly = ctx_t.constant(1)
        for f, e in im.den:
            dpoly = dpoly * f.in_ctx(target) ** e
            den[f] = den.get(f, 0) + e * degs[i]
        args.append(dpoly)
    return _make(target, hom.compose(*args, ctx=ctx_t), den, list(den))


def substitute(e: Expr, rules: Mapping[Atom, Any]) -> Expr:
    """Simultaneously replace atoms by expressions."""
    rules = {a: Expr.coerce(v) for a, v in rules.items()}
    if not rules or not (set(e.vars) & rules.keys()):
        return e
    res = _subst_poly(e.num, e.vars, rules)
    for f, k in e.den:
        if any(a in rules for a in f.vars):
            d = _subst_poly(f.poly, f.vars, rules)
            if d.is_zero():
                raise DivisionByZeroExpr(f"substitution annihilates the factor {f}")
            res = res / d ** k
        else:
            res = res / Expr(f.vars, f.poly, ()) ** k
    return res


def diff_atom(e: Expr, a: Atom) -> Expr:
    return e.diff(a)


# ---------------------------------------------------------------------------
# evaluation


class QuadraticNumber:
    """Element ``a + b*sqrt(d)`` of a quadratic field, ``d`` squarefree."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d: int = -1):
        self.a = to_fmpq(a)
        self.b = to_fmpq(b)
        self.d = int(d)

    @staticmethod
    def sqrt(d: int) -> "QuadraticNumber":
        return QuadraticNumber(0, 1, d)

    def _co(self, o) -> "QuadraticNumber":
        if isinstance(o, QuadraticNumber):
            if o.d != self.d and o.b != 0 and self.b != 0:
                raise ValueError(f"mixing Q(sqrt {self.d}) and Q(sqrt {o.d})")
            return o
        return QuadraticNumber(to_fmpq(o), 0, self.d)

    def _d(self, o: "QuadraticNumber") -> int:
        return self.d if self.b != 0 else o.d

    def __add__(self, o):
        o = self._co(o)
        return QuadraticNumber(self.a + o.a, self.b + o.b, self._d(o))

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __sub__(self, o):
        return self + (-self._co(o))

    def __rsub__(self, o):
        return self._co(o) - self

    def __mul__(self, o):
        o = self._co(o)
        d = self._d(o)
        return QuadraticNumber(self.a * o.a + d * self.b * o.b, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self.a, -self.b, self.d)

    def norm(self) -> flint.fmpq:
        return self.a * self.a - self.d * self.b * self.b

    def inverse(self) -> "QuadraticNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in a quadratic field")
        return QuadraticNumber(self.a / n, -self.b / n, self.d)

    def __truediv__(self, o):
        return self * self._co(o).inverse()

    def __rtruediv__(self, o):
        return self._co(o) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        r = QuadraticNumber(1, 0, self.d)
        base = self
        while n:
            if n & 1:
                r = r * base
            base = base * base
            n >>= 1
        return r

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __eq__(self, o) -> bool:
        if isinstance(o, QuadraticNumber):
            return self.a == o.a and self.b == o.b and (self.b == 0 or self.d == o.d)
        try:
            o = to_fmpq(o)
        except TypeError:
            return NotImplemented
        return self.b == 0 and self.a == o

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.d if self.b else 0))

    def __repr__(self) -> str:
        if self.b == 0:
            return str(self.a)
        return f"{self.a} + {self.b}*sqrt({self.d})"


def _is_zero_value(v) -> bool:
    if isinstance(v, QuadraticNumber):
        return v.is_zero()
    return v == 0


def _eval_poly(poly, vals: list):
    if all(isinstance(v, flint.fmpq) for v in vals):
        if not vals:
            return poly.leading_coefficient() if not poly.is_zero() else flint.fmpq(0)
        return poly(*vals)
    total = flint.fmpq(0)
    for exps, c in zip(poly.monoms(), poly.coeffs()):
        t = c
        for v, k in zip(vals, exps):
            if k:
                t = t * (v ** k)
        total = t + total
    return total


def _lookup(point, a: Atom):
    try:
        v = point[a]
    except KeyError:
        raise UnassignedAtom(a) from None
    if isinstance(v, QuadraticNumber):
        return v
    return to_fmpq(v)


def eval_exact(e: Expr, point) -> Any:
    """Evaluate exactly; ``point`` maps atoms to rationals or QuadraticNumbers."""
    vals = [_lookup(point, a) for a in e.vars]
    pos = {a: v for a, v in zip(e.vars, vals)}
    denom = None
    for f, k in e.den:
        dv = _eval_poly(f.poly, [pos[a] for a in f.vars])
        if _is_zero_value(dv):
            raise PoleAtPoint(f"denominator factor {f} vanishes")
        dv = dv ** k
        denom = dv if denom is None else denom * dv
    n = _eval_poly(e.num, vals)
    if denom is None:
        return n
    if isinstance(denom, QuadraticNumber) and not isinstance(n, QuadraticNumber):
        return denom.inverse() * n
    return n / denom


# ---------------------------------------------------------------------------
# trees and normalization

_intern: dict = {}


def _to_tree(e: Expr):
    def poly_tree(poly, vars):
        terms = []
        for exps, c in zip(poly.monoms(), poly.coeffs()):
            factors = [Fraction(int(c.p), int(c.q))]
            for a, k in zip(vars, exps):
                if k:
                    factors.append(("^", a, k))
            terms.append(("*", *factors))
        return ("+", *terms) if terms else 0

    den = [("^", poly_tree(f.poly, f.vars), k) for f, k in e.den]
    n = poly_tree(e.num, e.vars)
    return ("/", n, ("*", *den)) if den else n


def _build(tree) -> Expr:
    if isinstance(tree, Expr):
        return tree
    if isinstance(tree, Atom):
        return Expr.atom(tree)
    if isinstance(tree, FuncSymbol):
        return tree()
    if isinstance(tree, (int, Fraction, flint.fmpq, flint.fmpz)):
        return Expr.const(tree)
    if isinstance(tree, tuple) and tree:
        op, *args = tree
        if op == "+":
            r = ZERO
            for t in args:
                r = r + _build(t)
            return r
        if op == "*":
            r = ONE
            for t in args:
                r = r * _build(t)
            return r
        if op == "-":
            if len(args) == 1:
                return -_build(args[0])
            r = _build(args[0])
            for t in args[1:]:
                r = r - _build(t)
            return r
        if op == "/":
            return _build(args[0]) / _build(args[1])
        if op == "^":
            return _build(args[0]) ** int(args[1])
    raise ExprError(f"malformed expression tree: {tree!r}")


def normalize(tree) -> Expr:
    """Canonicalize a raw tree and return the interned representative."""
    e = _build(tree)
    with _lock:
        return _intern.setdefault(e, e)


def _poly_str(poly, vars: tuple, namer) -> str:
    if poly.is_zero():
        return "0"
    items = list(zip(poly.monoms(), poly.coeffs()))
    items.sort(key=lambda mc: (-sum(mc[0]), [(vars[i].key, -e) for i, e in enumerate(mc[0]) if e]))
    out = []
    for exps, c in items:
        mon = "*".join(namer(vars[i]) + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e)
        neg = c < 0
        ac = -c if neg else c
        if not mon:
            s = str(ac)
        elif ac == 1:
            s = mon
        else:
            s = f"{ac}*{mon}"
        if out:
            out.append(f" - {s}" if neg else f" + {s}")
        else:
            out.append(f"-{s}" if neg else s)
    return "".join(out)
