"""Model data types: equations, symmetry families, Lax pairs, coverings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..expr import ONE, ZERO, Atom, Expr, FuncSymbol
from ..jet import JetContext, VectorField, formal_partial
from ..onshell import RewriteSystem, Rule

__all__ = [
    "Equation",
    "SymmetryFamily",
    "LaxPair",
    "Covering",
    "RecursionSystem",
    "EquationModel",
    "plane_derivatives",
    "linearize",
    "LAMBDA",
]

LAMBDA = Atom.param("lambda")

# A family template receives ``d(*slots)``, the slot derivatives of an
# arbitrary function on the family's plane, and returns a generating function.
Template = Callable[[Callable[..., Expr]], Expr]


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    principal: Atom


def plane_derivatives(f: Expr, plane: Sequence[Atom]) -> Callable[..., Expr]:
    """``d(*slots)`` = iterated formal partials of ``f`` along plane coordinates."""
    cache: dict = {(): f}

    def d(*slots: int) -> Expr:
        slots = tuple(sorted(slots))
        if slots not in cache:
            cache[slots] = formal_partial(d(*slots[:-1]), plane[slots[-1]])
        return cache[slots]

    return d


def symbol_derivatives(func: FuncSymbol) -> Callable[..., Expr]:
    def d(*slots: int) -> Expr:
        return Expr.atom(func.partial(*slots))

    return d


@dataclass
class SymmetryFamily:
    """Generating functions ``A -> template(A)`` for ``A`` a function on ``plane``."""

    block: str
    plane: tuple[Atom, ...]
    template: Template
    grade: int
    branch: str
    # optional linear constraint on A, oriented on the partial with these slots
    constraint: Template | None = None
    constraint_leader: tuple[int, ...] = ()
    # normalization making A -> family(A) a bracket homomorphism
    sign: int = 1

    def func(self, name: str = "A") -> FuncSymbol:
        return FuncSymbol(name, self.plane)

    def constraint_rules(self, name: str = "A") -> list[Rule]:
        if self.constraint is None:
            return []
        F = self.func(name)
        lhs = self.constraint(symbol_derivatives(F))
        return [Rule.solve(lhs, F.partial(*self.constraint_leader), "constraint")]

    def generic(self, name: str = "A") -> Expr:
        return self.template(symbol_derivatives(self.func(name))) * self.sign

    def apply(self, f: Expr) -> Expr:
        """Generating function for a concrete function ``f`` of the plane."""
        return self.template(plane_derivatives(f, self.plane)) * self.sign


@dataclass
class LaxPair:
    name: str
    V: VectorField
    W: VectorField
    note: str = ""


@dataclass
class Covering:
    """First-order rules for derivatives of a fibre variable."""

    name: str
    fibre: str
    rules: list[Rule]
    ctx: JetContext
    substitution: dict[str, Expr] = field(default_factory=dict)


@dataclass
class RecursionSystem:
    """Rules for derivatives of ``psi`` in terms of ``phi`` and ``psi``."""

    name: str
    phi: str
    psi: str
    rules: list[Rule]
    ctx: JetContext


@dataclass
class EquationModel:
    id: str
    title: str
    ctx: JetContext
    equations: list[Equation]
    constraints: list[Equation] = field(default_factory=list)
    invariant: Expr | None = None
    families: list[SymmetryFamily] = field(default_factory=list)
    finite_part: list[Expr] = field(default_factory=list)
    lax: list[LaxPair] = field(default_factory=list)
    coverings: list[Covering] = field(default_factory=list)
    recursions: list[RecursionSystem] = field(default_factory=list)
    metric: list[list[Expr]] | None = None
    notes: list[str] = field(default_factory=list)
    # principals are solved for simultaneously rather than one equation each
    solve_jointly: bool = False
    _rw: RewriteSystem | None = field(default=None, repr=False, compare=False)

    @property
    def lhs(self) -> Expr:
        if len(self.equations) != 1:
            raise ValueError(f"model {self.id} is not a single scalar equation")
        return self.equations[0].lhs

    def rules(self) -> list[Rule]:
        if self.solve_jointly:
            out = solve_linear([eq.lhs for eq in self.equations], [eq.principal for eq in self.equations])
        else:
            out = [Rule.solve(eq.lhs, eq.principal, "model") for eq in self.equations]
        out += [Rule.solve(c.lhs, c.principal, "constraint") for c in self.constraints]
        return out

    def constraint_system(self) -> RewriteSystem:
        """Rewrites for function-symbol constraints only (no equations)."""
        return RewriteSystem(self.ctx, [Rule.solve(c.lhs, c.principal, "constraint") for c in self.constraints], self.id + ":constraints")

    @property
    def rw(self) -> RewriteSystem:
        if self._rw is None:
            self._rw = RewriteSystem(self.ctx, self.rules(), self.id)
        return self._rw

    def fresh_rw(self) -> RewriteSystem:
        return RewriteSystem(self.ctx, self.rules(), self.id)

    @property
    def dep_names(self) -> list[str]:
        return list(self.ctx.dep)

    def lax_pair(self, name: str | None = None) -> LaxPair:
        if not self.lax:
            raise KeyError(f"model {self.id} has no Lax pair")
        if name is None:
            return self.lax[0]
        for lp in self.lax:
            if lp.name == name:
                return lp
        raise KeyError(name)


def linearize(model: EquationModel | Expr, phi: str = "phi", ctx: JetContext | None = None, dep: str = "u") -> Expr:
    """Gateaux derivative of a scalar equation in the direction of ``phi``.

    Function symbols whose arguments are jets of ``dep`` contribute through
    the chain rule.
    """
    if isinstance(model, EquationModel):
        lhs = model.lhs
        ctx = model.ctx
    else:
        lhs = model
    jets = set()
    for a in lhs.vars:
        if a.kind == "jet" and a.name == dep:
            jets.add(a)
        elif a.kind == "func":
            jets.update(x for x in a.func.args if x.kind == "jet" and x.name == dep)
    out = ZERO
    for a in sorted(jets, key=lambda a: a.key):
        c = formal_partial(lhs, a)
        if not c.is_zero():
            out = out + c * Expr.atom(Atom.jet(phi, a.index))
    return out


def field_total(coeffs: dict[Atom, Expr], ctx: JetContext) -> VectorField:
    """A Lax-type field: total derivatives along base directions, formal in lambda."""
    order = [*ctx.indep_atoms, LAMBDA]
    items = [(a, coeffs[a]) for a in order if a in coeffs]
    items += [(a, c) for a, c in coeffs.items() if a not in order]
    return VectorField.make(items, "total", ctx)



def solve_linear(eqs: Sequence[Expr], unknowns: Sequence[Atom], tag: str = "model") -> list[Rule]:
    """Solve equations linear in ``unknowns`` simultaneously (Gauss-Jordan over Exprs)."""
    n = len(unknowns)
    if len(eqs) != n:
        raise ValueError("need as many equations as unknowns")
    rows = []
    for e in eqs:
        coeffs = [e.diff(a) for a in unknowns]
        if any(a in c.vars for c in coeffs for a in unknowns):
            raise ValueError("system is not linear in the chosen unknowns")
        rest = e.subs({a: ZERO for a in unknowns})
        rows.append(coeffs + [-rest])
    for col in range(n):
        piv = next((r for r in range(col, n) if not rows[r][col].is_zero()), None)
        if piv is None:
            raise ValueError("coefficient matrix is singular")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = rows[col][col].inverse()
        rows[col] = [c * inv for c in rows[col]]
        for r in range(n):
            if r != col and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [Rule(a, rows[i][n], tag) for i, a in enumerate(unknowns)]
