"""Claim-level verifiers: symmetries, brackets, invariants, Lax pairs, coverings."""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

import flint

from .expr import ONE, ZERO, Atom, Expr, ExprError, FuncSymbol, PoleAtPoint, eval_exact
from .jet import (
    JetContext,
    VectorField,
    contact_field,
    formal_partial,
    jacobi_bracket,
    lie_bracket,
    multi_indices,
    poisson_bracket,
    prolong,
    substitute_dependent,
)
from .onshell import (
    MAX_ATTEMPTS,
    OnShellPoint,
    Policy,
    RewriteSystem,
    Rule,
    VerificationResult,
    combine,
    free_value,
    expr_weight,
    verify_zero,
)
from .registry.model import (
    LAMBDA,
    Covering,
    EquationModel,
    LaxPair,
    RecursionSystem,
    SymmetryFamily,
    linearize,
)

__all__ = [
    "DegenerateDistribution",
    "check_symmetry",
    "check_family",
    "check_algebra_hom",
    "check_invariant",
    "check_lax",
    "check_zero_curvature",
    "check_commutator_system",
    "spectral_coefficients",
    "frobenius_minors",
    "check_covering",
    "check_recursion",
    "check_gauge",
    "check_reduction",
    "finite_part_structure",
    "linear_sym_dimension",
    "rank_spot_check",
    "symmetry_residual",
    "orientation_sanity",
]


class DegenerateDistribution(ExprError):
    pass


def _policy(policy: Policy | str | None) -> Policy:
    if policy is None:
        return Policy()
    return Policy(policy) if isinstance(policy, str) else policy


def symmetry_residual(model: EquationModel, f: Expr) -> list[Expr]:
    """Prolonged contact field of ``f`` applied to each equation."""
    X = prolong(contact_field(f, model.ctx), 2, model.ctx)
    return [X(eq.lhs) for eq in model.equations]


def check_symmetry(model: EquationModel, f: Expr, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    return verify_zero(symmetry_residual(model, f), model.rw, _policy(policy), label)


def family_system(model: EquationModel, fams: Iterable[SymmetryFamily], names: Iterable[str]) -> RewriteSystem:
    extra = []
    for fam, n in zip(fams, names):
        extra += fam.constraint_rules(n)
    return model.rw.extended(extra) if extra else model.rw


def check_family(model: EquationModel, fam: SymmetryFamily, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    """Symmetry test with the family's function left fully symbolic."""
    f = fam.generic("A")
    return verify_zero(symmetry_residual(model, f), family_system(model, [fam], ["A"]), _policy(policy), label)


def bracket_residual(model: EquationModel, fi: SymmetryFamily, fj: SymmetryFamily, target: SymmetryFamily | None) -> Expr:
    """``{fi(A), fj(B)} - target({A, B})``; without a target the bracket itself."""
    br = jacobi_bracket(fi.generic("A"), fj.generic("B"), model.ctx)
    if target is None:
        return br
    pb = poisson_bracket(fi.func("A"), fj.func("B"), fi.plane)
    return br - target.apply(pb)


def bracket_target(model: EquationModel, fi: SymmetryFamily, fj: SymmetryFamily) -> SymmetryFamily | None:
    if fi.branch != fj.branch:
        return None
    for f in model.families:
        if f.branch == fi.branch and f.grade == fi.grade + fj.grade:
            return f
    return None


def check_algebra_hom(
    model: EquationModel,
    fi: SymmetryFamily,
    fj: SymmetryFamily,
    target: SymmetryFamily | None | str = "auto",
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """Bracket relation between two families: commuting blocks, graded
    homomorphism onto the target, or vanishing out of range."""
    if target == "auto":
        target = bracket_target(model, fi, fj)
    res = bracket_residual(model, fi, fj, target)
    # generating functions live on J^1, so the identity is checked off-shell
    rw = RewriteSystem(model.ctx, fi.constraint_rules("A") + fj.constraint_rules("B"), model.id + ":offshell")
    return verify_zero(res, rw, _policy(policy), label)


def _generators(model: EquationModel, gens: Sequence | None) -> list[tuple[Expr, list[Rule]]]:
    out = []
    if gens is None:
        gens = list(model.families) + list(model.finite_part)
    for k, g in enumerate(gens):
        if isinstance(g, SymmetryFamily):
            name = f"A{k}"
            out.append((g.generic(name), g.constraint_rules(name)))
        else:
            out.append((Expr.coerce(g), []))
    return out


def check_invariant(
    model: EquationModel,
    invariant: Expr,
    generators: Sequence | None = None,
    onshell: bool = False,
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """Every prolonged generator annihilates ``invariant``.

    Off-shell only function constraints are used; ``onshell=True`` reduces
    modulo the equation as well (relative invariants).
    """
    results = []
    base = model.rw if onshell else model.constraint_system()
    for k, (f, rules) in enumerate(_generators(model, generators)):
        X = prolong(contact_field(f, model.ctx), 2, model.ctx)
        rw = base.extended(rules) if rules else base
        results.append(verify_zero(X(invariant), rw, _policy(policy), f"{label}:{k}"))
    return combine(results)


# ---------------------------------------------------------------------------
# Lax pairs


def _matrix(fields: Sequence[VectorField]) -> tuple[list[Atom], list[list[Expr]]]:
    dirs: list[Atom] = []
    for f in fields:
        for a in f.directions:
            if a not in dirs:
                dirs.append(a)
    return dirs, [[f.coeff(a) for a in dirs] for f in fields]


def _det3(m: list[list[Expr]]) -> Expr:
    a, b, c = m
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])


def frobenius_minors(V: VectorField, W: VectorField) -> tuple[VectorField, list[Expr]]:
    B = lie_bracket(V, W)
    dirs, M = _matrix([V, W, B])
    minors = []
    for cols in itertools.combinations(range(len(dirs)), 3):
        minors.append(_det3([[row[c] for c in cols] for row in M]))
    return B, minors


def _rank_at(rows: list[list[Expr]], pt) -> int:
    vals = [[eval_exact(c, pt) if not c.is_zero() else 0 for c in row] for row in rows]
    return flint.fmpq_mat(vals).rank()


def check_lax(model: EquationModel, lp: LaxPair | str | None = None, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    """Frobenius integrability of ``<V, W>`` modulo the equation via 3x3 minors.

    The result's details carry ``zero_curvature``: whether [V, W] itself
    vanishes on-shell.
    """
    if not isinstance(lp, LaxPair):
        lp = model.lax_pair(lp)
    pol = _policy(policy)
    _, M = _matrix([lp.V, lp.W])
    for attempt in range(MAX_ATTEMPTS):
        try:
            pt = OnShellPoint(model.rw, (pol.seed, label, "rank"), pol.bound, attempt)
            if _rank_at(M, pt) < 2:
                raise DegenerateDistribution(f"Lax fields of {model.id} have rank < 2")
            break
        except (PoleAtPoint, ZeroDivisionError):
            continue
    B, minors = frobenius_minors(lp.V, lp.W)
    res = verify_zero(minors, model.rw, pol, label)
    zc = verify_zero([c for _, c in B.coeffs], model.rw, pol, label + ":zc")
    res.details["zero_curvature"] = zc.is_zero
    res.details["minors"] = len(minors)
    return res


def check_zero_curvature(model: EquationModel, lp: LaxPair | str | None = None, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    if not isinstance(lp, LaxPair):
        lp = model.lax_pair(lp)
    B = lie_bracket(lp.V, lp.W)
    return verify_zero([c for _, c in B.coeffs], model.rw, _policy(policy), label)


def spectral_coefficients(field: VectorField) -> dict[tuple[Atom, int], Expr]:
    """Coefficients of ``field`` split by direction and power of lambda.

    Coefficients must be polynomial in lambda.
    """
    out = {}
    for a, c in field.coeffs:
        if c.is_zero():
            continue
        if LAMBDA in c.denominator().vars:
            raise ValueError("coefficient is not polynomial in lambda")
        den = c.denominator()
        for (k,), part in c.numerator().coefficients([LAMBDA]).items():
            out[(a, k)] = part / den
    return out


def check_commutator_system(
    lp: LaxPair,
    ctx: JetContext,
    expected: dict[tuple[Atom, int], Expr],
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """The lambda-coefficients of ``[V, W]`` equal ``expected`` identically.

    Missing keys on either side must vanish.
    """
    got = spectral_coefficients(lie_bracket(lp.V, lp.W, ctx))
    keys = sorted(set(got) | set(expected), key=lambda k: (k[0].key, k[1]))
    diffs = [got.get(k, ZERO) - expected.get(k, ZERO) for k in keys]
    return verify_zero(diffs, RewriteSystem(ctx, [], "identity"), _policy(policy), label)


# ---------------------------------------------------------------------------
# coverings and recursion operators


def _cross_residuals(rules: Sequence[Rule], ctx: JetContext) -> list[Expr]:
    """``D_j(rhs_i) - D_i(rhs_j)`` for every pair of first-order rules on one fibre variable."""
    out = []
    for r1, r2 in itertools.combinations(rules, 2):
        if r1.leader.name != r2.leader.name or r1.leader.order != 1 or r2.leader.order != 1:
            continue
        (i,), (j,) = r1.leader.index, r2.leader.index
        out.append(ctx.D(r1.rhs, j) - ctx.D(r2.rhs, i))
    return out


def check_covering(model: EquationModel, cov: Covering | str | None = None, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    if cov is None or isinstance(cov, str):
        cands = [c for c in model.coverings if cov is None or c.name == cov]
        if not cands:
            raise KeyError(f"model {model.id} has no covering {cov!r}")
        cov = cands[0]
    ctx = cov.ctx.extend(dep=model.ctx.dep, funcs=model.ctx.funcs.values(), params=model.ctx.params)
    rw = RewriteSystem(ctx, model.rules() + list(cov.rules), f"{model.id}+{cov.name}")
    res = verify_zero(_cross_residuals(cov.rules, ctx), rw, _policy(policy), label)
    res.details["rule_sets"] = sorted(rw.used_tags)
    return res


def recursion_rewrite(model: EquationModel, rs: RecursionSystem, with_psi: bool) -> RewriteSystem:
    from .registry.catalog import phi_rules

    ctx = rs.ctx
    rules = model.rules() + phi_rules(model, rs.phi)
    if with_psi:
        # psi-derivatives governed by the recursion rules keep priority
        rules += list(rs.rules) + phi_rules(model, rs.psi)
    else:
        rules += list(rs.rules)
    return RewriteSystem(ctx, rules, f"{model.id}:recursion:{rs.name}")


def check_recursion(model: EquationModel, rs: RecursionSystem | str | None = None, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    """Compatibility of the psi-rules modulo the equation and its linearization.

    Reduction uses the model rules, then the linearized equation on phi,
    then the recursion rules; the linearized equation on psi is added only
    if that is not enough.  The rule sets consumed are reported.
    """
    if rs is None or isinstance(rs, str):
        cands = [r for r in model.recursions if rs is None or r.name == rs]
        if not cands:
            raise KeyError(f"model {model.id} has no recursion system {rs!r}")
        rs = cands[0]
    pol = _policy(policy)
    residuals = _cross_residuals(rs.rules, rs.ctx)
    res = None
    for with_psi in (False, True):
        rw = recursion_rewrite(model, rs, with_psi)
        res = verify_zero(residuals, rw, pol, label)
        if res.is_zero:
            break
    res.details["rule_sets"] = sorted(rw.used_tags)
    return res


def check_gauge(model: EquationModel, sign: int = 1, g: Expr | None = None, policy: Policy | str | None = None, label: str = "") -> VerificationResult:
    """``u -> u + g(y, z)`` turns the equation into the one with ``h -> h + sign {f, g}``."""
    ctx = model.ctx
    f, h = ctx.funcs["f"], ctx.funcs["h"]
    Y, Z = f.args
    if g is None:
        gs = FuncSymbol("g", (Y, Z))
        g = Expr.atom(gs.partial())
        ctx = ctx.extend(funcs=[gs])
    shifted = substitute_dependent(model.lhs, {"u": Expr.atom(Atom.jet("u", ())) + g}, ctx)
    pb = formal_partial(Expr.atom(f.partial()), Y) * formal_partial(g, Z) - formal_partial(Expr.atom(f.partial()), Z) * formal_partial(g, Y)
    moved = model.lhs.subs({h.partial(): Expr.atom(h.partial()) + pb * sign})
    return verify_zero(shifted - moved, RewriteSystem(ctx, [], "gauge"), _policy(policy), label)


def check_reduction(
    model: EquationModel,
    target: EquationModel,
    images: dict[str, Expr],
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """Each equation of ``model`` with dependent variables replaced by ``images``
    vanishes modulo ``target``."""
    exprs = [substitute_dependent(eq.lhs, images, target.ctx) for eq in model.equations]
    return verify_zero(exprs, target.rw, _policy(policy), label)


# ---------------------------------------------------------------------------
# finite part structure


def finite_part_structure(model: EquationModel) -> dict:
    """Bracket table of the finite part and the shape of its span.

    Brackets are expanded in the finite part by exact linear algebra on
    monomial coefficient vectors; the span is closed when every bracket
    lies in it.  Nilpotency and solvability follow from the lower central
    and derived series of the structure constants.
    """
    gens = list(model.finite_part)
    n = len(gens)
    table = {(i, j): jacobi_bracket(gens[i], gens[j], model.ctx) for i in range(n) for j in range(i + 1, n)}
    basis = _monomial_basis(gens + list(table.values()))
    vecs = [_coeff_vector(g, basis) for g in gens]
    coords: dict = {}
    for key, br in table.items():
        coords[key] = _solve_in_span(vecs, _coeff_vector(br, basis))
    closed = all(c is not None for c in coords.values())
    out = {
        "dimension": n,
        "closed": closed,
        "abelian": all(br.is_zero() for br in table.values()),
        "brackets": {f"{i},{j}": br.pretty() for (i, j), br in table.items()},
    }
    if closed:
        consts = _structure_constants(n, coords)
        out["nilpotent"] = _series_vanishes(consts, n, derived=False)
        out["solvable"] = _series_vanishes(consts, n, derived=True)
    return out


def _monomial_basis(exprs: Sequence[Expr]) -> list:
    keys = set()
    for e in exprs:
        if not e.is_polynomial():
            raise ValueError("finite part generators must be polynomial")
        keys.update(_monomials(e))
    return sorted(keys)


def _monomials(e: Expr) -> dict:
    if e.is_zero():
        return {}
    out = {}
    for exps, c in zip(e.num.monoms(), e.num.coeffs()):
        key = tuple(sorted((a.key, int(k)) for a, k in zip(e.vars, exps) if int(k)))
        out[key] = c
    return out


def _coeff_vector(e: Expr, basis: list) -> list:
    mons = _monomials(e)
    return [mons.get(b, 0) for b in basis]


def _solve_in_span(vecs: list, target: list) -> list | None:
    """Coordinates of ``target`` in the independent ``vecs``, or None."""
    if not any(target):
        return [flint.fmpq(0)] * len(vecs)
    A = flint.fmpq_mat(vecs).transpose()
    aug = flint.fmpq_mat([list(r) + [t] for r, t in zip(A.tolist(), target)])
    if aug.rank() > A.rank():
        return None
    At = A.transpose()
    sol = (At * A).solve(At * flint.fmpq_mat([[t] for t in target]))
    return [sol[i, 0] for i in range(sol.nrows())]


def _structure_constants(n: int, coords: dict) -> list:
    """``c[i][j]`` = coordinate vector of ``[e_i, e_j]``."""
    zero = [flint.fmpq(0)] * n
    c = [[zero] * n for _ in range(n)]
    for (i, j), v in coords.items():
        c[i][j] = v
        c[j][i] = [-x for x in v]
    return c


def _bracket_vec(c: list, a: list, b: list) -> list:
    n = len(a)
    out = [flint.fmpq(0)] * n
    for i in range(n):
        if a[i] == 0:
            continue
        for j in range(n):
            if b[j] == 0:
                continue
            w = a[i] * b[j]
            out = [o + w * x for o, x in zip(out, c[i][j])]
    return out


def _span_basis(vectors: list) -> list:
    rows = [v for v in vectors if any(x != 0 for x in v)]
    if not rows:
        return []
    M = flint.fmpq_mat(rows).rref()[0]
    return [r for r in M.tolist() if any(x != 0 for x in r)]


def _series_vanishes(c: list, n: int, derived: bool) -> bool:
    """Lower central (or derived) series reaches zero."""
    full = [[flint.fmpq(int(i == j)) for j in range(n)] for i in range(n)]
    cur = full
    for _ in range(n + 1):
        left = cur if derived else full
        nxt = _span_basis([_bracket_vec(c, a, b) for a in left for b in cur])
        if not nxt:
            return True
        if len(nxt) == len(cur):
            return False
        cur = nxt
    return False


# ---------------------------------------------------------------------------
# dimension and rank computations


def quadratic_basis(ctx: JetContext) -> list[Expr]:
    """All 36 quadratic monomials in (x^1..x^4, u_1..u_4)."""
    coords = [Expr.atom(a) for a in ctx.indep_atoms] + [Expr.atom(Atom.jet("u", (i,))) for i in range(1, ctx.n + 1)]
    return [coords[i] * coords[j] for i in range(len(coords)) for j in range(i, len(coords))]


def linear_sym_dimension(
    model: EquationModel,
    points: int = 60,
    seeds: Sequence[int] = (0, 1, 2),
    bound: int = 1000,
    info: dict | None = None,
) -> int | None:
    """Dimension of the quadratic generating functions that are symmetries.

    Each on-shell point contributes one linear condition per equation; the
    rank must agree across ``seeds`` or ``None`` (indeterminate) is returned.
    ``info`` receives the ranks and a degree bound for the rank minors.
    """
    basis = quadratic_basis(model.ctx)
    residuals = [symmetry_residual(model, f) for f in basis]
    if info is not None:
        # a maximal minor is a product of at most len(basis) entries
        w = max((expr_weight(x, model.rw.weight)[0] for r in residuals for x in r if not x.is_zero()), default=0)
        info["entry_degree"] = w
    ranks = []
    for seed in seeds:
        rows = []
        p = 0
        attempt = 0
        while p < points:
            pt = OnShellPoint(model.rw, ("linsym", model.id, seed, p), bound, attempt)
            try:
                for k in range(len(model.equations)):
                    rows.append([eval_exact(r[k], pt) if not r[k].is_zero() else 0 for r in residuals])
            except (PoleAtPoint, ZeroDivisionError):
                attempt += 1
                if attempt > MAX_ATTEMPTS:
                    return None
                continue
            p += 1
            attempt = 0
        ranks.append(flint.fmpq_mat(rows).rank())
    if info is not None:
        info["ranks"] = ranks
        info["degree_bound"] = max(ranks) * info["entry_degree"]
    if len(set(ranks)) != 1:
        return None
    return len(basis) - ranks[0]


def _random_poly(plane: Sequence[Atom], rng: random.Random, degree: int = 4) -> Expr:
    res = ZERO
    for exps in itertools.product(range(degree + 1), repeat=len(plane)):
        if sum(exps) > degree:
            continue
        c = flint.fmpq(rng.randint(-50, 50), rng.randint(1, 20))
        term = Expr.const(c)
        for a, k in zip(plane, exps):
            if k:
                term = term * Expr.atom(a) ** k
        res = res + term
    return res


def fibre_coordinates(ctx: JetContext, k: int) -> list[Atom]:
    """Coordinates of J^k (base and fibre) for the scalar u."""
    out = list(ctx.indep_atoms)
    out += [Atom.jet("u", s) for s in multi_indices(ctx.n, k)]
    return out


def rank_spot_check(
    model: EquationModel,
    k: int,
    generators: Sequence | None = None,
    instantiations: int = 40,
    seed: int = 0,
    bound: int = 1000,
) -> tuple[int, int]:
    """Rank of the prolonged generators at a random point of J^k.

    Families are instantiated with random polynomials in their plane
    coordinates.  Returns ``(rank, dim J^k)``; full rank means no
    differential invariant of order <= k at that point.
    """
    if k not in (0, 1):
        raise ValueError("order must be 0 or 1")
    rng = random.Random(f"rank:{model.id}:{k}:{seed}")
    if generators is None:
        generators = list(model.families) + list(model.finite_part)
    fields = []
    for g in generators:
        if isinstance(g, SymmetryFamily):
            if g.constraint is not None:
                continue
            for _ in range(instantiations):
                fields.append(contact_field(g.apply(_random_poly(g.plane, rng)), model.ctx))
        else:
            fields.append(contact_field(Expr.coerce(g), model.ctx))
    coords = fibre_coordinates(model.ctx, k)
    pt = {a: free_value(("rank", model.id, seed), 0, a, bound) for a in fibre_coordinates(model.ctx, 1)}
    rows = []
    for X in fields:
        rows.append([eval_exact(X.coeff(a), pt) if not X.coeff(a).is_zero() else 0 for a in coords])
    return flint.fmpq_mat(rows).rank(), len(coords)


# ---------------------------------------------------------------------------
# orientation sanity


def orientation_coefficients(model: EquationModel) -> list[Expr]:
    """Coefficients that must not vanish: each principal's, or the leaders' Jacobian for joint systems."""
    if not model.solve_jointly:
        return [eq.lhs.diff(eq.principal) for eq in model.equations]
    jac = [[eq.lhs.diff(e2.principal) for e2 in model.equations] for eq in model.equations]
    from .geometry import _det

    return [_det(jac)]


def orientation_sanity(model: EquationModel, points: int = 32, seed: int = 0, bound: int = 1000) -> dict:
    """Evaluate the orientation coefficients at ``points`` on-shell points.

    Returns counts of points where every coefficient is nonzero, where one
    vanishes, and points skipped because of poles.
    """
    coeffs = orientation_coefficients(model)
    good = bad = poles = 0
    for k in range(points):
        for attempt in range(MAX_ATTEMPTS):
            pt = OnShellPoint(model.rw, ("orient", model.id, seed, k), bound, attempt)
            try:
                vals = [eval_exact(c, pt) for c in coeffs]
            except (PoleAtPoint, ZeroDivisionError):
                poles += 1
                continue
            if all(v != 0 for v in vals):
                good += 1
            else:
                bad += 1
            break
    return {"points": points, "nonzero": good, "vanishing": bad, "poles": poles}
