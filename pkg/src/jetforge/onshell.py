"""On-shell rewriting, exact sampling of solution jets, and zero testing."""

from __future__ import annotations

import hashlib
import threading
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import flint

from .expr import ZERO, Atom, Expr, ExprError, PoleAtPoint, QuadraticNumber, eval_exact
from .jet import JetContext, OrderOverflow, formal_partial

__all__ = [
    "Rule",
    "RewriteSystem",
    "OnShellPoint",
    "VerificationResult",
    "SamplingExhausted",
    "BudgetExceeded",
    "ReductionCycle",
    "Policy",
    "reduce",
    "sample",
    "verify_zero",
    "free_value",
]

DEFAULT_BUDGET = 200_000
DEFAULT_TRIALS = 16
DEFAULT_BOUND = 1000
MAX_ATTEMPTS = 100


class SamplingExhausted(ExprError):
    pass


class BudgetExceeded(ExprError):
    pass


class ReductionCycle(ExprError):
    pass


class NonInvertiblePrincipal(ExprError):
    pass


def _contains(big: tuple, small: tuple) -> tuple | None:
    """Multiset difference ``big - small`` if ``small`` is contained in ``big``."""
    rest = list(big)
    for s in small:
        try:
            rest.remove(s)
        except ValueError:
            return None
    return tuple(rest)


@dataclass(frozen=True)
class Rule:
    leader: Atom
    rhs: Expr
    tag: str = "model"

    @staticmethod
    def solve(lhs: Expr, principal: Atom, tag: str = "model") -> "Rule":
        """Orient ``lhs = 0`` as ``principal -> rhs``; lhs must be linear in it."""
        a = lhs.diff(principal)
        if a.is_zero():
            raise NonInvertiblePrincipal(f"{principal} does not occur in the equation")
        if principal in a.vars:
            raise NonInvertiblePrincipal(f"equation is not linear in {principal}")
        b = lhs.subs({principal: ZERO})
        if lhs != a * Expr.atom(principal) + b:
            raise NonInvertiblePrincipal(f"equation is not linear in {principal}")
        return Rule(principal, -b / a, tag)

    def matches(self, a: Atom) -> tuple | None:
        L = self.leader
        if a.kind != L.kind:
            return None
        if a.kind == "jet":
            if a.name != L.name:
                return None
        elif a.kind == "func":
            if a.func is not L.func:
                return None
        else:
            return None
        return _contains(a.index, L.index)


class RewriteSystem:
    """Oriented equations with on-demand prolongation.

    A rule ``v_p -> rhs`` also governs every ``v_s`` with ``p`` contained in
    ``s``; the first matching rule in declaration order wins.
    """

    def __init__(self, ctx: JetContext, rules: Sequence[Rule] = (), name: str = ""):
        self.ctx = ctx
        self.rules = list(rules)
        self.name = name
        self._by_key: dict = {}
        for r in self.rules:
            self._by_key.setdefault(self._rkey(r.leader), []).append(r)
        self._match_cache: dict = {}
        self._unreduced: dict = {}
        self._reduced: dict = {}
        self._weights: dict = {}
        self._lock = threading.RLock()
        self._active: set = set()
        self.used_tags: set = set()

    @staticmethod
    def _rkey(a: Atom):
        return (a.kind, a.func if a.kind == "func" else a.name)

    @staticmethod
    def from_equations(ctx: JetContext, equations: Iterable[tuple[Expr, Atom]], tag: str = "model", name: str = "") -> "RewriteSystem":
        return RewriteSystem(ctx, [Rule.solve(l, p, tag) for l, p in equations], name)

    def extended(self, rules: Iterable[Rule], ctx: JetContext | None = None, name: str | None = None) -> "RewriteSystem":
        return RewriteSystem(ctx or self.ctx, self.rules + list(rules), self.name if name is None else name)

    # matching ---------------------------------------------------------------

    def match(self, a: Atom) -> tuple[Rule, tuple] | None:
        try:
            return self._match_cache[a]
        except KeyError:
            pass
        m = None
        if a.kind in ("jet", "func"):
            for r in self._by_key.get(self._rkey(a), ()):
                extra = r.matches(a)
                if extra is not None:
                    m = (r, extra)
                    break
        self._match_cache[a] = m
        return m

    def is_principal(self, a: Atom) -> bool:
        return self.match(a) is not None

    def _derive_step(self, e: Expr, a: Atom, extra: tuple) -> Expr:
        """Differentiate ``e`` one step from the predecessor of ``a`` towards ``a``."""
        i = max(extra)
        if a.kind == "jet":
            return self.ctx.D(e, i)
        return formal_partial(e, a.func.args[i])

    @staticmethod
    def _pred(a: Atom, extra: tuple) -> Atom:
        i = max(extra)
        idx = list(a.index)
        idx.remove(i)
        if a.kind == "jet":
            return Atom.jet(a.name, idx)
        return Atom.fderiv(a.func, idx)

    # rule expansion ---------------------------------------------------------

    def unreduced(self, a: Atom) -> Expr:
        """Value of principal ``a`` as a plain derivative of its rule's rhs."""
        e = self._unreduced.get(a)
        if e is not None:
            return e
        rule, extra = self.match(a)
        if not extra:
            e = rule.rhs
        else:
            e = self._derive_step(self.unreduced(self._pred(a, extra)), a, extra)
        with self._lock:
            self._unreduced[a] = e
            self.used_tags.add(rule.tag)
        return e

    def reduced(self, a: Atom, budget: int | None = None) -> Expr:
        """Normal form of principal ``a``: no principal atoms remain."""
        e = self._reduced.get(a)
        if e is not None:
            return e
        if a in self._active:
            raise ReductionCycle(f"rewriting {a} loops back on itself")
        self._active.add(a)
        try:
            rule, extra = self.match(a)
            if not extra:
                e = self.reduce(rule.rhs, budget)
            else:
                prev = self.reduced(self._pred(a, extra), budget)
                e = self.reduce(self._derive_step(prev, a, extra), budget)
        finally:
            self._active.discard(a)
        with self._lock:
            self._reduced[a] = e
            self.used_tags.add(rule.tag)
        return e

    def reduce(self, e: Expr, budget: int | None = None) -> Expr:
        """Replace every principal atom by its normal form."""
        prin = [a for a in e.vars if self.is_principal(a)]
        if not prin:
            return e
        rules = {}
        for a in prin:
            r = self.reduced(a, budget)
            if budget is not None and r.n_terms > budget:
                raise BudgetExceeded(f"normal form of {a} has {r.n_terms} terms")
            rules[a] = r
        out = e.subs(rules)
        if budget is not None and out.n_terms > budget:
            raise BudgetExceeded(f"reduced expression has {out.n_terms} terms")
        return out

    def check_confluence(self, order: int | None = None) -> list[tuple[Atom, int, int]]:
        """Compare ``D_i D_j`` and ``D_j D_i`` of every rule's normal form."""
        failures = []
        n = self.ctx.n
        for r in self.rules:
            if r.leader.kind != "jet":
                continue
            if order is not None and r.leader.order + 2 > order:
                continue
            base = self.reduced(r.leader)
            for i in range(1, n + 1):
                di = self.reduce(self.ctx.D(base, i))
                for j in range(i + 1, n + 1):
                    dj = self.reduce(self.ctx.D(base, j))
                    a = self.reduce(self.ctx.D(di, j))
                    b = self.reduce(self.ctx.D(dj, i))
                    if a != b:
                        failures.append((r.leader, i, j))
        return failures

    # degree bookkeeping -----------------------------------------------------

    def weight(self, a: Atom) -> tuple[int, int]:
        """Upper bounds (numerator, denominator degree) of ``a`` as a rational
        function of the free atoms at a sampled point."""
        w = self._weights.get(a)
        if w is not None:
            return w
        if not self.is_principal(a):
            w = (1, 0)
        else:
            w = expr_weight(self.unreduced(a), self.weight)
        self._weights[a] = w
        return w

    def sample(self, seed: Any, bound: int = DEFAULT_BOUND, attempt: int = 0) -> "OnShellPoint":
        return OnShellPoint(self, seed, bound, attempt)


def _poly_weight(poly, vars: tuple, wfn) -> tuple[int, int]:
    if poly.is_zero() or not vars:
        return (0, 0)
    ws = [wfn(a) for a in vars]
    degs = [int(d) for d in poly.degrees()]
    den = sum(K * w[1] for K, w in zip(degs, ws))
    if len(poly) > 2000:
        num = sum(K * max(w) for K, w in zip(degs, ws))
        return (num, den)
    num = 0
    for exps in poly.monoms():
        exps = [int(k) for k in exps]
        s = 0
        for k, K, w in zip(exps, degs, ws):
            if K:
                s += k * w[0] + (K - k) * w[1]
        num = max(num, s)
    return (num, den)


def expr_weight(e: Expr, wfn) -> tuple[int, int]:
    n_num, n_den = _poly_weight(e.num, e.vars, wfn)
    d_num, d_den = 0, 0
    for f, k in e.den:
        fn, fd = _poly_weight(f.poly, f.vars, wfn)
        d_num += k * fn
        d_den += k * fd
    return (n_num + d_den, n_den + d_num)


def free_value(seed: Any, attempt: int, a: Atom, bound: int) -> flint.fmpq:
    """Deterministic pseudo-random rational for a free atom."""
    h = hashlib.blake2b(repr((seed, attempt, a.key)).encode(), digest_size=16).digest()
    r1 = int.from_bytes(h[:8], "little")
    r2 = int.from_bytes(h[8:], "little")
    n = r1 % (2 * bound)
    n = n - bound if n < bound else n - bound + 1
    d = 1 + r2 % bound
    return flint.fmpq(n, d)


class OnShellPoint(Mapping):
    """A point on the solution variety: free atoms get pseudo-random values,
    principal atoms are computed from the rules on demand."""

    def __init__(self, rw: RewriteSystem, seed: Any, bound: int = DEFAULT_BOUND, attempt: int = 0, overrides: Mapping[Atom, Any] | None = None):
        if bound < 8:
            raise ValueError("sampling bound must be at least 8")
        self.rw = rw
        self.seed = seed
        self.bound = bound
        self.attempt = attempt
        self.values: dict = dict(overrides or {})
        self._active: set = set()

    def __getitem__(self, a: Atom):
        v = self.values.get(a)
        if v is not None:
            return v
        if a.kind == "aux":
            raise KeyError(a)
        if self.rw.is_principal(a):
            if a in self._active:
                raise ReductionCycle(f"evaluation of {a} loops")
            self._active.add(a)
            try:
                v = eval_exact(self.rw.unreduced(a), self)
            finally:
                self._active.discard(a)
        else:
            v = free_value(self.seed, self.attempt, a, self.bound)
        self.values[a] = v
        return v

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def evaluate(self, e: Expr):
        return eval_exact(e, self)

    def describe(self, atoms: Iterable[Atom]) -> dict[str, str]:
        return {str(a): str(self[a]) for a in sorted(atoms, key=lambda a: a.key)}


def sample(rw: RewriteSystem, seed: Any, bound: int = DEFAULT_BOUND, probe: Sequence[Expr] = ()) -> OnShellPoint:
    """First point (over attempts) at which every probe expression is finite."""
    for attempt in range(MAX_ATTEMPTS):
        pt = OnShellPoint(rw, seed, bound, attempt)
        try:
            for e in probe:
                eval_exact(e, pt)
            return pt
        except (PoleAtPoint, ZeroDivisionError):
            continue
    raise SamplingExhausted(f"no pole-free point after {MAX_ATTEMPTS} attempts")


def reduce(e: Expr, rw: RewriteSystem, budget: int | None = None) -> Expr:
    return rw.reduce(e, budget)


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class Policy:
    kind: str = "auto"  # auto | symbolic | probabilistic
    trials: int = DEFAULT_TRIALS
    bound: int = DEFAULT_BOUND
    budget: int = DEFAULT_BUDGET
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("auto", "symbolic", "probabilistic"):
            raise ValueError(f"unknown policy {self.kind!r}")


@dataclass
class VerificationResult:
    verdict: str  # ProvedZero | LikelyZero | NonZero | Indeterminate
    mode: str
    trials: int = 0
    bound: int | None = None
    seed: Any = None
    degree_bound: int | None = None
    error_bound: str | None = None
    witness: dict | None = None
    reason: str | None = None
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def is_zero(self) -> bool:
        return self.verdict in ("ProvedZero", "LikelyZero")

    def to_dict(self) -> dict:
        d = {
            "verdict": self.verdict,
            "mode": self.mode,
            "trials": self.trials,
            "bound": self.bound,
            "seed": self.seed,
            "degree_bound": self.degree_bound,
            "error_bound": self.error_bound,
            "witness": self.witness,
            "reason": self.reason,
        }
        if self.details:
            d["details"] = self.details
        return d


def _err_bound(deg: int, bound: int, trials: int) -> str:
    """Upper bound (deg / 2B)^trials on accepting a nonzero residual, as a decimal exponent."""
    p = flint.fmpq(deg, 2 * bound)
    if p >= 1:
        return "1"
    if p == 0:
        return "0"
    exp10 = trials * (math.log10(int(p.p)) - math.log10(int(p.q)))
    k = math.floor(exp10)
    return f"{10 ** (exp10 - k):.2f}e{k}"


def combine(results: Sequence[VerificationResult], mode: str | None = None) -> VerificationResult:
    """Aggregate several sub-verdicts into one (all must vanish)."""
    if not results:
        return VerificationResult("ProvedZero", mode or "symbolic")
    for r in results:
        if r.verdict == "Indeterminate":
            return r
    for r in results:
        if r.verdict == "NonZero":
            return r
    modes = {r.mode for r in results}
    prob = [r for r in results if r.verdict == "LikelyZero"]
    if prob:
        deg = max(r.degree_bound or 0 for r in prob)
        base = prob[0]
        return VerificationResult("LikelyZero", "probabilistic" if modes == {"probabilistic"} else "mixed", base.trials, base.bound, base.seed, deg, _err_bound(deg, base.bound, base.trials) if base.bound else None)
    return VerificationResult("ProvedZero", "symbolic", seed=results[0].seed)


def verify_zero(e: Expr | Sequence[Expr], rw: RewriteSystem, policy: Policy | str = "auto", label: str = "") -> VerificationResult:
    """Decide whether ``e`` (or every member of a list) vanishes on-shell."""
    if isinstance(policy, str):
        policy = Policy(policy)
    exprs = [e] if isinstance(e, Expr) else list(e)
    t0 = time.perf_counter()
    if all(x.is_zero() for x in exprs):
        return VerificationResult("ProvedZero", "symbolic", seed=policy.seed, elapsed=0.0)
    if policy.kind in ("symbolic", "auto"):
        budget = policy.budget if policy.kind == "auto" else None
        try:
            for x in exprs:
                if budget is not None and x.n_terms > budget:
                    raise BudgetExceeded("input over budget")
            reduced = [rw.reduce(x, budget) for x in exprs]
        except BudgetExceeded:
            reduced = None
        except (ReductionCycle, OrderOverflow) as exc:
            return VerificationResult("Indeterminate", "symbolic", seed=policy.seed, reason=str(exc))
        if reduced is not None:
            nz = [k for k, r in enumerate(reduced) if not r.is_zero()]
            if not nz:
                return VerificationResult("ProvedZero", "symbolic", seed=policy.seed, elapsed=time.perf_counter() - t0)
            # exhibit a witness for the reduced residual
            res = _probabilistic([reduced[k] for k in nz], rw, policy, label, stop_first=True)
            res.mode = "symbolic"
            if res.verdict != "NonZero":
                res = VerificationResult("Indeterminate", "symbolic", seed=policy.seed, reason="nonzero normal form but no nonvanishing point found")
            res.elapsed = time.perf_counter() - t0
            return res
    res = _probabilistic(exprs, rw, policy, label)
    res.elapsed = time.perf_counter() - t0
    return res


def _probabilistic(exprs: list[Expr], rw: RewriteSystem, policy: Policy, label: str, stop_first: bool = False) -> VerificationResult:
    try:
        deg = max(expr_weight(x, rw.weight)[0] for x in exprs)
    except (ReductionCycle, OrderOverflow) as exc:
        return VerificationResult("Indeterminate", "probabilistic", seed=policy.seed, reason=str(exc))
    trials = policy.trials
    poles = 0
    for t in range(trials if not stop_first else max(trials, 64)):
        pt_seed = (policy.seed, label, t)
        value = None
        for attempt in range(MAX_ATTEMPTS):
            pt = OnShellPoint(rw, pt_seed, policy.bound, attempt)
            try:
                vals = [eval_exact(x, pt) for x in exprs]
            except (PoleAtPoint, ZeroDivisionError):
                poles += 1
                continue
            except (ReductionCycle, OrderOverflow) as exc:
                return VerificationResult("Indeterminate", "probabilistic", seed=policy.seed, reason=str(exc))
            value = vals
            break
        if value is None:
            return VerificationResult("Indeterminate", "probabilistic", trials=t, bound=policy.bound, seed=policy.seed, reason="sampling exhausted: every attempt hit a pole")
        for k, v in enumerate(value):
            if v != 0:
                atoms = set(exprs[k].vars)
                witness = {
                    "trial": t,
                    "attempt": pt.attempt,
                    "point_seed": list(pt_seed),
                    "component": k,
                    "value": str(v),
                    "point": pt.describe(atoms),
                }
                return VerificationResult("NonZero", "probabilistic", t + 1, policy.bound, policy.seed, deg, None, witness)
    return VerificationResult("LikelyZero", "probabilistic", trials, policy.bound, policy.seed, deg, _err_bound(deg, policy.bound, trials), details={"pole_resamples": poles} if poles else {})
