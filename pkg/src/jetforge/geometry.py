"""Conformal metrics from symbols, point-mode curvature and self-duality checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

import flint
from flint.utils.flint_exceptions import DomainError

from .expr import ONE, ZERO, Atom, Expr, ExprError, PoleAtPoint, QuadraticNumber, eval_exact
from .jet import JetContext, VectorField
from .onshell import MAX_ATTEMPTS, OnShellPoint, Policy, RewriteSystem, VerificationResult, _err_bound, verify_zero
from .registry.model import EquationModel, LaxPair

__all__ = [
    "DegenerateSymbol",
    "SingularMetric",
    "Metric",
    "CurvatureBundle",
    "DualityNorms",
    "symbol_matrix",
    "metric_from_symbol",
    "curvature_at",
    "asd_norm_at",
    "duality_samples",
    "check_self_dual",
    "check_null_planes",
    "check_ricci_flat",
    "ricci_at",
    "squarefree_sqrt",
    "duality_degree_bound",
    "ricci_degree_bound",
]

N = 4
PAIRS = list(itertools.combinations(range(N), 2))


class DegenerateSymbol(ExprError):
    pass


class SingularMetric(ExprError):
    pass


@dataclass
class Metric:
    """Symmetric 4x4 matrix of Exprs in the coframe (dx, dy, dz, dt)."""

    g: list[list[Expr]]
    ctx: JetContext
    source: str = "override"
    _d1: dict = field(default_factory=dict, repr=False)
    _d2: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for i in range(N):
            for j in range(N):
                if not (self.g[i][j] - self.g[j][i]).is_zero():
                    raise ValueError("metric must be symmetric")

    def scaled(self, factor: Expr) -> "Metric":
        return Metric([[factor * c for c in row] for row in self.g], self.ctx, self.source)

    def inner(self, a: Sequence[Expr], b: Sequence[Expr]) -> Expr:
        out = ZERO
        for i in range(N):
            for j in range(N):
                if not self.g[i][j].is_zero() and not a[i].is_zero() and not b[j].is_zero():
                    out = out + a[i] * self.g[i][j] * b[j]
        return out

    def d1(self, k: int, i: int, j: int) -> Expr:
        """Total derivative of g_ij along the k-th coordinate (0-based)."""
        i, j = min(i, j), max(i, j)
        key = (k, i, j)
        if key not in self._d1:
            self._d1[key] = self.ctx.D(self.g[i][j], k + 1)
        return self._d1[key]

    def d2(self, k: int, l: int, i: int, j: int) -> Expr:
        k, l = min(k, l), max(k, l)
        i, j = min(i, j), max(i, j)
        key = (k, l, i, j)
        if key not in self._d2:
            self._d2[key] = self.ctx.D(self.d1(k, i, j), l + 1)
        return self._d2[key]

    def pretty(self) -> list[list[str]]:
        return [[c.pretty() for c in row] for row in self.g]

    def det(self) -> Expr:
        return _det(self.g)

    def volume_root(self, rw: RewriteSystem | None = None) -> Expr | None:
        """A rational square root of det g (on-shell when ``rw`` is given).

        Fixing one root for all points makes the orientation global.
        """
        d = self.det()
        for cand in (d, rw.reduce(d) if rw is not None else None):
            if cand is not None:
                r = expr_sqrt(cand)
                if r is not None:
                    return r
        return None


def expr_sqrt(e: Expr) -> Expr | None:
    """Exact square root of a rational function, or None."""
    if any(k % 2 for _, k in e.den):
        return None
    try:
        num = e.num.sqrt()
    except DomainError:
        return None
    root = Expr(e.vars, num, ())
    for f, k in e.den:
        root = root / Expr(f.vars, f.poly, ()) ** (k // 2)
    return root


def symbol_matrix(model: EquationModel, equation: int = 0) -> list[list[Expr]]:
    """``h^ij`` = dF/du_ii on the diagonal and dF/du_ij / 2 off it."""
    eq = model.equations[equation]
    dep = eq.principal.name
    h = [[ZERO] * N for _ in range(N)]
    for i in range(N):
        for j in range(i, N):
            c = eq.lhs.diff(Atom.jet(dep, (i + 1, j + 1)))
            if i != j:
                c = c * flint.fmpq(1, 2)
            h[i][j] = h[j][i] = c
    return h


def _det(m: list[list[Expr]]) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    out = ZERO
    for c in range(n):
        if m[0][c].is_zero():
            continue
        minor = [row[:c] + row[c + 1 :] for row in m[1:]]
        term = m[0][c] * _det(minor)
        out = out + term if c % 2 == 0 else out - term
    return out


def _adjugate(m: list[list[Expr]]) -> list[list[Expr]]:
    n = len(m)
    adj = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(m) if k != i]
            c = _det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return adj


def metric_from_symbol(model: EquationModel, equation: int = 0) -> Metric:
    """Conformal inverse of the symbol: the adjugate of ``h``."""
    h = symbol_matrix(model, equation)
    if _det(h).is_zero():
        raise DegenerateSymbol(f"symbol of {model.id} is degenerate")
    return Metric(_adjugate(h), model.ctx, "symbol")


# ---------------------------------------------------------------------------
# point-mode curvature


def _q(v) -> flint.fmpq:
    if isinstance(v, QuadraticNumber):
        if v.b != 0:
            raise ValueError("metric values must be rational")
        return v.a
    return flint.fmpq(v)


def _val(e: Expr, pt) -> flint.fmpq:
    return flint.fmpq(0) if e.is_zero() else _q(eval_exact(e, pt))


@dataclass
class CurvatureBundle:
    g: list
    ginv: list
    christoffel: list  # [i][j][k] = Gamma^i_jk
    riemann: list  # lowered R_ijkl
    ricci: list
    scalar: Any
    weyl: list  # lowered C_ijkl

    @property
    def det(self) -> flint.fmpq:
        return flint.fmpq_mat(self.g).det()


def curvature_at(metric: Metric, pt) -> CurvatureBundle:
    """Exact Christoffel, Riemann, Ricci and Weyl values at ``pt``."""
    r = range(N)
    g = [[_val(metric.g[i][j], pt) for j in r] for i in r]
    G = flint.fmpq_mat(g)
    if G.det() == 0:
        raise SingularMetric("metric is degenerate at the point")
    Gi = G.inv()
    ginv = [[Gi[i, j] for j in r] for i in r]
    dg = [[[_val(metric.d1(k, i, j), pt) for j in r] for i in r] for k in r]
    ddg = [[[[_val(metric.d2(k, l, i, j), pt) for j in r] for i in r] for l in r] for k in r]
    half = flint.fmpq(1, 2)
    # first kind: Gamma_ljk = (d_j g_lk + d_k g_lj - d_l g_jk) / 2
    gam1 = [[[half * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]) for k in r] for j in r] for l in r]
    gam = [[[sum((ginv[i][l] * gam1[l][j][k] for l in r), flint.fmpq(0)) for k in r] for j in r] for i in r]
    # derivatives of the first kind and of the inverse metric
    dgam1 = [[[[half * (ddg[m][j][l][k] + ddg[m][k][l][j] - ddg[m][l][j][k]) for k in r] for j in r] for l in r] for m in r]
    dginv = [
        [[-sum((ginv[i][a] * dg[m][a][b] * ginv[b][l] for a in r for b in r), flint.fmpq(0)) for l in r] for i in r]
        for m in r
    ]

    def dgam(m: int, i: int, j: int, k: int) -> flint.fmpq:
        return sum((dginv[m][i][l] * gam1[l][j][k] + ginv[i][l] * dgam1[m][l][j][k] for l in r), flint.fmpq(0))

    # R^i_jkl = d_k Gamma^i_lj - d_l Gamma^i_kj + Gamma^i_km Gamma^m_lj - Gamma^i_lm Gamma^m_kj
    Rup = [[[[flint.fmpq(0)] * N for _ in r] for _ in r] for _ in r]
    for i, j in itertools.product(r, r):
        for k, l in itertools.combinations(r, 2):
            v = dgam(k, i, l, j) - dgam(l, i, k, j)
            v += sum((gam[i][k][m] * gam[m][l][j] - gam[i][l][m] * gam[m][k][j] for m in r), flint.fmpq(0))
            Rup[i][j][k][l] = v
            Rup[i][j][l][k] = -v
    R = [[[[sum((g[i][m] * Rup[m][j][k][l] for m in r), flint.fmpq(0)) for l in r] for k in r] for j in r] for i in r]
    ric = [[sum((Rup[i][j][i][l] for i in r), flint.fmpq(0)) for l in r] for j in r]
    scal = sum((ginv[j][l] * ric[j][l] for j in r for l in r), flint.fmpq(0))
    sixth = flint.fmpq(1, 6)
    C = [[[[flint.fmpq(0)] * N for _ in r] for _ in r] for _ in r]
    for i, j, k, l in itertools.product(r, r, r, r):
        C[i][j][k][l] = (
            R[i][j][k][l]
            - half * (g[i][k] * ric[j][l] - g[i][l] * ric[j][k] - g[j][k] * ric[i][l] + g[j][l] * ric[i][k])
            + sixth * scal * (g[i][k] * g[j][l] - g[i][l] * g[j][k])
        )
    return CurvatureBundle(g, ginv, gam, R, ric, scal, C)


def ricci_at(metric: Metric, pt) -> list:
    return curvature_at(metric, pt).ricci


# ---------------------------------------------------------------------------
# Hodge splitting


def squarefree_sqrt(q: flint.fmpq) -> tuple[flint.fmpq, int]:
    """``sqrt(q) = s * sqrt(d)`` with ``s`` rational and ``d`` squarefree."""
    if q == 0:
        raise SingularMetric("zero determinant")
    n = int(q.p) * int(q.q)
    sign = -1 if n < 0 else 1
    n = abs(n)
    s, d = 1, 1
    for p, e in flint.fmpz(n).factor():
        s *= int(p) ** (int(e) // 2)
        if int(e) % 2:
            d *= int(p)
    return flint.fmpq(s, int(q.q)), sign * d


def _levi_civita(idx: tuple) -> int:
    if len(set(idx)) < N:
        return 0
    inv = sum(1 for a, b in itertools.combinations(idx, 2) if a > b)
    return -1 if inv % 2 else 1


@dataclass
class DualityNorms:
    """Squared norms of the two Weyl blocks at a point; ``plus`` uses +sqrt(det g)."""

    plus: flint.fmpq
    minus: flint.fmpq
    d: int

    @property
    def minimal(self) -> tuple[flint.fmpq, str]:
        return (self.plus, "+") if self.plus <= self.minus else (self.minus, "-")

    def vanishing(self) -> str | None:
        tags = [t for t, v in (("+", self.plus), ("-", self.minus)) if v == 0]
        if len(tags) == 2:
            return "both"
        return tags[0] if tags else None


def _block_norm(M: list[list[QuadraticNumber]], d: int) -> flint.fmpq:
    total = flint.fmpq(0)
    for row in M:
        for x in row:
            total += x.a * x.a + abs(d) * x.b * x.b
    return total


def asd_norm_at(metric: Metric, pt, curv: CurvatureBundle | None = None, root: Expr | None = None) -> DualityNorms:
    """Norms of ``P W P`` for both projectors ``P = (1 -/+ *)/2`` on 2-forms.

    ``W`` is the Weyl tensor as an operator on 2-forms and ``*`` the Hodge
    star built with ``sqrt(det g)``; the block with the smaller norm is the
    candidate anti-self-dual part for the chosen orientation.  ``root`` is a
    global square root of det g; without it the positive root is used.
    """
    c = curv or curvature_at(metric, pt)
    r = range(N)
    if root is not None:
        s, d = _val(root, pt), 1
        if s * s != c.det:
            raise ValueError("volume root does not square to det g at the point")
    else:
        s, d = squarefree_sqrt(c.det)
    gi = c.ginv
    # Weyl with the last pair raised, on bivector indices
    W = [[flint.fmpq(0)] * 6 for _ in range(6)]
    for A, (a, b) in enumerate(PAIRS):
        for B, (e, f) in enumerate(PAIRS):
            W[A][B] = sum((c.weyl[a][b][p][q] * (gi[p][e] * gi[q][f] - gi[p][f] * gi[q][e]) for p in r for q in r), flint.fmpq(0)) * flint.fmpq(1, 2)
    # star = s*sqrt(d) * S with S rational
    S = [[flint.fmpq(0)] * 6 for _ in range(6)]
    for A, (a, b) in enumerate(PAIRS):
        for B, (e, f) in enumerate(PAIRS):
            S[A][B] = sum(
                (_levi_civita((a, b, p, q)) * (gi[p][e] * gi[q][f] - gi[p][f] * gi[q][e]) for p, q in PAIRS),
                flint.fmpq(0),
            )
    Wm = flint.fmpq_mat(W)
    Sm = flint.fmpq_mat(S) * s
    # P W P with P = (1 + e*star)/2, star = Sm*sqrt(d): rational part and sqrt(d) part
    rat = (Wm + Sm * Wm * Sm * d) * flint.fmpq(1, 4)
    irr = (Sm * Wm + Wm * Sm) * flint.fmpq(1, 4)
    norms = []
    for e in (1, -1):
        M = [[QuadraticNumber(rat[i, j], e * irr[i, j], d) for j in range(6)] for i in range(6)]
        norms.append(_block_norm(M, d) if d != 1 else sum(((rat[i, j] + e * irr[i, j]) ** 2 for i in range(6) for j in range(6)), flint.fmpq(0)))
    return DualityNorms(norms[0], norms[1], d)


# ---------------------------------------------------------------------------
# degree bound for the sampled duality test


class _Deg:
    """Degree bookkeeping for a rational function ``P / prod(f_k^m_k)``.

    ``n`` bounds deg P; the denominator is kept as named factors so that
    sums over a shared denominator do not inflate the bound.
    """

    __slots__ = ("n", "den", "zero")

    def __init__(self, n: int = 0, den: dict | None = None, zero: bool = False):
        self.n = n
        self.den = den or {}
        self.zero = zero

    @staticmethod
    def of(e: Expr) -> "_Deg":
        if e.is_zero():
            return _Deg(zero=True)
        return _Deg(e.num_degree(), {f: (f.degree, k) for f, k in e.den})

    def _lcm(self, other: "_Deg") -> dict:
        out = dict(self.den)
        for key, (d, k) in other.den.items():
            if key not in out or out[key][1] < k:
                out[key] = (d, k)
        return out

    @staticmethod
    def _excess(big: dict, small: dict) -> int:
        return sum(d * (k - small.get(key, (d, 0))[1]) for key, (d, k) in big.items())

    def __add__(self, other: "_Deg") -> "_Deg":
        if self.zero:
            return other
        if other.zero:
            return self
        den = self._lcm(other)
        return _Deg(max(self.n + self._excess(den, self.den), other.n + self._excess(den, other.den)), den)

    __sub__ = __add__

    def __neg__(self) -> "_Deg":
        return self

    def __mul__(self, other) -> "_Deg":
        if not isinstance(other, _Deg):
            return _Deg(zero=True) if other == 0 else self
        if self.zero or other.zero:
            return _Deg(zero=True)
        den = dict(self.den)
        for key, (d, k) in other.den.items():
            den[key] = (d, den.get(key, (d, 0))[1] + k)
        return _Deg(self.n + other.n, den)

    __rmul__ = __mul__

    def inverse(self, name: str) -> "_Deg":
        """``1/self`` with the numerator of ``self`` recorded as factor ``name``."""
        return _Deg(sum(d * k for d, k in self.den.values()), {name: (self.n, 1)})


def _gdet(m: list) -> "_Deg":
    if len(m) == 1:
        return m[0][0]
    out = _Deg(zero=True)
    for c in range(len(m)):
        minor = [row[:c] + row[c + 1 :] for row in m[1:]]
        out = out + m[0][c] * _gdet(minor)
    return out


def _gsum(terms) -> "_Deg":
    out = _Deg(zero=True)
    for t in terms:
        out = out + t
    return out


def _gmatmul(a: list, b: list) -> list:
    n = len(a)
    return [[_gsum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _curvature_degrees(metric: Metric, rw: RewriteSystem) -> tuple[list, list, list]:
    """Degree bounds for the inverse metric, Ricci and Weyl tensors (mirrors ``curvature_at``)."""
    r = range(N)
    g = [[_Deg.of(rw.reduce(metric.g[i][j])) for j in r] for i in r]
    dg = [[[_Deg.of(rw.reduce(metric.d1(k, i, j))) for j in r] for i in r] for k in r]
    ddg = [[[[_Deg.of(rw.reduce(metric.d2(k, l, i, j))) for j in r] for i in r] for l in r] for k in r]
    inv_det = _gdet(g).inverse("det")
    ginv = [[None] * N for _ in r]
    for i in r:
        for j in r:
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(g) if k != i]
            ginv[j][i] = _gdet(minor) * inv_det
    gam1 = [[[dg[j][l][k] + dg[k][l][j] + dg[l][j][k] for k in r] for j in r] for l in r]
    gam = [[[_gsum(ginv[i][l] * gam1[l][j][k] for l in r) for k in r] for j in r] for i in r]
    dgam1 = [[[[ddg[m][j][l][k] + ddg[m][k][l][j] + ddg[m][l][j][k] for k in r] for j in r] for l in r] for m in r]
    dginv = [[[_gsum(ginv[i][a] * dg[m][a][b] * ginv[b][l] for a in r for b in r) for l in r] for i in r] for m in r]

    def dgam(m: int, i: int, j: int, k: int) -> _Deg:
        return _gsum(dginv[m][i][l] * gam1[l][j][k] + ginv[i][l] * dgam1[m][l][j][k] for l in r)

    Rup = [[[[_Deg(zero=True)] * N for _ in r] for _ in r] for _ in r]
    for i, j in itertools.product(r, r):
        for k, l in itertools.combinations(r, 2):
            v = dgam(k, i, l, j) + dgam(l, i, k, j) + _gsum(gam[i][k][m] * gam[m][l][j] + gam[i][l][m] * gam[m][k][j] for m in r)
            Rup[i][j][k][l] = Rup[i][j][l][k] = v
    R = [[[[_gsum(g[i][m] * Rup[m][j][k][l] for m in r) for l in r] for k in r] for j in r] for i in r]
    ric = [[_gsum(Rup[i][j][i][l] for i in r) for l in r] for j in r]
    scal = _gsum(ginv[j][l] * ric[j][l] for j in r for l in r)
    C = [[[[
        R[i][j][k][l]
        + _gsum([g[i][k] * ric[j][l], g[i][l] * ric[j][k], g[j][k] * ric[i][l], g[j][l] * ric[i][k]])
        + scal * (g[i][k] * g[j][l] + g[i][l] * g[j][k])
        for l in r] for k in r] for j in r] for i in r]
    return ginv, ric, C


def ricci_degree_bound(metric: Metric, rw: RewriteSystem) -> int:
    _, ric, _ = _curvature_degrees(metric, rw)
    return max(x.n for row in ric for x in row)


def duality_degree_bound(metric: Metric, rw: RewriteSystem, root: Expr) -> int:
    """Degree in the free jet values of the numerators of the ``P W P`` blocks.

    Mirrors the arithmetic of ``asd_norm_at`` on degree bounds; a nonzero
    block entry vanishes at a uniformly sampled on-shell point with
    probability at most this degree over the sample range.
    """
    r = range(N)
    ginv, _, C = _curvature_degrees(metric, rw)
    W = [[_gsum(C[a][b][p][q] * (gi_pe * gi_qf + gi_pf * gi_qe)
                for p in r for q in r
                for gi_pe, gi_qf, gi_pf, gi_qe in [(ginv[p][e], ginv[q][f], ginv[p][f], ginv[q][e])])
          for (e, f) in PAIRS] for (a, b) in PAIRS]
    sroot = _Deg.of(rw.reduce(root))
    S = [[_gsum(ginv[p][e] * ginv[q][f] + ginv[p][f] * ginv[q][e] for p, q in PAIRS if _levi_civita((a, b, p, q))) * sroot
          for (e, f) in PAIRS] for (a, b) in PAIRS]
    SW, WS = _gmatmul(S, W), _gmatmul(W, S)
    SWS = _gmatmul(SW, S)
    return max((W[i][j] + SWS[i][j] + SW[i][j] + WS[i][j]).n for i in range(6) for j in range(6))


def _policy(policy: Policy | str | None) -> Policy:
    if policy is None:
        return Policy()
    return Policy(policy) if isinstance(policy, str) else policy


def duality_samples(
    model: EquationModel,
    metric: Metric,
    trials: int = 16,
    seed: Any = 0,
    bound: int = 1000,
) -> tuple[list[tuple[OnShellPoint, DualityNorms]], int]:
    """Duality norms at ``trials`` on-shell points, plus the number of failed samples."""
    out = []
    failures = 0
    k = 0
    root = metric.volume_root(model.rw)
    while len(out) < trials and failures <= 2 * trials:
        for attempt in range(MAX_ATTEMPTS):
            pt = OnShellPoint(model.rw, ("sd", model.id, seed, k), bound, attempt)
            try:
                out.append((pt, asd_norm_at(metric, pt, root=root)))
                break
            except (PoleAtPoint, SingularMetric, ZeroDivisionError):
                failures += 1
        k += 1
    return out, failures


def check_self_dual(
    model: EquationModel,
    metric: Metric | None = None,
    trials: int = 16,
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """One Weyl block vanishes at every sampled point, with a single orientation."""
    pol = _policy(policy)
    if metric is None:
        metric = metric_from_symbol(model) if model.metric is None else Metric(model.metric, model.ctx)
    samples, failures = duality_samples(model, metric, trials, pol.seed, pol.bound)
    if failures > trials // 2 or len(samples) < trials:
        return VerificationResult("Indeterminate", "probabilistic", len(samples), pol.bound, pol.seed, reason=f"{failures} samples hit poles or degenerate metrics")
    tags = set()
    for k, (pt, nm) in enumerate(samples):
        tag = nm.vanishing()
        if tag is None:
            val, orient = nm.minimal
            return VerificationResult(
                "NonZero",
                "probabilistic",
                k + 1,
                pol.bound,
                pol.seed,
                witness={"sample": k, "norm": str(val), "orientation": orient},
            )
        tags.add(tag)
    if tags - {"both"} and len(tags - {"both"}) > 1:
        return VerificationResult("Indeterminate", "probabilistic", trials, pol.bound, pol.seed, reason="vanishing block changes orientation between samples")
    orient = (tags - {"both"} or {"both"}).pop()
    res = VerificationResult("LikelyZero", "probabilistic", trials, pol.bound, pol.seed)
    root = metric.volume_root(model.rw)
    if root is not None:
        res.degree_bound = duality_degree_bound(metric, model.rw, root)
        res.error_bound = _err_bound(res.degree_bound, pol.bound, trials)
    else:
        res.reason = "no rational volume root; degree bound unavailable"
    res.details["orientation"] = orient
    res.details["flat_points"] = sum(1 for _, nm in samples if nm.vanishing() == "both")
    return res


def check_null_planes(
    model: EquationModel,
    metric: Metric,
    lp: LaxPair,
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """``g(V,V)``, ``g(V,W)`` and ``g(W,W)`` vanish on-shell (base directions only)."""
    base = list(model.ctx.indep_atoms)

    def vec(F: VectorField) -> list[Expr]:
        return [F.coeff(a) for a in base]

    v, w = vec(lp.V), vec(lp.W)
    exprs = [metric.inner(v, v), metric.inner(v, w), metric.inner(w, w)]
    return verify_zero(exprs, model.rw, _policy(policy), label)


def check_ricci_flat(
    model: EquationModel,
    metric: Metric,
    trials: int = 8,
    policy: Policy | str | None = None,
    label: str = "",
) -> VerificationResult:
    """Ricci tensor vanishes at ``trials`` on-shell points."""
    pol = _policy(policy)
    done = 0
    for k in range(trials):
        for attempt in range(MAX_ATTEMPTS):
            pt = OnShellPoint(model.rw, ("ricci", model.id, pol.seed, label, k), pol.bound, attempt)
            try:
                ric = ricci_at(metric, pt)
            except (PoleAtPoint, SingularMetric, ZeroDivisionError):
                continue
            bad = [(i, j) for i in range(N) for j in range(N) if ric[i][j] != 0]
            if bad:
                i, j = bad[0]
                return VerificationResult(
                    "NonZero", "probabilistic", k + 1, pol.bound, pol.seed, witness={"sample": k, "entry": [i, j], "value": str(ric[i][j])}
                )
            done += 1
            break
    if done < trials:
        return VerificationResult("Indeterminate", "probabilistic", done, pol.bound, pol.seed, reason="too many degenerate samples")
    deg = ricci_degree_bound(metric, model.rw)
    return VerificationResult("LikelyZero", "probabilistic", trials, pol.bound, pol.seed, deg, _err_bound(deg, pol.bound, trials))
