"""The claim corpus: every checkable statement wired to a verifier.

Each claim has a stable id, the model it is about, a kind and a runner
taking a ``Policy``.  Claims with ``expect="nonzero"`` are perturbations or
known counterexamples; they pass when the verifier finds a nonzero witness.
"""

from __future__ import annotations

import dataclasses
import fnmatch
import time
from dataclasses import dataclass, field
from typing import Callable

from .expr import Atom, Expr, const
from .jet import formal_partial, substitute_dependent
from .onshell import Policy, RewriteSystem, VerificationResult, verify_zero
from .registry import EquationModel, builtin, linearize
from .registry import catalog
from .geometry import Metric, check_null_planes, check_ricci_flat, check_self_dual, duality_samples, metric_from_symbol
from . import verify as V

__all__ = ["Claim", "KINDS", "all_claims", "select", "get_claim", "run_claim", "claim_passed", "UnknownClaim", "model_claims"]

KINDS = (
    "Symmetry",
    "AlgebraHom",
    "Grading",
    "Closure",
    "Invariant",
    "Lax",
    "ZeroCurvature",
    "Covering",
    "Recursion",
    "Gauge",
    "LinearSymDim",
    "RankSpotCheck",
    "Linearization",
    "Reduction",
    "CommutatorSystem",
    "SelfDuality",
    "NullPlanes",
    "RicciFlat",
    "Orientation",
)


class UnknownClaim(KeyError):
    pass


@dataclass(frozen=True)
class Claim:
    id: str
    model: str
    kind: str
    summary: str
    runner: Callable[[Policy], VerificationResult] = field(compare=False, repr=False)
    expect: str = "zero"

    def run(self, policy: Policy) -> VerificationResult:
        t0 = time.perf_counter()
        res = self.runner(dataclasses.replace(policy))
        res.elapsed = time.perf_counter() - t0
        return res


def claim_passed(claim: Claim, res: VerificationResult) -> bool:
    if claim.expect == "nonzero":
        return res.verdict == "NonZero"
    return res.is_zero


def run_claim(claim: Claim, policy: Policy) -> VerificationResult:
    return claim.run(policy)


# ---------------------------------------------------------------------------
# helpers for results that are not zero tests


def _exact(ok: bool | None, details: dict, witness: dict | None = None, reason: str | None = None) -> VerificationResult:
    if ok is None:
        return VerificationResult("Indeterminate", "exact", reason=reason, details=details)
    if ok:
        return VerificationResult("ProvedZero", "exact", details=details)
    return VerificationResult("NonZero", "exact", witness=witness or details, details=details)


def _slug(block: str) -> str:
    return block.replace("'", "p")


THM1_MODELS = ("wave", "heavenly-second", "heavenly-first", "modified-heavenly", "hussain", "general-heavenly")
NONLINEAR = THM1_MODELS[1:]
DEFORMED = ("dfhe", "dmhe", "dhhe", "dghe")


# ---------------------------------------------------------------------------
# symmetry algebras


def _family_claims(mid: str) -> list[Claim]:
    m = builtin(mid)
    out = []
    for fam in m.families:
        out.append(
            Claim(
                f"thm1.{mid}.family.{_slug(fam.block)}",
                mid,
                "Symmetry",
                f"family {fam.block} is a symmetry for an arbitrary function",
                lambda p, m=m, fam=fam: V.check_family(m, fam, p, fam.block),
            )
        )
    for k, f in enumerate(m.finite_part):
        out.append(
            Claim(
                f"thm1.{mid}.finite.{k}",
                mid,
                "Symmetry",
                f"finite-part generator {f.pretty()} is a symmetry",
                lambda p, m=m, f=f, k=k: V.check_symmetry(m, f, p, f"finite{k}"),
            )
        )
    if mid != "wave":
        fams = m.families
        for i, fi in enumerate(fams):
            for fj in fams[i:]:
                if fi.branch != fj.branch:
                    kind, what = "AlgebraHom", "blocks commute"
                else:
                    tgt = V.bracket_target(m, fi, fj)
                    kind = "Grading"
                    what = f"bracket lands in {tgt.block}" if tgt else "bracket vanishes out of range"
                out.append(
                    Claim(
                        f"thm1.{mid}.bracket.{_slug(fi.block)}.{_slug(fj.block)}",
                        mid,
                        kind,
                        f"[{fi.block}, {fj.block}]: {what}",
                        lambda p, m=m, fi=fi, fj=fj: V.check_algebra_hom(m, fi, fj, "auto", p, f"{fi.block}|{fj.block}"),
                    )
                )
    if len(m.finite_part) > 1:
        out.append(Claim(f"thm1.{mid}.finite.closed", mid, "Closure", "finite part closes under the bracket", lambda p, m=m: _closure(m)))
    return out


def _closure(m: EquationModel) -> VerificationResult:
    st = V.finite_part_structure(m)
    details = {k: st[k] for k in ("dimension", "closed", "abelian", "nilpotent", "solvable")}
    return _exact(st["closed"], details)


def _thm1_extra() -> list[Claim]:
    d = builtin("heavenly-first")
    h = builtin("hussain")
    i = builtin("general-heavenly")
    uy, ux = (Expr.atom(Atom.jet("u", (k,))) for k in (2, 1))
    x, y = (Expr.atom(Atom.indep(n)) for n in "xy")
    u = Expr.atom(Atom.jet("u", ()))
    fam_t = next(f for f in i.families if f.block == "a''''0")
    t = Expr.atom(Atom.indep("t"))
    # adding t alone keeps a symmetry: u -> u + c t does not touch second derivatives
    shifted = dataclasses.replace(fam_t, template=lambda dd: dd() + t)
    bad = dataclasses.replace(fam_t, template=lambda dd: dd() + x * t)
    return [
        Claim("thm1.hussain.symmetry.u-yuy", "hussain", "Symmetry", "u - y u_y is a symmetry", lambda p: V.check_symmetry(h, u - y * uy, p, "u-yuy")),
        Claim(
            "thm1.heavenly-first.symmetry.xux-yuy",
            "heavenly-first",
            "Symmetry",
            "x u_x - y u_y is a symmetry",
            lambda p: V.check_symmetry(d, x * ux - y * uy, p, "xux-yuy"),
        ),
        Claim(
            "thm1.heavenly-first.symmetry.perturbed",
            "heavenly-first",
            "Symmetry",
            "x u_x + y u_y is not a symmetry",
            lambda p: V.check_symmetry(d, x * ux + y * uy, p, "xux+yuy"),
            "nonzero",
        ),
        Claim(
            "thm1.general-heavenly.family.shift-t",
            "general-heavenly",
            "Symmetry",
            "A -> A + t is still a symmetry family",
            lambda p: V.check_family(i, shifted, p, "A+t"),
        ),
        Claim(
            "thm1.general-heavenly.family.perturbed",
            "general-heavenly",
            "Symmetry",
            "A -> A + x t is not a symmetry family",
            lambda p: V.check_family(i, bad, p, "A+xt"),
            "nonzero",
        ),
    ]


# ---------------------------------------------------------------------------
# invariants


def _invariant_claims(mid: str) -> list[Claim]:
    m = builtin(mid)
    out = [
        Claim(
            f"thm2.{mid}.invariant.families",
            mid,
            "Invariant",
            "invariant is annihilated by every infinite family",
            lambda p, m=m: V.check_invariant(m, m.invariant, m.families, False, p, "families"),
        ),
        Claim(
            f"thm2.{mid}.invariant.finite",
            mid,
            "Invariant",
            "invariant is annihilated on-shell by every finite-part generator",
            lambda p, m=m: V.check_invariant(m, m.invariant, m.finite_part, True, p, "finite"),
        ),
    ]
    if mid in NONLINEAR:
        for k in (0, 1):
            out.append(
                Claim(
                    f"thm2.{mid}.rank.order{k}",
                    mid,
                    "RankSpotCheck",
                    f"prolonged generators span the fibre of J^{k} at a random point",
                    lambda p, m=m, k=k: _rank(m, k, p),
                )
            )
    return out


def _rank(m: EquationModel, k: int, p: Policy) -> VerificationResult:
    rank, dim = V.rank_spot_check(m, k, seed=p.seed, bound=p.bound)
    details = {"order": k, "rank": rank, "dimension": dim}
    if rank == dim:
        return _exact(True, details)
    return _exact(None, details, reason=f"rank {rank} below {dim}: no conclusion at this point")


def _thm2_extra() -> list[Claim]:
    i = builtin("general-heavenly")
    u11 = Expr.atom(Atom.jet("u", (1, 1)))
    return [
        Claim(
            "thm2.general-heavenly.noninvariant",
            "general-heavenly",
            "Invariant",
            "u_xx is not invariant",
            lambda p: V.check_invariant(i, u11, None, False, p, "u11"),
            "nonzero",
        )
    ]


# ---------------------------------------------------------------------------
# deformations and Lax pairs


def _lax_claims(prefix: str, mid: str) -> list[Claim]:
    m = builtin(mid)
    out = []
    for lp in m.lax:
        pert = lp.name != "main"
        out.append(
            Claim(
                f"{prefix}.{mid}.lax" + ("" if not pert else f".{lp.name}"),
                mid,
                "Lax",
                ("perturbed pair is not integrable: " + lp.note) if pert else "Lax distribution is Frobenius-integrable on-shell",
                lambda p, m=m, lp=lp: V.check_lax(m, lp, p, lp.name),
                "nonzero" if pert else "zero",
            )
        )
    return out


def _dghe_qz() -> Claim:
    def run(p: Policy) -> VerificationResult:
        m = catalog.build_dghe(q_args=(catalog.Z, catalog.U4))
        return V.check_lax(m, "main", p, "Qz")

    return Claim("thm3.dghe.lax.qz", "dghe", "Lax", "the same pair with Q depending on z instead of t fails", run, "nonzero")


def _gauge_claims() -> list[Claim]:
    m = builtin("dhhe-branch")
    return [
        Claim("deform.dhhe-branch.gauge", "dhhe-branch", "Gauge", "u -> u + g(y,z) shifts h by {f,g}", lambda p: V.check_gauge(m, 1, None, p, "gauge")),
        Claim(
            "deform.dhhe-branch.gauge.constant",
            "dhhe-branch",
            "Gauge",
            "a constant g leaves the equation unchanged",
            lambda p: V.check_gauge(m, 1, const(3), p, "gauge-const"),
        ),
        Claim(
            "deform.dhhe-branch.gauge.perturbed",
            "dhhe-branch",
            "Gauge",
            "the shift h -> h - {f,g} is wrong",
            lambda p: V.check_gauge(m, -1, None, p, "gauge-neg"),
            "nonzero",
        ),
    ]


# ---------------------------------------------------------------------------
# dimensions, linearization, recursion, coverings

DIMENSIONS = {
    "wave": 16,
    "heavenly-second": 14,
    "heavenly-first": 13,
    "modified-heavenly": 13,
    "hussain": 12,
    "general-heavenly": 12,
}


def _dim_claim(mid: str, expected: int) -> Claim:
    def run(p: Policy) -> VerificationResult:
        info: dict = {}
        seeds = (3 * p.seed, 3 * p.seed + 1, 3 * p.seed + 2)
        got = V.linear_sym_dimension(builtin(mid), seeds=seeds, bound=p.bound, info=info)
        details = {"dimension": got, "expected": expected, "ranks": info["ranks"]}
        if got is None:
            return VerificationResult("Indeterminate", "probabilistic", len(seeds), p.bound, p.seed, reason="rank differs between seeds", details=details)
        if got != expected:
            return VerificationResult("NonZero", "probabilistic", len(seeds), p.bound, p.seed, witness={"dimension": got, "expected": expected}, details=details)
        deg = info["degree_bound"]
        from .onshell import _err_bound

        return VerificationResult("LikelyZero", "probabilistic", len(seeds), p.bound, p.seed, deg, _err_bound(deg, p.bound, len(seeds)), details=details)

    return Claim(f"dims.{mid}", mid, "LinearSymDim", f"quadratic symmetries span dimension {expected}", run)


def _linearized_dghe() -> Expr:
    u = catalog.u
    p = catalog.jets("phi")
    Q = catalog.fd(catalog.fn("Q", catalog.T, catalog.U4))
    Qu4 = formal_partial(Q, catalog.U4)
    return (
        Q * (u(2, 3) * p(1, 4) + u(1, 4) * p(2, 3))
        - (Q - 1) * (u(3, 4) * p(1, 2) + u(1, 2) * p(3, 4))
        - u(2, 4) * p(1, 3)
        - u(1, 3) * p(2, 4)
        - Qu4 * (u(1, 2) * u(3, 4) - u(1, 4) * u(2, 3)) * p(4)
    )


def _linearize_claims() -> list[Claim]:
    m = builtin("dghe")

    def run(p: Policy) -> VerificationResult:
        diff = linearize(m, "phi") - _linearized_dghe()
        return verify_zero(diff, RewriteSystem(m.ctx.extend(dep=("phi",)), [], "identity"), p, "linearize")

    return [Claim("recursion.dghe.linearize", "dghe", "Linearization", "linearization matches the hand-written operator term for term", run)]


def _recursion_claims(mid: str) -> list[Claim]:
    m = builtin(mid)
    out = []
    for rs in m.recursions:
        pert = rs.name != "main"
        out.append(
            Claim(
                f"recursion.{mid}" + (f".{rs.name}" if pert else ""),
                mid,
                "Recursion",
                "perturbed recursion system is incompatible" if pert else "recursion system is compatible with the equation and its linearization",
                lambda p, m=m, rs=rs: V.check_recursion(m, rs, p, rs.name),
                "nonzero" if pert else "zero",
            )
        )
    return out


def _covering_claims(prefix: str, mid: str) -> list[Claim]:
    m = builtin(mid)
    out = []
    for cov in m.coverings:
        pert = cov.name == "perturbed"
        out.append(
            Claim(
                f"{prefix}.{mid}.covering.{cov.name}",
                mid,
                "Covering",
                "perturbed covering is incompatible" if pert else f"covering on fibre variable {cov.fibre} is compatible",
                lambda p, m=m, cov=cov: V.check_covering(m, cov, p, cov.name),
                "nonzero" if pert else "zero",
            )
        )
    return out


# ---------------------------------------------------------------------------
# multi-component systems


def _multi_claims() -> list[Claim]:
    p2, c2, c3 = builtin("pleb2"), builtin("pleb2-2c"), builtin("pleb2-3c")
    uy, ux = catalog.u(2), catalog.u(1)
    out = [
        Claim("multi.pleb2-2c.zc", "pleb2-2c", "ZeroCurvature", "[T, Z] vanishes on the two-component system", lambda p: V.check_zero_curvature(c2, "main", p, "zc")),
        Claim(
            "multi.pleb2-2c.zc.perturbed",
            "pleb2-2c",
            "ZeroCurvature",
            "flipping the sign of w_x in T breaks zero curvature",
            lambda p: V.check_zero_curvature(c2, "perturbed", p, "zc-pert"),
            "nonzero",
        ),
        Claim("multi.pleb2.zc", "pleb2", "ZeroCurvature", "the reduced pair has zero curvature on the scalar equation", lambda p: V.check_zero_curvature(p2, "main", p, "zc")),
        Claim(
            "multi.pleb2-2c.reduction",
            "pleb2-2c",
            "Reduction",
            "v = u_y, w = u_x maps the system into the scalar equation",
            lambda p: V.check_reduction(c2, p2, {"v": uy, "w": ux}, p, "reduction"),
        ),
        Claim(
            "multi.pleb2-2c.reduction.swapped",
            "pleb2-2c",
            "Reduction",
            "v = u_x, w = u_y is not a reduction",
            lambda p: V.check_reduction(c2, p2, {"v": ux, "w": uy}, p, "reduction-swap"),
            "nonzero",
        ),
        Claim(
            "multi.pleb2.covering.raw",
            "pleb2",
            "Covering",
            "the two-component covering read over the scalar equation without the reduction fails",
            lambda p: V.check_covering(p2, catalog._covering_1(c2.ctx), p, "raw"),
            "nonzero",
        ),
    ]
    for mid in ("pleb2", "pleb2-2c", "pleb2-3c", "pleb1-2c", "pleb1-3c"):
        out += _covering_claims("multi", mid)
    out += _lax_claims("multi", "pleb1-2c")
    sd6 = builtin("sd6")

    def commutator(p: Policy, sign: int) -> VerificationResult:
        E = catalog.sd6_equations(sd6.ctx)
        T, Z = catalog.T, catalog.Z
        expected = {(T, 0): E[3], (T, 1): E[4], (T, 2): E[0], (Z, 0): E[2], (Z, 1): E[5], (Z, 2): E[1]}
        return V.check_commutator_system(sd6.lax[0 if sign > 0 else 1], sd6.ctx, expected, p, "commutator")

    out += [
        Claim(
            "multi.sd6.commutator",
            "sd6",
            "CommutatorSystem",
            "expanding [X, Y] = 0 in powers of lambda gives the six equations",
            lambda p: commutator(p, 1),
        ),
        Claim(
            "multi.sd6.commutator.perturbed",
            "sd6",
            "CommutatorSystem",
            "the sign-flipped pair gives a different system",
            lambda p: commutator(p, -1),
            "nonzero",
        ),
    ]
    out += _lax_claims("multi", "sd6")
    return out


# ---------------------------------------------------------------------------
# conformal geometry


SD_MODELS = NONLINEAR + DEFORMED + ("pleb2-2c", "pleb2-3c", "pleb1-2c", "pleb1-3c", "sd6")


def _sd_claims() -> list[Claim]:
    out = []
    for mid in SD_MODELS:
        m = builtin(mid)
        src = "metric override" if m.metric is not None else "symbol metric"
        out.append(
            Claim(
                f"sd.{mid}",
                mid,
                "SelfDuality",
                f"one Weyl block of the {src} vanishes on solutions with a fixed orientation",
                lambda p, m=m: check_self_dual(m, None, p.trials, p, "sd"),
            )
        )
    for mid in DEFORMED:
        m = builtin(mid)
        for lp in m.lax:
            pert = lp.name != "main"
            out.append(
                Claim(
                    f"sd.{mid}.null" + (f".{lp.name}" if pert else ""),
                    mid,
                    "NullPlanes",
                    "perturbed Lax fields are not null" if pert else "Lax fields span null planes of the symbol metric",
                    lambda p, m=m, lp=lp: check_null_planes(m, metric_from_symbol(m), lp, p, "null"),
                    "nonzero" if pert else "zero",
                )
            )

    def ricci(p: Policy) -> VerificationResult:
        p2, c2 = builtin("pleb2"), builtin("pleb2-2c")
        images = {"v": catalog.u(2), "w": catalog.u(1)}
        g = Metric([[substitute_dependent(e, images, p2.ctx) for e in row] for row in c2.metric], p2.ctx, "reduced")
        return check_ricci_flat(p2, g, 8, p, "ricci")

    out.append(Claim("sd.pleb2.ricci", "pleb2", "RicciFlat", "the reduced two-component metric is Ricci-flat on solutions", ricci))

    def kz(p: Policy) -> VerificationResult:
        m = builtin("kz")
        samples, failures = duality_samples(m, metric_from_symbol(m), p.trials, p.seed, p.bound)
        nonzero = sum(1 for _, nm in samples if nm.vanishing() is None)
        details = {"samples": len(samples), "nonzero": nonzero, "failures": failures}
        need = p.trials - 1
        if len(samples) < p.trials:
            return VerificationResult("Indeterminate", "probabilistic", len(samples), p.bound, p.seed, reason="too few samples", details=details)
        if nonzero >= need:
            return VerificationResult("NonZero", "probabilistic", len(samples), p.bound, p.seed, witness={"nonzero_points": nonzero}, details=details)
        return VerificationResult("LikelyZero", "probabilistic", len(samples), p.bound, p.seed, details=details, reason=f"only {nonzero} nonzero points")

    out.append(Claim("neg.kz.sd", "kz", "SelfDuality", "the Khokhlov-Zabolotskaya metric is not self-dual at almost every point", kz, "nonzero"))
    return out


# ---------------------------------------------------------------------------
# registry of claims

_CLAIMS: dict[str, Claim] | None = None


def _build() -> dict[str, Claim]:
    claims: list[Claim] = []
    for mid in THM1_MODELS:
        claims += _family_claims(mid)
    claims += _thm1_extra()
    for mid in THM1_MODELS:
        claims += _invariant_claims(mid)
    claims += _thm2_extra()
    for mid in DEFORMED + ("dfhe-extra",):
        claims += _lax_claims("thm3", mid)
    claims.append(_dghe_qz())
    for mid in ("dmhe-general", "dmhe-sing1", "dmhe-sing2", "dmhe-sing3", "dhhe-branch"):
        claims += _lax_claims("deform", mid)
    claims += _gauge_claims()
    claims += [_dim_claim(mid, d) for mid, d in DIMENSIONS.items()]
    claims += _linearize_claims()
    for mid in DEFORMED:
        claims += _recursion_claims(mid)
    claims += _covering_claims("recursion", "dghe")
    claims += _multi_claims()
    claims += _sd_claims()
    out: dict[str, Claim] = {}
    for c in claims:
        if c.id in out:
            raise ValueError(f"duplicate claim id {c.id}")
        assert c.kind in KINDS, c.kind
        out[c.id] = c
    return dict(sorted(out.items()))


def all_claims() -> dict[str, Claim]:
    global _CLAIMS
    if _CLAIMS is None:
        _CLAIMS = _build()
    return _CLAIMS


def get_claim(claim_id: str) -> Claim:
    try:
        return all_claims()[claim_id]
    except KeyError:
        raise UnknownClaim(claim_id) from None


def select(patterns: str | list[str] | None = None) -> list[Claim]:
    """Claims whose id matches any of the comma-separated glob patterns, sorted by id."""
    claims = all_claims()
    if not patterns:
        return list(claims.values())
    if isinstance(patterns, str):
        patterns = [p.strip() for p in patterns.split(",") if p.strip()]
    return [c for cid, c in claims.items() if any(fnmatch.fnmatchcase(cid, p) for p in patterns)]


# ---------------------------------------------------------------------------
# claims for a user model


def model_claims(m: EquationModel) -> list[Claim]:
    """Applicable checks for a model read from a file.

    Lax pairs whose name starts with ``perturbed`` are expected to fail.
    """

    def orient(p: Policy) -> VerificationResult:
        info = V.orientation_sanity(m, 32, p.seed, p.bound)
        if info["nonzero"] == 0 and info["vanishing"] == 0:
            return _exact(None, info, reason="every sample point hit a pole")
        return _exact(info["vanishing"] == 0, info)

    out = [Claim(f"{m.id}.orientation", m.id, "Orientation", "principal coefficients are nonzero at 32 on-shell points", orient)]
    for lp in m.lax:
        pert = lp.name.startswith("perturbed")
        out.append(
            Claim(
                f"{m.id}.lax.{lp.name}",
                m.id,
                "Lax",
                f"pair {lp.name} is Frobenius-integrable on-shell" + (" (expected to fail)" if pert else ""),
                lambda p, lp=lp: V.check_lax(m, lp, p, lp.name),
                "nonzero" if pert else "zero",
            )
        )
    return out
