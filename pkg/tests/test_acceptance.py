"""Acceptance gate: nine criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import subprocess
import sys
from pathlib import Path

import pytest

from jetforge.claims import all_claims, select
from jetforge.report import RunConfig, build_report, run_claims, to_json

NONLINEAR = ["heavenly-second", "heavenly-first", "modified-heavenly", "hussain", "general-heavenly"]
ZERO = {"ProvedZero", "LikelyZero"}
MIN = 60.0

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def run_block(patterns: str, **cfg) -> tuple[dict, float]:
    conf = RunConfig(claims=patterns, **cfg)
    outcomes, elapsed = run_claims(select(patterns), conf)
    return {o.claim.id: o for o in outcomes}, elapsed


def failures(outcomes: dict) -> list[str]:
    return [f"{cid}={o.result.verdict}" for cid, o in outcomes.items() if not o.passed]


def test_criterion_1_symmetry_structure():
    out, dt = run_block("thm1.*")
    zero = {cid: o for cid, o in out.items() if o.claim.expect == "zero"}
    by_model = {m: [o for o in zero.values() if o.claim.model == m] for m in NONLINEAR}
    kinds = {o.claim.kind for o in zero.values()}
    ok = (
        all(by_model[m] for m in NONLINEAR)
        and {"Symmetry", "AlgebraHom", "Grading"} <= kinds
        and all(o.result.verdict == "ProvedZero" for o in zero.values())
        and not failures(out)
        and dt <= 10 * MIN
    )
    record(1, ok, f"{len(zero)} structure claims ProvedZero, {len(out) - len(zero)} negative controls, {dt:.1f}s; failures={failures(out)}")


def test_criterion_2_invariants_and_rank():
    out, dt = run_block("thm2.*")
    ranks = {(o.claim.model, o.result.details.get("order")): o for o in out.values() if o.claim.kind == "RankSpotCheck"}
    full = all(
        (m, k) in ranks and ranks[(m, k)].result.details["rank"] == ranks[(m, k)].result.details["dimension"]
        for m in NONLINEAR for k in (0, 1)
    )
    inv = [o for o in out.values() if o.claim.kind == "Invariant" and o.claim.expect == "zero"]
    covered = {o.claim.model for o in inv} >= set(NONLINEAR)
    exact = all(o.result.verdict == "ProvedZero" for o in out.values() if o.claim.expect == "zero")
    ok = full and covered and exact and not failures(out) and dt <= 5 * MIN
    record(2, ok, f"{len(inv)} invariant claims, full rank at orders 0 and 1 for {len(NONLINEAR)} models, {dt:.1f}s")


def test_criterion_3_lax_pairs():
    # both routes: the default (symbolic first) and pure sampling at 16 points, B = 1000
    auto, dt1 = run_block("thm3.*")
    sampled, dt2 = run_block("thm3.*", policy="probabilistic", trials=16, bound=1000)
    pairs = ["thm3.dfhe.lax", "thm3.dmhe.lax", "thm3.dhhe.lax", "thm3.dghe.lax", "thm3.dfhe-extra.lax"]
    present = all(p in auto for p in pairs)
    route_a = present and all(auto[p].result.verdict in ZERO for p in pairs)
    route_b = present and all(
        sampled[p].result.verdict == "ProvedZero"
        or (sampled[p].result.verdict == "LikelyZero" and sampled[p].result.trials >= 16 and sampled[p].result.bound == 1000 and sampled[p].result.degree_bound is not None)
        for p in pairs
    )
    negatives = [o for o in {**auto, **{k + "@sampled": v for k, v in sampled.items()}}.values() if o.claim.expect == "nonzero"]
    neg_ok = len({o.claim.id for o in negatives}) >= 4 and all(o.result.verdict == "NonZero" for o in negatives)
    ok = route_a and route_b and neg_ok and not failures(auto) and not failures(sampled) and dt1 + dt2 <= 10 * MIN
    record(3, ok, f"{len(pairs)} pairs integrable on both routes, {len({o.claim.id for o in negatives})} perturbed variants NonZero, {dt1 + dt2:.1f}s")


def test_criterion_4_deformation_branches():
    out, dt = run_block("deform.*")
    needed = ["deform.dmhe-general.lax", "deform.dmhe-sing1.lax", "deform.dmhe-sing2.lax", "deform.dmhe-sing3.lax", "deform.dhhe-branch.lax"]
    branches = all(n in out and out[n].result.verdict in ZERO for n in needed)
    gauge = "deform.dhhe-branch.gauge" in out and out["deform.dhhe-branch.gauge"].result.verdict == "ProvedZero"
    ok = branches and gauge and not failures(out) and dt <= 10 * MIN
    record(4, ok, f"{len(needed)} branches integrable, gauge identity ProvedZero, {dt:.1f}s")


def test_criterion_5_symmetry_dimensions():
    expected = {"wave": 16, "heavenly-second": 14, "heavenly-first": 13, "modified-heavenly": 13, "hussain": 12, "general-heavenly": 12}
    out, dt = run_block("dims.*")
    got = {o.claim.model: o.result.details.get("dimension") for o in out.values()}
    ok = got == expected and not failures(out) and dt <= 2 * MIN
    record(5, ok, f"dimensions {got}, {dt:.1f}s")


def test_criterion_6_linearization_and_recursion():
    out, dt = run_block("recursion.*")
    lin = out.get("recursion.dghe.linearize")
    recs = [f"recursion.{m}" for m in ("dfhe", "dmhe", "dhhe", "dghe")]
    cov = out.get("recursion.dghe.covering.main")
    ok = (
        lin is not None and lin.result.verdict == "ProvedZero"
        and all(r in out and out[r].result.verdict in ZERO for r in recs)
        and cov is not None and cov.result.verdict in ZERO
        and not failures(out)
        and dt <= 15 * MIN
    )
    record(6, ok, f"linearization ProvedZero, {len(recs)} recursion systems and the covering pass, {dt:.1f}s")


def test_criterion_7_multicomponent_systems():
    out, dt = run_block("multi.*")
    zc = out.get("multi.pleb2-2c.zc")
    red = out.get("multi.pleb2-2c.reduction")
    covers = ["multi.pleb2-2c.covering.spectral", "multi.pleb2-3c.covering.nonlinear", "multi.pleb1-2c.covering.spectral", "multi.pleb1-3c.covering.nonlinear"]
    comm = out.get("multi.sd6.commutator")
    ok = (
        zc is not None and zc.result.verdict in ZERO
        and red is not None and red.result.verdict == "ProvedZero"
        and all(c in out and out[c].result.verdict in ZERO for c in covers)
        and comm is not None and comm.result.verdict == "ProvedZero"
        and not failures(out)
        and dt <= 15 * MIN
    )
    record(7, ok, f"commuting pair, reduction, {len(covers)} coverings and the six-equation commutator system pass, {dt:.1f}s")


def test_criterion_8_self_duality():
    out, dt = run_block("sd.*,neg.kz.sd")
    metrics = ["sd.dfhe", "sd.dmhe", "sd.dhhe", "sd.dghe", "sd.pleb2-2c", "sd.pleb2-3c", "sd.pleb1-2c", "sd.pleb1-3c", "sd.sd6"]

    def sampled_zero(cid: str) -> bool:
        o = out.get(cid)
        if o is None:
            return False
        r = o.result
        return r.verdict == "LikelyZero" and r.trials >= 16 and r.bound == 1000 and r.degree_bound is not None and r.details.get("orientation") in ("+", "-")

    sd_ok = all(sampled_zero(c) for c in metrics)
    kz = out.get("neg.kz.sd")
    kz_ok = kz is not None and kz.result.verdict == "NonZero" and kz.result.details.get("nonzero", 0) >= 15 and kz.result.details.get("samples") == 16
    ricci = out.get("sd.pleb2.ricci")
    ricci_ok = ricci is not None and ricci.result.verdict in ZERO and ricci.result.trials >= 8
    ok = sd_ok and kz_ok and ricci_ok and not failures(out) and dt <= 30 * MIN
    kz_count = kz.result.details.get("nonzero") if kz else None
    record(8, ok, f"{len(metrics)} metrics self-dual at 16 points, KZ nonzero at {kz_count}/16, Ricci flat at 8 points, {dt:.1f}s")


def test_criterion_9_determinism_and_degree_logs(tmp_path: Path):
    files = [tmp_path / f"run{i}.json" for i in (1, 2)]
    for f in files:
        subprocess.run([sys.executable, "-m", "jetforge.cli", "verify", "--format", "json", "--output", str(f)], check=True, capture_output=True)
    a, b = (f.read_bytes() for f in files)
    # the in-process run must agree with the separate processes too
    cfg = RunConfig(format="json")
    outcomes, _ = run_claims(select(None), cfg)
    c = to_json(build_report(outcomes, cfg)).encode("utf-8")
    doc = build_report(outcomes, cfg)
    probabilistic = [e for e in doc["claims"] if e["mode"] == "probabilistic" and e["verdict"] in ("LikelyZero", "NonZero")]
    sz = [e.get("schwartz_zippel", {}) for e in probabilistic if e["verdict"] == "LikelyZero"]
    logged = all(s.get("degree_bound") is not None and s.get("error_bound") is not None for s in sz)
    ok = a == b == c and len(doc["claims"]) == len(all_claims()) and logged
    record(9, ok, f"{len(doc['claims'])} claims, json byte-identical across 3 runs: {a == b == c}, degree logs on {len(sz)} sampled verdicts")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
