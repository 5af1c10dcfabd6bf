"""Running claims and rendering reports as text, JSON or Markdown."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from . import __version__
from .claims import Claim, all_claims, claim_passed, get_claim
from .onshell import Policy, VerificationResult

__all__ = ["RunConfig", "ClaimOutcome", "run_claims", "build_report", "to_json", "to_markdown", "to_human", "load_schema", "SCHEMA_ID"]

SCHEMA_ID = "jetforge-report/1"


@dataclass
class RunConfig:
    claims: str = ""
    seed: int = 0
    policy: str = "auto"
    trials: int = 16
    bound: int = 1000
    format: str = "human"
    jobs: int = 1
    output: str = ""
    timing: bool = False

    def policy_obj(self) -> Policy:
        return Policy(self.policy, trials=self.trials, bound=self.bound, seed=self.seed)


@dataclass
class ClaimOutcome:
    claim: Claim
    result: VerificationResult
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and claim_passed(self.claim, self.result)

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        if self.error is not None or self.result.verdict == "Indeterminate":
            return "indeterminate"
        return "fail"


def _run_one(claim: Claim | str, policy: Policy) -> tuple[VerificationResult, str | None]:
    if isinstance(claim, str):
        claim = get_claim(claim)
    try:
        return claim.run(policy), None
    except Exception as exc:  # reported, never swallowed silently
        return VerificationResult("Indeterminate", "error", seed=policy.seed, reason=f"{type(exc).__name__}: {exc}"), f"{type(exc).__name__}: {exc}"


def run_claims(claims: list[Claim], cfg: RunConfig) -> tuple[list[ClaimOutcome], float]:
    """Run ``claims`` (up to ``cfg.jobs`` at a time); outcomes come back sorted by id.

    Worker processes look claims up by id, so claims outside the builtin
    corpus always run in this process.
    """
    policy = cfg.policy_obj()
    claims = sorted(claims, key=lambda c: c.id)
    t0 = time.perf_counter()
    registered = all_claims()
    if cfg.jobs > 1 and len(claims) > 1 and all(registered.get(c.id) is c for c in claims):
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            pairs = list(pool.map(_run_one, [c.id for c in claims], [policy] * len(claims)))
    else:
        pairs = [_run_one(c, policy) for c in claims]
    outcomes = [ClaimOutcome(c, r, e) for c, (r, e) in zip(claims, pairs)]
    return outcomes, time.perf_counter() - t0


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    return str(x)


def _claim_entry(o: ClaimOutcome, timing: bool) -> dict:
    r = o.result
    entry = {
        "id": o.claim.id,
        "model": o.claim.model,
        "kind": o.claim.kind,
        "summary": o.claim.summary,
        "expect": o.claim.expect,
        "status": o.status,
        "verdict": r.verdict,
        "mode": r.mode,
        "trials": r.trials,
        "bound": r.bound,
        "seed": r.seed,
        "witness": _jsonable(r.witness),
        "reason": r.reason,
        "details": _jsonable(r.details),
    }
    if r.verdict == "LikelyZero":
        entry["schwartz_zippel"] = {
            "degree_bound": r.degree_bound,
            "sample_bound": r.bound,
            "trials": r.trials,
            "error_bound": r.error_bound,
        }
    if timing:
        entry["elapsed"] = round(r.elapsed, 4)
    return entry


def build_report(outcomes: list[ClaimOutcome], cfg: RunConfig, elapsed: float | None = None) -> dict:
    counts = {"total": len(outcomes), "pass": 0, "fail": 0, "indeterminate": 0}
    verdicts: dict[str, int] = {}
    for o in outcomes:
        counts[o.status] += 1
        verdicts[o.result.verdict] = verdicts.get(o.result.verdict, 0) + 1
    doc = {
        "schema": SCHEMA_ID,
        "tool": {"name": "jetforge", "version": __version__},
        "config": {
            "claims": cfg.claims or "*",
            "seed": cfg.seed,
            "policy": cfg.policy,
            "trials": cfg.trials,
            "bound": cfg.bound,
        },
        "summary": {**counts, "verdicts": dict(sorted(verdicts.items()))},
        "claims": [_claim_entry(o, cfg.timing) for o in sorted(outcomes, key=lambda o: o.claim.id)],
    }
    if cfg.timing and elapsed is not None:
        doc["timing"] = {"total_seconds": round(elapsed, 3)}
    return doc


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _sz(entry: dict) -> str:
    sz = entry.get("schwartz_zippel")
    if not sz:
        return ""
    return f"deg<={sz['degree_bound']}, err<={sz['error_bound']}"


def to_human(doc: dict) -> str:
    lines = []
    for e in doc["claims"]:
        tag = {"pass": "PASS", "fail": "FAIL", "indeterminate": "INDET"}[e["status"]]
        extra = _sz(e)
        if e["expect"] == "nonzero":
            extra = ("expected nonzero; " + extra).rstrip("; ")
        if e["reason"]:
            extra = (extra + "; " if extra else "") + e["reason"]
        timing = f" {e['elapsed']:.2f}s" if "elapsed" in e else ""
        lines.append(f"{tag:5} {e['id']}  {e['verdict']} ({e['mode']}){timing}" + (f"  [{extra}]" if extra else ""))
    s = doc["summary"]
    lines.append(f"{s['pass']} passed, {s['fail']} failed, {s['indeterminate']} indeterminate of {s['total']} claims (seed {doc['config']['seed']})")
    if "timing" in doc:
        lines.append(f"total time {doc['timing']['total_seconds']:.1f}s")
    return "\n".join(lines) + "\n"


def to_markdown(doc: dict) -> str:
    s = doc["summary"]
    lines = [
        f"# jetforge report ({doc['tool']['version']})",
        "",
        f"Seed {doc['config']['seed']}, policy {doc['config']['policy']}, {doc['config']['trials']} trials, bound {doc['config']['bound']}.",
        "",
        f"**{s['pass']} / {s['total']} passed**, {s['fail']} failed, {s['indeterminate']} indeterminate.",
        "",
        "| claim | model | kind | expect | verdict | mode | status | SZ log |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for e in doc["claims"]:
        lines.append(f"| `{e['id']}` | {e['model']} | {e['kind']} | {e['expect']} | {e['verdict']} | {e['mode']} | {e['status']} | {_sz(e)} |")
    return "\n".join(lines) + "\n"


def load_schema() -> dict:
    return json.loads(resources.files("jetforge").joinpath("report_schema.json").read_text(encoding="utf-8"))
