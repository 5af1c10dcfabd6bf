"""Command-line front end: ``jetforge list|verify|check|describe|export``."""

from __future__ import annotations

import argparse
import fnmatch
import json
import os
import sys
from dataclasses import fields
from typing import Sequence

from . import __version__
from .claims import UnknownClaim, all_claims, model_claims, select
from .registry import EquationModel, UnknownModel, builtin, list_models
from .report import ClaimOutcome, RunConfig, build_report, run_claims, to_human, to_json, to_markdown

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INDETERMINATE = 2
EXIT_PARSE = 3

RENDER = {"human": to_human, "json": to_json, "markdown": to_markdown}


class ConfigError(ValueError):
    pass


def read_config(path: str) -> dict[str, str]:
    """Parse a ``key = value`` file; ``#`` starts a comment, quotes are optional."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _coerce(name: str, value: str):
    kind = {f.name: f.type for f in fields(RunConfig)}.get(name)
    if kind is None:
        raise ConfigError(f"unknown config key {name!r}")
    if kind == "int":
        return int(value)
    if kind == "bool":
        return value.lower() in ("1", "true", "yes", "on")
    return value


def make_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then JETFORGE_SEED, then the config file, then explicit flags."""
    cfg = RunConfig()
    env_seed = os.environ.get("JETFORGE_SEED")
    if env_seed:
        cfg.seed = int(env_seed)
    if getattr(args, "config", None):
        for key, value in read_config(args.config).items():
            setattr(cfg, key, _coerce(key, value))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    if cfg.policy not in ("auto", "symbolic", "probabilistic"):
        raise ConfigError(f"unknown policy {cfg.policy!r}")
    if cfg.format not in RENDER:
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg


def _emit(text: str, output: str) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _exit_code(outcomes: list[ClaimOutcome]) -> int:
    statuses = {o.status for o in outcomes}
    if "fail" in statuses:
        return EXIT_FAIL
    if "indeterminate" in statuses:
        return EXIT_INDETERMINATE
    return EXIT_OK


def _diagnostics(outcomes: list[ClaimOutcome]) -> None:
    for o in outcomes:
        if o.status == "fail":
            want = "a nonzero witness" if o.claim.expect == "nonzero" else "zero"
            print(f"jetforge: {o.claim.id}: expected {want}, got {o.result.verdict}", file=sys.stderr)
        elif o.status == "indeterminate":
            print(f"jetforge: {o.claim.id}: indeterminate: {o.result.reason}", file=sys.stderr)


def _report(outcomes: list[ClaimOutcome], cfg: RunConfig, elapsed: float) -> int:
    doc = build_report(outcomes, cfg, elapsed)
    _emit(RENDER[cfg.format](doc), cfg.output)
    _diagnostics(outcomes)
    return _exit_code(outcomes)


# ---------------------------------------------------------------------------
# commands


def cmd_list(args: argparse.Namespace) -> int:
    show_models = args.models is not None or args.claims is None
    show_claims = args.claims is not None or args.models is None
    if show_models:
        ids = [m for m in list_models() if fnmatch.fnmatchcase(m, args.models or "*")]
        for mid in ids:
            print(f"{mid:20} {builtin(mid).title}")
        if args.models is None:
            print(f"{len(ids)} models")
    if show_claims:
        claims = select(args.claims)
        for c in claims:
            tag = " (expect nonzero)" if c.expect == "nonzero" else ""
            print(f"{c.id:48} {c.kind:16} {c.summary}{tag}")
        if args.claims is None:
            print(f"{len(claims)} claims")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = make_config(args)
    claims = select(cfg.claims)
    if not claims:
        print(f"jetforge: no claims match {cfg.claims!r}", file=sys.stderr)
        return EXIT_FAIL
    outcomes, elapsed = run_claims(claims, cfg)
    return _report(outcomes, cfg, elapsed)


def cmd_check(args: argparse.Namespace) -> int:
    from .registry.dsl import ParseError, parse_file

    try:
        model = parse_file(args.file)
    except ParseError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {type(exc).__name__}: {exc.message}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"jetforge: {exc}", file=sys.stderr)
        return EXIT_PARSE
    cfg = make_config(args)
    cfg.jobs = 1
    cfg.claims = args.file
    outcomes, elapsed = run_claims(model_claims(model), cfg)
    return _report(outcomes, cfg, elapsed)


def _describe_model(m: EquationModel) -> str:
    lines = [f"model {m.id}: {m.title}"]
    ctx = m.ctx
    lines.append("  independent: " + ", ".join(str(a) for a in ctx.indep_atoms))
    lines.append("  dependent: " + ", ".join(f"{d} (order {k})" for d, k in ctx.dep.items()))
    if ctx.funcs:
        lines.append("  functions: " + ", ".join(str(f) for f in ctx.funcs.values()))
    for eq in m.equations:
        lines.append(f"  equation: {eq.lhs.pretty()} = 0   [solved for {eq.principal}]")
    for c in m.constraints:
        lines.append(f"  constraint: {c.lhs.pretty()} = 0   [solved for {c.principal}]")
    if m.invariant is not None:
        lines.append(f"  invariant: {m.invariant.pretty()}")
    attached = [
        ("symmetry families", [f.block for f in m.families]),
        ("finite part", [str(len(m.finite_part))] if m.finite_part else []),
        ("lax pairs", [lp.name for lp in m.lax]),
        ("coverings", [c.name for c in m.coverings]),
        ("recursion systems", [r.name for r in m.recursions]),
        ("metric", ["given"] if m.metric is not None else []),
    ]
    for label, items in attached:
        if items:
            lines.append(f"  {label}: " + ", ".join(items))
    for note in m.notes:
        lines.append(f"  note: {note}")
    claims = [c.id for c in all_claims().values() if c.model == m.id]
    lines.append(f"  claims: {len(claims)}")
    return "\n".join(lines) + "\n"


def cmd_describe(args: argparse.Namespace) -> int:
    claims = all_claims()
    if args.id in claims:
        c = claims[args.id]
        sys.stdout.write(f"claim {c.id}\n  model: {c.model}\n  kind: {c.kind}\n  expect: {c.expect}\n  {c.summary}\n")
        return EXIT_OK
    try:
        sys.stdout.write(_describe_model(builtin(args.id)))
    except UnknownModel:
        print(f"jetforge: no model or claim named {args.id!r}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def inventory() -> dict:
    """Models and claims as plain data, without running anything."""
    models = []
    for mid in list_models():
        m = builtin(mid)
        models.append(
            {
                "id": m.id,
                "title": m.title,
                "independent": [str(a) for a in m.ctx.indep_atoms],
                "dependent": dict(m.ctx.dep),
                "equations": [eq.lhs.to_str() for eq in m.equations],
                "lax_pairs": [lp.name for lp in m.lax],
                "coverings": [c.name for c in m.coverings],
                "has_metric": m.metric is not None,
            }
        )
    claims = [{"id": c.id, "model": c.model, "kind": c.kind, "expect": c.expect, "summary": c.summary} for c in all_claims().values()]
    return {"schema": "jetforge-inventory/1", "tool": {"name": "jetforge", "version": __version__}, "models": models, "claims": claims}


def _inventory_markdown(inv: dict) -> str:
    lines = [f"# jetforge catalog ({inv['tool']['version']})", "", "## Models", "", "| id | title | lax pairs |", "|---|---|---|"]
    for m in inv["models"]:
        lines.append(f"| `{m['id']}` | {m['title']} | {', '.join(m['lax_pairs'])} |")
    lines += ["", "## Claims", "", "| id | kind | expect | summary |", "|---|---|---|---|"]
    for c in inv["claims"]:
        lines.append(f"| `{c['id']}` | {c['kind']} | {c['expect']} | {c['summary']} |")
    return "\n".join(lines) + "\n"


def cmd_export(args: argparse.Namespace) -> int:
    inv = inventory()
    text = json.dumps(inv, indent=2, sort_keys=True) + "\n" if args.format == "json" else _inventory_markdown(inv)
    _emit(text, args.output or "")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _run_options(p: argparse.ArgumentParser) -> None:
    # defaults are None so that config-file values survive unless a flag is given
    p.add_argument("--seed", type=int, help="random seed (default: $JETFORGE_SEED or 0)")
    p.add_argument("--policy", choices=("auto", "symbolic", "probabilistic"))
    p.add_argument("--trials", type=int, help="evaluation points for probabilistic checks")
    p.add_argument("--bound", type=int, help="sample coordinates from [-bound, bound]")
    p.add_argument("--format", choices=tuple(RENDER))
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--config", help="key = value file mirroring the flags")
    p.add_argument("--timing", action="store_const", const=True, help="include wall-clock times")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jetforge", description="Check symmetry, Lax and self-duality claims for dispersionless integrable PDEs.")
    parser.add_argument("--version", action="version", version=f"jetforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list builtin models and claims")
    p.add_argument("--models", metavar="GLOB")
    p.add_argument("--claims", metavar="GLOB")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("verify", help="run claims and report verdicts")
    p.add_argument("--claims", metavar="GLOB", help="comma-separated globs over claim ids")
    p.add_argument("--jobs", "-j", type=int, help="worker processes")
    _run_options(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check", help="parse a .jf model file and run its checks")
    p.add_argument("file")
    _run_options(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("describe", help="show a model or a claim")
    p.add_argument("id")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("export", help="dump the model and claim catalog")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownClaim, ValueError) as exc:
        print(f"jetforge: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
