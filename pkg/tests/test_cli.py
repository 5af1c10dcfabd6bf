import json
import subprocess
import sys

import jsonschema
import pytest

from jetforge import __version__
from jetforge.claims import KINDS, all_claims, claim_passed, model_claims, select
from jetforge.cli import main, read_config
from jetforge.onshell import VerificationResult
from jetforge.registry import builtin
from jetforge.registry.dsl import to_source
from jetforge.report import RunConfig, build_report, load_schema, run_claims, to_human, to_json, to_markdown


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestClaims:
    def test_corpus(self):
        claims = all_claims()
        assert len(claims) >= 60
        assert list(claims) == sorted(claims)
        assert all(c.kind in KINDS for c in claims.values())

    def test_every_lax_recursion_covering_check_has_a_negative_control(self):
        claims = all_claims().values()
        negatives = {(c.model, c.kind) for c in claims if c.expect == "nonzero"}
        for c in claims:
            if c.kind in ("Lax", "Recursion", "Covering", "ZeroCurvature") and c.expect == "zero" and c.model != "pleb2":
                assert (c.model, c.kind) in negatives, c.id

    def test_select(self):
        assert [c.id for c in select("thm3.dghe.lax")] == ["thm3.dghe.lax"]
        both = select("thm3.dmhe.*,neg.*")
        assert "neg.kz.sd" in {c.id for c in both}

    def test_pass_semantics(self):
        c = all_claims()["neg.kz.sd"]
        assert claim_passed(c, VerificationResult("NonZero", "probabilistic"))
        assert not claim_passed(c, VerificationResult("LikelyZero", "probabilistic"))
        assert not claim_passed(c, VerificationResult("Indeterminate", "probabilistic"))

    def test_model_claims(self):
        claims = model_claims(builtin("dmhe"))
        assert {c.id for c in claims} == {"dmhe.orientation", "dmhe.lax.main", "dmhe.lax.perturbed"}


@pytest.fixture(scope="module")
def outcomes():
    cfg = RunConfig(claims="thm3.dmhe.*,neg.kz.sd,dims.heavenly-first,sd.dmhe")
    outcomes, elapsed = run_claims(select(cfg.claims), cfg)
    return cfg, outcomes, elapsed


class TestReport:
    def test_schema(self, outcomes):
        cfg, out, el = outcomes
        jsonschema.validate(build_report(out, cfg, el), load_schema())

    def test_sorted_and_seeded(self, outcomes):
        cfg, out, el = outcomes
        doc = build_report(out, cfg, el)
        ids = [c["id"] for c in doc["claims"]]
        assert ids == sorted(ids)
        assert doc["config"]["seed"] == 0 and doc["tool"]["version"] == __version__

    def test_degree_logs(self, outcomes):
        cfg, out, el = outcomes
        for e in build_report(out, cfg, el)["claims"]:
            if e["verdict"] == "LikelyZero":
                assert e["schwartz_zippel"]["degree_bound"] is not None

    def test_formats_agree(self, outcomes):
        cfg, out, el = outcomes
        doc = build_report(out, cfg, el)
        human = to_human(doc)
        md = to_markdown(doc)
        for e in doc["claims"]:
            line = next(l for l in human.splitlines() if f" {e['id']} " in l)
            assert e["verdict"] in line
            assert f"`{e['id']}`" in md and e["verdict"] in md

    def test_timing_only_on_request(self, outcomes):
        cfg, out, el = outcomes
        assert "timing" not in build_report(out, cfg, el)
        timed = RunConfig(**{**cfg.__dict__, "timing": True})
        assert "timing" in build_report(out, timed, el)

    def test_error_is_indeterminate(self):
        from jetforge.claims import Claim

        def boom(p):
            raise RuntimeError("kaput")

        c = Claim("x.boom", "wave", "Symmetry", "raises", boom)
        out, _ = run_claims([c], RunConfig())
        assert out[0].status == "indeterminate" and "kaput" in out[0].result.reason


class TestCommands:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "list")
        assert code == 0
        lines = out.splitlines()
        n_models = int(next(l for l in lines if l.endswith(" models")).split()[0])
        n_claims = int(next(l for l in lines if l.endswith(" claims")).split()[0])
        assert n_models >= 20 and n_claims >= 60

    def test_list_single_model(self, capsys):
        code, out, _ = run(capsys, "list", "--models", "dghe")
        assert code == 0 and len(out.splitlines()) == 1 and out.startswith("dghe")

    def test_list_claim_block(self, capsys):
        _, out, _ = run(capsys, "list", "--claims", "thm1.*")
        assert out.strip() and all(l.startswith("thm1.") for l in out.splitlines())

    def test_verify_theorem_block(self, capsys):
        code, out, _ = run(capsys, "verify", "--claims", "thm3.*", "--seed", "7")
        assert code == 0 and "(seed 7)" in out

    def test_expected_nonzero(self, capsys):
        code, out, _ = run(capsys, "verify", "--claims", "neg.kz.sd")
        assert code == 0 and "NonZero" in out

    def test_symbolic_mode(self, capsys):
        code, out, _ = run(capsys, "verify", "--claims", "thm3.dghe.lax", "--policy", "symbolic", "--format", "json")
        doc = json.loads(out)
        assert code == 0 and doc["claims"][0]["mode"] == "symbolic"

    def test_no_match(self, capsys):
        code, _, err = run(capsys, "verify", "--claims", "nothing.*")
        assert code == 1 and "no claims" in err

    def test_json_is_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            run(capsys, "verify", "--claims", "thm3.dfhe.*,sd.dmhe", "--format", "json", "--output", str(p))
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_and_config(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("JETFORGE_SEED", "11")
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# settings\nclaims = thm3.dmhe.lax\nformat = json\ntrials = 20\n", encoding="utf-8")
        code, out, _ = run(capsys, "verify", "--config", str(cfg))
        doc = json.loads(out)
        assert code == 0 and doc["config"]["seed"] == 11 and doc["config"]["trials"] == 20
        code, out, _ = run(capsys, "verify", "--config", str(cfg), "--seed", "3", "--format", "human")
        assert "(seed 3)" in out

    def test_config_parser(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text('seed = 5  # note\npolicy = "symbolic"\n\n', encoding="utf-8")
        assert read_config(str(p)) == {"seed": "5", "policy": "symbolic"}

    def test_bad_config_key(self, capsys, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("colour = blue\n", encoding="utf-8")
        code, _, err = run(capsys, "verify", "--config", str(p))
        assert code == 1 and "colour" in err

    def test_describe(self, capsys):
        code, out, _ = run(capsys, "describe", "dghe")
        assert code == 0 and "equation:" in out and "lax pairs: main, perturbed" in out
        code, out, _ = run(capsys, "describe", "neg.kz.sd")
        assert code == 0 and "expect: nonzero" in out
        code, _, _ = run(capsys, "describe", "nope")
        assert code == 1

    def test_export(self, capsys):
        code, out, _ = run(capsys, "export", "--format", "json")
        inv = json.loads(out)
        assert code == 0 and len(inv["models"]) >= 20 and len(inv["claims"]) >= 60
        code, out, _ = run(capsys, "export", "--format", "markdown")
        assert out.startswith("# jetforge catalog")


class TestCheck:
    def test_transcribed_model_passes(self, capsys, tmp_path):
        p = tmp_path / "dmhe.jf"
        p.write_text(to_source(builtin("dmhe")), encoding="utf-8")
        code, out, _ = run(capsys, "check", str(p))
        assert code == 0 and "PASS  dmhe.lax.main" in out

    def test_wrong_spectral_coefficient(self, capsys, tmp_path):
        src = to_source(builtin("dmhe")).replace("field W_main: (-u[3,3]) d x + (1) d y + (lambda", "field W_main: (-u[3,3]) d x + (1) d y + (2*lambda")
        p = tmp_path / "bad.jf"
        p.write_text(src, encoding="utf-8")
        code, out, _ = run(capsys, "check", str(p), "--format", "json")
        doc = json.loads(out)
        main_entry = next(e for e in doc["claims"] if e["id"] == "dmhe.lax.main")
        assert code == 1 and main_entry["verdict"] == "NonZero"

    def test_mismatched_principal(self, capsys, tmp_path):
        p = tmp_path / "m.jf"
        p.write_text("model m\ndep u 2\neq: u[1,1] - u[2,2] = 0 ; principal u[1,2]\n", encoding="utf-8")
        code, _, err = run(capsys, "check", str(p))
        assert code == 3 and f"{p}:3:" in err and "SemanticError" in err

    def test_syntax_error(self, capsys, tmp_path):
        p = tmp_path / "s.jf"
        p.write_text("eq: u[1,4] = \n", encoding="utf-8")
        code, _, err = run(capsys, "check", str(p))
        assert code == 3 and ":1:14:" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "check", str(tmp_path / "absent.jf"))
        assert code == 3


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "jetforge.cli", "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == f"jetforge {__version__}"


def test_parallel_matches_serial(tmp_path):
    cfg = RunConfig(claims="thm3.dfhe.*,thm3.dmhe.*", format="json")
    serial, _ = run_claims(select(cfg.claims), cfg)
    par, _ = run_claims(select(cfg.claims), RunConfig(**{**cfg.__dict__, "jobs": 2}))
    assert to_json(build_report(serial, cfg)) == to_json(build_report(par, cfg))
