import json
import math
from pathlib import Path

import pytest

from gelfand4.cli import main, run
from gelfand4.config import (RunConfig, build_run_config, parse_config_text,
                             resolve_out_dir)
from gelfand4.errors import ConfigError


def test_parse_config_values():
    doc = '''
    # a comment
    command = "sweep"
    family = "singular_power", p = 2.0
    M = 256
    alphas = [0.8, 1.2, 2.0]
    a_f = inf
    '''
    out = parse_config_text(doc)
    assert out["command"] == "sweep"
    assert out["family"] == "singular_power"
    assert out["p"] == 2.0
    assert out["M"] == 256 and isinstance(out["M"], int)
    assert out["alphas"] == [0.8, 1.2, 2.0]
    assert out["a_f"] == math.inf


def test_parse_config_sections_flatten():
    out = parse_config_text('[run]\ncommand = "tau"\n[]\nfamily = "exp"')
    assert out["run.command"] == "tau"
    assert out["family"] == "exp"


def test_parse_config_syntax_errors_carry_position():
    with pytest.raises(ConfigError) as err:
        parse_config_text('command "bounds"')
    assert err.value.line == 1

    with pytest.raises(ConfigError) as err:
        parse_config_text('a = 1\nb = "unterminated')
    assert err.value.line == 2

    with pytest.raises(ConfigError) as err:
        parse_config_text("x = 12..5")
    assert "not a number" in str(err.value)


def test_build_run_config_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    cfg = build_run_config({"command": "bounds", "family": "exp"})
    assert cfg.M == 512
    assert cfg.step == 0.05
    assert cfg.floor == 1e-4
    assert cfg.alphas == (1.2,)
    assert cfg.q_list == (1.0, 2.0)


def test_build_run_config_semantic_errors(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    with pytest.raises(ConfigError) as err:
        build_run_config({"command": "bounds", "family": "power", "p": 0.5})
    assert "p must exceed 1" in str(err.value)
    assert err.value.key == "p"

    with pytest.raises(ConfigError) as err:
        build_run_config({"command": "bounds", "zzz": 1})
    assert "zzz" in str(err.value)

    with pytest.raises(ConfigError):
        build_run_config({"command": "nope"})
    with pytest.raises(ConfigError):
        build_run_config({"command": "sweep", "family": "exp", "M": 32})
    with pytest.raises(ConfigError):
        build_run_config({"command": "sweep", "family": "exp",
                          "step": 0.01, "floor": 0.05})
    with pytest.raises(ConfigError):
        build_run_config({"command": "sweep", "family": "exp",
                          "alphas": [0.4]})


def test_unwritable_output_rejected_before_compute(monkeypatch):
    monkeypatch.delenv("GELFAND4_OUT", raising=False)
    with pytest.raises(ConfigError) as err:
        build_run_config({"command": "bounds", "family": "exp",
                          "out": "/proc/gelfand4_forbidden"})
    assert "not writable" in str(err.value)


def test_resolve_out_dir_env_root(monkeypatch, tmp_path):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert resolve_out_dir(Path("x")) == tmp_path / "x"
    monkeypatch.delenv("GELFAND4_OUT")
    assert resolve_out_dir(Path("x")) == Path("x")


def test_cli_bounds_json(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["bounds", "--family", "power", "--p", "3", "--out", "b"]) == 0
    payload = json.loads((tmp_path / "b" / "bounds.json").read_text())
    assert set(payload) == {"family", "kind", "tau_minus", "tau_plus",
                            "coefficients", "alpha_star", "n_quartic",
                            "n_8tau", "max_dim", "certificate"}
    assert payload["tau_plus"] == pytest.approx(2.0 / 3.0)
    assert payload["coefficients"]["c4"] == pytest.approx((8.0 / 3.0) ** 2 / 4.0)
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["passed"] is True
    assert manifest["config"]["command"] == "bounds"


def test_cli_certify_and_threshold(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["certify", "--formula", "A", "--tau-lo", "0.6667",
                 "--tau-hi", "1", "--step", "1e-3", "--out", "c"]) == 0
    cert = json.loads((tmp_path / "c" / "certificate.json").read_text())
    assert cert["certified"] is True
    grid = (tmp_path / "c" / "certificate_grid.csv").read_text().splitlines()
    assert grid[0] == "tau,alpha,value"
    assert len(grid) > 300

    assert main(["threshold", "--dim", "7", "--kind", "singular",
                 "--scan", "p", "--out", "t"]) == 0
    thr = json.loads((tmp_path / "t" / "threshold.json").read_text())
    assert thr["critical"] == pytest.approx(1.72822, abs=5e-4)


def test_cli_solve_and_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["solve", "--family", "exp", "--n", "3", "--M", "128",
                 "--lambda", "1.0", "--out", "s"]) == 0
    summary = json.loads((tmp_path / "s" / "solve.json").read_text())
    assert summary["u0"] == pytest.approx(0.0196589, abs=1e-6)
    profile = (tmp_path / "s" / "profile.csv").read_text().splitlines()
    assert profile[0] == "r,u,v" and len(profile) == 130

    assert main(["sweep", "--family", "exp", "--n", "3", "--M", "128",
                 "--step", "2.0", "--floor", "0.05",
                 "--alphas", "1.2", "--q", "1,2", "--out", "w"]) == 0
    lines = (tmp_path / "w" / "branch.csv").read_text().splitlines()
    assert lines[0] == ("lambda,u0,mu_min,margin_lemma21,int_f,int_neglap,"
                        "energy,key_ineq_lhs,key_ineq_rhs,I_alpha,alpha")
    u0s = [float(row.split(",")[1]) for row in lines[1:]]
    assert all(b > a for a, b in zip(u0s, u0s[1:]))
    sweep = json.loads((tmp_path / "w" / "sweep.json").read_text())
    assert sweep["n_states"] == len(u0s)


def test_cli_tau_custom_family(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["tau", "--family", "custom", "--f", "exp(t)",
                 "--f1", "exp(t)", "--f2", "exp(t)", "--a-f", "inf",
                 "--out", "ct"]) == 0
    payload = json.loads((tmp_path / "ct" / "tau.json").read_text())
    assert payload["tau_plus"] == pytest.approx(1.0, abs=1e-6)


def test_cli_config_file_with_flag_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    cfg = tmp_path / "doc.cfg"
    cfg.write_text('command = "bounds"\nfamily = "power", p = 3.0\n')
    assert main(["bounds", "--config", str(cfg), "--p", "2.0",
                 "--out", "o"]) == 0
    payload = json.loads((tmp_path / "o" / "bounds.json").read_text())
    assert payload["tau_plus"] == pytest.approx(0.5)    # flag overrode p


def test_cli_bad_parameter_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["bounds", "--family", "power", "--p", "0.5"]) == 2
    assert "p must exceed 1" in capsys.readouterr().err


def test_cli_verify_fast_battery(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["verify", "--out", "v"]) == 0
    manifest = json.loads((tmp_path / "v" / "manifest.json").read_text())
    assert manifest["passed"] is True
    names = {op["name"] for op in manifest["operations"]}
    assert "max_dim[exp]" in names
    assert "threshold_p[dim7]" in names
    assert "certify_B[1,1.57863]" in names
    checksum = manifest["outputs"][0]["sha256"]
    assert len(checksum) == 64


def test_cli_verify_deterministic_csv(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    assert main(["verify", "--out", "d1"]) == 0
    assert main(["verify", "--out", "d2"]) == 0
    a = (tmp_path / "d1" / "verify.csv").read_bytes()
    b = (tmp_path / "d2" / "verify.csv").read_bytes()
    assert a == b


def test_run_manifest_checksums_match_files(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
    cfg = build_run_config({"command": "bounds", "family": "exp", "out": "m"})
    man = run(cfg)
    import hashlib
    for entry in man.outputs:
        digest = hashlib.sha256(Path(entry["path"]).read_bytes()).hexdigest()
        assert digest == entry["sha256"]


def test_no_command_prints_help(capsys):
    assert main([]) == 2
