import json
import subprocess
import sys

import pytest

from ptshock import cli
from ptshock.scenarios import Check, ScenarioReport


def run(*argv):
    return subprocess.run([sys.executable, "-m", "ptshock", *argv], capture_output=True,
                          text=True)


def test_shock_times_table(capsys):
    assert cli.main(["shock-times", "--u0", "1/(1+x^2)", "--eps", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split("|")[0].strip() == "eps"
    row = [c.strip() for c in out[2].split("|")]
    assert row == ["3", "0.311791", "0.644466", "0.0770263", "-1.21712"]


def test_shock_times_json(capsys):
    assert cli.main(["shock-times", "--u0", "1/(1+x^2)", "--eps", "3", "--json", "-"]) == 0
    events = json.loads(capsys.readouterr().out)
    assert len(events) == 2 and abs(events[0]["t_s"] - 0.311791) < 1e-6


def test_leading_minus_expression(capsys):
    assert cli.main(["shock-times", "--w0", "-4*x*exp(-2*x^2)"]) == 0
    assert "0.25" in capsys.readouterr().out


def test_syntax_error_exit_two():
    r = run("shock-times", "--u0", "1/(1+x^2", "--json-errors")
    assert r.returncode == 2
    payload = json.loads(r.stderr.strip().splitlines()[-1])
    assert payload["offset"] == 8 and payload["exit_code"] == 2


def test_domain_error_exit_one(capsys):
    assert cli.main(["shock-times", "--u0", "exp(-x^2)", "--eps", "2"]) == 1
    assert "reality_phase" in capsys.readouterr().err


def test_apply_phase_fixes_domain_error(capsys):
    code = cli.main(["shock-times", "--u0", "exp(-x^2)", "--eps", "2", "--phase-sign", "-1",
                     "--apply-phase"])
    assert code == 0 and "0.25" in capsys.readouterr().out


def test_usage_errors(capsys):
    assert cli.main([]) == 2
    assert cli.main(["shock-times", "--eps", "3"]) == 2
    assert cli.main(["scenario", "nope"]) == 2
    assert cli.main(["charges", "--w0", "1/(1+x^2)", "--kappa", "-1"]) in (1, 2)


def test_scenario_failure_exit_three(monkeypatch, capsys):
    bad = ScenarioReport("fake", "", {}, [Check("x", 1.0, 2.0, 1e-3, "rel", "derived", False)])
    monkeypatch.setattr("ptshock.scenarios.run_scenario", lambda name, overrides=None: bad)
    assert cli.main(["scenario", "fake"]) == 3
    assert "FAIL fake" in capsys.readouterr().out


def test_scenario_pass(tmp_path, capsys):
    assert cli.main(["scenario", "gauss_eps2", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("PASS gauss_eps2")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[shock-times]\neps = 5\npoints = 2001\n")
    assert cli.main(["--config", str(cfg), "--show-config", "shock-times",
                     "--u0", "1/(1+x^2)"]) == 0
    shown = capsys.readouterr().out
    assert "eps = 5" in shown and "points = 2001" in shown
    assert cli.main(["shock-times", "--u0", "1/(1+x^2)", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.splitlines()[2].split("|")[1].strip() == "0.394011"
    assert cli.main(["shock-times", "--u0", "1/(1+x^2)", "--config", str(cfg),
                     "--eps", "3"]) == 0
    assert "0.311791" in capsys.readouterr().out


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[shock-times]\nbogus = 1\n")
    assert cli.main(["shock-times", "--u0", "1/(1+x^2)", "--config", str(cfg)]) == 2


def test_show_config_lists_defaults(capsys):
    assert cli.main(["--show-config", "charges"]) == 0
    out = capsys.readouterr().out
    for key in ("window", "tol", "kappa", "t"):
        assert f"\n{key} = " in out


def test_csv_has_17_digits(tmp_path):
    out = tmp_path / "w.csv"
    assert cli.main(["transform", "--direction", "u2w", "--profile", "1/(1+x^2)",
                     "--eps", "3", "--window", "0.5", "2.5", "--points", "5",
                     "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("x,")
    value = lines[1].split(",")[1]
    assert abs(float(value) - (-12 * 0.25 / 1.25**5)) < 1e-14
    assert len(value.lstrip("-").replace(".", "").lstrip("0").split("e")[0]) == 17


def test_transform_round_trip(tmp_path):
    w = tmp_path / "w.csv"
    assert cli.main(["transform", "--direction", "w2u", "--profile", "exp(i*pi/4)/(x^2+1)",
                     "--eps", "3/2", "--out", str(w)]) == 0
    assert w.read_text().splitlines()[0].startswith("x,re_u,im_u")


def test_evolve_writes_branch_files(tmp_path):
    assert cli.main(["evolve", "--w0", "-12*x^2/(1+x^2)^5", "--t", "0.1,0.4",
                     "--window", "-2", "2", "--points", "81", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "branches_t0.1.csv").exists()
    assert (tmp_path / "branches_t0.4.csv").read_text().startswith("x,branch,re_w,im_w")


def test_charges_command(capsys):
    assert cli.main(["charges", "--w0=-12*x^2/(1+x^2)^5", "--kappa", "1,2",
                     "--t", "0.1,0.2"]) == 0
    assert "drift" in capsys.readouterr().out


def test_complex_roots_command(capsys):
    assert cli.main(["complex-roots", "--w0", "exp(i*pi/4)/(x^2+1)"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t_s,x_s,re_z,im_z,residual"
    assert len(out) == 3


def test_identical_runs_identical_output():
    a = run("shock-times", "--u0", "1/(1+(x-1)^2)+1/(1+(x+1)^2)", "--eps", "3")
    b = run("shock-times", "--u0", "1/(1+(x-1)^2)+1/(1+(x+1)^2)", "--eps", "3")
    assert a.returncode == 0 and a.stdout == b.stdout


@pytest.mark.parametrize("argv", [["--version"], ["-h"]])
def test_help_and_version(argv):
    r = run(*argv)
    assert r.returncode == 0


def test_divergent_map_exit_one(capsys):
    assert cli.main(["transform", "--direction", "w2u", "--profile", "exp(i*pi/4)/(x^2+1)",
                     "--eps", "3"]) == 1
    assert "did not converge" in capsys.readouterr().err
