import csv
import json

import pytest

from critheat.cli import ExperimentConfig, build_parser, main, make_config, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == 2 and "usage" in err


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nmu = 0.5, 0.9\nT = 0.02\nseed = 3\n")
    assert read_config(cfg) == {"mu": [0.5, 0.9], "T": 0.02, "seed": 3}
    args = build_parser().parse_args(["norms", "--config", str(cfg), "--seed", "7",
                                      "--out", str(tmp_path)])
    c = make_config(args)
    assert c.seed == 7 and c.mu == [0.5, 0.9] and c.T == 0.02 and c.command == "norms"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        read_config(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(tol=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(mu=[0.5, -1.0])


def test_error_record(capsys, tmp_path):
    code, out, err = run(capsys, "norms", "--tol", "-1", "--out", str(tmp_path))
    assert code == 1
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["error"] == "ValueError" and rec["command"] == "norms"


def test_shoot(capsys, tmp_path):
    code, out, _ = run(capsys, "shoot", "--out", str(tmp_path))
    assert code == 0 and "MISMATCH" not in out
    with open(tmp_path / "constants.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows] == ["rho", "rho_implicit", "gamma"]
    assert all(r["within_tolerance"] == "True" for r in rows)
    assert (tmp_path / "profile.csv").exists()


def test_reproducible_outputs(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "semigroup-checks", "--seed", "5", "--out", str(tmp_path / d))[0] == 0
        assert run(capsys, "nonexist", "--mu", "1.1,1.5", "--out", str(tmp_path / d))[0] == 0
    for name in ("semigroup_checks.csv", "kernel.csv", "certificates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_norms_and_report(capsys, tmp_path):
    code, out, _ = run(capsys, "norms", "--mu", "0.5,1", "--out", str(tmp_path))
    assert code == 0 and "mu=1: luxemburg=1.0000000" in out
    code, out, _ = run(capsys, "report", "--out", str(tmp_path))
    assert code == 0 and "norms.csv: 2 rows" in out


def test_evolve(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", "--mu", "0.5,1.0", "--out", str(tmp_path))
    assert code == 0
    assert "mu=0.5:" in out and "skipped" in out
    assert (tmp_path / "evolve_mu0.5_trace.csv").exists()
    assert (tmp_path / "manifest.json").exists()


@pytest.mark.slow
def test_trichotomy_verdicts(capsys, tmp_path):
    code, out, _ = run(capsys, "trichotomy", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "trichotomy.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["verdict"] for r in rows] == ["converged", "converged", "non-unique pair produced",
                                           "violation certificate", "violation certificate"]
    assert all(r["check"] for r in rows)
