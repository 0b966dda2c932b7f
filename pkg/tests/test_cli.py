import json
from pathlib import Path

import pytest

from strongconv.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, config_hash, load_config, main


@pytest.fixture
def poly_file(tmp_path):
    p = tmp_path / "x1.json"
    p.write_text('{"r": 1, "D": 1, "terms": [{"word": [[1, false]], "matrix": [1]}]}')
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_moments(capsys):
    code, out, _ = run(capsys, "moments", "--ensemble", "gue", "--word", "1,1,1,1", "--N", "2")
    assert code == EXIT_OK and json.loads(out)["value"] == "9/4"
    code, out, _ = run(capsys, "moments", "--ensemble", "haar-u", "--word", "1,1*", "--N", "4")
    assert json.loads(out)["value"] == "1"
    code, out, _ = run(capsys, "moments", "--ensemble", "haar-sp", "--word", "1,1", "--N", "5")
    assert json.loads(out)["value"] == "-1/10"
    assert run(capsys, "moments", "--ensemble", "haar-u", "--word", "1,1*")[0] == EXIT_INPUT
    assert run(capsys, "moments", "--ensemble", "gue", "--word", "1,x")[0] == EXIT_INPUT


def test_malformed_inputs_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "psi", "--poly", str(bad), "--h", "0,0,1")
    assert code == EXIT_INPUT and "malformed" in err
    assert run(capsys, "psi", "--poly", str(tmp_path / "missing.json"), "--h", "1")[0] == EXIT_INPUT
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nseed = 1\nseed\n")
    code, _, err = run(capsys, "report", "--config", str(cfg))
    assert code == EXIT_INPUT and "line" in err


def test_psi_and_expand(capsys, poly_file):
    code, out, _ = run(capsys, "expand", "--ensemble", "gue", "--poly", poly_file, "--h", "0,0,0,0,1", "--order", "3")
    assert code == EXIT_OK and json.loads(out)["coeffs"] == ["2", "0", "1"]
    assert run(capsys, "psi", "--poly", poly_file, "--h", "0,0,1", "--group", "orthogonal")[0] == EXIT_FAIL
    u = Path(poly_file).with_name("u.json")
    u.write_text('{"r": 1, "D": 1, "terms": [{"word": [[1, false]], "matrix": [1]}, '
                 '{"word": [[1, true]], "matrix": [1]}]}')
    code, out, _ = run(capsys, "psi", "--poly", str(u), "--h", "0,0,1", "--group", "orthogonal")
    assert code == EXIT_OK
    code, out, _ = run(capsys, "psi", "--poly", str(u), "--h", "0,0,1")
    assert code == EXIT_OK and json.loads(out)["info"]


def test_interp_check_csv(capsys):
    code, out, _ = run(capsys, "interp-check", "--q", "5", "--trials", "5")
    lines = out.split("\r\n")
    assert code == EXIT_OK and lines[0] == "q,delta,ratio,trials"
    assert float(lines[1].split(",")[2]) <= 100


def test_sample_deterministic(capsys, poly_file, tmp_path):
    a = run(capsys, "sample", "--ensemble", "gue", "--poly", poly_file, "--N", "20", "--replicas", "5", "--seed", "3")[1]
    b = run(capsys, "sample", "--ensemble", "gue", "--poly", poly_file, "--N", "20", "--replicas", "5",
            "--seed", "3", "--threads", "2")[1]
    assert a == b
    assert a.startswith("replica,N,ensemble,norm,stat_name,stat_value\r\n")
    assert '"seed": 3' in a


@pytest.mark.parametrize("suite", ["exact", "parity", "interp"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "verify", suite)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["pass"] and rep["suites"][suite]["failures" if suite != "interp" else "cap"] >= 0


def test_config_hash_stable_under_reordering(tmp_path):
    a, b = tmp_path / "a.ini", tmp_path / "b.ini"
    a.write_text("[run]\nseed = 5\nthreads = 1\n[experiment.tail]\nn = 50\neps = 0.5\n")
    b.write_text("[experiment.tail]\neps = 0.5\nn = 50\n[run]\nthreads = 1\nseed = 5\n")
    assert config_hash(load_config(str(a))) == config_hash(load_config(str(b)))


def test_experiments_manifest_report_and_rerun(capsys, tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\nseed = 11\nout = {out}\n"
                   "[experiment.tail]\nn = 20,40\nreplicas = 30\n"
                   "[experiment.rate]\nn = 20,40\nreplicas = 10\n"
                   "[experiment.concentration]\nn = 8\nreplicas = 1000\neps = 0.05,0.1\n"
                   "[experiment.hayes]\nn = 6\nreplicas = 5\n")
    for name in ("tail", "rate", "concentration", "hayes"):
        assert main(["experiment", name, "--config", str(cfg)]) == EXIT_OK
    man = json.loads((out / "manifest_tail.json").read_text())
    assert man["seed"] == 11 and all((out / f).exists() for f in man["outputs"])
    assert (out / "tail_bound.dat").read_text().count("\n") == 2
    first = {f: (out / f).read_bytes() for f in ("tail.csv", "rate.csv", "concentration.csv", "hayes_norms.csv")}
    for name in ("tail", "rate", "concentration", "hayes"):
        main(["experiment", name, "--config", str(cfg)])
    assert first == {f: (out / f).read_bytes() for f in first}
    capsys.readouterr()
    code, text, _ = run(capsys, "report", "--config", str(cfg))
    assert code == EXIT_OK
    assert "seed: 11" in text and text.count("PASS") == 4
    (out / "hayes_hist.dat").unlink()
    code, text, _ = run(capsys, "report", "--config", str(cfg))
    assert code == EXIT_FAIL and "WARNING: missing outputs hayes_hist.dat" in text


def test_report_without_runs(capsys, tmp_path):
    code, text, _ = run(capsys, "report", "--out", str(tmp_path / "none"))
    assert "WARNING" in text
