import csv
import io

import numpy as np
import pytest

from hwtranspile import pipeline
from hwtranspile.cli import main
from hwtranspile.qasm import dump, load
from hwtranspile.route import bv_circuit

from _circuits import ghz_fan


def parse_report(text: str) -> dict[str, str]:
    return dict(line.split(": ", 1) for line in text.splitlines())


@pytest.fixture
def bv5(tmp_path):
    p = tmp_path / "bv5.q2"
    dump(bv_circuit(5), p)
    return p


@pytest.fixture
def ghz(tmp_path):
    p = tmp_path / "ghz.q2"
    dump(ghz_fan(), p)
    return p


@pytest.fixture
def noise_file(tmp_path):
    p = tmp_path / "noise.txt"
    p.write_text("spam = 0.98\ngr = 0.999\nrz = 0.99\ncz = 0.96\n")
    return p


def test_bv5_star_line_report(bv5, tmp_path, capsys):
    out = tmp_path / "out.q2"
    assert main(["--input", str(bv5), "--passes", "route-star-line", "--coupling", "line:5", "--emit", str(out)]) == 0
    rep = parse_report(capsys.readouterr().out)
    assert rep["swap_count"] == "3"
    assert rep["verified"] == "yes"
    assert load(out).num_qubits == 5


def test_ghz_gr_noise(ghz, noise_file, capsys):
    args = ["--input", str(ghz), "--target", "gr", "--passes", "compile", "--noise", str(noise_file), "--drop-final-rz"]
    assert main(args) == 0
    opt = parse_report(capsys.readouterr().out)
    assert main(args + ["--gr-baseline"]) == 0
    base = parse_report(capsys.readouterr().out)
    assert (opt["rz_count"], opt["gr_count"], opt["gr_area_pi"]) == ("3", "5", "1.500000")
    assert (base["rz_count"], base["gr_count"], base["gr_area_pi"]) == ("10", "8", "4.000000")
    assert float(opt["state_fidelity"]) == pytest.approx(0.78, abs=0.02)
    assert float(base["state_fidelity"]) == pytest.approx(0.71, abs=0.02)
    assert 0.0 < float(opt["hellinger_fidelity"]) <= 1.0


def test_invalid_pass_names_it(bv5, capsys):
    assert main(["--input", str(bv5), "--passes", "compile,teleport"]) != 0
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert "teleport" in err[0]


def test_parse_error_is_located(tmp_path, capsys):
    bad = tmp_path / "bad.q2"
    bad.write_text("qreg q[2];\ncx q[0];\n")
    assert main(["--input", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "parse error" in err and "line 2" in err


def test_config_file_and_unknown_key(bv5, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {bv5}\npasses = route-star-line, merge-cx-swap\ncoupling = line:5\n")
    assert main(["--config", str(cfg)]) == 0
    assert parse_report(capsys.readouterr().out)["two_qubit"] == "7"
    cfg.write_text("colour = blue\n")
    assert main(["--config", str(cfg)]) == 3
    assert "colour" in capsys.readouterr().err


def test_pass_error(bv5, capsys):
    assert main(["--input", str(bv5), "--passes", "route-star-line", "--coupling", "line:3"]) == 3
    assert main(["--input", str(bv5), "--target", "gr", "--gr-baseline", "--passes", "compile"]) == 4
    assert "pass error" in capsys.readouterr().err


def test_failed_verification_exits_nonzero(bv5, monkeypatch, capsys):
    monkeypatch.setattr(pipeline, "verify_routed", lambda *a, **k: False)
    assert main(["--input", str(bv5)]) == 5
    assert "verification" in capsys.readouterr().err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_swap_sweep_linear_vs_quadratic(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["--sweep", "n_qubits=3:20", "--passes", "route-star-line", "--csv", str(out)]) == 0
    rows = _rows(out.read_text())
    star = np.array([int(r["swap_count"]) for r in rows])
    base = np.array([int(r["baseline_swaps"]) for r in rows])
    assert len(rows) == 18
    assert set(np.diff(star, 2)) == {0}
    assert set(np.diff(base, 2)) == {1}


def test_idle_sweep_dd_column(tmp_path, capsys):
    noise = tmp_path / "idle.txt"
    noise.write_text(f"idle_rate = {np.pi / 4 / 2048!r}\nidle_axis = z\n")
    assert main(["--sweep", "idle_dt=1024:4096:1024", "--noise", str(noise), "--passes", "dd:xy4:1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert all(float(r["idle_error_dd"]) <= 1e-6 for r in rows)
    assert float(rows[1]["idle_error_bare"]) > 1e-2


def test_empty_range_is_header_only(capsys):
    assert main(["--sweep", "n_qubits=5:4", "--passes", "route-star-line"]) == 0
    text = capsys.readouterr().out
    assert text.count("\n") == 1
    assert text.startswith("n_qubits,")


def test_unsupported_sweep_variable(capsys):
    assert main(["--sweep", "temperature=1:2"]) == 3
    assert "temperature" in capsys.readouterr().err


def test_gamma_sweep(capsys):
    assert main(["--sweep", "gamma=0:6.2832:0.7854", "--target", "ecr", "--passes", "compile"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 9
    assert all(r["verified"] == "yes" for r in rows)
