import json
import subprocess
import sys

import numpy as np
import pytest

from riesz_lab.cli import main
from riesz_lab.config import ExperimentConfig
from riesz_lab.grid import Box, GridFunction, load_grid_csv, save_grid_csv


@pytest.fixture
def bump_csv(tmp_path):
    f = GridFunction.from_function(Box(1, 8.0), 512, lambda x: np.exp(-4 * x * x))
    return save_grid_csv(f, tmp_path / "f.csv")


def test_kernel_command(tmp_path, capsys):
    out = tmp_path / "k"
    assert main(["kernel", "--radius", "20", "--out", str(out)]) == 0
    summary = json.loads((out / "kernel.json").read_text())
    assert summary["delta"] == pytest.approx(0.5)
    assert summary["C_hat"] > 0 and summary["saturation_ratio"] >= 1.0
    assert (out / "kernel.csv").read_text().startswith("abs_x,phi,envelope")
    assert json.loads(capsys.readouterr().out)["C_hat"] == summary["C_hat"]


def test_kernel_rejects_integer_case(tmp_path, capsys):
    assert main(["kernel", "--p", "0.5", "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("route", ["spectral", "convolution", "maximal"])
def test_operator_command(tmp_path, bump_csv, route):
    out = tmp_path / route
    assert main(["operator", "--input", str(bump_csv), "--R", "2", "--delta", "0.5", "--route", route, "--out", str(out)]) == 0
    g = load_grid_csv(out / "output.csv")
    assert g.points_per_axis == 512 and np.all(np.isfinite(g.values))
    meta = json.loads((out / "meta.json").read_text())
    assert isinstance(meta["warnings"], list)


def test_operator_missing_input(tmp_path, capsys):
    assert main(["operator", "--input", str(tmp_path / "nope.csv"), "--R", "1", "--delta", "0.5"]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_weights_command(capsys):
    assert main(["weights", "--kind", "power", "--a", "-0.5", "--q", "2", "--M", "128", "--refine", "4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    for key in ("A_q_estimate", "family_size", "refinement_ratio", "q_w_estimate"):
        assert key in rep
    assert rep["q_w_estimate"] == 1.0


def test_norms_command(bump_csv, capsys):
    assert main(["norms", "--input", str(bump_csv), "--p", "0.5", "--weight", "power:-0.5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kind"] == "weak_p" and 0 < rep["value"] <= rep["strong_value"]
    assert rep["weight"] == {"kind": "power", "a": -0.5}


def test_norms_bad_weight(bump_csv):
    with pytest.raises(SystemExit):
        main(["norms", "--input", str(bump_csv), "--p", "0.5", "--weight", "log:2"])


def test_atom_command(tmp_path, capsys):
    out = tmp_path / "atom"
    rc = main(["atom", "--r", "0.5", "--seed", "4", "--M", "2048", "--weight", '{"kind": "power", "a": -0.5}', "--out", str(out)])
    assert rc == 0
    val = json.loads((out / "validation.json").read_text())
    assert val["validation"]["passed"] and val["s"] == 0 and val["q_w"] == 1.0
    assert load_grid_csv(out / "atom.csv").points_per_axis == 2048


def test_atom_rejects_low_s(tmp_path):
    assert main(["atom", "--p", "0.4", "--s", "0", "--out", str(tmp_path)]) == 1


def _config(tmp_path, **kw):
    cfg = ExperimentConfig(M=2048, atoms=2, R_points=6, probes=2, lambda_report=32, output=str(tmp_path / "run"), **kw)
    return cfg.dump(tmp_path / "cfg.json")


def test_verify_command(tmp_path, capsys):
    path = _config(tmp_path)
    rc = main(["verify", "--config", str(path), "--check", "lemma42"])
    assert rc == 0
    assert "lemma42" in capsys.readouterr().out
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["checks"]["lemma42"]["status"] == "pass"


def test_verify_exit_code_on_failure(tmp_path):
    # an impossible max/median tolerance turns thm11 into a violation
    path = _config(tmp_path, tolerances={"max_median": 1e-6})
    assert main(["verify", "--config", str(path), "--check", "thm11", "--out", str(tmp_path / "o")]) == 1


def test_verify_rejects_integer_case_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"p": 0.5}))
    assert main(["verify", "--config", str(path)]) == 1
    assert "integer" in capsys.readouterr().err


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "riesz_lab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("kernel", "operator", "weights", "norms", "atom", "verify"):
        assert cmd in res.stdout
