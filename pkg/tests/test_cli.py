"""Command-line interface: subcommand behavior and exit codes."""

import json

import numpy as np
import pytest

from randcech.cli import main
from randcech.pointproc import sample_iid, save_cloud_csv, substream, uniform_box


@pytest.fixture
def cloud_csv(tmp_path):
    cloud = sample_iid(uniform_box(2), 30, substream(600, 0))
    path = tmp_path / "cloud.csv"
    save_cloud_csv(cloud, path)
    return str(path)


def test_enumerate_from_cloud_file(cloud_csv, capsys, tmp_path):
    out = tmp_path / "critical.csv"
    code = main(["enumerate", "--cloud", cloud_csv, "--eps", "0.2",
                 "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "counts by index:" in text
    assert out.exists()


def test_enumerate_global_alternating_sum(capsys, tmp_path):
    code = main(["enumerate", "--density", "uniform_box", "--n", "15",
                 "--d", "2", "--seed", "4", "--global"])
    assert code == 0
    assert "alternating sum: 1" in capsys.readouterr().out


def test_enumerate_needs_radius(cloud_csv):
    assert main(["enumerate", "--cloud", cloud_csv]) == 2


def test_enumerate_missing_cloud_is_config_error(tmp_path):
    assert main(["enumerate", "--cloud", str(tmp_path / "nope.csv"),
                 "--eps", "0.2"]) == 2


def test_cech_with_betti(cloud_csv, capsys):
    code = main(["cech", "--cloud", cloud_csv, "--eps", "0.15", "--betti"])
    assert code == 0
    text = capsys.readouterr().out
    assert "euler characteristic:" in text
    assert "betti numbers:" in text


def test_cech_budget_exit_code(capsys):
    # 40 coincident-scale points at a huge radius blow the simplex budget
    code = main(["cech", "--density", "uniform_box", "--n", "40", "--d", "2",
                 "--seed", "1", "--eps", "5.0"])
    assert code == 3


def test_constants_subcommand(capsys, tmp_path):
    out = tmp_path / "constants.json"
    code = main(["constants", "--d", "2", "--k", "1", "--lambda", "1.0",
                 "--samples", "20000", "--seed", "5", "--out", str(out)])
    assert code == 0
    table = json.loads(out.read_text())
    key = "gamma_k|k=1|j=-|lambda=1.0"
    assert key in table
    assert table[key]["value"] == pytest.approx(1.9136, abs=0.05)


def test_constants_needs_lambda():
    assert main(["constants", "--d", "2", "--k", "1"]) == 2


def test_experiment_subcommand(tmp_path, capsys):
    cfg = {
        "mode": "mean_scaling", "d": 2, "c": 1.0, "beta": 0.75,
        "k_targets": [1], "n_schedule": [50], "trials": 3, "seed": 2,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "results"
    code = main(["experiment", "--config", str(path), "--out-dir", str(out_dir)])
    assert code == 0
    assert (out_dir / "raw_counts.csv").exists()
    assert (out_dir / "report.json").exists()


def test_experiment_bad_config_exit_code(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"mode": "bogus"}))
    assert main(["experiment", "--config", str(path)]) == 2


def test_experiment_malformed_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    assert main(["experiment", "--config", str(path)]) == 2


def test_audit_subcommand(capsys):
    code = main(["audit", "--clouds", "3", "--n", "20", "--radii", "3",
                 "--seed", "0"])
    assert code == 0
    text = capsys.readouterr().out
    assert "0 mismatches" in text
