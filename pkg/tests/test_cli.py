import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from diagsvm.cli import main
from diagsvm.experiment import ConfigError, load_config, parse_config, trace_csv
from diagsvm.metrics import MetricRow, TRACE_COLUMNS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
HEADER = "t,lambda_t,dual_obj,dual_gap,norm_error,margin,margin_gap,angle_gap,test_error,energy"


def write_cfg(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return p


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_minimal_config(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(CONFIGS / "minimal.yaml"), "--output-dir", str(out)]) == 0
    text = (out / "alg1_trace.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 3
    summary = json.loads((out / "summary.json").read_text())
    oracle = summary["grid_points"]["default"]["oracle"]
    assert set(oracle["kkt_residuals"]) == {
        "primal_feasibility", "complementary_slackness", "dual_feasibility", "stationarity"
    }
    run = summary["runs"]["alg1"]
    assert run["rows"] == 2 and run["terminal"]["t"] == 1
    assert summary["seed"] == 0 and "wall_time" in summary
    assert summary["grid_points"]["default"]["op_norm"] > 0


def test_trace_csv_format():
    text = trace_csv([MetricRow(t=0, lambda_t=0.1, margin=1e-17), MetricRow(t=1)])
    assert text.splitlines()[0] == ",".join(TRACE_COLUMNS) == HEADER
    assert text.splitlines()[1] == "0,0.1,,,,1e-17,,,,"
    assert text.splitlines()[2] == "1,,,,,,,,,"


def test_byte_determinism(tmp_path):
    cfg = {
        "data": {"source": "gaussian_blobs", "n_total": 100, "split": 0.5, "noise_p": 0.1},
        "kernel": {"type": "gaussian", "sigma2": 0.15},
        "iterations": 40,
        "compute_oracle": False,
        "algorithms": ["alg1", {"name": "alg2", "alpha": 3}],
    }
    p = write_cfg(tmp_path, cfg)
    for d in ("a", "b"):
        assert main(["run", str(p), "--output-dir", str(tmp_path / d)]) == 0
    for name in ("alg1_trace.csv", "alg2_alpha3.0_trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_rows(tmp_path / "a" / "alg1_trace.csv")
    assert len(rows) == 41 and rows[-1]["test_error"] != "" and rows[-1]["dual_gap"] == ""


def test_grid_files(tmp_path):
    cfg = {
        "data": {"source": "gaussian_blobs", "n_total": 60, "split": 0.5},
        "kernel": {"type": "gaussian", "sigma2": 0.15},
        "iterations": 5,
        "compute_oracle": False,
        "algorithms": ["alg1", "alg2"],
        "grid": {"schedule.lambda0": [0.01, 10, 100], "data.noise_p": [0, 0.1, 0.2]},
    }
    out = tmp_path / "g"
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--output-dir", str(out)]) == 0
    traces = sorted(out.glob("*_trace.csv"))
    assert len(traces) == 18
    assert (out / "alg1__lambda0=10_noise_p=0.1_trace.csv").exists()
    for t in traces:
        assert len(t.read_text().splitlines()) == 7


def test_compare_duplicate_algorithm(tmp_path):
    cfg = {"iterations": 20, "algorithms": ["alg1", "alg1"]}
    out = tmp_path / "c"
    assert main(["compare", str(write_cfg(tmp_path, cfg)), "--output-dir", str(out)]) == 0
    rows = read_rows(out / "comparison.csv")
    assert len(rows) == 21
    assert list(rows[0]) == ["t", "alg1:margin_gap", "alg1:test_error",
                             "alg1_2:margin_gap", "alg1_2:test_error"]
    assert all(r["alg1:margin_gap"] == r["alg1_2:margin_gap"] for r in rows)


def test_compare_subgradient_vs_alg1(tmp_path):
    out = tmp_path / "s"
    assert main(["compare", str(CONFIGS / "subgradient_vs_alg1.yaml"),
                 "--output-dir", str(out)]) == 0
    last = read_rows(out / "comparison.csv")[-1]
    assert float(last["subgrad_hinge:margin_gap"]) > float(last["alg1:margin_gap"])


def test_compare_alg2_vs_alg1(tmp_path):
    out = tmp_path / "f2"
    assert main(["compare", str(CONFIGS / "anchor_inertial.yaml"),
                 "--output-dir", str(out)]) == 0
    last = read_rows(out / "comparison.csv")[-1]
    assert float(last["alg2_alpha10.0:margin_gap"]) <= 2 * float(last["alg1:margin_gap"])
    assert len(list(out.glob("*_trace.csv"))) == 4


def test_baselines_and_tikhonov_in_runner(tmp_path):
    cfg = {
        "iterations": 30,
        "algorithms": [
            {"name": "gd_margin", "loss": "exponential", "gamma": 1e-3},
            {"name": "subgrad_hinge", "gamma": 1e-3, "rule": "inv_sqrt"},
            {"name": "tikhonov_path", "lambdas": [10, 1]},
        ],
    }
    out = tmp_path / "b"
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--output-dir", str(out)]) == 0
    assert len(read_rows(out / "gd_margin_exponential_trace.csv")) == 31
    tik = read_rows(out / "tikhonov_path_trace.csv")
    assert [r["lambda_t"] for r in tik] == ["10.0", "1.0"]
    assert float(tik[1]["norm_error"]) < 1e-8


def test_set_override(tmp_path):
    cfg = load_config(CONFIGS / "minimal.yaml", ["iterations=7", "schedule.family=sqrt"])
    assert cfg.iterations == 7 and cfg.schedule.family == "sqrt"


@pytest.mark.parametrize(
    "raw",
    [
        {"algorithms": []},
        {"iterations": 0},
        {"bogus": 1},
        {"algorithms": ["alg9"]},
        {"algorithms": [{"name": "alg2", "alpha": 1}]},
        {"kernel": {"type": "gaussian"}},
        {"schedule": {"family": "linear", "lambda0": 0}},
        {"data": {"noise_p": 1.5}},
        {"grid": {"iterations": 3}},
    ],
)
def test_config_errors(tmp_path, raw):
    with pytest.raises(ConfigError):
        parse_config(raw)
    assert main(["run", str(write_cfg(tmp_path, raw)), "--output-dir", str(tmp_path)]) == 2


def test_gaussian_baseline_rejected(tmp_path):
    cfg = {"kernel": {"type": "gaussian", "sigma2": 1.0}, "compute_oracle": False,
           "algorithms": ["subgrad_hinge"]}
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--output-dir", str(tmp_path)]) == 2


def test_oracle_failure_exit(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("1,1,1\n1,1,-1\n")
    cfg = {"data": {"source": "file", "path": "d.csv"}, "iterations": 3}
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--output-dir", str(tmp_path / "o")]) == 3
    cfg["compute_oracle"] = False
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--output-dir", str(tmp_path / "o")]) == 0


def test_io_error_exit(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(CONFIGS / "minimal.yaml"), "--output-dir", str(blocker)]) == 4
    assert main(["run", str(tmp_path / "missing.yaml")]) == 4


def test_oracle_command(capsys):
    assert main(["oracle", str(CONFIGS / "minimal.yaml")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["w_star"] == pytest.approx([0.5, 0.5], abs=1e-6)
    assert "kkt_residuals" in out


def test_gen_command(tmp_path):
    dc = tmp_path / "data.yaml"
    dc.write_text("source: gaussian_blobs\nn_total: 20\nseed: 4\n")
    out = tmp_path / "blobs.csv"
    assert main(["gen", str(dc), str(out)]) == 0
    assert len(out.read_text().splitlines()) == 20
    dc.write_text("data: {source: support_anchor, n_total: 10}\n")
    assert main(["gen", str(dc), str(out)]) == 0
    assert out.read_text().splitlines()[0] == "0.5,1.5,1"
    dc.write_text("source: nowhere\n")
    assert main(["gen", str(dc), str(out)]) == 2


def test_help_lists_every_key():
    res = subprocess.run([sys.executable, "-m", "diagsvm", "run", "--help"],
                         capture_output=True, text=True, check=True)
    for key in ("data.source", "data.noise_p", "kernel.sigma2", "schedule.family",
                "gamma", "iterations", "compute_oracle", "output_dir", "algorithms",
                "grid", "seed"):
        assert key in res.stdout
