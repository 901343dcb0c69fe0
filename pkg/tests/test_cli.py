"""End-to-end CLI runs on small configs: artifacts, determinism, exit codes."""

import json

import numpy as np
import pytest

from diffgeo.cli import main
from diffgeo.io import read_csv, read_json

SCHEDULE = {"kind": "vp_logsnr_linear", "lambda_min": -10.0, "lambda_max": 10.0, "T": 1.0}
GMM1D = {
    "kind": "gmm",
    "weights": [0.275, 0.45, 0.275],
    "means": [[-2.5], [0.5], [2.5]],
    "variance": 0.5625,
}


def write_cfg(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.fixture()
def geo_cfg(tmp_path):
    return write_cfg(tmp_path, "geo.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": GMM1D,
        "endpoints": {"x_a": [-2.5], "x_b": [0.5]},
        "optimizer": {"steps": 60, "learning_rate": 0.05, "n_nodes": 3,
                      "n_gamma": 32, "t_min": 0.05},
    })


def test_geodesic_artifacts_and_determinism(tmp_path, geo_cfg):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["geodesic", "--config", geo_cfg, "--out", str(out1)]) == 0
    assert main(["geodesic", "--config", geo_cfg, "--out", str(out2)]) == 0
    for stem in ("curve.csv", "energy_trace.csv", "report.json", "geodesic.svg"):
        assert (out1 / stem).exists()
    report = read_json(out1 / "report.json")
    for key in ("energy", "length", "n_gamma", "steps", "seed"):
        assert key in report
    assert report["steps"] == 60
    header, mat = read_csv(out1 / "curve.csv")
    assert header[:3] == ["s", "t", "x_1"]
    assert mat.shape[0] == 32
    assert np.all(np.diff(mat[:, 0]) > 0)
    # byte-identical rerun
    assert (out1 / "curve.csv").read_bytes() == (out2 / "curve.csv").read_bytes()
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_geodesic_with_penalties(tmp_path):
    cfg = write_cfg(tmp_path, "pen.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": GMM1D,
        "endpoints": {"x_a": [-2.5], "x_b": [2.5]},
        "optimizer": {"steps": 80, "learning_rate": 0.05, "n_nodes": 3,
                      "n_gamma": 32, "t_min": 0.1},
        "penalties": [{"kind": "low_variance", "rho": 1.0,
                       "ramp": {"delay": 20, "end": 80, "final": 10.0}}],
    })
    out = tmp_path / "out"
    assert main(["geodesic", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "penalty_trace_0.csv").exists()
    report = read_json(out / "report.json")
    assert report["penalty_0_kind"] == "low_variance"
    assert np.isfinite(report["penalty_0_final"])


def test_penalties_reject_spacetime_endpoints(tmp_path):
    cfg = write_cfg(tmp_path, "bad.json", {
        "schedule": SCHEDULE,
        "model": GMM1D,
        "endpoints": {"x_a": [-2.5], "t_a": 0.3, "x_b": [2.5], "t_b": 0.3},
        "optimizer": {"steps": 10, "n_gamma": 16, "n_nodes": 2},
        "penalties": [{"kind": "low_variance"}],
    })
    assert main(["geodesic", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_diffed_matrix_and_threads(tmp_path):
    cfg = write_cfg(tmp_path, "d.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": GMM1D,
        "points": [[-2.5], [0.5], [2.5]],
        "optimizer": {"steps": 80, "learning_rate": 0.05, "n_nodes": 3,
                      "n_gamma": 32, "anchor_logsnr": 2.0},
    })
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["diffed", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["diffed", "--config", cfg, "--out", str(out2), "--threads", "3"]) == 0
    assert (out1 / "distances.csv").read_bytes() == (out2 / "distances.csv").read_bytes()
    report = read_json(out1 / "report.json")
    assert report["n_points"] == 3
    assert report["min_distance"] > 0
    assert report["max_distance"] >= report["min_distance"]


def test_tps_report_schema(tmp_path):
    cfg = write_cfg(tmp_path, "tps.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": {"kind": "gmm", "weights": [0.5, 0.5],
                  "means": [[-1.0, 0.0], [1.0, 0.0]], "variance": 0.2025},
        "potential": {"kind": "double_well"},
        "endpoints": {"x_a": [-1.0, 0.0], "x_b": [1.0, 0.0]},
        "optimizer": {"steps": 100, "learning_rate": 0.05, "n_nodes": 4,
                      "n_gamma": 16, "anchor_logsnr": 6.0, "ceiling_logsnr": 4.0},
        "k_steps": 8,
        "dt": 0.0004,
        "n_paths": 5,
        "lower_bound": {"resolution": 0.05, "pad": 1.0},
    })
    out = tmp_path / "o"
    assert main(["tps", "--config", cfg, "--out", str(out)]) == 0
    report = read_json(out / "report.json")
    for key in ("max_energy_mean", "max_energy_std", "n_energy_evals", "n_paths",
                "geodesic_energy", "baseline_max_energy", "lower_bound", "seed"):
        assert key in report, key
    assert report["n_energy_evals"] == 16 * 8
    assert report["lower_bound"] == pytest.approx(1.0, abs=1e-9)
    assert report["baseline_max_energy"] == pytest.approx(1.0, rel=1e-6)
    header, mat = read_csv(out / "chains.csv")
    assert mat.shape[0] == 5 * (16 * 8 + 1)
    assert (out / "tps.svg").exists()


def test_tps_seed_flag_changes_chains(tmp_path):
    doc = {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": {"kind": "gmm", "weights": [0.5, 0.5],
                  "means": [[-1.0, 0.0], [1.0, 0.0]], "variance": 0.2025},
        "potential": {"kind": "double_well"},
        "endpoints": {"x_a": [-1.0, 0.0], "x_b": [1.0, 0.0]},
        "optimizer": {"steps": 40, "learning_rate": 0.05, "n_nodes": 3,
                      "n_gamma": 12, "anchor_logsnr": 6.0},
        "k_steps": 4,
        "dt": 0.0004,
        "n_paths": 3,
    }
    cfg = write_cfg(tmp_path, "tps2.json", doc)
    o1, o2 = tmp_path / "a", tmp_path / "b"
    assert main(["tps", "--config", cfg, "--out", str(o1)]) == 0
    assert main(["tps", "--config", cfg, "--out", str(o2), "--seed", "9"]) == 0
    assert (o1 / "chains.csv").read_bytes() != (o2 / "chains.csv").read_bytes()
    assert read_json(o2 / "report.json")["seed"] == 9


def test_pullback_threshold_exit_codes(tmp_path):
    cfg = write_cfg(tmp_path, "pb.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "model": GMM1D,
        "x_a": [-2.5],
        "x_b": [2.5],
        "steps": 128,
        "n_interp": 6,
        "data_t": 0.001,
        "method": "heun",
    })
    out = tmp_path / "o"
    assert main(["pullback", "--config", cfg, "--out", str(out),
                 "--threshold", "1e-3"]) == 0
    report = read_json(out / "report.json")
    assert report["max_deviation"] < 1e-3
    assert report["threshold"] == 1e-3
    out2 = tmp_path / "o2"
    assert main(["pullback", "--config", cfg, "--out", str(out2),
                 "--threshold", "1e-12"]) == 3
    # report is still written for the failing run
    assert (out2 / "report.json").exists()


def test_train_writes_checkpoint(tmp_path):
    cfg = write_cfg(tmp_path, "tr.json", {
        "seed": 0,
        "schedule": SCHEDULE,
        "data": {"kind": "gmm", "n_samples": 256,
                 "weights": [1.0], "means": [[0.0]], "variance": 1.0},
        "train": {"steps": 60, "lr": 0.001, "batch_size": 32,
                  "hidden_size": 16, "hidden_layers": 1, "n_freqs": 8},
    })
    out = tmp_path / "o"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    for stem in ("checkpoint.json", "loss_trace.csv", "report.json"):
        assert (out / stem).exists()
    from diffgeo import MlpDenoiser, NoiseSchedule

    model = MlpDenoiser.load(out / "checkpoint.json")
    assert model.schedule == NoiseSchedule.vp_logsnr_linear()
    header, mat = read_csv(out / "loss_trace.csv")
    assert mat.shape[0] == 60


def test_exit_2_on_broken_config(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{oops")
    assert main(["geodesic", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_exit_2_names_valid_backends(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "bad_backend.json", {
        "schedule": SCHEDULE,
        "model": {"kind": "vae"},
        "endpoints": {"x_a": [0.0], "x_b": [1.0]},
        "optimizer": {"steps": 5, "n_gamma": 16, "n_nodes": 2},
    })
    assert main(["geodesic", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "gmm, mlp" in err
