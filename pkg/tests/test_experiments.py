"""Experiment runners and the command-line entry point, on shrunken grids."""

import json

import numpy as np
import pandas as pd
import pytest

from oscinet import cli
from oscinet.experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from oscinet.recovery import RecoverConfig


def _tiny_time_cfg(out):
    return ExperimentConfig(
        "time-sweep", n_nodes=4, seeds=1, t_grid=(20, 40), out_dir=str(out)
    )


# ---------------------------------------------------------------------------
# configuration

def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig("warp-drive")
    with pytest.raises(ValueError):
        ExperimentConfig("time-sweep", seeds=0)
    with pytest.raises(ValueError):
        ExperimentConfig("time-sweep", t_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig("time-sweep", methods=("ridge",))


def test_config_pipeline_defaults():
    assert ExperimentConfig("time-sweep").pipeline.smooth == "after"
    assert ExperimentConfig("noise-sweep").pipeline.smooth == "before"
    # dicts (as loaded from JSON) are coerced back into the dataclass
    cfg = ExperimentConfig(
        "time-sweep", pipeline={"smooth": "before", "extensions": [1, 2]}
    )
    assert cfg.pipeline == RecoverConfig(smooth="before", extensions=(1, 2))


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig("size-sweep", n_grid=(4, 5, 6), seeds=3, master_seed=7)
    path = tmp_path / "cfg.json"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg
    # grids survive the JSON list detour as tuples
    assert ExperimentConfig.load(path).n_grid == (4, 5, 6)


# ---------------------------------------------------------------------------
# runners on shrunken grids

def test_time_sweep_outputs(tmp_path):
    cfg = _tiny_time_cfg(tmp_path / "out")
    summary = run_experiment(cfg)
    assert summary["failures"] == []
    out = tmp_path / "out"
    for name in ("time_sweep_runs.csv", "time_sweep.csv", "time_sweep.svg",
                 "manifest.json"):
        assert (out / name).exists()

    runs = pd.read_csv(out / "time_sweep_runs.csv")
    assert set(runs["method"]) == {"LASSO", "L2"}
    assert set(runs["t_n"]) == {20, 40}
    assert len(runs) == 4    # 1 seed x 2 times x 2 methods
    for col in ("fp", "fn", "total", "kappa_s", "kappa_s_incoming",
                "log10_sigma_min", "c_hat", "n_columns", "seed"):
        assert col in runs.columns

    agg = pd.read_csv(out / "time_sweep.csv")
    assert len(agg) == 4     # 2 times x 2 methods
    assert "total_mean" in agg.columns and "total_std" in agg.columns
    assert (agg["n_runs"] == 1).all()
    assert (agg["total_std"] == 0.0).all()   # population std of one run

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["experiment"] == "time-sweep"
    assert manifest["failures"] == []
    assert manifest["outputs"] == sorted(manifest["outputs"])
    assert ExperimentConfig.from_json_dict(manifest["config"]) == cfg


def test_time_sweep_reruns_byte_identical(tmp_path):
    # same config, two directories: every artifact must match byte for byte
    run_experiment(_tiny_time_cfg(tmp_path / "a"))
    run_experiment(_tiny_time_cfg(tmp_path / "b"))
    for name in ("time_sweep_runs.csv", "time_sweep.csv", "time_sweep.svg"):
        first = (tmp_path / "a" / name).read_bytes()
        second = (tmp_path / "b" / name).read_bytes()
        assert first == second, name


def test_size_sweep_outputs(tmp_path):
    cfg = ExperimentConfig(
        "size-sweep", n_grid=(4, 5), seeds=1, out_dir=str(tmp_path)
    )
    run_experiment(cfg)
    runs = pd.read_csv(tmp_path / "size_sweep_runs.csv")
    assert set(runs["n_nodes"]) == {4, 5}
    agg = pd.read_csv(tmp_path / "size_sweep.csv")
    assert "log10_sigma_min_mean" in agg.columns
    # the library grows with the network, so conditioning worsens
    lasso = agg[agg["method"] == "LASSO"].sort_values("n_nodes")
    assert lasso["log10_sigma_min_mean"].is_monotonic_decreasing


def test_three_networks_outputs(tmp_path):
    cfg = ExperimentConfig(
        "three-networks", n_nodes=4, leaves_a=1, leaves_b=1,
        methods=("lasso",), out_dir=str(tmp_path),
    )
    summary = run_experiment(cfg)
    assert summary["failures"] == []
    results = json.loads((tmp_path / "three_networks.json").read_text())
    assert set(results) == {"star", "twin-stars", "ring"}
    for name, entry in results.items():
        assert "LASSO" in entry["recovered"]
        rec = entry["recovered"]["LASSO"]
        assert rec["false_positives"] == 0 and rec["false_negatives"] == 0
        assert (tmp_path / f"{name}_lasso.edges").exists()
    assert (tmp_path / "three_networks.svg").exists()


def test_basis_extension_outputs(tmp_path):
    cfg = ExperimentConfig(
        "basis-extension", n_nodes=4, seeds=1, extension_steps=2,
        methods=("lasso",), out_dir=str(tmp_path),
    )
    run_experiment(cfg)
    runs = pd.read_csv(tmp_path / "basis_extension_runs.csv")
    assert set(runs["k"]) == {0, 1, 2}
    # 1 + 2N + N(N-1) columns at N=4, plus 16 per extension step
    by_k = runs.set_index("k")["n_columns"]
    assert by_k[0] == 21 and by_k[1] == 37 and by_k[2] == 53
    assert (runs["total"] == 0).all()
    assert (runs["extension_norm"].fillna(0.0) < 1e-3).all()


def test_noise_sweep_outputs(tmp_path):
    cfg = ExperimentConfig(
        "noise-sweep", n_nodes=4, seeds=2, eta_grid=(0.0, 1e-3),
        methods=("lasso",), t_end=50.0, out_dir=str(tmp_path),
    )
    summary = run_experiment(cfg)
    assert summary["failures"] == []
    runs = pd.read_csv(tmp_path / "noise_sweep_runs.csv")
    assert set(runs["eta"]) == {0.0, 1e-3}
    assert len(runs) == 4
    # noiseless rows must be clean on such a small star
    assert (runs[runs["eta"] == 0.0]["total"] == 0).all()
    assert (tmp_path / "noise_sweep.svg").exists()   # linear axis branch


def test_instability_demo_outputs(tmp_path):
    cfg = ExperimentConfig("instability-demo", out_dir=str(tmp_path))
    summary = run_experiment(cfg)
    table = json.loads((tmp_path / "instability_demo.json").read_text())
    assert table == summary["table"]
    assert table[0]["note"] == "zero perturbation"
    assert table[0]["gap"] < 1e-10
    gaps = [row["gap"] for row in table[1:]]
    assert gaps == sorted(gaps) and gaps[-1] > 100.0
    for row in table[1:]:
        assert row["certified"] is True
        assert row["route_discrepancy"] < 1e-8
        assert 0.69 < row["gap_times_cos"] < 0.71


# ---------------------------------------------------------------------------
# command line

def test_cli_simulate_recover_phase_chain(tmp_path):
    sim_out = tmp_path / "traj.csv"
    rc = cli.main([
        "simulate", "--model", "phase", "--network", "star", "--nodes", "4",
        "--t-end", "100", "--seed", "3", "--out", str(sim_out),
    ])
    assert rc == 0
    assert sim_out.exists()

    rec_out = tmp_path / "rec"
    rc = cli.main([
        "recover", "--input", str(sim_out), "--channel-meaning", "phase",
        "--method", "lasso", "--alpha", "0.1", "--out", str(rec_out),
    ])
    assert rc == 0
    report = json.loads((rec_out / "report.json").read_text())
    assert report["method"] == "LASSO"
    assert (rec_out / "recovered.edges").exists()


def test_cli_real_signal_chain(tmp_path):
    sim_out = tmp_path / "sl.csv"
    assert cli.main([
        "simulate", "--model", "stuart-landau", "--network", "ring",
        "--nodes", "4", "--t-end", "200", "--seed", "1", "--out", str(sim_out),
    ]) == 0
    rec_out = tmp_path / "rec"
    assert cli.main([
        "recover", "--input", str(sim_out), "--method", "lasso",
        "--alpha", "0.1", "--out", str(rec_out),
    ]) == 0
    assert (rec_out / "report.json").exists()


def test_cli_recover_against_truth(tmp_path):
    sim_out = tmp_path / "traj.csv"
    edges = tmp_path / "truth.edges"
    from oscinet import topology

    topology.save_edgelist(topology.make_star(4), edges)
    cli.main([
        "simulate", "--model", "phase", "--network", "star", "--nodes", "4",
        "--seed", "5", "--out", str(sim_out),
    ])
    rec_out = tmp_path / "rec"
    assert cli.main([
        "recover", "--input", str(sim_out), "--channel-meaning", "phase",
        "--truth", str(edges), "--alpha", "0.1", "--out", str(rec_out),
    ]) == 0
    report = json.loads((rec_out / "report.json").read_text())
    assert report["score"] == {"false_positives": 0, "false_negatives": 0}


def test_cli_missing_input_fails_cleanly(tmp_path, capsys):
    rc = cli.main(["recover", "--input", str(tmp_path / "nope.csv")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_experiment_subcommand(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    _tiny_time_cfg(tmp_path / "ignored").save(cfg_path)
    out = tmp_path / "results"
    rc = cli.main([
        "experiment", "time-sweep", "--config", str(cfg_path),
        "--out", str(out), "--seeds", "1", "--master-seed", "9",
    ])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seeds"] == 1
    assert manifest["config"]["master_seed"] == 9
    assert manifest["config"]["out_dir"] == str(out)


def test_cli_experiment_names_match_registry():
    # every registered experiment is reachable from the command line
    parser_names = set(EXPERIMENTS)
    assert parser_names == {
        "time-sweep", "size-sweep", "three-networks", "basis-extension",
        "noise-sweep", "instability-demo",
    }


def test_noisy_phase_cli_round_trip(tmp_path):
    out = tmp_path / "noisy.csv"
    assert cli.main([
        "simulate", "--model", "noisy-phase", "--network", "star",
        "--nodes", "3", "--eta", "0.001", "--t-end", "50", "--seed", "2",
        "--out", str(out),
    ]) == 0
    from oscinet import dynamics

    series = dynamics.load_series(out)
    assert series.channel_meaning == dynamics.REAL_PART
    assert np.abs(series.values).max() <= 1.0 + 1e-12
