import json

import numpy as np
import pytest

from oscml.cli import EXPERIMENTS, PLOT_KINDS, main
from oscml.dataio import (
    read_history,
    read_kv_file,
    read_metrics,
    read_pinn_log,
    read_quantum_dataset,
    read_trajectory,
    _read_table,
)


def run(*argv):
    return main([str(a) for a in argv])


def simulate_small(tmp_path, name="traj.csv", dt=0.1, t_end=30.0):
    out = tmp_path / name
    assert run("simulate-pendulum", "--out", out, "--dt", dt, "--t-end", t_end) == 0
    return out


def gen_small(tmp_path, name="q.csv", lambdas=24, n=40, k=1):
    out = tmp_path / name
    assert run("gen-quantum", "--out", out, "--lambdas", lambdas,
               "--n", n, "--k", k) == 0
    return out


class TestSimulate:
    def test_reference_row_count(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert run("simulate-pendulum", "--out", out) == 0
        traj, meta = read_trajectory(out)
        assert traj.n_samples == 3001
        assert "config_hash" in meta and "seed" in meta

    def test_rerun_byte_identical(self, tmp_path):
        a = simulate_small(tmp_path, "a.csv")
        b = simulate_small(tmp_path, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_writes_config_sidecar(self, tmp_path):
        out = simulate_small(tmp_path)
        side = read_kv_file(tmp_path / "traj.config.txt")
        assert float(side["dt"]) == 0.1
        assert float(side["g"]) == 9.81  # resolved defaults persisted too

    def test_invalid_dt_fails(self, tmp_path, capsys):
        assert run("simulate-pendulum", "--out", tmp_path / "x.csv", "--dt", 0) == 1
        assert "error:" in capsys.readouterr().err

    def test_config_file_then_flag_precedence(self, tmp_path):
        cfg = tmp_path / "sim.config"
        cfg.write_text("t_end = 1.0\ndt = 0.1\n")
        out = tmp_path / "c.csv"
        assert run("simulate-pendulum", "--config", cfg, "--out", out) == 0
        traj, _ = read_trajectory(out)
        assert traj.n_samples == 11
        out2 = tmp_path / "d.csv"
        assert run("simulate-pendulum", "--config", cfg, "--out", out2,
                   "--t-end", 2.0) == 0
        traj2, _ = read_trajectory(out2)
        assert traj2.n_samples == 21

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfg = tmp_path / "sim.config"
        cfg.write_text("dtt = 0.1\n")
        assert run("simulate-pendulum", "--config", cfg,
                   "--out", tmp_path / "x.csv") == 1
        assert "unknown key" in capsys.readouterr().err

    def test_output_rooted_at_env_dir(self, tmp_path, monkeypatch):
        root = tmp_path / "outputs"
        monkeypatch.setenv("OSCML_OUT", str(root))
        assert run("simulate-pendulum", "--out", "traj.csv",
                   "--dt", 0.1, "--t-end", 1.0) == 0
        assert (root / "traj.csv").is_file()


class TestGenQuantum:
    def test_zero_lambda_sweep_recovers_harmonic(self, tmp_path):
        out = tmp_path / "q.csv"
        assert run("gen-quantum", "--out", out, "--lambdas", 1,
                   "--lambda-max", 0, "--n", 400, "--xmax", 8, "--k", 1) == 0
        ds, meta = read_quantum_dataset(out)
        assert ds.n_rows == 1
        assert ds.lambdas[0] == 0.0
        assert abs(ds.energies[0, 0] - 0.5) < 1e-3
        assert meta["n_points"] == "400"

    def test_lambdas_sorted_ascending(self, tmp_path):
        out = gen_small(tmp_path, lambdas=12)
        ds, _ = read_quantum_dataset(out)
        assert np.all(np.diff(ds.lambdas) >= 0)
        assert np.all(ds.lambdas >= 0) and np.all(ds.lambdas <= 1.0)

    def test_rerun_byte_identical(self, tmp_path):
        a = gen_small(tmp_path, "a.csv")
        b = gen_small(tmp_path, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_grid_points_fails(self, tmp_path, capsys):
        assert run("gen-quantum", "--out", tmp_path / "x.csv", "--n", 2) == 1
        assert "grid points" in capsys.readouterr().err


class TestTrainEvaluate:
    def quick_train(self, tmp_path):
        data = simulate_small(tmp_path)
        outdir = tmp_path / "run"
        code = run("train", "--model", "pendulum_ann", "--data", data,
                   "--outdir", outdir, "--max-epochs", 3, "--batch-size", 64,
                   "--seed", 5)
        assert code == 0
        return data, outdir

    def test_artifacts_written(self, tmp_path):
        data, outdir = self.quick_train(tmp_path)
        assert (outdir / "checkpoint.json").is_file()
        hist, _ = read_history(outdir / "history.csv")
        assert hist.stopped_epoch == 3
        cfg = read_kv_file(outdir / "config.txt")
        assert cfg["model"] == "pendulum_ann"
        assert cfg["data"] == str(data)

    def test_evaluate_writes_metrics_and_json(self, tmp_path):
        data, outdir = self.quick_train(tmp_path)
        out = tmp_path / "metrics.txt"
        assert run("evaluate", "--checkpoint", outdir / "checkpoint.json",
                   "--data", data, "--out", out, "--json") == 0
        vals, meta = read_metrics(out)
        assert set(vals) == {"mae", "r_squared", "n_test"}
        assert vals["n_test"] == 46.0  # 301 rows, 70/15/15 floor split
        assert vals["r_squared"] <= 1.0
        jvals = json.loads(out.with_suffix(".json").read_text())
        assert jvals["mae"] == vals["mae"]

    def test_evaluate_deterministic(self, tmp_path):
        data, outdir = self.quick_train(tmp_path)
        a, b = tmp_path / "m1.txt", tmp_path / "m2.txt"
        run("evaluate", "--checkpoint", outdir / "checkpoint.json",
            "--data", data, "--out", a)
        run("evaluate", "--checkpoint", outdir / "checkpoint.json",
            "--data", data, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_quantum_cnn_path(self, tmp_path):
        data = gen_small(tmp_path)
        outdir = tmp_path / "cnn"
        assert run("train", "--model", "quantum_cnn", "--data", data,
                   "--outdir", outdir, "--max-epochs", 2, "--batch-size", 8) == 0
        out = tmp_path / "m.txt"
        assert run("evaluate", "--checkpoint", outdir / "checkpoint.json",
                   "--data", data, "--out", out) == 0

    def test_missing_checkpoint_names_producer(self, tmp_path, capsys):
        data = simulate_small(tmp_path)
        assert run("evaluate", "--checkpoint", tmp_path / "absent.json",
                   "--data", data, "--out", tmp_path / "m.txt") == 1
        assert "oscml train" in capsys.readouterr().err

    def test_wrong_feature_kind_fails(self, tmp_path, capsys):
        data = simulate_small(tmp_path)
        outdir = tmp_path / "run"
        run("train", "--model", "pendulum_ann", "--data", data,
            "--outdir", outdir, "--max-epochs", 2, "--batch-size", 64)
        qdata = gen_small(tmp_path)
        assert run("evaluate", "--checkpoint", outdir / "checkpoint.json",
                   "--data", qdata, "--out", tmp_path / "m.txt") == 1
        err = capsys.readouterr().err
        assert "error:" in err

    def test_missing_model_flag(self, tmp_path, capsys):
        data = simulate_small(tmp_path)
        assert run("train", "--data", data, "--outdir", tmp_path / "o") == 1
        assert "--model" in capsys.readouterr().err


class TestPinnCli:
    def test_quantum_artifacts(self, tmp_path):
        outdir = tmp_path / "qpinn"
        assert run("pinn-train", "--system", "quantum", "--outdir", outdir,
                   "--epochs", 30, "--log-every", 10, "--collocation", 41) == 0
        reports, _ = read_pinn_log(outdir / "pinn_log.csv")
        assert [r.epoch for r in reports] == [0, 10, 20]
        assert all(r.energy is not None for r in reports)
        vals, _ = read_metrics(outdir / "metrics.txt")
        assert {"final_phys_loss", "final_penalty", "final_total",
                "final_energy", "final_data_loss"} == set(vals)
        doc = json.loads((outdir / "checkpoint.json").read_text())
        assert doc["meta"]["n_collocation"] == 41
        assert doc["meta"]["x_max"] == 5.0

    def test_pendulum_needs_data(self, tmp_path, capsys):
        assert run("pinn-train", "--system", "pendulum",
                   "--outdir", tmp_path / "p") == 1
        assert "--data" in capsys.readouterr().err

    def test_pendulum_run(self, tmp_path):
        data = simulate_small(tmp_path, dt=0.1, t_end=5.0)
        outdir = tmp_path / "ppinn"
        assert run("pinn-train", "--system", "pendulum", "--data", data,
                   "--outdir", outdir, "--epochs", 20, "--log-every", 10,
                   "--collocation", 20) == 0
        reports, _ = read_pinn_log(outdir / "pinn_log.csv")
        assert all(r.energy is None for r in reports)
        vals, _ = read_metrics(outdir / "metrics.txt")
        assert "final_energy" not in vals


class TestPlot:
    def test_pendulum_sim(self, tmp_path):
        data = simulate_small(tmp_path, dt=0.1, t_end=2.0)
        out = tmp_path / "plot.csv"
        assert run("plot-data", "--kind", "pendulum-sim", "--data", data,
                   "--out", out) == 0
        values, columns, _ = _read_table(out, ("t", "theta", "omega"))
        assert len(values) == 21

    def test_unknown_kind_lists_valid(self, tmp_path, capsys):
        assert run("plot-data", "--kind", "spectrogram",
                   "--out", tmp_path / "x.csv") == 1
        err = capsys.readouterr().err
        for kind in PLOT_KINDS:
            assert kind in err

    def test_missing_inputs_reported(self, tmp_path, capsys):
        assert run("plot-data", "--kind", "pendulum-sim",
                   "--out", tmp_path / "x.csv") == 1
        assert "--data" in capsys.readouterr().err
        assert run("plot-data", "--kind", "quantum-pinn-wavefunction",
                   "--out", tmp_path / "x.csv") == 1
        assert "--checkpoint" in capsys.readouterr().err

    def test_quantum_potential_row_bounds(self, tmp_path, capsys):
        data = gen_small(tmp_path, lambdas=5)
        out = tmp_path / "v.csv"
        assert run("plot-data", "--kind", "quantum-potential", "--data", data,
                   "--out", out, "--row", 2) == 0
        values, _, meta = _read_table(out, ("x", "V"))
        assert len(values) == 40
        assert "lambda" in meta
        assert run("plot-data", "--kind", "quantum-potential", "--data", data,
                   "--out", out, "--row", 99) == 1
        assert "--row" in capsys.readouterr().err

    def test_ann_prediction_columns(self, tmp_path):
        data = simulate_small(tmp_path)
        outdir = tmp_path / "run"
        run("train", "--model", "pendulum_ann", "--data", data,
            "--outdir", outdir, "--max-epochs", 2, "--batch-size", 64)
        out = tmp_path / "pred.csv"
        assert run("plot-data", "--kind", "pendulum-ann-pred", "--data", data,
                   "--checkpoint", outdir / "checkpoint.json", "--out", out) == 0
        values, _, _ = _read_table(out, ("t", "theta_true", "theta_pred"))
        assert len(values) == 301

    def test_wavefunction_normalization_column(self, tmp_path):
        outdir = tmp_path / "qpinn"
        run("pinn-train", "--system", "quantum", "--outdir", outdir,
            "--epochs", 20, "--log-every", 10, "--collocation", 41)
        out = tmp_path / "wf.csv"
        assert run("plot-data", "--kind", "quantum-pinn-wavefunction",
                   "--checkpoint", outdir / "checkpoint.json", "--out", out) == 0
        values, columns, _ = _read_table(
            out, ("x", "psi_raw", "psi_normalized", "psi_exact"))
        x, psi_n = values[:, 0], values[:, 2]
        dx = x[1] - x[0]
        assert np.sum(psi_n**2) * dx == pytest.approx(1.0, abs=1e-9)

    def test_wavefunction_kind_rejects_supervised_checkpoint(self, tmp_path, capsys):
        data = gen_small(tmp_path)
        outdir = tmp_path / "cnn"
        run("train", "--model", "quantum_cnn", "--data", data,
            "--outdir", outdir, "--max-epochs", 2, "--batch-size", 8)
        assert run("plot-data", "--kind", "quantum-pinn-wavefunction",
                   "--checkpoint", outdir / "checkpoint.json",
                   "--out", tmp_path / "x.csv") == 1
        assert "quantum PINN" in capsys.readouterr().err


class TestReproduce:
    def test_unknown_experiment_lists_names(self, tmp_path, capsys):
        assert run("reproduce", "--experiment", "nope",
                   "--outdir", tmp_path / "x") == 1
        err = capsys.readouterr().err
        for name in EXPERIMENTS:
            assert name in err

    def test_stage_failure_is_labeled(self, tmp_path, capsys):
        assert run("reproduce", "--experiment", "pendulum-ann",
                   "--outdir", tmp_path / "x", "--dt", -0.5) == 1
        assert "stage 'simulate' failed" in capsys.readouterr().err

    def test_quantum_cnn_pipeline_self_contained_and_repeatable(self, tmp_path):
        args = ("reproduce", "--experiment", "quantum-cnn", "--seed", 5,
                "--n-lambdas", 30, "--n-points", 40, "--max-epochs", 3)
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert run(*args, "--outdir", d1) == 0
        assert run(*args, "--outdir", d2) == 0
        for fname in ("dataset.csv", "dataset.config.txt", "checkpoint.json",
                      "history.csv", "config.txt", "metrics.txt", "scatter.csv"):
            assert (d1 / fname).is_file(), fname
        assert (d1 / "metrics.txt").read_bytes() == (d2 / "metrics.txt").read_bytes()
        assert (d1 / "dataset.csv").read_bytes() == (d2 / "dataset.csv").read_bytes()
        assert (d1 / "checkpoint.json").read_bytes() == (d2 / "checkpoint.json").read_bytes()

    def test_pendulum_pinn_pipeline(self, tmp_path):
        outdir = tmp_path / "pp"
        assert run("reproduce", "--experiment", "pendulum-pinn", "--outdir", outdir,
                   "--dt", 0.1, "--epochs", 20) == 0
        for fname in ("trajectory.csv", "pinn_log.csv", "checkpoint.json",
                      "metrics.txt", "pred.csv", "config.txt"):
            assert (outdir / fname).is_file(), fname
