import json
import os

import pytest

from ardlstm.cli import WALL_TIME_FIELDS, build_config, main, read_metrics, write_metrics
from ardlstm.data import load_csv


def run(argv):
    return main(argv)


def strip_wall_time(metrics: dict) -> dict:
    return {k: v for k, v in metrics.items() if k not in WALL_TIME_FIELDS}


TINY = ["--units", "3", "--mc-samples", "8", "--nodes", "3", "--steps", "6",
        "--designs", "3", "--no-plots"]


class TestGenerate:
    def test_default_shape(self, tmp_path):
        out = str(tmp_path)
        assert run(["generate", "--out", out, "--no-plots"]) == 0
        lines = (tmp_path / "dataset.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 7 * 41

    def test_design_count_flag(self, tmp_path):
        out = str(tmp_path)
        assert run(["generate", "--out", out, "--designs", "3", "--steps", "5",
                    "--nodes", "2", "--no-plots"]) == 0
        ds = load_csv(tmp_path / "dataset.csv")
        assert ds.n_designs == 3
        assert ds.n_steps == 5

    def test_output_reloadable_by_train(self, tmp_path):
        gen = str(tmp_path / "gen")
        assert run(["generate", "--out", gen, "--designs", "3", "--steps", "6",
                    "--nodes", "2", "--no-plots"]) == 0
        out = str(tmp_path / "run")
        assert run(["train", "--model", "lstm", "--epochs", "5", "--lr", "0.01",
                    "--data", os.path.join(gen, "dataset.csv"), "--out", out,
                    *TINY]) == 0
        assert (tmp_path / "run" / "metrics.json").exists()


class TestTrain:
    def test_ard_outputs_and_schema(self, tmp_path):
        out = str(tmp_path)
        assert run(["train", "--model", "ard-lstm", "--epochs", "4", "--seed", "7",
                    "--out", out, *TINY]) == 0
        metrics = read_metrics(tmp_path / "metrics.json")
        assert metrics["schema_version"] == 1
        assert metrics["model"] == "ard-lstm"
        assert "r2" in metrics and metrics["r2"] <= 1.0
        assert "sparsity" in metrics and "total" in metrics["sparsity"]
        header = (tmp_path / "history.csv").read_text().split("\n")[0]
        assert header.startswith("epoch,loglik,sparsity_f")
        assert (tmp_path / "checkpoint.bin").exists()

    def test_lstm_r2_in_range(self, tmp_path):
        out = str(tmp_path)
        assert run(["train", "--model", "lstm", "--epochs", "200", "--lr", "0.02",
                    "--seed", "3", "--out", out, *TINY]) == 0
        metrics = read_metrics(tmp_path / "metrics.json")
        assert 0.0 <= metrics["r2"] <= 1.0

    def test_determinism_across_runs(self, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        argv = ["train", "--model", "ard-lstm", "--epochs", "4", "--seed", "11", *TINY]
        assert run(argv + ["--out", out1]) == 0
        assert run(argv + ["--out", out2]) == 0
        m1 = strip_wall_time(read_metrics(tmp_path / "a" / "metrics.json"))
        m2 = strip_wall_time(read_metrics(tmp_path / "b" / "metrics.json"))
        assert m1 == m2
        assert (tmp_path / "a" / "history.csv").read_bytes() == \
            (tmp_path / "b" / "history.csv").read_bytes()
        assert (tmp_path / "a" / "checkpoint.bin").read_bytes() == \
            (tmp_path / "b" / "checkpoint.bin").read_bytes()

    def test_width_sweep_yields_one_metrics_file_each(self, tmp_path):
        widths = (2, 4)
        for w in widths:
            out = str(tmp_path / f"w{w}")
            assert run(["train", "--model", "ard-lstm", "--epochs", "3",
                        "--units", str(w), "--mc-samples", "8", "--nodes", "2",
                        "--steps", "5", "--designs", "3", "--no-plots",
                        "--out", out]) == 0
        for w in widths:
            metrics = read_metrics(tmp_path / f"w{w}" / "metrics.json")
            assert metrics["config"]["units"] == w

    def test_plots_rendered_when_enabled(self, tmp_path):
        out = str(tmp_path)
        argv = ["train", "--model", "ard-lstm", "--epochs", "3", "--units", "3",
                "--mc-samples", "8", "--nodes", "2", "--steps", "5",
                "--designs", "3", "--out", out, "--plots"]
        assert run(argv) == 0
        for name in ("history.png", "sparsity.png", "fit.png"):
            assert (tmp_path / name).exists(), name


class TestConfigHandling:
    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps({"units": 5, "seed": 9}))

        class Args:
            config = str(cfg_path)
            units = None
            seed = 3

        config = build_config(Args())
        assert config.units == 5      # from file
        assert config.seed == 3       # flag beats file

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps({"nonsense": 1}))
        code = run(["train", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("error[ConfigError]")
        assert "nonsense" in err

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ARDLSTM_SEED", "42")

        class Args:
            config = None
            seed = None

        assert build_config(Args()).seed == 42

    def test_invalid_field_named_in_error(self, capsys, tmp_path):
        code = run(["train", "--lr", "-1", "--out", str(tmp_path)])
        assert code == 2
        assert "lr" in capsys.readouterr().err

    def test_metrics_roundtrip_keeps_unknown_fields(self, tmp_path):
        path = tmp_path / "m.json"
        write_metrics(path, {"schema_version": 1, "r2": 0.5, "future_field": [1, 2]})
        loaded = read_metrics(path)
        assert loaded["future_field"] == [1, 2]
        write_metrics(path, loaded)
        assert read_metrics(path)["future_field"] == [1, 2]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert run(["train", "--model", "ard-lstm", "--epochs", "4", "--seed", "1",
                "--out", str(out), *TINY]) == 0
    return out


class TestSweep:

    def test_default_grid_has_100_rows(self, trained, tmp_path):
        out = str(tmp_path)
        assert run(["sweep", "--checkpoint", str(trained / "checkpoint.bin"),
                    "--out", out, *TINY]) == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
        assert len(lines) == 101
        assert lines[0] == "eps,sigma_norm,ei,extrapolation_flag"
        eps = [float(ln.split(",")[0]) for ln in lines[1:]]
        assert eps[0] == -75.0 and eps[-1] == 75.0

    def test_single_point_grid(self, trained, tmp_path):
        out = str(tmp_path)
        assert run(["sweep", "--checkpoint", str(trained / "checkpoint.bin"),
                    "--grid", "10:10:1", "--out", out, *TINY]) == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
        assert len(lines) == 2

    def test_extrapolation_flagged(self, trained, tmp_path):
        out = str(tmp_path)
        assert run(["sweep", "--checkpoint", str(trained / "checkpoint.bin"),
                    "--out", out, *TINY]) == 0
        rows = [ln.split(",") for ln in
                (tmp_path / "sweep.csv").read_text().strip().split("\n")[1:]]
        flags = {float(r[0]): r[3] for r in rows}
        assert flags[-75.0] == "1"
        assert flags[min(abs(k) for k in flags)] == "0"

    def test_missing_checkpoint_fails_cleanly(self, tmp_path, capsys):
        code = run(["sweep", "--checkpoint", str(tmp_path / "none.bin"),
                    "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err.strip()
        assert err.startswith("error[MissingCheckpoint]")
        assert "\n" not in err

    def test_lstm_checkpoint_rejected(self, tmp_path, capsys):
        out = str(tmp_path / "lstm")
        assert run(["train", "--model", "lstm", "--epochs", "3", "--lr", "0.01",
                    "--out", out, *TINY]) == 0
        code = run(["sweep", "--checkpoint", os.path.join(out, "checkpoint.bin"),
                    "--out", str(tmp_path)])
        assert code == 2
        assert "error[ConfigError]" in capsys.readouterr().err


class TestCompare:
    def test_reports_ratio_and_agreement(self, tmp_path):
        out = str(tmp_path)
        assert run(["compare", "--epochs", "4", "--seed", "2", "--out", out,
                    *TINY]) == 0
        payload = read_metrics(tmp_path / "compare.json")
        assert set(payload["modes"]) == {"sampled", "mean-based"}
        assert payload["time_per_epoch_ratio"] > 0
        assert "max_abs_mean_diff" in payload["agreement"]

    def test_deterministic_agreement(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        argv = ["compare", "--epochs", "3", "--seed", "5", *TINY]
        assert run(argv + ["--out", a]) == 0
        assert run(argv + ["--out", b]) == 0
        pa = read_metrics(tmp_path / "a" / "compare.json")
        pb = read_metrics(tmp_path / "b" / "compare.json")
        assert pa["agreement"] == pb["agreement"]
