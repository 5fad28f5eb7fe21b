import json
from pathlib import Path

import pytest

from gridcast.cli import main

TINY_TFT = ["--set", "hidden_size=4", "--set", "input_window=24",
            "--set", "max_epochs=1", "--set", "learning_rate=0.003"]


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "data"
    assert run("synth", "--out", str(out), "--substations", "3", "--days", "21",
               "--seed", "5", "--with-holidays", "--with-incidence") == 0
    return out


@pytest.fixture(scope="module")
def tft_checkpoint(tmp_path_factory, data_dir):
    out = tmp_path_factory.mktemp("train") / "tft"
    assert run("train", "--data", str(data_dir), "--out", str(out),
               "--model", "tft", "--horizon", "day", "--seed", "3",
               *TINY_TFT) == 0
    return out / "checkpoint"


class TestSynth:
    def test_writes_expected_files(self, data_dir):
        names = {p.name for p in data_dir.iterdir()}
        assert {"load.csv", "temperature.csv", "incidence.csv",
                "holidays.csv", "manifest.json"} <= names

    def test_substation_files_and_manifest(self, data_dir):
        manifest = json.loads((data_dir / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seeds"] == {"synthetic": 5}
        assert "load.csv" in manifest["outputs"]

    def test_rerun_same_seed_byte_identical(self, tmp_path, data_dir):
        again = tmp_path / "again"
        assert run("synth", "--out", str(again), "--substations", "3",
                   "--days", "21", "--seed", "5", "--with-holidays",
                   "--with-incidence") == 0
        for name in ("load.csv", "temperature.csv", "incidence.csv",
                     "holidays.csv"):
            assert (again / name).read_bytes() == (data_dir / name).read_bytes()

    def test_household_format(self, tmp_path):
        out = tmp_path / "hh"
        assert run("synth", "--out", str(out), "--substations", "2",
                   "--days", "10", "--format", "household") == 0
        assert (out / "households.csv").exists()

    def test_unwritable_dir_exit_2(self):
        assert run("synth", "--out", "/proc/nope/data", "--substations", "1",
                   "--days", "2") == 2


class TestTrain:
    def test_tft_checkpoint_artifacts(self, tft_checkpoint):
        assert (tft_checkpoint / "model.json").exists()
        assert (tft_checkpoint / "params.bin").exists()
        assert (tft_checkpoint.parent / "history.csv").exists()
        assert (tft_checkpoint.parent / "manifest.json").exists()

    def test_week_horizon_sets_168(self, tmp_path, data_dir):
        out = tmp_path / "week"
        assert run("train", "--data", str(data_dir), "--out", str(out),
                   "--model", "naive", "--horizon", "week") == 0
        sidecar = json.loads((out / "checkpoint" / "model.json").read_text())
        assert sidecar["config"]["horizon"] == 168

    def test_invalid_hidden_size_names_field(self, tmp_path, data_dir, capsys):
        out = tmp_path / "bad"
        code = run("train", "--data", str(data_dir), "--out", str(out),
                   "--model", "tft", "--set", "hidden_size=0")
        assert code == 1
        assert "hidden_size" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, tmp_path, data_dir, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"schema_version": 1, "hidden_sizes": 8}))
        code = run("train", "--data", str(data_dir), "--out",
                   str(tmp_path / "run"), "--model", "tft",
                   "--config", str(config))
        assert code == 1
        assert "hidden_sizes" in capsys.readouterr().err

    def test_substation_arima(self, tmp_path, data_dir):
        out = tmp_path / "arima"
        assert run("train", "--data", str(data_dir), "--out", str(out),
                   "--model", "arima", "--level", "substation",
                   "--set", "p=1", "--set", "d=1", "--set", "q=0") == 0
        sidecar = json.loads((out / "checkpoint" / "model.json").read_text())
        assert len(sidecar["arima_coefficients"]) == 3

    def test_incidence_enters_schema(self, tmp_path, data_dir):
        out = tmp_path / "inc"
        assert run("train", "--data", str(data_dir), "--out", str(out),
                   "--model", "tft", "--with-incidence", *TINY_TFT) == 0
        sidecar = json.loads((out / "checkpoint" / "model.json").read_text())
        assert sidecar["schema"]["past"] == ["consumption", "incidence"]


class TestEvaluate:
    def test_grid_report_files(self, tmp_path, data_dir, tft_checkpoint):
        out = tmp_path / "eval"
        assert run("evaluate", "--checkpoint", str(tft_checkpoint),
                   "--data", str(data_dir), "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["level"] == "grid"
        # 21 days, 80/20 split -> test span has 4 complete days
        assert report["n_windows"] == 4
        assert (out / "report.csv").exists()
        assert (out / "forecasts.csv").exists()

    def test_day_ahead_one_row_per_complete_day(self, tmp_path, data_dir,
                                                tft_checkpoint):
        out = tmp_path / "eval2"
        run("evaluate", "--checkpoint", str(tft_checkpoint),
            "--data", str(data_dir), "--out", str(out))
        rows = (out / "report.csv").read_text().strip().splitlines()
        report = json.loads((out / "report.json").read_text())
        assert len(rows) - 1 == report["n_windows"]

    def test_aggregate_labels_hierarchical(self, tmp_path, data_dir):
        train_out = tmp_path / "subnaive"
        assert run("train", "--data", str(data_dir), "--out", str(train_out),
                   "--model", "naive", "--level", "substation") == 0
        out = tmp_path / "agg"
        assert run("evaluate", "--checkpoint", str(train_out / "checkpoint"),
                   "--data", str(data_dir), "--out", str(out),
                   "--aggregate") == 0
        report = json.loads((out / "report.json").read_text())
        assert report["level"] == "hierarchical"

    def test_substation_level_without_aggregate(self, tmp_path, data_dir):
        train_out = tmp_path / "subnaive2"
        run("train", "--data", str(data_dir), "--out", str(train_out),
            "--model", "naive", "--level", "substation")
        out = tmp_path / "sub"
        assert run("evaluate", "--checkpoint", str(train_out / "checkpoint"),
                   "--data", str(data_dir), "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["level"] == "substation"
        assert report["n_windows"] == 4 * 3  # windows x substations

    def test_naive_eval_near_perfect_on_periodic_data(self, tmp_path):
        # noise-free synthetic data is 168-periodic plus slow drift, so the
        # lag-168 baseline error is small but nonzero
        data = tmp_path / "clean"
        assert run("synth", "--out", str(data), "--substations", "2",
                   "--days", "28", "--noise-std", "0",
                   "--temp-sensitivity", "0") == 0
        train_out = tmp_path / "naive"
        assert run("train", "--data", str(data), "--out", str(train_out),
                   "--model", "naive") == 0
        out = tmp_path / "eval"
        assert run("evaluate", "--checkpoint", str(train_out / "checkpoint"),
                   "--data", str(data), "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["metrics"]["mape"]["mean"] < 0.05

    def test_evaluate_rerun_byte_identical(self, tmp_path, data_dir,
                                           tft_checkpoint):
        out1 = tmp_path / "e1"
        out2 = tmp_path / "e2"
        for out in (out1, out2):
            assert run("evaluate", "--checkpoint", str(tft_checkpoint),
                       "--data", str(data_dir), "--out", str(out),
                       "--threads", "1") == 0
        for name in ("report.csv", "report.json", "forecasts.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestCompare:
    def test_report_vs_itself(self, tmp_path, data_dir, tft_checkpoint, capsys):
        eval_out = tmp_path / "eval"
        run("evaluate", "--checkpoint", str(tft_checkpoint),
            "--data", str(data_dir), "--out", str(eval_out))
        out = tmp_path / "cmp"
        assert run("compare", "--report-a", str(eval_out / "report.csv"),
                   "--report-b", str(eval_out / "report.csv"),
                   "--out", str(out)) == 0
        payload = json.loads((out / "comparison.json").read_text())
        assert payload["t"] == 0.0
        assert payload["p"] == 1.0

    def test_mismatched_window_sets(self, tmp_path, data_dir, tft_checkpoint):
        eval_out = tmp_path / "eval"
        run("evaluate", "--checkpoint", str(tft_checkpoint),
            "--data", str(data_dir), "--out", str(eval_out))
        short = tmp_path / "short.csv"
        lines = (eval_out / "report.csv").read_text().strip().splitlines()
        short.write_text("\n".join(lines[:-1]) + "\n")
        assert run("compare", "--report-a", str(eval_out / "report.csv"),
                   "--report-b", str(short), "--out", str(tmp_path / "c")) == 1


class TestSearch:
    def test_budget_rows_and_determinism(self, tmp_path, data_dir):
        space = tmp_path / "space.json"
        space.write_text(json.dumps({
            "schema_version": 1,
            "hidden_size": [4, 8],
            "input_window": [24],
            "attention_heads": [1],
            "lstm_layers": [1],
            "dropout": [0.1],
            "batch_size": [64],
        }))
        outs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            assert run("search", "--data", str(data_dir), "--out", str(out),
                       "--model", "tft", "--budget", "2", "--seed", "9",
                       "--space", str(space), "--max-epochs", "1",
                       "--patience", "1") == 0
            rows = (out / "trials.csv").read_text().strip().splitlines()
            assert len(rows) == 3  # header + 2 trials
            # ranking, seeds, scores and configs reproduce; runtime is wall clock
            header = rows[0].split(",")
            runtime_col = header.index("runtime_s")
            stripped = [",".join(c for i, c in enumerate(r.split(","))
                                 if i != runtime_col) for r in rows]
            outs.append(stripped)
        assert outs[0] == outs[1]
        best = json.loads((tmp_path / "s1" / "best_config.json").read_text())
        assert best["hidden_size"] in (4, 8)
