import json

import numpy as np
import pytest
from click.testing import CliRunner

from adanet.cli import main
from adanet.data import load_csv, make_folds
from adanet.network import load_model


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def data_csv(tmp_path, runner):
    path = tmp_path / "d.csv"
    res = runner.invoke(
        main, ["synth", "--kind", "linear", "--m", "120", "--noise", "0.05",
               "--seed", "3", "--out", str(path)]
    )
    assert res.exit_code == 0, res.output
    return path


FAST_TRAIN = ["--rounds", "2", "--units", "2", "--weak-iter", "150",
              "--batch-size", "40", "--lambda", "1e-3"]


class TestSynth:
    def test_writes_parseable_csv(self, tmp_path, runner):
        path = tmp_path / "c.csv"
        res = runner.invoke(
            main, ["synth", "--kind", "circles", "--m", "60", "--out", str(path)]
        )
        assert res.exit_code == 0
        ds = load_csv(path)
        assert ds.m == 60
        assert ds.n_features == 2

    def test_deterministic(self, tmp_path, runner):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            runner.invoke(
                main, ["synth", "--kind", "linear", "--m", "30",
                       "--seed", "5", "--out", str(out)]
            )
        assert a.read_bytes() == b.read_bytes()

    def test_header_flag(self, tmp_path, runner):
        path = tmp_path / "h.csv"
        runner.invoke(
            main, ["synth", "--kind", "linear", "--m", "10", "--out", str(path), "--header"]
        )
        assert path.read_text().startswith("label,")


class TestTrain:
    def test_adanet_writes_model_and_log(self, tmp_path, runner, data_csv):
        model_path = tmp_path / "m.json"
        log_path = tmp_path / "log.jsonl"
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(model_path), "--log", str(log_path)] + FAST_TRAIN
        )
        assert res.exit_code == 0, res.output
        model = load_model(model_path)
        assert model.n_features == 4
        for line in log_path.read_text().strip().split("\n"):
            entry = json.loads(line)
            assert {"t", "candidates", "winner_depth", "accepted", "F"} <= set(entry)
            assert "seconds" not in entry

    def test_timing_flag_adds_seconds(self, tmp_path, runner, data_csv):
        model_path = tmp_path / "m.json"
        log_path = tmp_path / "log.jsonl"
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(model_path), "--log", str(log_path), "--timing"]
            + FAST_TRAIN
        )
        assert res.exit_code == 0
        entry = json.loads(log_path.read_text().strip().split("\n")[0])
        assert "seconds" in entry

    def test_cvx_single_top_units(self, tmp_path, runner, data_csv):
        model_path = tmp_path / "m.json"
        res = runner.invoke(
            main, ["train", "--algo", "adanet-cvx", "--data", str(data_csv),
                   "--out", str(model_path), "--rounds", "3"]
        )
        assert res.exit_code == 0, res.output
        model = load_model(model_path)
        assert model.subnetworks
        for sub in model.subnetworks:
            assert len(sub.top_units()) == 1

    def test_logreg_and_nn(self, tmp_path, runner, data_csv):
        for algo in ("logreg", "nn"):
            model_path = tmp_path / f"{algo}.json"
            res = runner.invoke(
                main, ["train", "--algo", algo, "--data", str(data_csv),
                       "--out", str(model_path), "--units", "3", "--weak-iter", "200"]
            )
            assert res.exit_code == 0, res.output
            assert load_model(model_path).hyperparams["algorithm"] == algo

    def test_unknown_algo_exit_2(self, tmp_path, runner, data_csv):
        res = runner.invoke(
            main, ["train", "--algo", "boosted-stumps", "--data", str(data_csv),
                   "--out", str(tmp_path / "x.json")]
        )
        assert res.exit_code == 2

    def test_config_file_and_flag_precedence(self, tmp_path, runner, data_csv):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"max_rounds": 1, "units_per_layer": 2,
                                        "weak_iter": 100}))
        model_path = tmp_path / "m.json"
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(model_path), "--config", str(cfg_path),
                   "--units", "3"]
        )
        assert res.exit_code == 0, res.output
        cfg = load_model(model_path).hyperparams["config"]
        assert cfg["max_rounds"] == 1  # from file
        assert cfg["units_per_layer"] == 3  # flag wins over file

    def test_unknown_config_key_exit_2(self, tmp_path, runner, data_csv):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"rounds": 1}))
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(tmp_path / "m.json"), "--config", str(cfg_path)]
        )
        assert res.exit_code == 2

    def test_missing_data_file_fails(self, tmp_path, runner):
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(tmp_path / "no.csv"),
                   "--out", str(tmp_path / "m.json")]
        )
        assert res.exit_code == 2


class TestEval:
    def train_model(self, tmp_path, runner, data_csv, extra=()):
        model_path = tmp_path / "m.json"
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(model_path)] + FAST_TRAIN + list(extra)
        )
        assert res.exit_code == 0, res.output
        return model_path

    def test_accuracy_in_range(self, tmp_path, runner, data_csv):
        model_path = self.train_model(tmp_path, runner, data_csv)
        res = runner.invoke(
            main, ["eval", "--model", str(model_path), "--data", str(data_csv),
                   "--rho", "0.0", "--rho", "0.5"]
        )
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert 0.0 <= payload["accuracy"] <= 1.0
        assert payload["m"] == 120
        assert set(payload["margin_errors"]) == {"0.0", "0.5"}

    def test_zero_model_margin_error_one(self, tmp_path, runner, data_csv):
        # enormous beta rejects every candidate, leaving f = 0
        model_path = self.train_model(tmp_path, runner, data_csv,
                                      extra=["--beta", "1e9"])
        res = runner.invoke(
            main, ["eval", "--model", str(model_path), "--data", str(data_csv)]
        )
        payload = json.loads(res.output)
        assert payload["margin_errors"]["0.0"] == 1.0

    def test_dimension_mismatch_exit_1(self, tmp_path, runner, data_csv):
        model_path = self.train_model(tmp_path, runner, data_csv)
        other = tmp_path / "wide.csv"
        res = runner.invoke(
            main, ["synth", "--kind", "circles", "--m", "20", "--out", str(other)]
        )
        assert res.exit_code == 0
        res = runner.invoke(
            main, ["eval", "--model", str(model_path), "--data", str(other)]
        )
        assert res.exit_code == 1
        assert "dimension" in res.output


class TestBounds:
    def test_report_fields(self, tmp_path, runner, data_csv):
        model_path = tmp_path / "m.json"
        res = runner.invoke(
            main, ["train", "--algo", "adanet", "--data", str(data_csv),
                   "--out", str(model_path)] + FAST_TRAIN
        )
        assert res.exit_code == 0, res.output
        res = runner.invoke(
            main, ["bounds", "--model", str(model_path), "--data", str(data_csv),
                   "--rho", "0.2", "--delta", "0.05"]
        )
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert {"rho", "delta", "terms", "total", "vacuous", "depth"} <= set(payload)
        terms = payload["terms"]
        assert payload["total"] == pytest.approx(
            terms["margin_error"] + terms["weighted_complexity"]
            + terms["log_l"] + terms["C"]
        )


class TestCv:
    def grid_file(self, tmp_path, params):
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(params))
        return path

    def test_single_point_grid_matches_manual_rotation(self, tmp_path, runner, data_csv):
        grid = self.grid_file(tmp_path, {"lambda_": [0.001], "learning_rate": [1.0]})
        res = runner.invoke(
            main, ["cv", "--algo", "logreg", "--data", str(data_csv),
                   "--grid-file", str(grid), "--seed", "5"]
        )
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert len(payload["grid"]) == 1

        # independently reproduce the rotation protocol
        from adanet.cli import _cv_task

        dataset = load_csv(data_csv)
        test_accs = []
        for rotation in range(10):
            _, test_acc = _cv_task(
                dataset, "logreg",
                {"seed": 5, "lambda_": 0.001, "learning_rate": 1.0},
                rotation, 5, True,
            )
            test_accs.append(test_acc)
        assert payload["selected"]["test_mean"] == pytest.approx(np.mean(test_accs))
        assert payload["selected"]["test_std"] == pytest.approx(np.std(test_accs))

    def test_summary_formatting(self, tmp_path, runner, data_csv):
        grid = self.grid_file(tmp_path, {"lambda_": [0.001]})
        res = runner.invoke(
            main, ["cv", "--algo", "logreg", "--data", str(data_csv),
                   "--grid-file", str(grid)]
        )
        payload = json.loads(res.output)
        summary = payload["selected"]["summary"]
        import re

        assert re.fullmatch(r"\d\.\d{4} ± \d\.\d{4}", summary)

    def test_rotation_fold_accounting(self, data_csv):
        dataset = load_csv(data_csv)
        for rotation in range(10):
            fa = make_folds(dataset, rotation, seed=0)
            assert fa.test_fold == rotation
            assert fa.validation_fold == (rotation + 1) % 10
            test, val, train = fa.test_indices(), fa.validation_indices(), fa.train_indices()
            assert len(set(test) & set(val)) == 0
            assert len(set(test) | set(val) | set(train)) == dataset.m
            folds_in_train = set(fa.fold_of[train])
            assert rotation not in folds_in_train
            assert (rotation + 1) % 10 not in folds_in_train
            assert len(folds_in_train) == 8

    def test_deterministic_given_seed(self, tmp_path, runner, data_csv):
        grid = self.grid_file(tmp_path, {"lambda_": [0.0, 0.001]})
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            res = runner.invoke(
                main, ["cv", "--algo", "logreg", "--data", str(data_csv),
                       "--grid-file", str(grid), "--seed", "3", "--out", str(out)]
            )
            assert res.exit_code == 0, res.output
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_selection_maximizes_validation_mean(self, tmp_path, runner, data_csv):
        grid = self.grid_file(tmp_path, {"lambda_": [100.0, 0.001]})
        res = runner.invoke(
            main, ["cv", "--algo", "logreg", "--data", str(data_csv),
                   "--grid-file", str(grid)]
        )
        payload = json.loads(res.output)
        means = [g["validation_mean"] for g in payload["grid"]]
        chosen = payload["selected"]["params"]
        best_idx = int(np.argmax(means))
        assert payload["grid"][best_idx]["params"] == chosen

    def test_thread_env_var(self, tmp_path, runner, data_csv, monkeypatch):
        monkeypatch.setenv("ADANET_THREADS", "4")
        grid = self.grid_file(tmp_path, {"lambda_": [0.001]})
        res = runner.invoke(
            main, ["cv", "--algo", "logreg", "--data", str(data_csv),
                   "--grid-file", str(grid)]
        )
        assert res.exit_code == 0, res.output


class TestDeterminism:
    def test_identical_runs_byte_identical_outputs(self, tmp_path, runner, data_csv):
        files = []
        for tag in ("a", "b"):
            model_path = tmp_path / f"m_{tag}.json"
            log_path = tmp_path / f"log_{tag}.jsonl"
            res = runner.invoke(
                main, ["train", "--algo", "adanet", "--data", str(data_csv),
                       "--out", str(model_path), "--log", str(log_path),
                       "--seed", "11"] + FAST_TRAIN
            )
            assert res.exit_code == 0, res.output
            files.append((model_path.read_bytes(), log_path.read_bytes()))
        assert files[0] == files[1]
