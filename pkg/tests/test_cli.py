import json
import os

import pytest

from noisegate.cli import build_config, cli_parse, main
from noisegate.data import dump_libsvm
from noisegate.noise_filter import default_grid
from noisegate.synthetic import striped_ring_dataset


@pytest.fixture
def data_files(tmp_path):
    train = striped_ring_dataset(240, noise_fraction=0.15, seed=1)
    test = striped_ring_dataset(100, noise_fraction=0.0, seed=2)
    tp = tmp_path / "train.svm"
    sp = tmp_path / "test.svm"
    tp.write_text(dump_libsvm(train))
    sp.write_text(dump_libsvm(test))
    return str(tp), str(sp)


def train_args(tp, sp, out, extra=()):
    return [
        "train", "--train", tp, "--test", sp, "--out", out,
        "--partitions", "4", "--rounds", "10", "--reps", "2",
        "--grid-step", "0.4", "--learner", "stump", "--seed", "3", "--jobs", "1",
    ] + list(extra)


class TestParsing:
    def test_defaults_filled(self):
        ns = cli_parse(["train", "--train", "a.svm", "--partitions", "50",
                        "--seed", "7", "--out", "d/"])
        cfg = build_config(ns)
        assert cfg.partitions == 50
        assert cfg.seed == 7
        assert cfg.nu == 0.5
        assert cfg.rounds == 50
        assert cfg.repetitions == 50
        assert cfg.filtering and cfg.scaling
        assert cfg.beta_mode == "holdout"
        assert cfg.learner.kind == "tree"

    def test_missing_required_flag_names_it(self, capsys):
        with pytest.raises(SystemExit) as err:
            cli_parse(["train", "--out", "d/"])
        assert err.value.code == 2
        assert "--train" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            cli_parse(["train", "--train", "a", "--out", "b", "--frobnicate"])
        assert err.value.code == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as err:
            cli_parse(["explode"])
        assert err.value.code == 2

    def test_grid_step_flag_gives_19_point_default_grid(self):
        ns = cli_parse(["gini-scan", "--train", "a", "--out", "b", "--grid-step", "0.05"])
        assert len(default_grid(ns.grid_step)) == 19

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as err:
            cli_parse(["--help"])
        assert err.value.code == 0
        assert "train" in capsys.readouterr().out


class TestCommands:
    def test_train_writes_artifacts(self, data_files, tmp_path, capsys):
        tp, sp = data_files
        out = str(tmp_path / "run")
        assert main(train_args(tp, sp, out)) == 0
        printed = capsys.readouterr().out
        assert "mean accuracy" in printed
        for name in ("model.json", "report.json", "timings.json"):
            assert os.path.exists(os.path.join(out, name))

    def test_train_then_evaluate_and_predict(self, data_files, tmp_path, capsys):
        tp, sp = data_files
        out = str(tmp_path / "run")
        main(train_args(tp, sp, out))
        capsys.readouterr()

        model = os.path.join(out, "model.json")
        assert main(["evaluate", "--model", model, "--test", sp]) == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0

        assert main(["predict", "--model", model, "--data", sp]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 100

    def test_predict_to_file(self, data_files, tmp_path, capsys):
        tp, sp = data_files
        out = str(tmp_path / "run")
        main(train_args(tp, sp, out))
        dest = str(tmp_path / "preds.txt")
        assert main(["predict", "--model", os.path.join(out, "model.json"),
                     "--data", sp, "--out", dest]) == 0
        assert len(open(dest).read().strip().split("\n")) == 100

    def test_gini_scan_command(self, data_files, tmp_path, capsys):
        tp, _ = data_files
        out = str(tmp_path / "scan")
        code = main(["gini-scan", "--train", tp, "--out", out,
                     "--partitions", "2", "--grid-step", "0.4", "--seed", "0"])
        assert code == 0
        assert "modal best retained fraction" in capsys.readouterr().out
        assert os.path.exists(os.path.join(out, "gini_aggregate.csv"))

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        code = main(["train", "--train", str(tmp_path / "nope.svm"),
                     "--out", str(tmp_path / "o")])
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_malformed_file_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.svm"
        bad.write_text("1 2:1 1:1\n")
        code = main(["train", "--train", str(bad), "--out", str(tmp_path / "o")])
        assert code == 3

    def test_degenerate_ensemble_exit_code(self, tmp_path, capsys):
        xor = tmp_path / "xor.svm"
        xor.write_text("a 1:0 2:0\na 1:1 2:1\nb 1:0 2:1\nb 1:1 2:0\n")
        code = main(["train", "--train", str(xor), "--out", str(tmp_path / "o"),
                     "--partitions", "1", "--learner", "stump", "--rounds", "5",
                     "--no-filter", "--no-scale", "--beta-mode", "train", "--reps", "1"])
        assert code == 4

    def test_log_env_var(self, data_files, tmp_path, monkeypatch, capsys):
        tp, sp = data_files
        monkeypatch.setenv("NOISEGATE_LOG", "info")
        assert main(train_args(tp, sp, str(tmp_path / "run"))) == 0
