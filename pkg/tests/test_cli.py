import json

import numpy as np
import pytest

import qel.cli as cli
from qel.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_NUMERIC, main
from qel.config import ConfigError, load_config, make_config, parse_set
from qel.ising import IsingModel
from qel.training import load_checkpoint

TINY = [
    "problem=custom", "kind=maxcut", "size=4", "n_instances=12", "n_train=6", "n_val=3", "n_test=3",
    "p=1", "epochs=2", "batch_size=3", "shots=64", "lr=0.05",
]


def tiny_args(out, *extra):
    args = ["--out", str(out)]
    for s in TINY + list(extra):
        args += ["--set", s]
    return args


def run_pipeline(out, *extra):
    assert main(["gen"] + tiny_args(out, *extra)) == 0
    assert main(["train"] + tiny_args(out, *extra)) == 0
    assert main(["eval"] + tiny_args(out, *extra)) == 0


class TestConfig:
    def test_preset_hyperparameters(self):
        cfg = make_config({"problem": "qap16"})
        assert (cfg.kind, cfg.size, cfg.penalty) == ("qap", 4, 50.0)
        assert make_config({"problem": "qap25"}).penalty == 150.0
        assert (cfg.lr, cfg.batch_size, cfg.shots) == (1e-3, 8, 4096)

    def test_overrides_on_top_of_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"problem": "maxcut25", "p": 2, "encoder": "lin"}))
        cfg = load_config(path, ["p=4"], seed_data=None)
        assert (cfg.size, cfg.p, cfg.encoder) == (25, 4, "lin")

    def test_parse_set_reads_json_values(self):
        assert parse_set(["a=3", "b=x", "c=[1]"]) == {"a": 3, "b": "x", "c": [1]}
        with pytest.raises(ConfigError):
            parse_set(["novalue"])

    @pytest.mark.parametrize(
        "over", [{"problem": "nope"}, {"encoder": "mlp"}, {"p": 0}, {"bogus": 1}, {"n_train": 1000}, {"grad_mode": "x"}]
    )
    def test_rejects(self, over):
        with pytest.raises(ConfigError):
            make_config(over)

    def test_hash_ignores_output_location(self):
        a = make_config({"out_dir": "a", "threads": 1})
        b = make_config({"out_dir": "b", "threads": 4})
        assert a.hash() == b.hash()
        assert a.hash() != make_config({"seed_train": 1}).hash()


class TestVerbs:
    def test_gen_preset_shape(self, tmp_path):
        out = tmp_path / "g"
        assert main(["gen", "--problem", "maxcut16", "--out", str(out), "--set", "n_instances=512"]) == 0
        lines = (out / "dataset.jsonl").read_text().splitlines()
        assert len(lines) == 513
        assert len(json.loads(lines[1])["y"]) == 120

    def test_gen_replay_is_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["gen"] + tiny_args(tmp_path / d)) == 0
        assert (tmp_path / "a/dataset.jsonl").read_bytes() == (tmp_path / "b/dataset.jsonl").read_bytes()

    def test_dump_model(self, tmp_path, capsys):
        assert main(["gen", "--dump-model"] + tiny_args(tmp_path)) == 0
        model = IsingModel.parse(capsys.readouterr().out, 4)
        assert len(model.quadratic) == 6

    def test_param_count_printed(self, tmp_path, capsys):
        args = ["train", "--problem", "maxcut16", "--out", str(tmp_path)]
        for s in ("encoder=lin", "p=3", "epochs=0", "n_instances=8", "n_train=4", "n_val=2", "n_test=2"):
            args += ["--set", s]
        assert main(args) == 0
        assert "parameters: 9" in capsys.readouterr().out
        state, _ = load_checkpoint(tmp_path / "checkpoint.json")
        assert state.epoch == 0 and state.params.layout.total == 9

    def test_pipeline_outputs(self, tmp_path):
        run_pipeline(tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        cfg = load_config(None, TINY)
        assert summary["config_hash"] == cfg.hash()
        assert summary["param_count"] == 7  # 2 angles for p=1 plus 2*2+1 encoder weights
        assert summary["n_instances"] == 3
        assert len(summary["ci95"]) == 2
        rows = (tmp_path / "results.csv").read_text().splitlines()
        assert rows[0] == "instance_id,regret,feasible,fallback,cost,optimal_cost"
        assert len(rows) == 4
        ckpt = json.loads((tmp_path / "checkpoint.json").read_text())
        assert ckpt["config_hash"] == cfg.hash()
        assert json.loads((tmp_path / "manifest.json").read_text())["config_hash"] == cfg.hash()

    def test_pipeline_is_deterministic(self, tmp_path):
        run_pipeline(tmp_path / "a")
        run_pipeline(tmp_path / "b")
        for name in ("summary.json", "results.csv", "checkpoint.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_resume_reproduces_uninterrupted_run(self, tmp_path, monkeypatch):
        run_pipeline(tmp_path / "full")
        real_train = cli.train

        class Stop(Exception):
            pass

        def interrupted(start, tr, va, opt, mode, seed, on_epoch):
            def hook(state, rec):
                on_epoch(state, rec)
                raise Stop

            return real_train(start, tr, va, opt, mode, seed, hook)

        out = tmp_path / "resumed"
        monkeypatch.setattr(cli, "train", interrupted)
        with pytest.raises(Stop):
            main(["train"] + tiny_args(out))
        assert load_checkpoint(out / "checkpoint.json")[0].epoch == 1
        monkeypatch.setattr(cli, "train", real_train)
        assert main(["train"] + tiny_args(out)) == 0
        a = load_checkpoint(tmp_path / "full/checkpoint.json")[0]
        b = load_checkpoint(out / "checkpoint.json")[0]
        np.testing.assert_array_equal(a.params.flat(), b.params.flat())
        assert a.history == b.history

    def test_oracle_and_random_policies(self, tmp_path):
        assert main(["gen"] + tiny_args(tmp_path)) == 0
        assert main(["eval", "--oracle-policy"] + tiny_args(tmp_path)) == 0
        assert main(["eval", "--random-policy"] + tiny_args(tmp_path)) == 0
        assert json.loads((tmp_path / "summary_oracle.json").read_text())["mean_regret"] == 0.0
        assert json.loads((tmp_path / "summary_random.json").read_text())["policy"] == "random"

    def test_shot_gradient_mode(self, tmp_path):
        assert main(["train", "--grad-mode", "shots:16"] + tiny_args(tmp_path, "epochs=1")) == 0
        assert load_checkpoint(tmp_path / "checkpoint.json")[0].epoch == 1


class TestExitCodes:
    def test_bad_preset(self, tmp_path):
        assert main(["gen", "--problem", "maxcut99", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_checkpoint(self, tmp_path):
        assert main(["eval"] + tiny_args(tmp_path)) == EXIT_CONFIG

    def test_capacity(self, tmp_path):
        assert main(["gen"] + tiny_args(tmp_path, "size=40")) == EXIT_CAPACITY

    def test_numeric_abort(self, tmp_path):
        args = tiny_args(tmp_path, "optimizer=sgd", "eta0=1e308", "epochs=1")
        assert main(["train"] + args) == EXIT_NUMERIC


class TestTable:
    def test_rows_and_param_counts(self, tmp_path, capsys):
        run_pipeline(tmp_path)
        assert main(["eval", "--random-policy"] + tiny_args(tmp_path)) == 0
        capsys.readouterr()
        paths = [str(tmp_path / "summary.json"), str(tmp_path / "summary_random.json")]
        assert main(["table", *paths, "--csv", str(tmp_path / "t.csv")]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        rows = (tmp_path / "t.csv").read_text().splitlines()
        assert rows[0].startswith("problem,policy")
        assert rows[1].split(",")[5] == "7"

    def test_empty_gives_header_only(self, capsys):
        assert main(["table"]) == 0
        assert capsys.readouterr().out.split() == list(cli.TABLE_COLUMNS)

    def test_refuses_mixed_presets(self, tmp_path):
        a = {"problem": "maxcut16", "data_hash": "x"}
        b = {"problem": "qap16", "data_hash": "y"}
        for name, d in (("a", a), ("b", b)):
            (tmp_path / name).write_text(json.dumps(d))
        assert main(["table", str(tmp_path / "a"), str(tmp_path / "b")]) == EXIT_CONFIG
