"""Config validation and command-line pipeline tests (small runs)."""

import csv
import json

import numpy as np
import pytest

from naqas.cli import main
from naqas.config import ConfigError, config_from_dict, load_config

SMALL_CONFIG = {
    "task": "binary",
    "seed": 11,
    "noise": {"channel": "depolarizing", "p": 0.01},
    "trainer": {"epochs": 6, "fine_tune_steps": 2},
    "evo": {"pop_size": 6, "generations": 2},
}


@pytest.fixture()
def small_config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({})
        assert cfg.task.name == "binary"
        assert cfg.noise.channel == "depolarizing" and cfg.noise.p == 0.01
        assert cfg.trainer.epochs == 300 and cfg.trainer.epsilon == 0.1
        assert cfg.evo.pop_size == 40 and cfg.evo.generations == 30
        assert cfg.alpha == 1.0 and cfg.beta == 1.0

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key 'tasks'"):
            config_from_dict({"tasks": "binary"})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="unknown key 'trainer.learning_rate'"):
            config_from_dict({"trainer": {"learning_rate": 0.1}})

    def test_bad_type(self):
        with pytest.raises(ConfigError, match="'evo.pop_size'"):
            config_from_dict({"evo": {"pop_size": "forty"}})

    def test_bad_task(self):
        with pytest.raises(ConfigError, match="'task'"):
            config_from_dict({"task": "mnist"})

    def test_domain_validation_wrapped(self):
        with pytest.raises(ConfigError):
            config_from_dict({"noise": {"p": 2.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"evo": {"pop_size": 7}})

    def test_parse_error_is_line_numbered(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "task": "binary",\n  "seed": oops\n}\n')
        with pytest.raises(ConfigError, match=r":3:"):
            load_config(str(path))

    def test_roundtrip_through_dict(self):
        cfg = config_from_dict(SMALL_CONFIG)
        again = config_from_dict(cfg.to_dict())
        assert again == cfg


class TestPipelineCommands:
    def test_pretrain_search_report(self, small_config_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("pretrain", "--config", small_config_path, "--out", str(out)) == 0
        assert (out / "checkpoint.json").exists()
        log_rows = (out / "train_log.csv").read_text().strip().splitlines()
        assert len(log_rows) == 1 + SMALL_CONFIG["trainer"]["epochs"]

        assert run_cli("search", "--config", small_config_path,
                       "--checkpoint", str(out / "checkpoint.json"),
                       "--out", str(out)) == 0
        with open(out / "archive.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        # archive rows are pairwise non-dominated on (E, C)
        pts = [(float(r["E"]), float(r["C"])) for r in rows]
        for a in pts:
            for b in pts:
                if a != b:
                    assert not (a[0] <= b[0] and a[1] <= b[1] and a != b) or not (
                        a[0] < b[0] or a[1] < b[1])
        stats_rows = (out / "generation_stats.csv").read_text().strip().splitlines()
        assert len(stats_rows) == 1 + SMALL_CONFIG["evo"]["generations"] + 1

        assert run_cli("report", str(out)) == 0
        assert (out / "top_accuracy.csv").exists()
        depth_rows = list(csv.DictReader(open(out / "accuracy_by_depth.csv")))
        assert all(5 <= int(r["n_depth"]) <= 10 for r in depth_rows)
        printed = capsys.readouterr().out
        assert "best architecture" in printed

    def test_pretrain_deterministic_checkpoints(self, small_config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out1))
        run_cli("pretrain", "--config", small_config_path, "--out", str(out2))
        assert (out1 / "checkpoint.json").read_bytes() == (out2 / "checkpoint.json").read_bytes()
        assert (out1 / "train_log.csv").read_bytes() == (out2 / "train_log.csv").read_bytes()

    def test_zero_epoch_checkpoint_is_initialization(self, tmp_path):
        cfg = dict(SMALL_CONFIG)
        cfg["trainer"] = {"epochs": 0}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        assert run_cli("pretrain", "--config", str(path), "--out", str(out)) == 0
        from naqas.training import load_checkpoint, init_shared_parameters, TrainerConfig
        from naqas.space import SearchSpaceDef
        params = load_checkpoint(out / "checkpoint.json")
        rng = np.random.default_rng(np.random.SeedSequence([11, 1]))
        fresh = init_shared_parameters(SearchSpaceDef(3, 5, 10), 5, 2, rng, TrainerConfig())
        assert np.array_equal(params.theta, fresh.theta)

    def test_zero_generation_search(self, small_config_path, tmp_path):
        cfg = dict(SMALL_CONFIG)
        cfg["evo"] = {"pop_size": 6, "generations": 0}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        run_cli("pretrain", "--config", str(path), "--out", str(out))
        assert run_cli("search", "--config", str(path),
                       "--checkpoint", str(out / "checkpoint.json"), "--out", str(out)) == 0
        stats = (out / "generation_stats.csv").read_text().strip().splitlines()
        assert len(stats) == 2   # header + generation 0

    def test_checkpoint_mismatch_names_both_shapes(self, small_config_path, tmp_path, capsys):
        out = tmp_path / "run"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out))
        iris_cfg = tmp_path / "iris.json"
        iris_cfg.write_text(json.dumps({"task": "iris", "trainer": {"epochs": 1},
                                        "evo": {"pop_size": 4, "generations": 1}}))
        code = run_cli("search", "--config", str(iris_cfg),
                       "--checkpoint", str(out / "checkpoint.json"), "--out", str(out))
        assert code == 1
        err = capsys.readouterr().err
        assert "(3, 5, 10, 2)" in err and "(4, 5, 10, 3)" in err

    def test_evaluate_roundtrip_and_determinism(self, small_config_path, tmp_path, capsys):
        out = tmp_path / "run"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out))
        records = []
        for sub in ("e1", "e2"):
            code = run_cli("evaluate", "5,10,15,20,25", "--config", small_config_path,
                           "--checkpoint", str(out / "checkpoint.json"),
                           "--out", str(tmp_path / sub))
            assert code == 0
            records.append(json.loads((tmp_path / sub / "evaluation.json").read_text()))
        assert records[0] == records[1]
        assert records[0]["noisy"]["n_depth"] == 5
        assert 0.0 <= records[0]["noisy"]["test_accuracy"] <= 1.0
        assert "noiseless" in records[0]

    def test_malformed_genome_reports_token(self, small_config_path, tmp_path, capsys):
        out = tmp_path / "run"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out))
        code = run_cli("evaluate", "5,x,1", "--config", small_config_path,
                       "--checkpoint", str(out / "checkpoint.json"), "--out", str(out))
        assert code == 1
        assert "token 1" in capsys.readouterr().err

    def test_missing_artifacts_listed(self, tmp_path, capsys):
        code = run_cli("report", str(tmp_path))
        assert code == 1
        err = capsys.readouterr().err
        assert "archive.csv" in err and "missing" in err

    def test_empty_archive_report_zero_exit(self, tmp_path, capsys):
        from naqas.cli import ARCHIVE_COLUMNS
        from naqas.config import config_from_dict
        (tmp_path / "archive.csv").write_text(",".join(ARCHIVE_COLUMNS) + "\n")
        manifest = {"command": "search", "config": config_from_dict(SMALL_CONFIG).to_dict(),
                    "artifacts": {}}
        (tmp_path / "manifest_search.json").write_text(json.dumps(manifest))
        assert run_cli("report", str(tmp_path)) == 0
        assert "empty" in capsys.readouterr().out
        top_rows = (tmp_path / "top_accuracy.csv").read_text().strip().splitlines()
        depth_rows = (tmp_path / "accuracy_by_depth.csv").read_text().strip().splitlines()
        assert len(top_rows) == 1 and len(depth_rows) == 1   # headers only

    def test_report_summary_matches_evaluate(self, small_config_path, tmp_path, capsys):
        out = tmp_path / "run"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out))
        run_cli("search", "--config", small_config_path,
                "--checkpoint", str(out / "checkpoint.json"), "--out", str(out))
        with open(out / "archive.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        best = min(rows, key=lambda r: (float(r["E"]), float(r["C"]), r["genome"]))
        assert run_cli("report", str(out)) == 0
        report_out = capsys.readouterr().out
        assert run_cli("evaluate", best["genome"], "--config", small_config_path,
                       "--checkpoint", str(out / "checkpoint.json"),
                       "--out", str(out)) == 0
        record = json.loads((out / "evaluation.json").read_text())["noisy"]
        # the printed summary carries the same evaluate fields for the best-E genome
        assert f"E={record['E']!r}" in report_out
        assert f"test_accuracy={record['test_accuracy']!r}" in report_out
        assert f"n_cnot={record['n_cnot']}" in report_out

    def test_noiseless_flag(self, small_config_path, tmp_path):
        out = tmp_path / "run"
        assert run_cli("pretrain", "--config", small_config_path, "--out", str(out),
                       "--noiseless") == 0
        manifest = json.loads((out / "manifest_pretrain.json").read_text())
        assert manifest["config"]["noise"]["channel"] == "none"

    def test_seed_override(self, small_config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_cli("pretrain", "--config", small_config_path, "--out", str(out1), "--seed", "99")
        run_cli("pretrain", "--config", small_config_path, "--out", str(out2))
        assert (out1 / "checkpoint.json").read_bytes() != (out2 / "checkpoint.json").read_bytes()
        manifest = json.loads((out1 / "manifest_pretrain.json").read_text())
        assert manifest["seed"] == 99

    def test_out_env_var(self, small_config_path, tmp_path, monkeypatch):
        monkeypatch.setenv("NAQAS_OUT", str(tmp_path / "envroot"))
        assert run_cli("pretrain", "--config", small_config_path) == 0
        assert (tmp_path / "envroot" / "naqas-run" / "checkpoint.json").exists()

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{nope}")
        assert run_cli("pretrain", "--config", str(path)) == 1
        assert "error:" in capsys.readouterr().err


class TestSearchDeterminismAcrossWorkers:
    def test_archive_identical_for_worker_counts(self, tmp_path):
        cfg = dict(SMALL_CONFIG)
        cfg["evo"] = {"pop_size": 6, "generations": 2}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        base = tmp_path / "base"
        run_cli("pretrain", "--config", str(path), "--out", str(base))
        archives = []
        for i, workers in enumerate((1, 2)):
            out = tmp_path / f"w{workers}"
            assert run_cli("search", "--config", str(path),
                           "--checkpoint", str(base / "checkpoint.json"),
                           "--out", str(out), "--workers", str(workers)) == 0
            archives.append((out / "archive.csv").read_bytes())
        assert archives[0] == archives[1]
