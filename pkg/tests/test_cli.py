import json

import pytest

from rankdistill.cli import main

TINY_DOC = {
    "task": {
        "num_answers": 10,
        "feature_dim": 5,
        "num_clusters": 2,
        "positives_per_instance": [1, 3],
        "train_size": 30,
        "val_size": 12,
        "test_size": 12,
        "feature_noise": 1.0,
        "seed": 2,
    },
    "model": {"hidden_sizes": [6]},
    "teacher": {"epochs": 2, "lr": 0.1},
    "student": {"epochs": 2, "lr": 0.1},
    "pairwise": {"truncate": 10, "mc_passes": 3},
    "listwise": {"hot_size": 3, "cold_size": 2},
    "seed": 2,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_DOC))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestGenData:
    def test_writes_three_splits(self, tmp_path, config_file, capsys):
        code = run_cli("gen-data", "--config", config_file, "--out", tmp_path / "data")
        assert code == 0
        for split in ("train", "val", "test"):
            assert (tmp_path / "data" / f"{split}.jsonl").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["sizes"] == {"train": 30, "val": 12, "test": 12}

    def test_flag_overrides_config(self, tmp_path, config_file, capsys):
        code = run_cli(
            "gen-data", "--config", config_file,
            "--task-train-size", "17", "--out", tmp_path / "data",
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["sizes"]["train"] == 17


class TestStagedPipeline:
    def test_teacher_snapshot_distill_evaluate(self, tmp_path, config_file, capsys):
        teacher_dir = tmp_path / "teacher"
        assert run_cli("train-teacher", "--config", config_file, "--out", teacher_dir) == 0
        teacher_path = teacher_dir / "teacher.json"
        assert teacher_path.exists()

        snap_dir = tmp_path / "snap"
        assert (
            run_cli(
                "snapshot", "--config", config_file, "--scheme", "radi-p",
                "--teacher", teacher_path, "--out", snap_dir,
            )
            == 0
        )
        assert (snap_dir / "snapshot.npz").exists()

        out_dir = tmp_path / "student"
        assert (
            run_cli(
                "distill", "--config", config_file, "--scheme", "radi-p",
                "--teacher", teacher_path,
                "--snapshot", snap_dir / "snapshot.npz",
                "--out", out_dir,
            )
            == 0
        )
        assert (out_dir / "student.json").exists()
        assert (out_dir / "metrics.csv").exists()

        capsys.readouterr()
        assert (
            run_cli(
                "evaluate", "--config", config_file,
                "--model", out_dir / "student.json", "--split", "test",
            )
            == 0
        )
        result = json.loads(capsys.readouterr().out)
        assert set(result) >= {"acc_at_1", "hit_at_k", "ndcg_at_k", "k"}

    def test_evaluate_from_dataset_file(self, tmp_path, config_file, capsys):
        run_cli("gen-data", "--config", config_file, "--out", tmp_path / "data")
        run_cli("train-teacher", "--config", config_file, "--out", tmp_path / "t")
        capsys.readouterr()
        code = run_cli(
            "evaluate", "--model", tmp_path / "t" / "teacher.json",
            "--data", tmp_path / "data" / "val.jsonl", "--k", "3",
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["k"] == 3


class TestRun:
    def test_run_writes_artifacts_and_reports(self, tmp_path, config_file, capsys):
        out = tmp_path / "run"
        code = run_cli("run", "--config", config_file, "--scheme", "radi-l", "--out", out)
        assert code == 0
        assert (out / "run.json").exists()
        assert (out / "metrics.csv").exists()
        assert (out / "config.json").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["test_result"] is not None

    def test_run_twice_byte_identical_metrics(self, tmp_path, config_file):
        run_cli("run", "--config", config_file, "--out", tmp_path / "a")
        run_cli("run", "--config", config_file, "--out", tmp_path / "b")
        assert (tmp_path / "a/metrics.csv").read_bytes() == (
            tmp_path / "b/metrics.csv"
        ).read_bytes()

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"scheme": "bogus"}))
        assert run_cli("run", "--config", bad) == 1
        assert "error:" in capsys.readouterr().err


class TestSweep:
    def test_sweep_cells_and_summary(self, tmp_path, config_file, capsys):
        out = tmp_path / "sweep"
        code = run_cli(
            "sweep", "--config", config_file, "--scheme", "radi-l",
            "--axis", "alpha_rank", "--values", "[0.1, 1.0]", "--out", out,
        )
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["cells"] == 2 and summary["failed"] == 0
        assert (out / "sweep.json").exists()
        assert (out / "cell-000" / "metrics.csv").exists()

    def test_failed_cell_reported_but_exit_zero(self, config_file, capsys):
        code = run_cli(
            "sweep", "--config", config_file,
            "--axis", "scheme", "--values", '["cls-only", "nope"]',
        )
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["failed"] == 1
