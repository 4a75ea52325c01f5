import json
import subprocess
import sys

import pytest

from fedkd.cli import build_parser, kd_demo, main


def write_config(tmp_path, doc):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestAllocate:
    def test_writes_allocation_and_prints(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"decision": {"x": [0, 1, 0, 1], "m": [0, 1, 2, 3]}})
        assert main(["allocate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
        payload = json.loads((tmp_path / "out" / "allocation.json").read_text())
        assert len(payload["f"]) == 4
        assert sum(payload["f"]) <= 10.0 * (1 + 1e-9)
        assert payload["kkt_residual"] < 1e-8
        assert json.loads(capsys.readouterr().out) == payload

    def test_missing_decision_fails_with_diagnostic(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {})
        assert main(["allocate", "--config", cfg]) == 1
        assert "decision" in capsys.readouterr().err

    def test_bad_config_fails(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"users": [{"f_loc": -1, "d": 5}],
                                      "decision": {"x": [0], "m": [0]}})
        assert main(["allocate", "--config", cfg]) == 1
        assert "users[0]" in capsys.readouterr().err


class TestTrainQ:
    def test_writes_table_and_summary(self, tmp_path):
        out = tmp_path / "q"
        assert main(["train-q", "--seed", "3", "--episodes", "200",
                     "--out", str(out)]) == 0
        assert (out / "qtable.tsv").exists()
        summary = json.loads((out / "train_summary.json").read_text())
        assert summary["episodes"] == 200
        assert len(summary["greedy_m"]) == 4


class TestExperiment:
    def test_runs_and_emits(self, tmp_path):
        out = tmp_path / "exp"
        assert main(["experiment", "--method", "fl-max", "--seed", "1", "--trials", "4",
                     "--episodes", "150", "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["trials"] == 4
        assert summary["model_frequencies"]["ResNet-26x4"] == 1.0

    def test_unknown_method_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["experiment", "--method", "annealing", "--out", str(tmp_path)])


class TestKdDemo:
    def test_metrics_and_snapshots(self, tmp_path):
        out = tmp_path / "kd"
        assert main(["kd-demo", "--seed", "0", "--epochs", "200",
                     "--out", str(out)]) == 0
        metrics = json.loads((out / "kd_metrics.json").read_text())
        assert set(metrics) >= {"teacher", "student_hard", "student_kd", "student_simkd"}
        for name in ("teacher_params", "student_simkd_params"):
            payload = json.loads((out / f"{name}.json").read_text())
            assert {"weights", "biases", "w_out", "b_out"} <= set(payload)

    def test_demo_orderings_at_full_settings(self):
        res = kd_demo(seed=0, epochs=600)
        m = res["metrics"]
        assert m["student_simkd"]["full_test"] > m["student_hard"]["full_test"]
        assert m["student_simkd"]["own_test"] >= m["student_simkd"]["full_test"]


class TestDumpOracle:
    def test_dump_matches_builtin(self, tmp_path, capsys):
        import io

        from fedkd.accuracy import DEFAULT_TABLE, load_table
        assert main(["dump-oracle", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "accuracy_table.csv").read_text()
        assert load_table(io.StringIO(text)).records == DEFAULT_TABLE.records


class TestParser:
    def test_all_subcommands_registered(self):
        parser = build_parser()
        subactions = next(a for a in parser._actions if a.dest == "command")
        assert set(subactions.choices) == {"allocate", "train-q", "experiment",
                                           "kd-demo", "dump-oracle"}

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "fedkd.cli", "dump-oracle"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("model,method,distribution,testset,topk,percent")
