import csv
import json

import numpy as np
import pytest

from stopbed.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, RunConfig, main
from stopbed.env_convdiff import ConvDiffConfig
from stopbed.errors import ConfigError
from stopbed.train import TrainConfig


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestOracleCommand:
    def test_default_table(self, capsys):
        assert main(["oracle"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,cost,utility,optimal"
        rows = [line.split(",") for line in lines[1:]]
        zero = [float(r[2]) for r in rows if r[1] == "0"]
        np.testing.assert_allclose(zero, [2.203, 2.547, 2.749, 2.892], atol=5e-4)
        flagged = {r[1]: (r[0], r[2]) for r in rows if r[3] == "1"}
        assert flagged["-0.5"][0] == "1" and abs(float(flagged["-0.5"][1]) - 1.703) < 5e-4
        assert flagged["-0.25"][0] == "2" and abs(float(flagged["-0.25"][1]) - 2.047) < 5e-4

    def test_bad_costs(self, capsys):
        assert main(["oracle", "--costs", "a,b"]) == EXIT_VALIDATION


class TestRunConfig:
    def test_roundtrip_fixed_point(self):
        rc = RunConfig("convdiff", ConvDiffConfig(theta_grid=25, cost={"kind": "quadratic", "scale": 1.0}),
                       TrainConfig(iterations=7, mode="vanilla"), "out/x", "cache.npz", 1)
        text = rc.dumps()
        again = RunConfig.loads(text)
        assert again.dumps() == text
        assert again.env_config == rc.env_config and again.train == rc.train

    def test_missing_design_bound_is_named(self):
        with pytest.raises(ConfigError, match="design_lo"):
            RunConfig.from_dict({"env": "lingauss", "env_config": {"design_hi": 3.0}})

    def test_unknown_fields_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            RunConfig.from_dict({"env": "lingauss", "env_config": {"design_lo": 0.1, "design_hi": 3, "bogus": 1}})

    def test_missing_bound_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"env": "lingauss", "env_config": {"design_lo": 0.1}}))
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_VALIDATION
        assert "design_hi" in capsys.readouterr().err


class TestTrainAndEval:
    ARGS = ["train", "--env", "lingauss", "--horizon", "3", "--cost", "0", "--mode", "curriculum",
            "--iters", "6", "--episodes", "20", "--seed", "42"]

    def test_outputs_and_determinism(self, tmp_path):
        assert main(self.ARGS + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(self.ARGS + ["--out", str(tmp_path / "b")]) == EXIT_OK
        a = (tmp_path / "a" / "convergence.csv").read_bytes()
        assert a == (tmp_path / "b" / "convergence.csv").read_bytes()
        assert b"\r" not in a
        rows = read_csv(tmp_path / "a" / "convergence.csv")
        assert len(rows) == 6 and list(rows[0]) == ["iter", "avg_reward", "avg_stop_stage", "p_stop", "loss_q",
                                                     "grad_norm"]
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["seed"] == 42 and manifest["version"]
        for name in ("stop_hist.csv", "design_hist.csv", "final.ckpt"):
            assert (tmp_path / "a" / name).exists()

    def test_manifest_reproduces_run(self, tmp_path):
        assert main(self.ARGS + ["--out", str(tmp_path / "a")]) == EXIT_OK
        cfg = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
        cfg["out"] = str(tmp_path / "b")
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert main(["train", "--config", str(tmp_path / "c.json")]) == EXIT_OK
        assert (tmp_path / "a" / "convergence.csv").read_bytes() == (tmp_path / "b" / "convergence.csv").read_bytes()

    def test_checkpoints_every_fifty(self, tmp_path):
        args = self.ARGS[:-6] + ["--iters", "50", "--episodes", "4", "--seed", "1", "--out", str(tmp_path / "a")]
        assert main(args) == EXIT_OK
        assert (tmp_path / "a" / "checkpoints" / "iter_0050.ckpt").exists()

    def test_eval(self, tmp_path, capsys):
        run = tmp_path / "a"
        assert main(self.ARGS + ["--out", str(run)]) == EXIT_OK
        assert main(["eval", "--run", str(run), "--episodes", "30"]) == EXIT_OK
        metrics = {r["metric"]: float(r["value"]) for r in read_csv(run / "eval" / "metrics.csv")}
        assert 1.0 <= metrics["avg_stop_stage"] <= 3.0
        stops = read_csv(run / "eval" / "stop_hist.csv")
        assert sum(int(r["count"]) for r in stops) == 30
        assert main(["eval", "--run", str(run), "--episodes", "0"]) == EXIT_VALIDATION

    def test_eval_bad_checkpoint(self, tmp_path):
        run = tmp_path / "a"
        assert main(self.ARGS + ["--out", str(run)]) == EXIT_OK
        (tmp_path / "junk.ckpt").write_bytes(b"nope")
        assert main(["eval", "--run", str(run), "--checkpoint", str(tmp_path / "junk.ckpt")]) == EXIT_RUNTIME
        assert main(["eval", "--run", str(run), "--checkpoint", str(tmp_path / "missing")]) == EXIT_RUNTIME
        assert main(["eval", "--run", str(tmp_path / "nowhere")]) == EXIT_VALIDATION

    def test_pde_traces_follow_sensor_arithmetic(self, tmp_path):
        run = tmp_path / "p"
        args = ["train", "--env", "convdiff", "--theta-grid", "10", "--fv-resolution", "32", "--horizon", "3",
                "--cost", "-0.1", "--iters", "2", "--episodes", "8", "--out", str(run),
                "--field-cache", str(tmp_path / "fields.npz")]
        assert main(args) == EXIT_OK
        assert (tmp_path / "fields.npz").exists()
        assert main(["eval", "--run", str(run), "--episodes", "6"]) == EXIT_OK
        rows = read_csv(run / "eval" / "traces.csv")
        prev = {}
        for r in rows:
            ep, k = int(r["episode"]), int(r["stage"])
            start = prev.get(ep, np.array([0.5, 0.5]))
            moved = np.clip(start + [float(r["design_0"]), float(r["design_1"])], 0.0, 1.0)
            sensor = np.array([float(r["sensor_0"]), float(r["sensor_1"])])
            np.testing.assert_allclose(sensor, moved, atol=1e-12)
            prev[ep] = sensor
            assert k <= int(r["tau"])

    def test_unknown_flag_is_validation_error(self):
        assert main(["train", "--no-such-flag"]) == EXIT_VALIDATION
