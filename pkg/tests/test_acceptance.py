"""Acceptance gates. Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines.

Every gate prints exactly one line before asserting, so a failing gate is
still reported alongside the ones that pass.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from stopbed.cli import main
from stopbed.env_convdiff import ConvDiffConfig, ConvDiffEnv, precompute_fields
from stopbed.env_lingauss import LinGaussConfig, LinGaussEnv
from stopbed.mdp import RewardSpec, pathwise_gap
from stopbed.train import OracleAgent, TrainConfig, evaluate, train
from stopbed.verify import equivalence, fv_audits, gradcheck, random_trajectories

TABLE = {
    0.0: [2.203, 2.547, 2.749, 2.892],
    -0.5: [1.703, 1.547, 1.249, 0.892],
    -0.25: [1.953, 2.047, 1.999, 1.892],
}


def report(n, name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n} {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def pde_cache(tmp_path_factory):
    cfg = ConvDiffConfig(fv_resolution=48, theta_grid=25, cost=-0.8)
    return cfg, precompute_fields(cfg, path=tmp_path_factory.mktemp("fields") / "fields.npz")


def test_c1_oracle_table(capsys):
    t0 = time.perf_counter()
    code = main(["oracle"])
    dt = time.perf_counter() - t0
    out = capsys.readouterr().out.strip().splitlines()[1:]
    got = {(int(n), float(c)): float(u) for n, c, u, _ in (line.split(",") for line in out)}
    worst = max(abs(got[(n + 1, c)] - TABLE[c][n]) for c in TABLE for n in range(4))
    assert code == 0 and len(got) == 12
    report(1, "oracle table", worst <= 5e-4 and dt < 1.0, f"max |err| {worst:.2e} (<= 5e-4), {dt:.3f}s (< 1s)")


def test_c2_oracle_policy_evaluation():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for c, row in TABLE.items():
        env = LinGaussEnv(LinGaussConfig(horizon=4, cost=c))
        spec = RewardSpec("incremental", env.cfg.cost)
        res = evaluate(OracleAgent(env, spec), env, 10_000, seed=11, spec=spec)
        z = abs(res["avg_reward"] - max(row)) / res["se_reward"]
        ok &= z <= 3.0
        parts.append(f"c={c}: {res['avg_reward']:.4f} vs {max(row)} ({z:.2f} SE)")
    dt = time.perf_counter() - t0
    report(2, "oracle policy", ok and dt < 30, "; ".join(parts) + f"; {dt:.1f}s (< 30s)")


@pytest.mark.slow
def test_c3_equivalence(pde_cache):
    cfg, cache = pde_cache
    t0 = time.perf_counter()
    envs = [("gaussian", LinGaussEnv(LinGaussConfig(horizon=4, cost=-0.25)), 1e-9),
            ("grid", ConvDiffEnv(cfg, cache=cache), 1e-6)]
    checks = equivalence(envs, n=1000)
    dt = time.perf_counter() - t0
    detail = "; ".join(f"{c.name} {c.value:.2e} ({'>=' if c.limit < 0 else '<='} {c.limit:.0e})" for c in checks)
    report(3, "expected-total equivalence", all(c.ok for c in checks) and dt < 120, detail + f"; {dt:.1f}s")


@pytest.mark.xfail(strict=True, reason="realised totals differ by a zero-mean martingale term; "
                                      "equality holds only in expectation")
def test_c3_pathwise_literal():
    env = LinGaussEnv(LinGaussConfig(horizon=4, cost=-0.25))
    spec_t, spec_i = RewardSpec("terminal", env.cfg.cost), RewardSpec("incremental", env.cfg.cost)
    worst = max(pathwise_gap(t, spec_t, spec_i, env) for t in random_trajectories(env, 1000))
    report(3, "pathwise equality (literal reading)", worst <= 1e-9, f"max realised gap {worst:.3e} (<= 1e-9)")


def test_c4_gradcheck():
    t0 = time.perf_counter()
    checks = gradcheck(n_nets=100)
    dt = time.perf_counter() - t0
    detail = "; ".join(f"{c.name} {c.value:.2e}" for c in checks)
    report(4, "gradient check", all(c.ok for c in checks) and dt < 30, detail + f" (<= 1e-5); {dt:.2f}s")


def _desk(horizon, cost, mode, seed):
    env = LinGaussEnv(LinGaussConfig(horizon=horizon, cost=cost))
    _, _, rec = train(TrainConfig(iterations=60, episodes=200, mode=mode, seed=seed), env)
    return rec.tail_mean("avg_stop_stage", 10), rec.tail_mean("avg_reward", 10)


@pytest.mark.slow
def test_c5_desk_training():
    t0 = time.perf_counter()
    seeds = (0, 1, 2)
    lines, ok = [], True
    for s in seeds:
        stop, rew = _desk(3, 0.0, "curriculum", s)
        good = 2.8 <= stop <= 3.0 and rew >= 2.55
        ok &= good
        lines.append(f"N3 c0 cur s{s}: stop {stop:.2f} reward {rew:.3f}")
    for mode in ("curriculum", "vanilla"):
        for s in seeds:
            stop, rew = _desk(3, -0.5, mode, s)
            ok &= 1.0 <= stop <= 1.3 and rew >= 1.50
            lines.append(f"N3 c-0.5 {mode[:3]} s{s}: stop {stop:.2f} reward {rew:.3f}")
    for s in seeds:
        stop, rew = _desk(4, -0.25, "curriculum", s)
        ok &= rew >= 1.85
        lines.append(f"N4 c-0.25 cur s{s}: stop {stop:.2f} reward {rew:.3f}")
    dt = time.perf_counter() - t0
    report(5, "desk training", ok and dt <= 600, "; ".join(lines) + f"; {dt:.0f}s (<= 600s)")


@pytest.mark.slow
def test_c6_curriculum_vs_vanilla(pde_cache):
    cfg, cache = pde_cache
    env = ConvDiffEnv(cfg, cache=cache)
    t0 = time.perf_counter()
    finals = {}
    for mode in ("curriculum", "vanilla"):
        vals = []
        for s in (0, 1, 2):
            _, _, rec = train(TrainConfig(iterations=60, episodes=100, mode=mode, seed=s), env)
            vals.append(rec.tail_mean("avg_reward", 10))
        finals[mode] = float(np.mean(vals))
    dt = time.perf_counter() - t0
    report(6, "curriculum vs vanilla (PDE)", finals["curriculum"] >= finals["vanilla"] and dt <= 1800,
           f"curriculum {finals['curriculum']:.4f} vs vanilla {finals['vanilla']:.4f}; {dt:.0f}s")


def test_c7_fv_audits():
    t0 = time.perf_counter()
    checks = fv_audits()
    dt = time.perf_counter() - t0
    detail = "; ".join(f"{c.name} {c.value:.3g}" for c in checks)
    report(7, "finite-volume audits", all(c.ok for c in checks) and dt < 300, detail + f"; {dt:.1f}s")


def test_c8_determinism(tmp_path):
    args = ["train", "--env", "lingauss", "--horizon", "3", "--cost", "0", "--iters", "60",
            "--episodes", "200", "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    # second run in a fresh interpreter so no in-process state can leak between runs
    proc = subprocess.run([sys.executable, "-m", "stopbed.cli", *args, "--out", str(tmp_path / "b")])
    assert proc.returncode == 0
    a = (tmp_path / "a" / "convergence.csv").read_bytes()
    b = (tmp_path / "b" / "convergence.csv").read_bytes()
    report(8, "determinism", a == b, f"convergence.csv {len(a)} bytes, identical={a == b}")
