"""Command-line entry point: ``stopbed {train,eval,oracle,verify}``.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 verification
failure. Run configurations are JSON documents; command-line flags override
values read from ``--config``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import subprocess
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .env_convdiff import ConvDiffConfig, ConvDiffEnv, FieldCache, precompute_fields
from .env_lingauss import LinGaussConfig, LinGaussEnv, oracle_table
from .errors import ConfigError, StopbedError
from .mdp import RewardSpec
from .nn import load_nets, save_nets
from .train import NetAgent, OracleAgent, TrainConfig, evaluate, train

log = logging.getLogger("stopbed")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

ENV_CONFIGS = {"lingauss": LinGaussConfig, "convdiff": ConvDiffConfig}
REQUIRED_ENV_FIELDS = {"lingauss": ("design_lo", "design_hi"), "convdiff": ("design_half_width",)}


def version_string():
    """Package version plus ``git describe`` output when run from a checkout."""
    try:
        from importlib.metadata import version
        base = version("stopbed")
    except Exception:
        base = "0+unknown"
    try:
        here = Path(__file__).resolve().parent
        desc = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                              capture_output=True, text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{base}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


@dataclass
class RunConfig:
    env: str = "lingauss"
    env_config: object = field(default_factory=LinGaussConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    out: str = "runs/default"
    field_cache: str | None = None
    verbosity: int = 0

    def to_dict(self):
        return {
            "env": self.env,
            "env_config": self.env_config.to_dict(),
            "train": self.train.to_dict(),
            "out": self.out,
            "field_cache": self.field_cache,
            "verbosity": self.verbosity,
        }

    @classmethod
    def from_dict(cls, d):
        env = d.get("env", "lingauss")
        if env not in ENV_CONFIGS:
            raise ConfigError(f"env: unknown environment {env!r}")
        env_d = dict(d.get("env_config", {}))
        for name in REQUIRED_ENV_FIELDS[env]:
            if env_d.get(name) is None:
                raise ConfigError(f"env_config.{name}: required field is missing")
        _reject_unknown(ENV_CONFIGS[env], env_d, "env_config")
        _reject_unknown(TrainConfig, d.get("train", {}), "train")
        try:
            env_cfg = ENV_CONFIGS[env](**env_d)
            train_cfg = TrainConfig(**d.get("train", {}))
        except TypeError as err:
            raise ConfigError(str(err)) from err
        return cls(env, env_cfg, train_cfg, d.get("out", "runs/default"), d.get("field_cache"),
                   int(d.get("verbosity", 0)))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err

    def make_env(self):
        if self.env == "lingauss":
            return LinGaussEnv(self.env_config)
        cache = None
        if self.field_cache and os.path.exists(self.field_cache):
            cache = FieldCache.load(self.field_cache, self.env_config)
        if cache is None:
            cache = precompute_fields(self.env_config, path=self.field_cache)
        return ConvDiffEnv(self.env_config, cache=cache)


def _reject_unknown(cls, d, where):
    known = {f.name for f in fields(cls)}
    extra = sorted(set(d) - known)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _env_flags(p):
    p.add_argument("--env", choices=sorted(ENV_CONFIGS))
    p.add_argument("--horizon", type=int)
    p.add_argument("--cost", type=float, help="constant per-experiment cost")
    p.add_argument("--quadratic-cost", action="store_true", help="use c_k = -||xi||^2 instead")
    p.add_argument("--design-lo", type=float)
    p.add_argument("--design-hi", type=float)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--theta-grid", type=int)
    p.add_argument("--fv-resolution", type=int)
    p.add_argument("--field-cache")


def build_parser():
    ap = argparse.ArgumentParser(prog="stopbed", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a design policy with learned stopping")
    t.add_argument("--config", help="JSON run configuration")
    _env_flags(t)
    t.add_argument("--mode", choices=["vanilla", "curriculum"])
    t.add_argument("--formulation", choices=["terminal", "incremental"])
    t.add_argument("--iters", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--allow-stop-at-0", action="store_true", default=None)
    t.add_argument("--out")

    e = sub.add_parser("eval", help="evaluate a trained run")
    e.add_argument("--run", required=True, help="run directory written by train")
    e.add_argument("--checkpoint", help="checkpoint file (default: RUN/final.ckpt)")
    e.add_argument("--episodes", type=int, default=1000)
    e.add_argument("--seed", type=int, default=12345)
    e.add_argument("--oracle", action="store_true", help="use the analytic linear-Gaussian agent")
    e.add_argument("--out", help="output directory (default: RUN/eval)")

    o = sub.add_parser("oracle", help="print the analytic linear-Gaussian utility table")
    o.add_argument("--horizon", type=int, default=4)
    o.add_argument("--costs", default="0,-0.5,-0.25", help="comma-separated constant costs")
    o.add_argument("--design-lo", type=float, default=0.1)
    o.add_argument("--design-hi", type=float, default=3.0)
    o.add_argument("--prior-var", type=float, default=9.0)
    o.add_argument("--noise-std", type=float, default=1.0)

    v = sub.add_parser("verify", help="run the bundled self-check suites")
    v.add_argument("--suite", action="append", choices=["gradcheck", "equivalence", "fv", "oracle_stopping"])
    v.add_argument("--field-cache")
    return ap


def run_config_from_args(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
        d = json.loads(text) if text.strip() else {}
    else:
        d = {}
    env = args.env or d.get("env", "lingauss")
    if args.env and args.env != d.get("env", args.env):
        d["env_config"] = {}
    d["env"] = env
    env_d = d.setdefault("env_config", {})
    if not args.config:
        defaults = ENV_CONFIGS[env]()
        for name in REQUIRED_ENV_FIELDS[env]:
            env_d.setdefault(name, getattr(defaults, name))
    flag_map = {"horizon": "horizon", "design_lo": "design_lo", "design_hi": "design_hi",
                "theta_grid": "theta_grid", "fv_resolution": "fv_resolution"}
    for arg, key in flag_map.items():
        if getattr(args, arg) is not None:
            env_d[key] = getattr(args, arg)
    if args.noise_std is not None:
        env_d["noise_std" if env == "lingauss" else "sensor_noise_std"] = args.noise_std
    if args.quadratic_cost:
        env_d["cost"] = {"kind": "quadratic", "scale": 1.0}
    elif args.cost is not None:
        env_d["cost"] = {"kind": "constant", "value": args.cost}
    tr = d.setdefault("train", {})
    for arg, key in {"mode": "mode", "formulation": "formulation", "iters": "iterations",
                     "episodes": "episodes", "seed": "seed", "allow_stop_at_0": "allow_stop_at_0"}.items():
        if getattr(args, arg) is not None:
            tr[key] = getattr(args, arg)
    if args.out is not None:
        d["out"] = args.out
    if args.field_cache is not None:
        d["field_cache"] = args.field_cache
    d["verbosity"] = args.verbose
    return RunConfig.from_dict(d)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _write(path: Path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_train(args) -> int:
    rc = run_config_from_args(args)
    out = Path(rc.out)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    env = rc.make_env()
    manifest = {"config": rc.to_dict(), "seed": rc.train.seed, "version": version_string()}
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    def checkpoint(it, agent):
        save_nets(out / "checkpoints" / f"iter_{it:04d}.ckpt", policy=agent.policy, q=agent.q)

    def progress(row):
        log.info("iter %d reward %.4f stop %.3f p_stop %.3f", row["iter"], row["avg_reward"],
                 row["avg_stop_stage"], row["p_stop"])

    policy, q, record = train(rc.train, env, checkpoint_fn=checkpoint, progress=progress)
    save_nets(out / "final.ckpt", policy=policy, q=q)
    _write(out / "convergence.csv", record.to_csv())
    _write(out / "stop_hist.csv", record.hist_csv())
    _write(out / "design_hist.csv", record.design_hist_csv())
    print(f"wrote {out}: final-10 reward {record.tail_mean('avg_reward'):.4f}, "
          f"stop stage {record.tail_mean('avg_stop_stage'):.3f}")
    return EXIT_OK


def _trace_csv(env, batch):
    n = env.horizon
    dim = batch.thetas.shape[1]
    head = ["episode", "stage", "tau"] + [f"theta_{i}" for i in range(dim)]
    head += [f"design_{i}" for i in range(env.n_design)] + ["obs"]
    if batch.physical.shape[2]:
        head += [f"sensor_{i}" for i in range(batch.physical.shape[2])]
    head += [f"post_mean_{i}" for i in range(dim)] + [f"post_std_{i}" for i in range(dim)]
    lines = [",".join(head)]
    for m in range(len(batch)):
        for k in range(int(batch.tau[m])):
            row = [m, k + 1, int(batch.tau[m])] + list(batch.thetas[m]) + list(batch.designs[m, k])
            row += [batch.obs[m, k, 0]] + list(batch.physical[m, k + 1]) + list(batch.belief_summaries[k][m])
            lines.append(",".join(str(v) if isinstance(v, int) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    if args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    run = Path(args.run)
    try:
        manifest = json.loads((run / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read {run / 'manifest.json'}: {err}") from err
    rc = RunConfig.from_dict(manifest["config"])
    env = rc.make_env()
    spec = RewardSpec(rc.train.formulation, env.cfg.cost)
    if args.oracle:
        if rc.env != "lingauss":
            raise ConfigError("--oracle is only available for the linear-Gaussian environment")
        agent = OracleAgent(env, spec)
    else:
        nets = load_nets(args.checkpoint or run / "final.ckpt")
        agent = NetAgent(env, nets["policy"], nets["q"])
    res = evaluate(agent, env, args.episodes, seed=args.seed, spec=spec,
                   allow_stop_at_0=rc.train.allow_stop_at_0, keep_beliefs=True)
    out = Path(args.out) if args.out else run / "eval"
    out.mkdir(parents=True, exist_ok=True)
    metrics = ["metric,value", f"avg_reward,{res['avg_reward']!r}", f"se_reward,{res['se_reward']!r}",
               f"avg_stop_stage,{res['avg_stop_stage']!r}", f"episodes,{args.episodes}"]
    _write(out / "metrics.csv", "\n".join(metrics) + "\n")
    _write(out / "stop_hist.csv", "stage,count\n" + "".join(f"{k},{int(c)}\n" for k, c in enumerate(res["stop_hist"])))
    lines = ["axis,bin_lo,bin_hi,count"]
    for a, (h, e) in enumerate(zip(res["design_hist"], res["design_edges"])):
        lines += [f"{a},{e[b]!r},{e[b + 1]!r},{int(c)}" for b, c in enumerate(h)]
    _write(out / "design_hist.csv", "\n".join(lines) + "\n")
    _write(out / "traces.csv", _trace_csv(env, res["batch"]))
    print(f"avg_reward {res['avg_reward']:.4f} +- {res['se_reward']:.4f}, "
          f"avg_stop_stage {res['avg_stop_stage']:.3f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        costs = tuple(float(c) for c in args.costs.split(","))
    except ValueError as err:
        raise ConfigError(f"--costs: {err}") from err
    base = LinGaussConfig(prior_var=args.prior_var, noise_std=args.noise_std, design_lo=args.design_lo,
                          design_hi=args.design_hi, horizon=args.horizon)
    print("n,cost,utility,optimal")
    for n, c, u, opt in oracle_table(args.horizon, costs, base):
        print(f"{n},{c:g},{u:.6f},{int(opt)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suites
    checks = run_suites(args.suite or SUITES, cache_path=args.field_cache)
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "oracle": cmd_oracle, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StopbedError, OSError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
