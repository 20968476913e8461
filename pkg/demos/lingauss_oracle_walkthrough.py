"""Walk through the analytic linear-Gaussian problem.

Prints the utility of running n experiments at the best design for a few
costs, then checks the analytic stopping rule by simulation.
"""
import numpy as np

from stopbed.env_lingauss import LinGaussConfig, LinGaussEnv, oracle_utility_curve
from stopbed.mdp import RewardSpec
from stopbed.train import OracleAgent, baseline_threshold, evaluate


def main():
    for c in (0.0, -0.25, -0.5):
        cfg = LinGaussConfig(horizon=4, cost=c)
        curve = oracle_utility_curve(cfg)
        print(f"cost {c:+.2f}: utility by n = {np.round(curve, 3)}  best n = {int(np.argmax(curve)) + 1}")

    env = LinGaussEnv(LinGaussConfig(horizon=4, cost=-0.25))
    spec = RewardSpec("incremental", env.cfg.cost)
    res = evaluate(OracleAgent(env, spec), env, 10_000, seed=3, spec=spec)
    print(f"\noracle agent, 10k episodes: reward {res['avg_reward']:.3f} +/- {res['se_reward']:.3f}, "
          f"mean stop stage {res['avg_stop_stage']:.2f}")

    # a fixed reward threshold is a natural heuristic; it loses to the learned rule
    for h in (1.4, 1.8, 2.2):
        b = baseline_threshold(env, h, 10_000, seed=3)
        print(f"threshold {h}: reward {b['avg_reward']:.3f}, mean stop stage {b['avg_stop_stage']:.2f}")


if __name__ == "__main__":
    main()
