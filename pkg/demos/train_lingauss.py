"""Train design and stopping policies on the linear-Gaussian problem and compare to the optimum."""
import sys

from stopbed.env_lingauss import LinGaussConfig, LinGaussEnv, oracle_optimal_stop_stage, oracle_utility
from stopbed.train import NetAgent, TrainConfig, evaluate, train


def main(cost=-0.25, horizon=4, seed=0):
    env = LinGaussEnv(LinGaussConfig(horizon=horizon, cost=cost))
    cfg = TrainConfig(iterations=60, episodes=200, seed=seed)

    def progress(row):
        if row["iter"] % 10 == 0:
            print(f"iter {row['iter']:3d}  reward {row['avg_reward']:.3f}  stop {row['avg_stop_stage']:.2f}"
                  f"  p_stop {row['p_stop']:.2f}")

    policy, q, _ = train(cfg, env, progress=progress)
    res = evaluate(NetAgent(env, policy, q), env, 5000, seed=99)
    best = oracle_optimal_stop_stage(env.cfg)
    print(f"\nlearned: reward {res['avg_reward']:.3f}, stop stage {res['avg_stop_stage']:.2f}")
    print(f"optimum: reward {oracle_utility(best, env.cfg):.3f}, stop stage {best}")
    edges, counts = res["design_edges"][0], res["design_hist"][0]
    top = counts.argmax()
    print(f"most designs fall in [{edges[top]:.2f}, {edges[top + 1]:.2f}]")


if __name__ == "__main__":
    main(*(float(a) for a in sys.argv[1:2]))
