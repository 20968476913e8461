"""Locate a contaminant source with a trained mobile sensor.

Trains briefly on the convection-diffusion problem, then follows one episode
and prints where the sensor went and how the posterior narrowed.
"""
import time

import numpy as np

from stopbed.env_convdiff import ConvDiffConfig, ConvDiffEnv, precompute_fields
from stopbed.train import NetAgent, TrainConfig, evaluate, train


def main():
    cfg = ConvDiffConfig(theta_grid=25, cost=-0.8)
    t0 = time.perf_counter()
    env = ConvDiffEnv(cfg, cache=precompute_fields(cfg))
    print(f"field cache for {cfg.theta_grid ** 2} sources built in {time.perf_counter() - t0:.1f}s")

    policy, q, rec = train(TrainConfig(iterations=60, episodes=100, seed=0), env)
    print(f"final-10 mean reward {rec.tail_mean('avg_reward'):.3f}, stop stage {rec.tail_mean('avg_stop_stage'):.2f}")

    res = evaluate(NetAgent(env, policy, q), env, 200, seed=7, keep_beliefs=True)
    batch = res["batch"]
    i = int(np.argmax(batch.tau))
    print(f"\nepisode {i}: true source {np.round(batch.thetas[i], 3)}, stopped after {batch.tau[i]} measurements")
    for k in range(batch.tau[i]):
        mx, my, sx, sy = batch.belief_summaries[k][i]
        where = np.round(batch.physical[i, k + 1], 3)
        print(f"  measurement {k}: sensor {where}  posterior mean ({mx:.3f}, {my:.3f})  sd ({sx:.3f}, {sy:.3f})")


if __name__ == "__main__":
    main()
