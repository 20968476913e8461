"""Self-check suites bundled behind ``stopbed verify``.

Each suite returns a list of :class:`Check` results. Suites take their
environments as arguments so that tests can hand in deliberately broken ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env_convdiff import ConvDiffConfig, ConvDiffEnv, interpolate, precompute_fields, solve_forward, \
    solve_forward_batch
from .env_lingauss import LinGaussConfig, LinGaussEnv, oracle_stopping_set_member
from .mdp import RewardSpec, expected_stage_terms
from .nn import DenseNet, grad_input, grad_params
from .train import BatchState, OracleAgent, stopping_test

SUITES = ("gradcheck", "equivalence", "fv", "oracle_stopping")


@dataclass
class Check:
    suite: str
    name: str
    ok: bool
    value: float
    limit: float

    def line(self):
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag} {self.suite}/{self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _rel_err(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def gradcheck(n_nets=100, seed=0, h=1e-6, tol=1e-5):
    """Central finite differences against backprop on random nets."""
    rng = np.random.default_rng(seed)
    worst_p = worst_x = 0.0
    for _ in range(n_nets):
        sizes = [int(rng.integers(1, 6))] + [int(rng.integers(2, 9)) for _ in range(rng.integers(1, 4))] + [1]
        net = DenseNet(sizes, seed=int(rng.integers(2**31)))
        x = rng.normal(size=(int(rng.integers(1, 5)), sizes[0]))
        up = rng.normal(size=(len(x), 1))
        g = grad_params(net, x, up)
        # one random coordinate per parameter array keeps this fast
        for p, gp in zip(net.params(), g):
            i = tuple(int(rng.integers(s)) for s in p.shape)
            old = p[i]
            p[i] = old + h
            fp = float(np.sum(up * net(x)))
            p[i] = old - h
            fm = float(np.sum(up * net(x)))
            p[i] = old
            worst_p = max(worst_p, float(_rel_err((fp - fm) / (2 * h), gp[i])))
        dx = grad_input(net, x)
        r, j = int(rng.integers(len(x))), int(rng.integers(sizes[0]))
        xp, xm = x.copy(), x.copy()
        xp[r, j] += h
        xm[r, j] -= h
        fd = (net(xp)[r, 0] - net(xm)[r, 0]) / (2 * h)
        worst_x = max(worst_x, float(_rel_err(fd, dx[r, j])))
    return [Check("gradcheck", "params", worst_p <= tol, worst_p, tol),
            Check("gradcheck", "inputs", worst_x <= tol, worst_x, tol)]


def random_trajectories(env, n, seed=0):
    """Random designs in the box, observations simulated from prior draws, random tau."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        theta = env.sample_theta(rng)
        tau = int(rng.integers(1, env.horizon + 1))
        designs = rng.uniform(env.design_lo, env.design_hi, size=(tau, env.n_design))
        aux = env.batch_prepare(theta[None])
        phys = env.batch_physical(1)
        obs = []
        for k in range(tau):
            phys = env.move(phys, designs[k][None])
            y = env.batch_mean_obs(theta[None], aux, phys, designs[k][None], k)[0]
            obs.append(y + rng.normal(0.0, env.noise_std, size=env.n_obs))
        out.append((list(designs), obs, tau))
    return out


def equivalence(envs=None, n=1000, seed=0):
    """Expected terminal and incremental totals agree along random trajectories."""
    if envs is None:
        envs = default_equivalence_envs()
    checks = []
    for name, env, tol in envs:
        worst, lowest = 0.0, np.inf
        for t in random_trajectories(env, n, seed):
            term, incr = expected_stage_terms(t, env)
            worst = max(worst, float(np.sum(np.abs(term - incr))))
            # anchor: a sign error in the divergence cancels in the gap
            lowest = min(lowest, float(np.min(incr)))
        checks.append(Check("equivalence", name, worst <= tol, worst, tol))
        checks.append(Check("equivalence", name + "_gain_sign", lowest >= -tol, lowest, -tol))
    return checks


def default_equivalence_envs(cache_path=None, convdiff_cfg=None):
    lg = LinGaussEnv(LinGaussConfig(horizon=4, cost=-0.25))
    cfg = convdiff_cfg or ConvDiffConfig(theta_grid=25, cost=-0.8)
    cd = ConvDiffEnv(cfg, cache=precompute_fields(cfg, path=cache_path))
    return [("gaussian", lg, 1e-9), ("grid", cd, 1e-6)]


def fv_audits(seed=0):
    """Mass balance, zero source and grid refinement of the finite-volume solver."""
    checks = []
    cfg = ConvDiffConfig()
    audit = []
    solve_forward_batch(np.array([[0.3, 0.6]]), cfg, audit=audit)
    drift = 0.0
    for before, after, injected in audit:
        drift = max(drift, float(np.max(np.abs(after - before - injected) / np.maximum(after, 1e-300))))
    checks.append(Check("fv", "mass_balance", drift <= 1e-6, drift, 1e-6))

    zero = solve_forward(np.array([0.5, 0.5]), ConvDiffConfig(source_strength=0.0)).snapshots
    zmax = float(np.max(np.abs(zero)))
    checks.append(Check("fv", "zero_source", zmax == 0.0, zmax, 0.0))

    rng = np.random.default_rng(seed)
    theta = np.array([0.43, 0.58])
    probes = np.clip(theta + rng.normal(0.0, 0.06, size=(10, 2)), 0.0, 1.0)
    vals = {}
    for n in (48, 96, 192):
        f = solve_forward(theta, ConvDiffConfig(fv_resolution=n)).snapshots
        vals[n] = np.array([[interpolate(f[k], p) for p in probes] for k in range(len(f))])
    ratio = float(np.max(np.abs(vals[48] - vals[192])) / np.max(np.abs(vals[96] - vals[192])))
    checks.append(Check("fv", "refinement_ratio", ratio >= 1.7, ratio, 1.7))
    return checks


def oracle_stopping(costs=(0.0, -0.25, -0.5, -1.5), horizon=4, seed=0):
    """With the analytic continuation value the stopping test matches the analytic sets."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    total = 0
    for c in costs:
        env = LinGaussEnv(LinGaussConfig(horizon=horizon, cost=c))
        for form in ("terminal", "incremental"):
            spec = RewardSpec(form, env.cfg.cost)
            agent = OracleAgent(env, spec)
            m = 64
            prior = env.batch_prior(m)
            beliefs = prior.copy()
            designs = np.zeros((m, horizon, 1))
            obs = np.zeros((m, horizon, 1))
            cost_acc = np.zeros(m)
            for k in range(1, horizon):
                xi = rng.uniform(env.design_lo, env.design_hi, size=(m, 1))
                xi[: m // 2] = env.design_hi  # half the batch on the optimal path
                y = rng.normal(0.0, 4.0, size=(m, 1))
                beliefs = env.batch_update(beliefs, xi, y, None, k - 1)
                designs[:, k - 1], obs[:, k - 1] = xi, y
                cost_acc += c
                bs = BatchState(k, beliefs, prior, env.batch_physical(m), designs, obs, cost_acc)
                fired = stopping_test(bs, agent, spec, env)
                want = np.array([oracle_stopping_set_member(env.batch_belief(beliefs, i), k, env.cfg)
                                 for i in range(m)])
                mismatches += int(np.sum(fired != want))
                total += m
    return [Check("oracle_stopping", "agreement", mismatches == 0, float(mismatches), 0.0)]


def run_suites(names=SUITES, cache_path=None, log=print):
    checks = []
    for name in names:
        if name == "gradcheck":
            checks += gradcheck()
        elif name == "equivalence":
            checks += equivalence(default_equivalence_envs(cache_path))
        elif name == "fv":
            checks += fv_audits()
        elif name == "oracle_stopping":
            checks += oracle_stopping()
        else:
            raise ValueError(f"unknown suite {name!r}")
    for c in checks:
        log(c.line())
    return checks
