"""Actor-critic training of a design policy with learned optimal stopping.

Episodes of one iteration are simulated in lockstep as a batch. Every episode
owns a random stream derived from ``(seed, iteration, episode)``, so an
episode's draws never depend on what the other episodes did. Per stage an
episode draws, in order: exploration noise, observation noise, and (only if
the stopping test fired) one uniform variate for the curriculum coin.

The stopping test at state s is ``r_T^S(s) >= Q(k, s, mu(k, s))``: stop when
the reward for stopping now is at least the critic's value of one more
experiment at the policy's design. Under curriculum learning a fired test is
honoured only with probability ``p_stop(iteration)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .env_lingauss import LinGaussEnv, oracle_q_value
from .errors import ConfigError, UpdateRejected
from .mdp import Formulation, RewardSpec
from .nn import DenseNet, Optimizer, apply_update, value_and_grads

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "CurriculumSchedule",
    "ConvergenceRecord",
    "EpisodeBatch",
    "NetAgent",
    "OracleAgent",
    "encode_inputs",
    "rollout",
    "rollout_episode",
    "stopping_test",
    "policy_gradient_step",
    "q_regression_step",
    "train",
    "evaluate",
    "baseline_threshold",
]


@dataclass(frozen=True)
class CurriculumSchedule:
    """Sigmoid-like stopping probability, locked to 1 for the last iterations."""

    steepness: float = 12.0
    midpoint: float = 0.5
    lock_last: int = 30

    def __call__(self, iteration: int, total: int) -> float:
        if iteration > total - self.lock_last:
            return 1.0
        return 1.0 / (1.0 + math.exp(-self.steepness * (iteration / total - self.midpoint)))


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 300
    episodes: int = 1000
    mode: str = "curriculum"
    stopping: str = "learned"
    stop_param: float = 0.0
    seed: int = 0
    formulation: str = "incremental"
    explore_frac: float = 0.2
    explore_floor: float = 0.1
    curriculum: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    policy_hidden: tuple = (80, 80)
    q_hidden: tuple = (80, 80, 80)
    lr_policy: float = 2e-3
    lr_q: float = 1e-3
    optimizer: str = "adam"
    q_epochs: int = 5
    q_batch: int = 128
    policy_steps: int = 1
    allow_stop_at_0: bool = False
    checkpoint_every: int = 50

    def __post_init__(self):
        if isinstance(self.curriculum, dict):
            object.__setattr__(self, "curriculum", CurriculumSchedule(**self.curriculum))
        object.__setattr__(self, "policy_hidden", tuple(self.policy_hidden))
        object.__setattr__(self, "q_hidden", tuple(self.q_hidden))
        if self.iterations < 1 or self.episodes < 1:
            raise ConfigError("iterations and episodes must be >= 1")
        if self.explore_frac < 0:
            raise ConfigError("explore_frac must be >= 0")
        if self.mode not in ("vanilla", "curriculum"):
            raise ConfigError(f"mode must be vanilla or curriculum, got {self.mode!r}")
        if self.stopping not in ("learned", "fixed_horizon", "threshold"):
            raise ConfigError(f"unknown stopping mode {self.stopping!r}")
        Formulation(self.formulation)

    def p_stop(self, iteration: int) -> float:
        if self.mode == "vanilla":
            return 1.0
        return self.curriculum(iteration, self.iterations)

    def explore_std(self, iteration: int, span) -> np.ndarray:
        return self.explore_frac * np.asarray(span) * max(self.explore_floor, 1.0 - iteration / self.iterations)

    def to_dict(self):
        d = asdict(self)
        d["policy_hidden"] = list(self.policy_hidden)
        d["q_hidden"] = list(self.q_hidden)
        return d


# ---------------------------------------------------------------------------
# input encoding
# ---------------------------------------------------------------------------

def _design_center_half(env):
    return (env.design_hi + env.design_lo) / 2.0, (env.design_hi - env.design_lo) / 2.0


def encode_inputs(env, stages, designs, obs, candidate=None):
    """Network inputs: one-hot stage, zero-padded design and observation history.

    ``stages`` (M,) int; ``designs`` (M, N, n_xi) raw designs; ``obs`` (M, N, n_y).
    Designs are mapped to [-1, 1] over the design box and observations divided
    by the environment's ``obs_scale``; entries at or beyond the stage are 0.
    ``candidate`` (M, n_xi), already in [-1, 1] units, is appended for the critic.
    """
    stages = np.asarray(stages)
    n = env.horizon
    m = len(stages)
    nx, ny = env.n_design, env.n_obs
    center, half = _design_center_half(env)
    onehot = np.zeros((m, n))
    onehot[np.arange(m), stages] = 1.0
    mask = (np.arange(n - 1)[None, :] < stages[:, None])[..., None]
    d = np.where(mask, (designs[:, : n - 1] - center) / half, 0.0).reshape(m, (n - 1) * nx)
    y = np.where(mask, obs[:, : n - 1] / env.obs_scale, 0.0).reshape(m, (n - 1) * ny)
    parts = [onehot, d, y]
    if candidate is not None:
        parts.append(candidate)
    return np.concatenate(parts, axis=1)


def input_sizes(env):
    base = env.horizon + (env.horizon - 1) * (env.n_design + env.n_obs)
    return base, base + env.n_design


# ---------------------------------------------------------------------------
# agents
# ---------------------------------------------------------------------------

@dataclass
class BatchState:
    """Lockstep batch of episode states at a common stage ``k``."""

    k: int
    beliefs: np.ndarray
    prior: np.ndarray
    physical: np.ndarray
    designs: np.ndarray
    obs: np.ndarray
    accrued_cost: np.ndarray


class NetAgent:
    """Policy network mu_w(k, s) and critic Q_eta(k, s, xi)."""

    def __init__(self, env, policy_net: DenseNet, q_net: DenseNet):
        self.env = env
        self.policy = policy_net
        self.q = q_net
        self.center, self.half = _design_center_half(env)

    @classmethod
    def create(cls, env, cfg: TrainConfig, seed=None):
        n_in, q_in = input_sizes(env)
        seed = cfg.seed if seed is None else seed
        ss = np.random.SeedSequence([seed, 0xA11CE])
        ps, qs = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
        policy = DenseNet([n_in, *cfg.policy_hidden, env.n_design], seed=ps)
        q = DenseNet([q_in, *cfg.q_hidden, 1], seed=qs)
        return cls(env, policy, q)

    def design_encoded(self, stages, designs, obs):
        """Returns (network input, squashed design in [-1, 1] units, raw output)."""
        x = encode_inputs(self.env, stages, designs, obs)
        z = self.policy._forward(x)[0][-1]
        return x, np.tanh(z), z

    def design(self, bs: BatchState):
        _, u, _ = self.design_encoded(np.full(len(bs.designs), bs.k), bs.designs, bs.obs)
        return self.center + self.half * u

    def continuation(self, bs: BatchState, xi):
        stages = np.full(len(bs.designs), bs.k)
        u = (xi - self.center) / self.half
        x = encode_inputs(self.env, stages, bs.designs, bs.obs, candidate=u)
        return self.q._forward(x)[0][-1][:, 0]


class OracleAgent:
    """Analytic linear-Gaussian design (upper bound) and continuation value."""

    def __init__(self, env: LinGaussEnv, spec: RewardSpec):
        self.env = env
        self.spec = spec

    def design(self, bs: BatchState):
        return np.full((len(bs.designs), 1), self.env.cfg.design_hi)

    def continuation(self, bs: BatchState, xi):
        q = oracle_q_value(bs.beliefs[:, 1], bs.k, xi[:, 0], self.env.cfg)
        if self.spec.formulation is Formulation.TERMINAL:
            q = q + stopping_reward(self.env, bs, self.spec)
        return q


def stopping_reward(env, bs: BatchState, spec: RewardSpec):
    """r_T^S for every episode of the batch."""
    if spec.formulation is Formulation.INCREMENTAL:
        return np.zeros(len(bs.beliefs))
    return env.batch_kl(bs.beliefs, bs.prior) + bs.accrued_cost


def stopping_test(bs: BatchState, agent, spec: RewardSpec, env=None):
    """True where stopping now is worth at least one more experiment."""
    env = env or agent.env
    xi = agent.design(bs)
    return stopping_reward(env, bs, spec) >= agent.continuation(bs, xi)


# ---------------------------------------------------------------------------
# rollouts
# ---------------------------------------------------------------------------

@dataclass
class EpisodeBatch:
    thetas: np.ndarray
    designs: np.ndarray
    obs: np.ndarray
    tau: np.ndarray
    stage_rewards: np.ndarray      # incremental per-stage rewards (KL step + cost)
    kl_final: np.ndarray           # KL(p_tau || p_0)
    accrued_cost: np.ndarray
    physical: np.ndarray           # (M, N + 1, n_phys) sensor path
    belief_summaries: list = field(default_factory=list)  # per stage, (M, 2 * dim) mean and std
    formulation: Formulation = Formulation.INCREMENTAL

    @property
    def terminal_reward(self):
        """Reward collected at stopping under the training formulation."""
        if self.formulation is Formulation.TERMINAL:
            return self.kl_final + self.accrued_cost
        return np.zeros(len(self.tau))

    @property
    def step_rewards(self):
        """Per-stage rewards under the training formulation."""
        if self.formulation is Formulation.TERMINAL:
            return np.zeros_like(self.stage_rewards)
        return self.stage_rewards

    @property
    def total_reward(self):
        if self.formulation is Formulation.TERMINAL:
            return self.kl_final + self.accrued_cost
        return self.stage_rewards.sum(axis=1)

    def __len__(self):
        return len(self.tau)

    def episode(self, i, env=None, spec=None):
        """Materialise episode ``i`` as an :class:`mdp.Episode`."""
        from .mdp import Episode, score_trajectory
        t = int(self.tau[i])
        designs = [self.designs[i, k] for k in range(t)]
        obs = [self.obs[i, k] for k in range(t)]
        if env is not None:
            e = score_trajectory(env, designs, obs, t, spec or RewardSpec(self.formulation), self.thetas[i])
            return e
        return Episode([], designs, obs, list(self.step_rewards[i, :t]), float(self.terminal_reward[i]),
                       t, self.thetas[i])


def episode_rngs(seed, iteration, m):
    return [np.random.default_rng(np.random.SeedSequence([seed, iteration, i])) for i in range(m)]


def rollout(env, agent, spec: RewardSpec, rngs, explore_std=0.0, p_stop=1.0,
            stopping="learned", stop_param=0.0, allow_stop_at_0=False, keep_beliefs=False):
    """Simulate one episode per generator in ``rngs``; returns an :class:`EpisodeBatch`."""
    m = len(rngs)
    n = env.horizon
    nx, ny = env.n_design, env.n_obs
    thetas = np.array([env.sample_theta(g) for g in rngs])
    aux = env.batch_prepare(thetas)
    prior = env.batch_prior(m)
    bs = BatchState(0, prior.copy(), prior, env.batch_physical(m), np.zeros((m, n, nx)),
                    np.zeros((m, n, ny)), np.zeros(m))
    path = np.zeros((m, n + 1, bs.physical.shape[1]))
    path[:, 0] = bs.physical
    stage_r = np.zeros((m, n))
    tau = np.full(m, n)
    active = np.ones(m, dtype=bool)
    summaries = []
    explore_std = np.broadcast_to(np.asarray(explore_std, dtype=float), (nx,))
    noise_sd = env.noise_std

    def decide(bs):
        if stopping == "fixed_horizon":
            return np.full(m, bs.k >= stop_param)
        if stopping == "threshold":
            return env.batch_kl(bs.beliefs, bs.prior) + bs.accrued_cost >= stop_param
        return stopping_test(bs, agent, spec, env)

    def apply_stops(fired, k):
        for i in np.flatnonzero(fired & active):
            # one uniform per fired test, from the episode's own stream
            if rngs[i].uniform() < p_stop:
                tau[i] = k
                active[i] = False

    if allow_stop_at_0:
        apply_stops(decide(bs), 0)
    for k in range(n):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xi = agent.design(bs)
        for i in idx:
            xi[i] += rngs[i].normal(0.0, 1.0, size=nx) * explore_std
        xi = np.clip(xi, env.design_lo, env.design_hi)
        phys_next = env.move(bs.physical, xi)
        y = env.batch_mean_obs(thetas, aux, phys_next, xi, k)
        for i in idx:
            y[i] += rngs[i].normal(0.0, noise_sd, size=ny)
        new_beliefs = env.batch_update(bs.beliefs, xi, y, phys_next, k)
        step_kl = env.batch_kl(new_beliefs, bs.beliefs)
        cost = np.asarray(spec.cost(xi, k), dtype=float) * np.ones(m)
        a = active
        bs.designs[a, k] = xi[a]
        bs.obs[a, k] = y[a]
        stage_r[a, k] = step_kl[a] + cost[a]
        bs.beliefs[a] = new_beliefs[a]
        bs.physical[a] = phys_next[a]
        bs.accrued_cost[a] += cost[a]
        path[a, k + 1] = phys_next[a]
        path[~a, k + 1] = path[~a, k]
        bs.k = k + 1
        if keep_beliefs:
            summaries.append(env.batch_summary(bs.beliefs))
        if k + 1 == n:
            break
        apply_stops(decide(bs), k + 1)

    return EpisodeBatch(thetas, bs.designs, bs.obs, tau, stage_r, env.batch_kl(bs.beliefs, prior),
                        bs.accrued_cost.copy(), path, summaries, spec.formulation)


def rollout_episode(policy_net, q_net, env, cfg: TrainConfig, iteration, rng, spec=None):
    """Single-episode convenience wrapper around :func:`rollout`."""
    spec = spec or RewardSpec(cfg.formulation, env.cfg.cost)
    agent = NetAgent(env, policy_net, q_net)
    span = env.design_hi - env.design_lo
    batch = rollout(env, agent, spec, [rng], cfg.explore_std(iteration, span), cfg.p_stop(iteration),
                    cfg.stopping, cfg.stop_param, cfg.allow_stop_at_0)
    return batch.episode(0)


# ---------------------------------------------------------------------------
# gradient steps
# ---------------------------------------------------------------------------

def _active_pairs(batch: EpisodeBatch):
    """(episode, stage) index arrays for all stages k < tau."""
    n = batch.designs.shape[1]
    mask = np.arange(n)[None, :] < batch.tau[:, None]
    return np.nonzero(mask)


def policy_gradient_step(batch: EpisodeBatch, agent: NetAgent, opt: Optimizer):
    """One ascent step of the deterministic policy gradient; returns the gradient norm.

    For every (episode, stage) before stopping the critic's design gradient is
    evaluated at the noiseless policy output and chained through the policy.
    """
    ep, st = _active_pairs(batch)
    if len(ep) == 0:
        return 0.0
    m = len(batch)
    x, u, z = agent.design_encoded(st, batch.designs[ep], batch.obs[ep])
    q_in = np.concatenate([x, u], axis=1)
    dq = value_and_grads(agent.q, q_in, lambda out: np.ones_like(out))[2][:, -agent.env.n_design:]
    upstream = dq * (1.0 - u * u) / m
    _, grads, _ = value_and_grads(agent.policy, x, lambda out: upstream)
    norm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
    apply_update(agent.policy, grads, opt, "ascent")
    return norm


def bellman_targets(batch: EpisodeBatch, agent: NetAgent, ep, st):
    """r_k + Q(k+1, s_{k+1}, mu(k+1, s_{k+1})), or the stopping reward at k+1 = tau."""
    r = batch.step_rewards[ep, st]
    last = st + 1 == batch.tau[ep]
    target = r + np.where(last, batch.terminal_reward[ep], 0.0)
    cont = ~last
    if cont.any():
        e, s = ep[cont], st[cont] + 1
        x, u, _ = agent.design_encoded(s, batch.designs[e], batch.obs[e])
        q_next = agent.q._forward(np.concatenate([x, u], axis=1))[0][-1][:, 0]
        target[cont] += q_next
    return target


def q_regression_step(batch: EpisodeBatch, agent: NetAgent, opt: Optimizer, rows=None, targets=None):
    """One descent step on the squared Bellman residual; returns the loss.

    ``rows`` selects a subset (minibatch) of the (episode, stage) pairs;
    ``targets`` may be passed precomputed so that several steps share frozen
    targets.
    """
    ep, st = _active_pairs(batch)
    if targets is None:
        targets = bellman_targets(batch, agent, ep, st)
    if rows is not None:
        ep, st, targets = ep[rows], st[rows], targets[rows]
    if len(ep) == 0:
        return 0.0
    center, half = agent.center, agent.half
    u = (batch.designs[ep, st] - center) / half
    x = encode_inputs(agent.env, st, batch.designs[ep], batch.obs[ep], candidate=u)
    resid = {}

    def upstream(out):
        resid["r"] = out[:, 0] - targets
        return (2.0 / len(targets)) * resid["r"][:, None]

    _, grads, _ = value_and_grads(agent.q, x, upstream)
    loss = float(np.mean(resid["r"] ** 2))
    if not np.isfinite(loss):
        raise UpdateRejected("non-finite critic loss")
    apply_update(agent.q, grads, opt, "descent")
    return loss


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("iter", "avg_reward", "avg_stop_stage", "p_stop", "loss_q", "grad_norm")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class ConvergenceRecord:
    rows: list = field(default_factory=list)
    stop_hist: list = field(default_factory=list)
    design_hist: list = field(default_factory=list)
    design_edges: np.ndarray | None = None

    def add(self, row, stop_hist, design_hist):
        self.rows.append(row)
        self.stop_hist.append(stop_hist)
        self.design_hist.append(design_hist)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def tail_mean(self, name, last=10):
        return float(np.mean(self.column(name)[-last:]))

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def hist_csv(self) -> str:
        n_stages = len(self.stop_hist[0]) if self.stop_hist else 0
        head = ["iter"] + [f"stop_{k}" for k in range(n_stages)]
        lines = [",".join(head)]
        for r, h in zip(self.rows, self.stop_hist):
            lines.append(",".join([str(r["iter"])] + [str(int(c)) for c in h]))
        return "\n".join(lines) + "\n"

    def design_hist_csv(self) -> str:
        lines = ["iter,axis,bin_lo,bin_hi,count"]
        e = self.design_edges
        for r, hs in zip(self.rows, self.design_hist):
            for axis, h in enumerate(hs):
                for b, c in enumerate(h):
                    lines.append(f"{r['iter']},{axis},{_fmt(e[axis][b])},{_fmt(e[axis][b + 1])},{int(c)}")
        return "\n".join(lines) + "\n"


def histograms(env, batch: EpisodeBatch, n_bins=20):
    stop_hist = np.bincount(batch.tau, minlength=env.horizon + 1)
    ep, st = _active_pairs(batch)
    xi = batch.designs[ep, st]
    edges = [np.linspace(env.design_lo[a], env.design_hi[a], n_bins + 1) for a in range(env.n_design)]
    hists = [np.histogram(xi[:, a], bins=edges[a])[0] for a in range(env.n_design)]
    return stop_hist, hists, edges


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def train(cfg: TrainConfig, env, agent: NetAgent | None = None, checkpoint_fn=None, progress=None):
    """Algorithm: L iterations of {M rollouts, critic regression, policy ascent}.

    Returns ``(policy_net, q_net, ConvergenceRecord)``; a pure function of
    ``(cfg, env config)``.
    """
    spec = RewardSpec(cfg.formulation, env.cfg.cost)
    agent = agent or NetAgent.create(env, cfg)
    opt_q = Optimizer(cfg.optimizer, cfg.lr_q)
    opt_p = Optimizer(cfg.optimizer, cfg.lr_policy)
    record = ConvergenceRecord()
    span = env.design_hi - env.design_lo
    rejected = 0
    for it in range(1, cfg.iterations + 1):
        p_stop = cfg.p_stop(it)
        rngs = episode_rngs(cfg.seed, it, cfg.episodes)
        batch = rollout(env, agent, spec, rngs, cfg.explore_std(it, span), p_stop,
                        cfg.stopping, cfg.stop_param, cfg.allow_stop_at_0)
        shuffle = np.random.default_rng(np.random.SeedSequence([cfg.seed, it, 0x5EED]))
        ep, st = _active_pairs(batch)
        losses = []
        grad_norm = float("nan")
        try:
            for _ in range(cfg.q_epochs):
                targets = bellman_targets(batch, agent, ep, st)
                order = shuffle.permutation(len(ep))
                for lo in range(0, len(order), cfg.q_batch):
                    losses.append(q_regression_step(batch, agent, opt_q, order[lo:lo + cfg.q_batch], targets))
            for _ in range(cfg.policy_steps):
                grad_norm = policy_gradient_step(batch, agent, opt_p)
            rejected = 0
        except UpdateRejected as err:
            rejected += 1
            log.warning("iteration %d: update rejected (%s)", it, err)
            if rejected >= 10:
                raise
        stop_hist, dh, edges = histograms(env, batch)
        record.design_edges = edges
        row = {
            "iter": it,
            "avg_reward": float(np.mean(batch.total_reward)),
            "avg_stop_stage": float(np.mean(batch.tau)),
            "p_stop": p_stop,
            "loss_q": float(np.mean(losses[-max(1, len(losses) // max(cfg.q_epochs, 1)):])) if losses else 0.0,
            "grad_norm": grad_norm,
        }
        record.add(row, stop_hist, dh)
        if progress is not None:
            progress(row)
        if checkpoint_fn is not None and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
            checkpoint_fn(it, agent)
    return agent.policy, agent.q, record


def evaluate(agent, env, n_episodes, seed=0, spec: RewardSpec | None = None,
             allow_stop_at_0=False, keep_beliefs=False):
    """Noise-free rollouts with deterministic stopping.

    Returns a dict with ``avg_reward``, its standard error, ``avg_stop_stage``,
    the stopping-stage and design histograms, and the episode batch.
    """
    if n_episodes < 1:
        raise ConfigError("need at least one evaluation episode")
    spec = spec or RewardSpec("incremental", env.cfg.cost)
    rngs = episode_rngs(seed, 0, n_episodes)
    batch = rollout(env, agent, spec, rngs, 0.0, 1.0, allow_stop_at_0=allow_stop_at_0,
                    keep_beliefs=keep_beliefs)
    stop_hist, dh, edges = histograms(env, batch)
    r = batch.total_reward
    return {
        "avg_reward": float(r.mean()),
        "se_reward": float(r.std(ddof=1) / np.sqrt(len(r))) if len(r) > 1 else float("nan"),
        "avg_stop_stage": float(batch.tau.mean()),
        "stop_hist": stop_hist,
        "design_hist": dh,
        "design_edges": edges,
        "batch": batch,
    }


def baseline_threshold(env, threshold, n_episodes, seed=0, agent=None, spec=None):
    """Stop as soon as the accumulated reward (KL to prior plus costs) reaches ``threshold``.

    Designs come from ``agent``; for the linear-Gaussian problem the default is
    the analytic design at the upper bound.
    """
    spec = spec or RewardSpec("terminal", env.cfg.cost)
    if agent is None:
        if not isinstance(env, LinGaussEnv):
            raise ConfigError("pass a design agent for non-linear-Gaussian environments")
        agent = OracleAgent(env, spec)
    rngs = episode_rngs(seed, 0, n_episodes)
    batch = rollout(env, agent, spec, rngs, 0.0, 1.0, stopping="threshold", stop_param=threshold)
    stop_hist, dh, edges = histograms(env, batch)
    r = batch.total_reward
    return {
        "avg_reward": float(r.mean()),
        "se_reward": float(r.std(ddof=1) / np.sqrt(len(r))) if len(r) > 1 else float("nan"),
        "avg_stop_stage": float(batch.tau.mean()),
        "stop_hist": stop_hist,
        "design_hist": dh,
        "batch": batch,
    }
