"""Belief-state MDP with an explicit stopping action.

States carry the stage index, the posterior, the physical state (sensor
position, empty for the linear-Gaussian problem) and the full design and
observation history. Rewards follow one of two bookkeeping conventions:

* terminal: nothing per stage; on stopping, KL(posterior || prior) plus all
  accumulated costs;
* incremental: per stage, KL(new posterior || old posterior) plus that stage's
  cost; nothing on stopping.

The two have equal *expected* totals under any policy. Realised totals of a
single trajectory differ by a zero-mean martingale, because KL divergences do
not telescope pathwise; :func:`pathwise_gap` measures the realised difference
and :func:`equivalence_check` the per-stage conditional expectation of it,
which is exactly zero.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import ConstantCost
from .errors import StateError, TerminalStateError

__all__ = [
    "Formulation",
    "RewardSpec",
    "State",
    "Episode",
    "initial_state",
    "transition",
    "stop",
    "stage_reward",
    "total_reward",
    "score_trajectory",
    "pathwise_gap",
    "equivalence_check",
]


class Formulation(str, enum.Enum):
    TERMINAL = "terminal"
    INCREMENTAL = "incremental"


@dataclass(frozen=True)
class RewardSpec:
    formulation: Formulation = Formulation.TERMINAL
    cost: object = field(default_factory=ConstantCost)

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))

    def c(self, xi, k):
        return float(self.cost(np.atleast_1d(np.asarray(xi, dtype=float)), k))

    def to_dict(self):
        return {"formulation": self.formulation.value, "cost": self.cost.to_dict()}


@dataclass(frozen=True)
class State:
    stage: int
    belief: object
    physical: np.ndarray = field(default_factory=lambda: np.zeros(0))
    history: tuple = ()
    is_terminal: bool = False

    def __post_init__(self):
        if len(self.history) != self.stage:
            raise StateError(f"history length {len(self.history)} != stage {self.stage}")

    @property
    def designs(self):
        return [h[0] for h in self.history]

    @property
    def observations(self):
        return [h[1] for h in self.history]


def initial_state(env) -> State:
    return State(0, env.prior(), env.initial_physical(), ())


def transition(s: State, xi, y, env) -> State:
    """Perform one experiment: move, update the posterior, append to history."""
    if s.is_terminal:
        raise TerminalStateError("terminal state is absorbing")
    if s.stage >= env.horizon:
        raise StateError(f"stage {s.stage} already at horizon {env.horizon}")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    physical = env.move(s.physical, xi)
    belief = env.update_belief(s.belief, xi, y, physical, s.stage)
    return State(s.stage + 1, belief, physical, s.history + ((xi, y),))


def _accrued_cost(s: State, spec: RewardSpec) -> float:
    return sum(spec.c(xi, i) for i, (xi, _) in enumerate(s.history))


def stop(s: State, spec: RewardSpec, env) -> tuple[State, float]:
    """Stop at ``s``; returns the absorbing terminal state and the terminal reward."""
    if s.is_terminal:
        raise TerminalStateError("already stopped")
    if spec.formulation is Formulation.TERMINAL:
        reward = env.kl(s.belief, env.prior()) + _accrued_cost(s, spec)
    else:
        reward = 0.0
    return replace(s, is_terminal=True), float(reward)


def stage_reward(s: State, xi, y, s_next: State, spec: RewardSpec, env) -> float:
    if s_next.stage != s.stage + 1:
        raise StateError("states are not consecutive")
    if spec.formulation is Formulation.TERMINAL:
        return 0.0
    return env.kl(s_next.belief, s.belief) + spec.c(xi, s.stage)


@dataclass
class Episode:
    states: list
    designs: list
    observations: list
    stage_rewards: list
    terminal_reward: float
    tau: int
    theta_true: np.ndarray
    seed: object = None

    @property
    def total_reward(self) -> float:
        return total_reward(self)

    def to_record(self) -> str:
        """One JSON line; states are not serialised (they follow from the history)."""
        rec = {
            "seed": self.seed,
            "theta_true": np.asarray(self.theta_true, dtype=float).tolist(),
            "designs": [np.asarray(d, dtype=float).tolist() for d in self.designs],
            "observations": [np.asarray(o, dtype=float).tolist() for o in self.observations],
            "stage_rewards": [float(r) for r in self.stage_rewards],
            "terminal_reward": float(self.terminal_reward),
            "tau": int(self.tau),
        }
        return json.dumps(rec, separators=(",", ":"))

    @classmethod
    def from_record(cls, line: str, env=None, spec: RewardSpec | None = None) -> "Episode":
        """Parse a record; with ``env`` and ``spec`` the states are rebuilt as well."""
        rec = json.loads(line)
        designs = [np.asarray(d) for d in rec["designs"]]
        obs = [np.asarray(o) for o in rec["observations"]]
        states = []
        if env is not None:
            states = score_trajectory(env, designs, obs, rec["tau"], spec or RewardSpec()).states
        return cls(states, designs, obs, rec["stage_rewards"], rec["terminal_reward"],
                   rec["tau"], np.asarray(rec["theta_true"]), rec["seed"])


def total_reward(e: Episode) -> float:
    return float(np.sum(e.stage_rewards) + e.terminal_reward)


def score_trajectory(env, designs, observations, tau, spec: RewardSpec, theta_true=None) -> Episode:
    """Replay a realised (design, observation) sequence and score it under ``spec``."""
    if len(designs) < tau or len(observations) < tau:
        raise StateError("trajectory shorter than its stopping stage")
    s = initial_state(env)
    states, rewards = [s], []
    for k in range(tau):
        s_next = transition(s, designs[k], observations[k], env)
        rewards.append(stage_reward(s, designs[k], observations[k], s_next, spec, env))
        s = s_next
        states.append(s)
    _, r_t = stop(s, spec, env)
    theta = np.zeros(0) if theta_true is None else theta_true
    return Episode(states, list(designs[:tau]), list(observations[:tau]), rewards, r_t, tau, theta)


def _check_pair(spec_T, spec_I):
    if spec_T.formulation is not Formulation.TERMINAL or spec_I.formulation is not Formulation.INCREMENTAL:
        raise StateError("need one terminal and one incremental reward spec")
    if spec_T.cost != spec_I.cost:
        raise StateError("reward specs use different costs")


def pathwise_gap(trajectory, spec_T: RewardSpec, spec_I: RewardSpec, env) -> float:
    """|realised terminal total - realised incremental total| for one trajectory."""
    _check_pair(spec_T, spec_I)
    designs, observations, tau = trajectory
    t = score_trajectory(env, designs, observations, tau, spec_T).total_reward
    i = score_trajectory(env, designs, observations, tau, spec_I).total_reward
    return abs(t - i)


def expected_stage_terms(trajectory, env) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means of the two formulations' KL contributions at each stage.

    For every realised prefix ``s_k`` and design ``xi_k`` returns the mean over
    ``y_k`` (quadrature supplied by the environment) of the terminal increment
    ``KL(p_{k+1}||p_0) - KL(p_k||p_0)`` and of the incremental reward
    ``KL(p_{k+1}||p_k)``. Costs are identical in both and are left out.
    """
    designs, observations, tau = trajectory
    s = initial_state(env)
    prior = env.belief_array(env.prior())
    term = np.zeros(tau)
    incr = np.zeros(tau)
    for k in range(tau):
        xi = np.atleast_1d(np.asarray(designs[k], dtype=float))
        physical = env.move(s.physical, xi)
        ys, w = env.predictive_quadrature(s.belief, xi, physical, k)
        n = len(ys)
        cur = np.repeat(env.belief_array(s.belief), n, axis=0)
        post = env.batch_update(cur, np.tile(xi, (n, 1)), ys[:, None], np.tile(physical, (n, 1)), k)
        term[k] = float(w @ env.batch_kl(post, np.repeat(prior, n, axis=0))) - env.batch_kl(cur[:1], prior)[0]
        incr[k] = float(w @ env.batch_kl(post, cur))
        s = transition(s, xi, observations[k], env)
    return term, incr


def equivalence_check(trajectory, spec_T: RewardSpec, spec_I: RewardSpec, env) -> float:
    """Summed absolute gap between the formulations' expected per-stage contributions.

    Summing the conditional means over stages gives the expected totals, so a
    zero return certifies equal expected utility along the trajectory's
    stopping rule.
    """
    _check_pair(spec_T, spec_I)
    term, incr = expected_stage_terms(trajectory, env)
    return float(np.sum(np.abs(term - incr)))


def expected_gains(trajectory, env) -> np.ndarray:
    """Predictive mean of ``KL(p_{k+1}||p_k)`` at each stage of a trajectory.

    Each entry is a mutual information and therefore non-negative; a negative
    value exposes a broken divergence that the equivalence gap alone cannot
    see, since a global sign error cancels between the two formulations.
    """
    return expected_stage_terms(trajectory, env)[1]
