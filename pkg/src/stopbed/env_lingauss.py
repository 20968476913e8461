"""Linear-Gaussian benchmark ``y = theta * xi + eps`` and its analytic solution.

With a Gaussian prior the posterior variance after a design sequence does not
depend on the observations, so the optimal design is always the upper bound of
the design interval and the optimal stopping sets are deterministic. The
``oracle_*`` functions expose that closed form; :func:`dp_oracle` recomputes
the same answer by brute-force dynamic programming over a design grid with
Gauss-Hermite expectations and is kept independent of the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .belief import GaussianBelief, NoiseModel, _gauss_eig, _gauss_kl, _gauss_update
from .costs import ConstantCost, cost_from_dict
from .errors import ConfigError, ConstraintError, DomainError, UnsupportedError

__all__ = [
    "LinGaussConfig",
    "LinGaussEnv",
    "simulate_observation",
    "oracle_optimal_design",
    "oracle_utility",
    "oracle_utility_curve",
    "oracle_optimal_stop_stage",
    "oracle_stopping_set_member",
    "oracle_q_value",
    "oracle_table",
    "dp_oracle",
]


@dataclass(frozen=True)
class LinGaussConfig:
    prior_mean: float = 0.0
    prior_var: float = 9.0
    noise_std: float = 1.0
    design_lo: float = 0.1
    design_hi: float = 3.0
    horizon: int = 3
    cost: object = field(default_factory=ConstantCost)

    def __post_init__(self):
        if isinstance(self.cost, (int, float)):
            object.__setattr__(self, "cost", ConstantCost(float(self.cost)))
        elif isinstance(self.cost, dict):
            object.__setattr__(self, "cost", cost_from_dict(self.cost))
        if not self.design_lo < self.design_hi:
            raise ConfigError("design_lo must be < design_hi")
        if self.prior_var <= 0:
            raise ConfigError("prior_var must be > 0")
        if self.noise_std <= 0:
            raise ConfigError("noise_std must be > 0")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError("horizon must be an integer >= 1")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_std)

    @property
    def prior(self) -> GaussianBelief:
        return GaussianBelief(self.prior_mean, self.prior_var)

    def to_dict(self):
        return {
            "prior_mean": self.prior_mean,
            "prior_var": self.prior_var,
            "noise_std": self.noise_std,
            "design_lo": self.design_lo,
            "design_hi": self.design_hi,
            "horizon": self.horizon,
            "cost": self.cost.to_dict(),
        }


def simulate_observation(theta, xi, noise: NoiseModel, rng, cfg: LinGaussConfig | None = None):
    """Draw ``theta * xi + eps``; ``xi`` must lie in the design interval."""
    cfg = cfg or LinGaussConfig()
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < cfg.design_lo) or np.any(xi_arr > cfg.design_hi):
        raise ConstraintError(f"design {xi} outside [{cfg.design_lo}, {cfg.design_hi}]")
    eps = rng.normal(0.0, noise.std_dev, size=np.shape(np.broadcast_arrays(theta, xi_arr)[0]))
    return theta * xi_arr + eps


# ---------------------------------------------------------------------------
# closed-form oracle
# ---------------------------------------------------------------------------

def _require_constant(cfg):
    if not getattr(cfg.cost, "is_constant", False):
        raise UnsupportedError("analytic oracle needs a design-independent (constant) cost")
    return cfg.cost.value


def oracle_optimal_design(b: GaussianBelief, cfg: LinGaussConfig) -> float:
    _require_constant(cfg)
    return cfg.design_hi


def oracle_utility(n_experiments: int, cfg: LinGaussConfig) -> float:
    """Expected total reward of ``n`` experiments at the upper design bound, then stopping."""
    c = _require_constant(cfg)
    if n_experiments < 1:
        raise DomainError("need at least one experiment")
    if n_experiments > cfg.horizon:
        raise DomainError(f"n={n_experiments} exceeds horizon {cfg.horizon}")
    s2e = cfg.noise_std**2
    total = n_experiments * cfg.design_hi**2
    return 0.5 * np.log(s2e + cfg.prior_var * total) - 0.5 * np.log(s2e) + n_experiments * c


def oracle_utility_curve(cfg: LinGaussConfig) -> np.ndarray:
    return np.array([oracle_utility(n, cfg) for n in range(1, cfg.horizon + 1)])


def oracle_optimal_stop_stage(cfg: LinGaussConfig) -> int:
    # np.argmax returns the first maximiser: ties go to the smaller stage
    return int(np.argmax(oracle_utility_curve(cfg))) + 1


def oracle_stopping_set_member(b: GaussianBelief, stage: int, cfg: LinGaussConfig) -> bool:
    """Whether stopping is optimal at a belief, given optimal designs afterwards."""
    c = _require_constant(cfg)
    if stage >= cfg.horizon:
        return True
    gain = _gauss_eig(b.variance, cfg.design_hi, cfg.noise_std**2)
    return bool(gain + c <= 0.0)


def _oracle_value(var, stage, cfg, c):
    """Optimal continuation-or-stop value (incremental bookkeeping) at ``stage``."""
    var = np.asarray(var, dtype=float)
    if stage >= cfg.horizon:
        return np.zeros_like(var)
    q = oracle_q_value(var, stage, cfg.design_hi, cfg)
    return np.maximum(0.0, q)


def oracle_q_value(var, stage, xi, cfg: LinGaussConfig):
    """Analytic value of continuing with design ``xi`` then acting optimally.

    Incremental bookkeeping, i.e. excluding the KL-to-prior and costs already
    accrued. Add the stopping reward of the current state to obtain the
    terminal-formulation value.
    """
    c = _require_constant(cfg)
    var = np.asarray(var, dtype=float)
    s2e = cfg.noise_std**2
    _, var_next = _gauss_update(0.0, var, np.asarray(xi, dtype=float), 0.0, s2e)
    return _gauss_eig(var, np.asarray(xi, dtype=float), s2e) + c + _oracle_value(var_next, stage + 1, cfg, c)


def oracle_table(horizon: int = 4, costs=(0.0, -0.5, -0.25), base: LinGaussConfig | None = None):
    """Rows ``(n, cost, utility, optimal)`` of the analytic utility table."""
    base = base or LinGaussConfig()
    rows = []
    for c in costs:
        cfg = LinGaussConfig(base.prior_mean, base.prior_var, base.noise_std,
                             base.design_lo, base.design_hi, horizon, ConstantCost(c))
        best = oracle_optimal_stop_stage(cfg)
        for n in range(1, horizon + 1):
            rows.append((n, c, float(oracle_utility(n, cfg)), n == best))
    return rows


# ---------------------------------------------------------------------------
# brute-force DP oracle
# ---------------------------------------------------------------------------

def dp_oracle(cfg: LinGaussConfig, n_designs: int = 21, n_gh: int = 15, allow_stop_at_0=False):
    """Exhaustive DP over a design grid with Gauss-Hermite expectations.

    The expected one-step KL is integrated numerically over the predictive
    distribution of y rather than taken from the closed form. The expected
    increment does not depend on the posterior mean, so the DP state is the
    posterior variance alone.

    Returns ``(value, stop_stage, designs)`` along the optimal path.
    """
    c = _require_constant(cfg)
    designs = np.linspace(cfg.design_lo, cfg.design_hi, n_designs)
    nodes, weights = np.polynomial.hermite_e.hermegauss(n_gh)
    weights = weights / weights.sum()
    s2e = cfg.noise_std**2

    def expected_kl(var, xi):
        # y ~ N(xi*m, s2e + xi^2 var) with m = 0
        sd_y = np.sqrt(s2e + xi * xi * var)
        y = nodes[None, :] * sd_y[..., None]
        m1, v1 = _gauss_update(0.0, var[..., None], xi[..., None], y, s2e)
        return np.sum(weights * _gauss_kl(m1, v1, 0.0, var[..., None]), axis=-1)

    def value(k, var):
        # var: array of states; returns (best value, best action index or -1 for stop)
        if k == cfg.horizon:
            return np.zeros_like(var)
        v = var[:, None] * np.ones(n_designs)
        x = np.broadcast_to(designs, v.shape)
        gain = expected_kl(v.ravel(), x.ravel()).reshape(v.shape)
        _, v_next = _gauss_update(0.0, v, x, 0.0, s2e)
        cont = gain + c + value(k + 1, v_next.ravel()).reshape(v.shape)
        best = cont.max(axis=1)
        if k == 0 and not allow_stop_at_0:
            return best
        return np.maximum(0.0, best)

    var = np.array([cfg.prior_var])
    path = []
    total = 0.0
    for k in range(cfg.horizon):
        v = np.full(n_designs, var[0])
        gain = expected_kl(v, designs)
        _, v_next = _gauss_update(0.0, v, designs, 0.0, s2e)
        cont = gain + c + value(k + 1, v_next)
        j = int(np.argmax(cont))
        if (k > 0 or allow_stop_at_0) and cont[j] <= 0.0:
            return total, k, path
        total += gain[j] + c
        path.append(designs[j])
        var = v_next[j:j + 1]
    return total, cfg.horizon, path


# ---------------------------------------------------------------------------
# environment handle
# ---------------------------------------------------------------------------

class LinGaussEnv:
    """Environment handle used by the MDP layer and the trainer."""

    name = "lingauss"
    n_design = 1
    n_obs = 1

    def __init__(self, cfg: LinGaussConfig | None = None):
        self.cfg = cfg or LinGaussConfig()
        self.horizon = self.cfg.horizon
        self.design_lo = np.array([self.cfg.design_lo])
        self.design_hi = np.array([self.cfg.design_hi])
        # typical |y| under the prior predictive at the largest design
        self.obs_scale = float(np.sqrt(self.cfg.prior_var * self.cfg.design_hi**2 + self.cfg.noise_std**2))

    # scalar API --------------------------------------------------------
    def prior(self) -> GaussianBelief:
        return self.cfg.prior

    def initial_physical(self) -> np.ndarray:
        return np.zeros(0)

    def move(self, physical, xi):
        return np.asarray(physical, dtype=float)

    def update_belief(self, belief: GaussianBelief, xi, y, physical_next=None, k=0) -> GaussianBelief:
        from .belief import gaussian_update
        return gaussian_update(belief, float(np.ravel(xi)[0]), float(np.ravel(y)[0]), self.cfg.noise)

    def kl(self, a: GaussianBelief, b: GaussianBelief) -> float:
        return float(_gauss_kl(a.mean, a.variance, b.mean, b.variance))

    def predictive_quadrature(self, belief: GaussianBelief, xi, physical_next=None, k=0, n=20):
        """Nodes and weights integrating over y ~ p(y | belief, xi)."""
        x = float(np.ravel(xi)[0])
        nodes, w = np.polynomial.hermite_e.hermegauss(n)
        sd = np.sqrt(self.cfg.noise_std**2 + x * x * belief.variance)
        return x * belief.mean + sd * nodes, w / w.sum()

    def sample_theta(self, rng) -> np.ndarray:
        return np.array([rng.normal(self.cfg.prior_mean, np.sqrt(self.cfg.prior_var))])

    # batched API ---------------------------------------------------------
    def batch_prior(self, m: int) -> np.ndarray:
        out = np.empty((m, 2))
        out[:, 0] = self.cfg.prior_mean
        out[:, 1] = self.cfg.prior_var
        return out

    def batch_physical(self, m: int) -> np.ndarray:
        return np.zeros((m, 0))

    def batch_prepare(self, thetas):
        return None

    def batch_mean_obs(self, thetas, aux, phys_next, xi, k):
        return thetas[:, :1] * xi[:, :1]

    @property
    def noise_std(self) -> float:
        return self.cfg.noise_std

    def batch_update(self, beliefs, xi, y, phys_next, k):
        m, v = _gauss_update(beliefs[:, 0], beliefs[:, 1], xi[:, 0], y[:, 0], self.cfg.noise_std**2)
        return np.column_stack([m, v])

    def batch_kl(self, a, b):
        return _gauss_kl(a[:, 0], a[:, 1], b[:, 0], b[:, 1])

    def belief_array(self, b: GaussianBelief) -> np.ndarray:
        return np.array([[b.mean, b.variance]])

    def batch_belief(self, beliefs, i) -> GaussianBelief:
        return GaussianBelief(float(beliefs[i, 0]), float(beliefs[i, 1]))

    def batch_summary(self, beliefs):
        """Posterior mean and standard deviation, (M, 2)."""
        return np.stack([beliefs[:, 0], np.sqrt(beliefs[:, 1])], axis=1)
