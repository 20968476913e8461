"""Contaminant source localisation in a 2-D convection-diffusion field.

The forward model is

    dG/dt = lap(G) - u(t) . grad(G) + S(z; theta),   z in [0, 1]^2,

with zero-flux walls, G(z, 0) = 0, a Gaussian source centred at theta and a
spatially uniform velocity u_x = u_y = 50 t. It is discretised with a
cell-centred finite-volume scheme: central differences for diffusion,
first-order upwind for convection, explicit Euler in time. Fields at every
cell centre of the posterior grid are precomputed once (:class:`FieldCache`)
and interpolated bilinearly at the sensor position.

Measurement k is taken at physical time (k + 1) * measurement_dt so that the
first observation is not pure noise.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .belief import GridBelief, NoiseModel, _grid_kl, _normalize_log_density, grid_centers, grid_update
from .costs import ConstantCost, cost_from_dict
from .errors import ConfigError, StateError

log = logging.getLogger(__name__)

__all__ = [
    "ConvDiffConfig",
    "ConcentrationFields",
    "FieldCache",
    "ConvDiffEnv",
    "source_term",
    "solve_forward",
    "solve_forward_batch",
    "measure",
    "interpolate",
    "log_likelihood_grid",
    "precompute_fields",
    "stable_dt",
]

CACHE_VERSION = 1


@dataclass(frozen=True)
class ConvDiffConfig:
    fv_resolution: int = 48
    dt_pde: float | None = None
    measurement_dt: float = 5.0e-4
    horizon: int = 4
    source_width: float = 0.05
    source_strength: float = 2.0
    velocity_rate: float = 10.0 / 0.2
    diffusivity: float = 1.0
    sensor_noise_std: float = 0.001
    design_half_width: float = 0.25
    initial_sensor: tuple = (0.5, 0.5)
    theta_grid: int = 50
    cost: object = field(default_factory=ConstantCost)

    def __post_init__(self):
        if isinstance(self.cost, (int, float)):
            object.__setattr__(self, "cost", ConstantCost(float(self.cost)))
        elif isinstance(self.cost, dict):
            object.__setattr__(self, "cost", cost_from_dict(self.cost))
        object.__setattr__(self, "initial_sensor", tuple(float(v) for v in self.initial_sensor))
        if self.fv_resolution < 32:
            raise ConfigError("fv_resolution must be >= 32")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.sensor_noise_std <= 0:
            raise ConfigError("sensor_noise_std must be > 0")
        if self.design_half_width <= 0:
            raise ConfigError("design_half_width must be > 0")
        if self.theta_grid < 2:
            raise ConfigError("theta_grid must be >= 2")
        if self.dt_pde is not None and self.dt_pde > stable_dt(self, safety=1.0):
            raise ConfigError(f"dt_pde={self.dt_pde} violates the explicit stability bound "
                              f"{stable_dt(self, safety=1.0):.3e}")

    @property
    def final_time(self) -> float:
        return self.horizon * self.measurement_dt

    def velocity(self, t):
        return self.velocity_rate * t

    def pde_dict(self):
        """Fields that determine the concentration snapshots."""
        keys = ("fv_resolution", "dt_pde", "measurement_dt", "horizon", "source_width",
                "source_strength", "velocity_rate", "diffusivity")
        return {k: getattr(self, k) for k in keys}

    def to_dict(self):
        d = asdict(self)
        d["cost"] = self.cost.to_dict()
        d["initial_sensor"] = list(self.initial_sensor)
        return d


def stable_dt(cfg: ConvDiffConfig, safety: float = 0.4) -> float:
    """``safety`` times the explicit-scheme bound for the finest velocity reached."""
    dx = 1.0 / cfg.fv_resolution
    umax = abs(cfg.velocity(cfg.final_time))
    bound = 1.0 / (4.0 * cfg.diffusivity / dx**2 + 2.0 * umax / dx)
    return safety * bound


def _steps_per_interval(cfg: ConvDiffConfig) -> tuple[int, float]:
    dt = cfg.dt_pde if cfg.dt_pde is not None else stable_dt(cfg)
    n = int(np.ceil(cfg.measurement_dt / dt - 1e-9))
    return n, cfg.measurement_dt / n


def source_term(z, theta, cfg: ConvDiffConfig):
    """Gaussian release rate at points ``z`` (..., 2) for source location ``theta``."""
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    h2 = cfg.source_width**2
    r2 = (z[..., 0] - theta[..., 0]) ** 2 + (z[..., 1] - theta[..., 1]) ** 2
    return cfg.source_strength / (2 * np.pi * h2) * np.exp(-r2 / (2 * h2))


@dataclass(frozen=True)
class ConcentrationFields:
    """Snapshots G(z_ij, t_k), shape (horizon, n, n), index order [k, x, y]."""

    snapshots: np.ndarray

    @property
    def resolution(self) -> int:
        return self.snapshots.shape[-1]


def _fv_rhs(G, S, u, dx, diff):
    """Net rate of change per cell from fluxes and source, zero flux at walls."""
    rhs = S.copy() if S is not None else np.zeros_like(G)
    # x faces between cells i and i+1
    fx = -diff * (G[:, 1:, :] - G[:, :-1, :]) / dx
    fx += (max(u[0], 0.0) * G[:, :-1, :] + min(u[0], 0.0) * G[:, 1:, :])
    rhs[:, :-1, :] -= fx / dx
    rhs[:, 1:, :] += fx / dx
    fy = -diff * (G[:, :, 1:] - G[:, :, :-1]) / dx
    fy += (max(u[1], 0.0) * G[:, :, :-1] + min(u[1], 0.0) * G[:, :, 1:])
    rhs[:, :, :-1] -= fy / dx
    rhs[:, :, 1:] += fy / dx
    return rhs


def _cell_centres_1d(n):
    return (np.arange(n) + 0.5) / n


def solve_forward_batch(thetas, cfg: ConvDiffConfig, audit=None) -> np.ndarray:
    """Solve for a batch of source locations; returns (B, horizon, n, n).

    ``audit``, if a list, receives ``(mass_before, mass_after, injected)`` per step
    for the first batch member.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = cfg.fv_resolution
    dx = 1.0 / n
    c = _cell_centres_1d(n)
    zx, zy = np.meshgrid(c, c, indexing="ij")
    z = np.stack([zx, zy], axis=-1)
    S = source_term(z[None], thetas[:, None, None, :], cfg)
    steps, dt = _steps_per_interval(cfg)
    G = np.zeros((len(thetas), n, n))
    out = np.empty((len(thetas), cfg.horizon, n, n))
    t = 0.0
    for k in range(cfg.horizon):
        for _ in range(steps):
            u = (cfg.velocity(t), cfg.velocity(t))
            rhs = _fv_rhs(G, S, u, dx, cfg.diffusivity)
            if audit is not None:
                before = G[0].sum() * dx * dx
            G = G + dt * rhs
            if audit is not None:
                audit.append((before, G[0].sum() * dx * dx, dt * S[0].sum() * dx * dx))
            t += dt
        out[:, k] = G
    return out


def solve_forward(theta, cfg: ConvDiffConfig) -> ConcentrationFields:
    return ConcentrationFields(solve_forward_batch(np.asarray(theta)[None], cfg)[0])


def _clamp_position(pos, lo=0.0, hi=1.0):
    pos = np.asarray(pos, dtype=float)
    clamped = np.clip(pos, lo, hi)
    n_clamped = int(np.any(clamped != pos, axis=-1).sum()) if pos.ndim > 1 else int(np.any(clamped != pos))
    if n_clamped:
        log.debug("clamped %d sensor position(s) to the domain", n_clamped)
    return clamped, n_clamped


def _bilinear_weights(pos, n):
    """Indices and weights for bilinear interpolation between cell centres.

    Positions between a wall and the first centre take the nearest centre value
    in that direction, consistent with the zero-flux boundary.
    """
    pos = np.asarray(pos, dtype=float)
    g = np.clip(pos * n - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(np.floor(g).astype(int), n - 2)
    f = g - i0
    return i0, f


def interpolate(snapshot, pos):
    """Bilinear value of ``snapshot`` (..., n, n) at ``pos`` (2,)."""
    n = snapshot.shape[-1]
    (i, j), (fx, fy) = _bilinear_weights(pos, n)
    return ((1 - fx) * (1 - fy) * snapshot[..., i, j] + fx * (1 - fy) * snapshot[..., i + 1, j]
            + (1 - fx) * fy * snapshot[..., i, j + 1] + fx * fy * snapshot[..., i + 1, j + 1])


def measure(fields: ConcentrationFields, sensor_pos, k: int, noise: NoiseModel | None, rng=None):
    """Concentration at the sensor at measurement ``k`` plus Gaussian noise."""
    pos, _ = _clamp_position(sensor_pos)
    value = float(interpolate(fields.snapshots[k], pos))
    if noise is None:
        return value
    return value + rng.normal(0.0, noise.std_dev)


class FieldCache:
    """Concentration snapshots for every cell centre of the posterior grid."""

    def __init__(self, cfg: ConvDiffConfig, fields: np.ndarray):
        n = cfg.theta_grid
        if fields.shape[0] != n * n:
            raise StateError(f"cache holds {fields.shape[0]} fields, grid needs {n * n}")
        self.cfg = cfg
        self.thetas = grid_centers(n)
        self.fields = fields
        self.fields.setflags(write=False)

    def __len__(self):
        return len(self.thetas)

    def __getitem__(self, cell: int) -> ConcentrationFields:
        return ConcentrationFields(self.fields[cell])

    def nearest_cell(self, theta) -> int:
        n = self.cfg.theta_grid
        ij = np.clip(np.floor(np.asarray(theta, dtype=float) * n).astype(int), 0, n - 1)
        return int(ij[0] * n + ij[1])

    def lookup(self, theta) -> ConcentrationFields:
        """Fields of the cell containing ``theta`` (nearest cell centre)."""
        return self[self.nearest_cell(theta)]

    def predictions(self, sensor_pos, k: int) -> np.ndarray:
        """G(sensor_pos, t_k; theta_cell) for every cell, shape (cells,)."""
        pos, _ = _clamp_position(sensor_pos)
        return interpolate(self.fields[:, k], pos)

    # persistence ----------------------------------------------------------
    @staticmethod
    def key(cfg: ConvDiffConfig) -> str:
        payload = json.dumps({"pde": cfg.pde_dict(), "theta_grid": cfg.theta_grid}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def save(self, path):
        with open(path, "wb") as fh:
            np.savez(fh, version=np.array(CACHE_VERSION), key=np.array(self.key(self.cfg)),
                     fields=np.asarray(self.fields))

    @classmethod
    def load(cls, path, cfg: ConvDiffConfig) -> "FieldCache":
        with np.load(path, allow_pickle=False) as data:
            if int(data["version"]) != CACHE_VERSION:
                raise StateError(f"field cache version {int(data['version'])} != {CACHE_VERSION}")
            if str(data["key"]) != cls.key(cfg):
                raise StateError("field cache was built for a different configuration")
            return cls(cfg, np.array(data["fields"]))


def _n_threads():
    try:
        return max(1, int(os.environ.get("STOPBED_THREADS", "1")))
    except ValueError:
        return 1


def precompute_fields(cfg: ConvDiffConfig, path=None, chunk: int = 256) -> FieldCache:
    """Solve once per posterior-grid cell centre, optionally reusing a file cache."""
    if path is not None and os.path.exists(path):
        try:
            return FieldCache.load(path, cfg)
        except StateError as err:
            log.warning("ignoring field cache %s: %s", path, err)
    thetas = grid_centers(cfg.theta_grid)
    chunks = [thetas[i:i + chunk] for i in range(0, len(thetas), chunk)]
    with ThreadPoolExecutor(max_workers=_n_threads()) as pool:
        parts = list(pool.map(lambda th: solve_forward_batch(th, cfg), chunks))
    cache = FieldCache(cfg, np.concatenate(parts))
    if path is not None:
        cache.save(path)
    return cache


def log_likelihood_grid(y, sensor_pos, k, theta_grid, precomputed: FieldCache, noise: NoiseModel):
    """Per-cell Gaussian log-likelihood of observation ``y``."""
    if precomputed is None:
        raise StateError("no precomputed fields")
    if int(theta_grid) ** 2 != len(precomputed):
        raise StateError(f"fields precomputed for {len(precomputed)} cells, grid has {int(theta_grid) ** 2}")
    pred = precomputed.predictions(sensor_pos, k)
    s2 = noise.std_dev**2
    return -0.5 * np.log(2 * np.pi * s2) - 0.5 * (y - pred) ** 2 / s2


class ConvDiffEnv:
    """Environment handle; the physical state is the sensor position."""

    name = "convdiff"
    n_design = 2
    n_obs = 1

    def __init__(self, cfg: ConvDiffConfig | None = None, cache: FieldCache | None = None,
                 cache_path=None):
        self.cfg = cfg or ConvDiffConfig()
        self.horizon = self.cfg.horizon
        self.cache = cache if cache is not None else precompute_fields(self.cfg, cache_path)
        self.noise = NoiseModel(self.cfg.sensor_noise_std)
        hw = self.cfg.design_half_width
        self.design_lo = np.array([-hw, -hw])
        self.design_hi = np.array([hw, hw])
        self.obs_scale = max(float(np.abs(self.cache.fields[:, -1]).max()), self.noise.std_dev)
        self.n_cells = len(self.cache)
        self.cell_area = 1.0 / self.n_cells
        self.clamp_events = 0

    @property
    def noise_std(self) -> float:
        return self.noise.std_dev

    # scalar API --------------------------------------------------------
    def prior(self) -> GridBelief:
        return GridBelief(self.cfg.theta_grid, np.zeros(self.n_cells))

    def initial_physical(self) -> np.ndarray:
        return np.array(self.cfg.initial_sensor)

    def move(self, physical, xi):
        pos, n = _clamp_position(np.asarray(physical, dtype=float) + np.asarray(xi, dtype=float))
        self.clamp_events += n
        return pos

    def update_belief(self, belief: GridBelief, xi, y, physical_next, k) -> GridBelief:
        ll = log_likelihood_grid(float(np.ravel(y)[0]), physical_next, k, self.cfg.theta_grid,
                                 self.cache, self.noise)
        return grid_update(belief, ll)

    def kl(self, a: GridBelief, b: GridBelief) -> float:
        return float(_grid_kl(a.log_weights, b.log_weights, a.cell_area))

    def predictive_quadrature(self, belief: GridBelief, xi, physical_next, k, per_sd=4):
        """Uniform y-nodes with weights from the predictive mixture density."""
        pred = self.cache.predictions(physical_next, k)
        p = belief.probabilities()
        sd = self.noise.std_dev
        lo, hi = pred[p > 0].min() - 9 * sd, pred[p > 0].max() + 9 * sd
        h = sd / per_sd
        y = np.arange(lo, hi + h, h)
        dens = np.exp(-0.5 * ((y[:, None] - pred[None, :]) / sd) ** 2) @ p / (np.sqrt(2 * np.pi) * sd)
        w = dens * h
        return y, w / w.sum()

    def sample_theta(self, rng) -> np.ndarray:
        return rng.uniform(0.0, 1.0, size=2)

    def true_fields(self, theta) -> ConcentrationFields:
        return solve_forward(theta, self.cfg)

    # batched API ---------------------------------------------------------
    def batch_prior(self, m):
        return np.zeros((m, self.n_cells))

    def batch_physical(self, m):
        return np.tile(np.array(self.cfg.initial_sensor), (m, 1))

    def batch_prepare(self, thetas):
        """Exact fields for the sampled true sources, (M, horizon, n, n)."""
        return solve_forward_batch(thetas, self.cfg)

    def batch_mean_obs(self, thetas, aux, phys_next, xi, k):
        n = aux.shape[-1]
        (i, j), (fx, fy) = _bilinear_weights(phys_next.T, n)
        r = np.arange(len(aux))
        s = aux[:, k]
        v = ((1 - fx) * (1 - fy) * s[r, i, j] + fx * (1 - fy) * s[r, i + 1, j]
             + (1 - fx) * fy * s[r, i, j + 1] + fx * fy * s[r, i + 1, j + 1])
        return v[:, None]

    def batch_cell_predictions(self, phys_next, k):
        """(M, cells) predicted concentration at each episode's sensor."""
        f = self.cache.fields[:, k]
        n = f.shape[-1]
        # quadrature batches repeat one position many times; gather each once
        pos, inverse = np.unique(phys_next, axis=0, return_inverse=True)
        (i, j), (fx, fy) = _bilinear_weights(pos.T, n)
        v = ((1 - fx) * (1 - fy) * f[:, i, j] + fx * (1 - fy) * f[:, i + 1, j]
             + (1 - fx) * fy * f[:, i, j + 1] + fx * fy * f[:, i + 1, j + 1])
        return v.T[inverse.ravel()]

    def batch_update(self, beliefs, xi, y, phys_next, k):
        pred = self.batch_cell_predictions(phys_next, k)
        s2 = self.noise.std_dev**2
        ll = -0.5 * np.log(2 * np.pi * s2) - 0.5 * (y[:, :1] - pred) ** 2 / s2
        return _normalize_log_density(beliefs + ll, self.cell_area)

    def batch_kl(self, a, b):
        return _grid_kl(a, b, self.cell_area)

    def belief_array(self, b: GridBelief) -> np.ndarray:
        return np.asarray(b.log_weights)[None, :]

    def batch_belief(self, beliefs, i) -> GridBelief:
        return GridBelief(self.cfg.theta_grid, beliefs[i])

    def batch_summary(self, beliefs):
        """Posterior mean and standard deviation per axis, (M, 4): mx, my, sx, sy."""
        p = np.exp(beliefs) * self.cell_area
        c = self.cache.thetas
        mean = p @ c
        var = p @ (c * c) - mean * mean
        return np.concatenate([mean, np.sqrt(np.maximum(var, 0.0))], axis=1)
