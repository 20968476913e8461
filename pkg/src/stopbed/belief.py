"""Belief states and Bayesian updates.

Two representations are provided: a conjugate 1-D Gaussian used by the
linear-Gaussian benchmark, and a nonparametric density on a regular 2-D grid
over the unit square used for source localisation. Every public function is
pure; the underscore-prefixed array kernels broadcast over leading axes so the
training loop can update a whole batch of episodes at once with exactly the
same arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegeneratePosteriorError, DomainError, ShapeError, SupportError

__all__ = [
    "NoiseModel",
    "GaussianBelief",
    "GridBelief",
    "gaussian_update",
    "gaussian_kl",
    "expected_info_gain_gaussian",
    "grid_update",
    "grid_kl",
    "uniform_grid_belief",
]


@dataclass(frozen=True)
class NoiseModel:
    """Additive zero-mean Gaussian observation noise."""

    std_dev: float

    def __post_init__(self):
        if not np.isfinite(self.std_dev) or self.std_dev <= 0:
            raise DomainError(f"noise std_dev must be finite and > 0, got {self.std_dev}")

    @property
    def variance(self) -> float:
        return self.std_dev**2


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.variance)):
            raise DomainError("Gaussian belief parameters must be finite")
        if self.variance <= 0:
            raise DomainError(f"variance must be > 0, got {self.variance}")


# ---------------------------------------------------------------------------
# Gaussian kernels (broadcasting)
# ---------------------------------------------------------------------------

def _gauss_update(mean, var, xi, y, noise_var):
    """Conjugate update of N(mean, var) after y = theta * xi + eps."""
    precision = xi * xi / noise_var + 1.0 / var
    new_var = 1.0 / precision
    new_mean = new_var * (xi * y / noise_var + mean / var)
    return new_mean, new_var


def _gauss_kl(mean_a, var_a, mean_b, var_b):
    return 0.5 * (var_a / var_b + (mean_a - mean_b) ** 2 / var_b + np.log(var_b / var_a) - 1.0)


def _gauss_eig(var, xi, noise_var):
    return 0.5 * np.log1p(var * xi * xi / noise_var)


def _require_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError(f"non-finite input: {v!r}")


def gaussian_update(b: GaussianBelief, xi: float, y: float, noise: NoiseModel) -> GaussianBelief:
    """Posterior after observing ``y = theta * xi + eps``.

    >>> gaussian_update(GaussianBelief(0.0, 9.0), 3.0, 3.0, NoiseModel(1.0)).variance
    0.10975609756097561
    """
    _require_finite(xi, y)
    m, v = _gauss_update(b.mean, b.variance, float(xi), float(y), noise.variance)
    return GaussianBelief(float(m), float(v))


def gaussian_kl(a: GaussianBelief, b: GaussianBelief) -> float:
    """KL(a || b) between two univariate Gaussians."""
    if a.variance <= 0 or b.variance <= 0:
        raise DomainError("variances must be positive")
    return float(_gauss_kl(a.mean, a.variance, b.mean, b.variance))


def expected_info_gain_gaussian(b: GaussianBelief, xi: float, noise: NoiseModel) -> float:
    """Expected KL(posterior || b) over the prior predictive of one experiment.

    Equals half the log ratio of prior to posterior variance, which does not
    depend on the observation.
    """
    _require_finite(xi)
    return float(_gauss_eig(b.variance, float(xi), noise.variance))


# ---------------------------------------------------------------------------
# Grid beliefs
# ---------------------------------------------------------------------------

def grid_centers(n: int) -> np.ndarray:
    """Cell centres of an ``n x n`` grid on [0,1]^2, shape (n*n, 2), row-major in (x, y)."""
    c = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(c, c, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _normalize_log_density(log_w, cell_area):
    """Shift log weights so that sum(exp(.)) * cell_area == 1 along the last axis."""
    total = logsumexp(log_w, axis=-1, keepdims=True)
    if np.any(~np.isfinite(total)):
        raise DegeneratePosteriorError("posterior has zero total mass")
    return log_w - total - np.log(cell_area)


def _grid_kl(log_a, log_b, cell_area):
    """Midpoint-rule KL(a || b) along the last axis; 0 * log 0 is taken as 0."""
    a_pos = np.isfinite(log_a)
    if np.any(a_pos & ~np.isfinite(log_b)):
        raise SupportError("a has mass where b has none")
    diff = np.where(a_pos, log_a - np.where(a_pos, log_b, 0.0), 0.0)
    dens = np.where(a_pos, np.exp(np.where(a_pos, log_a, 0.0)), 0.0)
    return np.sum(dens * diff, axis=-1) * cell_area


@dataclass(frozen=True)
class GridBelief:
    """Posterior density over the unit square, stored as log density per cell.

    ``log_weights`` is normalised on construction so that the midpoint rule
    integrates the density to one.
    """

    n: int
    log_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        if lw.shape != (self.n * self.n,):
            raise ShapeError(f"expected {self.n * self.n} log weights, got shape {lw.shape}")
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise DomainError("log weights must be finite or -inf")
        lw = _normalize_log_density(lw, self.cell_area)
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @property
    def cell_area(self) -> float:
        return 1.0 / (self.n * self.n)

    @property
    def centers(self) -> np.ndarray:
        return grid_centers(self.n)

    def density(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def probabilities(self) -> np.ndarray:
        """Cell masses (density times area), summing to one."""
        return self.density() * self.cell_area

    def mean(self) -> np.ndarray:
        return self.probabilities() @ self.centers

    def std(self) -> np.ndarray:
        p = self.probabilities()
        c = self.centers
        mu = p @ c
        return np.sqrt(p @ (c - mu) ** 2)


def uniform_grid_belief(n: int = 50) -> GridBelief:
    return GridBelief(n, np.zeros(n * n))


def grid_update(b: GridBelief, log_likelihood_per_cell) -> GridBelief:
    """Multiply the density by a per-cell likelihood and renormalise."""
    ll = np.asarray(log_likelihood_per_cell, dtype=float)
    if ll.shape != b.log_weights.shape:
        raise ShapeError(f"likelihood shape {ll.shape} != grid shape {b.log_weights.shape}")
    if np.any(np.isnan(ll)) or np.any(ll == np.inf):
        raise DomainError("log-likelihood entries must be finite or -inf")
    return GridBelief(b.n, b.log_weights + ll)


def grid_kl(a: GridBelief, b: GridBelief) -> float:
    if a.n != b.n:
        raise ShapeError(f"grid mismatch: {a.n} vs {b.n}")
    return float(_grid_kl(a.log_weights, b.log_weights, a.cell_area))
