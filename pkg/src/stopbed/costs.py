"""Per-experiment cost functions c_k(xi).

Costs are non-positive rewards added at each experiment. All of them accept a
batch of designs of shape (..., n_design) and the stage index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ConstantCost:
    value: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ConfigError("constant cost must be finite")

    is_constant = True

    def __call__(self, xi, k=0):
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape[:-1] if xi.ndim else (), self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class QuadraticCost:
    """c_k(xi) = -scale * ||xi||^2."""

    scale: float = 1.0
    is_constant = False

    def __call__(self, xi, k=0):
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 0:
            return -self.scale * xi * xi
        return -self.scale * np.sum(xi * xi, axis=-1)

    def to_dict(self):
        return {"kind": "quadratic", "scale": self.scale}


@dataclass(frozen=True)
class TableCost:
    """Stage-indexed constant costs."""

    values: tuple
    is_constant = False

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.values):
            raise ConfigError("cost table entries must be finite")

    def __call__(self, xi, k=0):
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape[:-1] if xi.ndim else (), float(self.values[k]))

    def to_dict(self):
        return {"kind": "table", "values": list(self.values)}


def cost_from_dict(d) -> ConstantCost | QuadraticCost | TableCost:
    if isinstance(d, (int, float)):
        return ConstantCost(float(d))
    kind = d.get("kind")
    if kind == "constant":
        return ConstantCost(float(d["value"]))
    if kind == "quadratic":
        return QuadraticCost(float(d.get("scale", 1.0)))
    if kind == "table":
        return TableCost(tuple(float(v) for v in d["values"]))
    raise ConfigError(f"unknown cost kind {kind!r}")
