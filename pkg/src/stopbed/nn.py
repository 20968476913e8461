"""Small dense networks with hand-written backpropagation.

Inputs are row-major batches ``(batch, features)``; a 1-D input is treated as
a batch of one. Hidden layers use ReLU, the output layer is linear.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, StateError, UpdateRejected

__all__ = ["DenseNet", "Optimizer", "forward", "grad_params", "grad_input", "apply_update",
           "save_nets", "load_nets"]

_NET_MAGIC = b"STBNN\x00"
_CKPT_MAGIC = b"STBCK\x00"
_VERSION = 1


class DenseNet:
    """Multilayer perceptron ``W`` stored as (fan_in, fan_out)."""

    def __init__(self, layer_sizes, seed=0, weights=None, biases=None):
        self.layer_sizes = [int(s) for s in layer_sizes]
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ShapeError(f"bad layer sizes {layer_sizes}")
        if weights is None:
            # uniform fan-in scaling, U(-1/sqrt(fan_in), 1/sqrt(fan_in))
            rng = np.random.default_rng(seed)
            weights, biases = [], []
            for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
                lim = 1.0 / np.sqrt(fan_in)
                weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
                biases.append(rng.uniform(-lim, lim, size=fan_out))
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]
        for w, b, i, o in zip(self.weights, self.biases, self.layer_sizes[:-1], self.layer_sizes[1:]):
            if w.shape != (i, o) or b.shape != (o,):
                raise ShapeError("parameter shapes do not match layer sizes")

    @property
    def n_in(self):
        return self.layer_sizes[0]

    @property
    def n_out(self):
        return self.layer_sizes[-1]

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(self.layer_sizes, weights=self.weights, biases=self.biases)

    def _as_batch(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.n_in:
            raise ShapeError(f"input has {x.shape[1]} features, net expects {self.n_in}")
        return x, single

    def _forward(self, x):
        acts, pre = [x], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return acts, pre

    def _backward(self, acts, pre, upstream):
        """Parameter and input gradients of sum(upstream * output)."""
        grads = []
        d = upstream
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                d = d * (pre[i] > 0)
            grads.append((acts[i].T @ d, d.sum(axis=0)))
            d = d @ self.weights[i].T
        grads.reverse()
        return [g for pair in grads for g in pair], d

    def __call__(self, x):
        return forward(self, x)

    # serialisation ------------------------------------------------------
    def to_bytes(self) -> bytes:
        parts = [_NET_MAGIC, struct.pack("<HI", _VERSION, len(self.layer_sizes)),
                 struct.pack(f"<{len(self.layer_sizes)}I", *self.layer_sizes)]
        for w, b in zip(self.weights, self.biases):
            parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0):
        """Returns ``(net, next_offset)``."""
        if buf[offset:offset + 6] != _NET_MAGIC:
            raise StateError("not a network block")
        offset += 6
        version, n = struct.unpack_from("<HI", buf, offset)
        if version != _VERSION:
            raise StateError(f"unsupported network version {version}")
        offset += 6
        sizes = list(struct.unpack_from(f"<{n}I", buf, offset))
        offset += 4 * n
        ws, bs = [], []
        for i, o in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(buf, dtype="<f8", count=i * o, offset=offset).reshape(i, o)
            offset += 8 * i * o
            b = np.frombuffer(buf, dtype="<f8", count=o, offset=offset)
            offset += 8 * o
            ws.append(w.astype(float))
            bs.append(b.astype(float))
        return cls(sizes, weights=ws, biases=bs), offset


def forward(net: DenseNet, x):
    xb, single = net._as_batch(x)
    out = net._forward(xb)[0][-1]
    return out[0] if single else out


def grad_params(net: DenseNet, x, upstream):
    """Gradient of ``sum(upstream * forward(x))`` w.r.t. [W0, b0, W1, b1, ...]."""
    xb, single = net._as_batch(x)
    up = np.atleast_2d(np.asarray(upstream, dtype=float))
    if up.shape != (xb.shape[0], net.n_out):
        raise ShapeError(f"upstream shape {up.shape} != {(xb.shape[0], net.n_out)}")
    acts, pre = net._forward(xb)
    return net._backward(acts, pre, up)[0]


def grad_input(net: DenseNet, x):
    """d output / d input for a scalar-output network, one row per input row."""
    if net.n_out != 1:
        raise ShapeError("grad_input needs a scalar-output network")
    xb, single = net._as_batch(x)
    acts, pre = net._forward(xb)
    _, dx = net._backward(acts, pre, np.ones((xb.shape[0], 1)))
    return dx[0] if single else dx


def value_and_grads(net: DenseNet, x, upstream_fn):
    """Forward pass plus backprop of an upstream computed from the output.

    Returns ``(output, param_grads, input_grads)``.
    """
    xb, _ = net._as_batch(x)
    acts, pre = net._forward(xb)
    out = acts[-1]
    pg, dx = net._backward(acts, pre, upstream_fn(out))
    return out, pg, dx


@dataclass
class Optimizer:
    """Plain SGD or Adam."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    _m: list = field(default=None, repr=False)
    _v: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")

    def deltas(self, grads):
        self.step += 1
        if self.kind == "sgd":
            return [self.learning_rate * g for g in grads]
        if self._m is None:
            self._m = [np.zeros_like(g) for g in grads]
            self._v = [np.zeros_like(g) for g in grads]
        out = []
        c1 = 1 - self.beta1**self.step
        c2 = 1 - self.beta2**self.step
        for i, g in enumerate(grads):
            self._m[i] = self.beta1 * self._m[i] + (1 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1 - self.beta2) * g * g
            out.append(self.learning_rate * (self._m[i] / c1) / (np.sqrt(self._v[i] / c2) + self.eps))
        return out


def apply_update(net: DenseNet, grads, opt: Optimizer, direction: str = "descent"):
    """In-place parameter update; refuses non-finite gradients."""
    params = net.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ShapeError("gradient shapes do not match parameters")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise UpdateRejected("non-finite gradient")
    sign = {"ascent": 1.0, "descent": -1.0}[direction]
    for p, d in zip(params, opt.deltas(grads)):
        p += sign * d


def save_nets(path, **nets):
    """Write named networks to one checkpoint file."""
    parts = [_CKPT_MAGIC, struct.pack("<HI", _VERSION, len(nets))]
    for name, net in nets.items():
        raw = name.encode()
        parts += [struct.pack("<H", len(raw)), raw, net.to_bytes()]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_nets(path) -> dict:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:6] != _CKPT_MAGIC:
        raise StateError(f"{path} is not a checkpoint")
    version, count = struct.unpack_from("<HI", buf, 6)
    if version != _VERSION:
        raise StateError(f"unsupported checkpoint version {version}")
    offset = 12
    nets = {}
    try:
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", buf, offset)
            offset += 2
            name = buf[offset:offset + ln].decode()
            offset += ln
            nets[name], offset = DenseNet.from_bytes(buf, offset)
    except (struct.error, ValueError) as err:
        raise StateError(f"corrupt checkpoint {path}: {err}") from err
    if offset != len(buf):
        raise StateError(f"corrupt checkpoint {path}: trailing bytes")
    return nets
