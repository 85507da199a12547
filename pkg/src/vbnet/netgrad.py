"""Dense feed-forward network phi(x; W) over a flat parameter vector.

Parameter layout, layer by layer: the (fan_in, fan_out) weight matrix in
row-major order, followed by the fan_out biases. A layer computes
``h @ weight + bias``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .ndcore import RngState, as_matrix

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise ConfigError("need input, at least one hidden layer, and output")
        if min(sizes) < 1:
            raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum((s[i] + 1) * s[i + 1] for i in range(len(s) - 1))

    def slices(self):
        """Yield (weight_slice, bias_slice, fan_in, fan_out) per layer."""
        offset = 0
        s = self.layer_sizes
        for i in range(len(s) - 1):
            nw = s[i] * s[i + 1]
            yield (slice(offset, offset + nw), slice(offset + nw, offset + nw + s[i + 1]),
                   s[i], s[i + 1])
            offset += nw + s[i + 1]


def unpack(arch: Architecture, w) -> list[tuple[np.ndarray, np.ndarray]]:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (arch.n_params,):
        raise ShapeError(f"parameter vector has shape {w.shape}, expected ({arch.n_params},)")
    return [(w[ws].reshape(fi, fo), w[bs]) for ws, bs, fi, fo in arch.slices()]


def pack(arch: Architecture, layers) -> np.ndarray:
    parts = []
    for (weight, bias), (_, _, fi, fo) in zip(layers, arch.slices()):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.shape != (fi, fo) or bias.shape != (fo,):
            raise ShapeError(f"layer shapes {weight.shape}/{bias.shape} != ({fi}, {fo})/({fo},)")
        parts += [weight.ravel(), bias]
    out = np.concatenate(parts)
    if out.size != arch.n_params:
        raise ShapeError("wrong number of layers")
    return out


def init_params(arch: Architecture, rng: RngState) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
    w = np.empty(arch.n_params)
    for ws, bs, fi, fo in arch.slices():
        bound = 1.0 / np.sqrt(fi)
        w[ws] = rng.uniform(fi * fo, -bound, bound)
        w[bs] = rng.uniform(fo, -bound, bound)
    return w


def _act(name, z):
    return np.maximum(z, 0.0) if name == "relu" else np.tanh(z)


def _act_grad(name, z, a):
    return (z > 0).astype(np.float64) if name == "relu" else 1.0 - a * a


def _check_input(arch, x):
    x = as_matrix(x, "x")
    if x.shape[1] != arch.n_inputs:
        raise ShapeError(f"x has {x.shape[1]} columns, network expects {arch.n_inputs}")
    return x


def forward(arch: Architecture, w, x, return_cache: bool = False):
    """Network output, shape (n, q). With ``return_cache`` also returns the
    per-layer (input, pre-activation, output) needed by :func:`backward`."""
    x = _check_input(arch, x)
    layers = unpack(arch, w)
    h = x
    cache = []
    last = len(layers) - 1
    for i, (weight, bias) in enumerate(layers):
        z = h @ weight + bias
        a = z if i == last else _act(arch.activation, z)
        cache.append((h, z, a))
        h = a
    return (h, cache) if return_cache else h


def backward(arch: Architecture, w, x, upstream, return_input_grad: bool = False, cache=None):
    """Gradient of a scalar loss with respect to the flat parameters, given
    ``upstream`` = d loss / d output."""
    x = _check_input(arch, x)
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != (x.shape[0], arch.n_outputs):
        raise ShapeError(f"upstream has shape {upstream.shape}, expected "
                         f"{(x.shape[0], arch.n_outputs)}")
    if cache is None:
        _, cache = forward(arch, w, x, return_cache=True)
    layers = unpack(arch, w)
    grad = np.empty(arch.n_params)
    slices = list(arch.slices())
    delta = upstream
    for i in range(len(layers) - 1, -1, -1):
        h, z, a = cache[i]
        if i != len(layers) - 1:
            delta = delta * _act_grad(arch.activation, z, a)
        ws, bs, _, _ = slices[i]
        grad[ws] = (h.T @ delta).ravel()
        grad[bs] = delta.sum(axis=0)
        delta = delta @ layers[i][0].T
    return (grad, delta) if return_input_grad else grad
