"""Numeric foundation: softplus helpers, shape-checked matmul and seeded RNG.

Matrices are plain 2-D ``float64`` numpy arrays (row-major).
"""
from __future__ import annotations

import hashlib

import numpy as np

from .errors import ShapeError

LN2 = float(np.log(2.0))


def softplus(x):
    """log(1 + exp(x)) evaluated as max(x, 0) + log1p(exp(-|x|))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return float(out) if out.ndim == 0 else out


def softplus_deriv(x):
    """Derivative of softplus, i.e. the logistic function."""
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def softplus_inv(y):
    """Inverse of softplus for y > 0: log(expm1(y)), stable for large y."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("softplus_inv requires positive input")
    out = y + np.log(-np.expm1(-y))
    return float(out) if out.ndim == 0 else out


def as_matrix(a, name="array"):
    """Coerce to a 2-D float64 array; 1-D input becomes a column."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeError(f"{name} must be rank 2, got shape {m.shape}")
    return m


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def derive_seed(parent_seed: int, stream_index: int) -> int:
    """Child seed = first 8 bytes of sha256(parent, index), as an unsigned int."""
    payload = f"{int(parent_seed)}:{int(stream_index)}".encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


class RngState:
    """Seeded source of uniform and standard-normal variates.

    Backed by numpy's Philox4x64 counter-based bit generator; normals use
    numpy's exact ziggurat transform. Identical seeds give bit-identical
    streams on the same numpy version.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def std_normal(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        return self._gen.standard_normal(n)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self._gen.uniform(low, high, size=n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def child(self, stream_index: int) -> "RngState":
        return RngState(derive_seed(self.seed, stream_index))


def sample_std_normal(rng: RngState, n: int) -> np.ndarray:
    return rng.std_normal(n)
