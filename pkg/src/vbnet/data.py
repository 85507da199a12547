"""Datasets: synthetic curve generation, delimited-text I/O, splitting,
standardization and Gram-matrix PCA."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ndcore import RngState, as_matrix

TRAIN_SUPPORT = (-0.1, 0.6)
TEST_SUPPORT = (-0.25, 0.85)
N_TRAIN_CURVE = 800
N_TEST_CURVE = 200
CURVE_NOISE = 0.02


class MissingFileError(DataError, FileNotFoundError):
    pass


class ParseError(DataError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row, self.column = row, column


class MissingColumnError(DataError, KeyError):
    def __str__(self):
        return str(self.args[0])


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, a) -> "Standardizer":
        a = as_matrix(a)
        scale = a.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(a.mean(axis=0), scale)

    def transform(self, a):
        return (as_matrix(a) - self.mean) / self.scale

    def inverse(self, a):
        return as_matrix(a) * self.scale + self.mean


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = None
    x_scaler: Standardizer | None = None
    y_scaler: Standardizer | None = None
    indices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = as_matrix(self.x, "x")
        self.y = as_matrix(self.y, "y")
        if self.x.shape[0] < 1 or self.x.shape[0] != self.y.shape[0]:
            raise DataError(f"x has {self.x.shape[0]} rows and y has {self.y.shape[0]}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        base = self.indices if self.indices is not None else np.arange(self.n)
        return replace(self, x=self.x[idx], y=self.y[idx], indices=base[idx])


def curve(x, eps=0.0):
    """x + 2 sin(2 pi (x + eps)) + 2 sin(4 pi (x + eps)) + eps."""
    x = np.asarray(x, dtype=np.float64)
    u = x + eps
    return x + 2.0 * np.sin(2.0 * np.pi * u) + 2.0 * np.sin(4.0 * np.pi * u) + eps


def gen_curve(n: int, support, rng: RngState, noise: float = CURVE_NOISE,
              noise_is_variance: bool = True) -> Dataset:
    """Sample x ~ U[a, b] and y from the curve with one shared noise draw per
    point. ``noise`` is the noise variance unless ``noise_is_variance`` is
    False, in which case it is the standard deviation; 0 disables noise."""
    a, b = (float(v) for v in support)
    if not a < b:
        raise ConfigError(f"invalid support [{a}, {b}]")
    if n < 1:
        raise ConfigError("n must be >= 1")
    if noise < 0:
        raise ConfigError("noise must be non-negative")
    x = rng.uniform(n, a, b)
    sd = np.sqrt(noise) if noise_is_variance else noise
    eps = sd * rng.std_normal(n)
    return Dataset(x[:, None], curve(x, eps)[:, None], ["x"])


def load_delimited(path, target_column: str = "y", delimiter: str = ",") -> Dataset:
    """Read a headered delimited file. An empty first header cell marks a
    row-label column, which is dropped. Errors name 1-based data row and
    column numbers."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such data file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    skip_first = header[0] == "" or (len(rows[1]) == len(header) + 1)
    if len(rows[1]) == len(header) + 1:
        header = [""] + header
    if target_column not in header:
        raise MissingColumnError(f"{path}: target column {target_column!r} not in header")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}", row=i)
        for j, cell in enumerate(row):
            if skip_first and j == 0:
                continue
            try:
                values[i - 1, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric value {cell!r} at row {i}, column {j + 1}",
                                 row=i, column=j + 1) from None
    t = header.index(target_column)
    feat = [j for j in range(len(header)) if j != t and not (skip_first and j == 0)]
    return Dataset(values[:, feat], values[:, [t]], [header[j] for j in feat])


def save_delimited(data: Dataset, path, target_column: str = "y", delimiter: str = ",") -> None:
    names = data.feature_names or [f"x{j + 1}" for j in range(data.x.shape[1])]
    ycols = [target_column] if data.y.shape[1] == 1 else [f"{target_column}{j + 1}" for j in range(data.y.shape[1])]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(names + ycols)
        for xr, yr in zip(data.x, data.y):
            w.writerow([repr(float(v)) for v in xr] + [repr(float(v)) for v in yr])


def split(data: Dataset, n_train: int, rng: RngState) -> tuple[Dataset, Dataset]:
    """Uniformly random train/test partition of the rows."""
    if not 1 <= n_train < data.n:
        raise ConfigError(f"n_train must be in [1, {data.n - 1}], got {n_train}")
    perm = rng.permutation(data.n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def standardize(train: Dataset, test: Dataset, x: bool = True, y: bool = True):
    """Fit scalers on ``train`` only and apply them to both splits."""
    xs = Standardizer.fit(train.x) if x else None
    ys = Standardizer.fit(train.y) if y else None

    def apply(d):
        return replace(d, x=xs.transform(d.x) if xs else d.x, y=ys.transform(d.y) if ys else d.y,
                       x_scaler=xs, y_scaler=ys)
    return apply(train), apply(test)


@dataclass
class PcaModel:
    components: np.ndarray  # (p, k), orthonormal columns
    column_means: np.ndarray
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[1]

    def transform(self, x):
        return (as_matrix(x) - self.column_means) @ self.components

    def inverse_transform(self, scores):
        return as_matrix(scores) @ self.components.T + self.column_means


def _complete_basis(basis, p, k):
    """Extend orthonormal columns ``basis`` (p, r) to (p, k) with coordinate
    directions orthogonalized against it."""
    out = basis
    j = 0
    while out.shape[1] < k:
        e = np.zeros(p)
        e[j] = 1.0
        j += 1
        v = e - out @ (out.T @ e)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            out = np.column_stack([out, v / norm])
    return out


def fit_pca(x, k: int) -> PcaModel:
    """Top-k principal directions of the column-centered data.

    For p > n the n x n Gram matrix is diagonalized and its eigenvectors are
    mapped back to feature space; otherwise the p x p covariance is used.
    """
    x = as_matrix(x, "x")
    n, p = x.shape
    if not 1 <= k <= min(n - 1, p):
        raise ConfigError(f"k must be in [1, {min(n - 1, p)}], got {k}")
    means = x.mean(axis=0)
    xc = x - means
    if p > n:
        evals, evecs = np.linalg.eigh(xc @ xc.T)
        order = np.argsort(evals)[::-1][:k]
        evals = np.clip(evals[order], 0.0, None)
        tol = max(evals[0], 1.0) * 1e-12 * max(n, p)
        good = evals > tol
        comps = xc.T @ evecs[:, order[good]] / np.sqrt(evals[good])
        comps = _complete_basis(comps, p, k)
        evals = np.where(good, evals, 0.0)
    else:
        evals, evecs = np.linalg.eigh(xc.T @ xc)
        order = np.argsort(evals)[::-1][:k]
        evals = np.clip(evals[order], 0.0, None)
        comps = evecs[:, order]
    # deterministic sign: largest-magnitude loading positive
    signs = np.sign(comps[np.argmax(np.abs(comps), axis=0), np.arange(k)])
    signs[signs == 0] = 1.0
    return PcaModel(comps * signs, means, evals / (n - 1))
