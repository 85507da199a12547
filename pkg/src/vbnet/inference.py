"""Posterior-predictive summaries and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import netgrad
from .errors import ConfigError, ShapeError
from .ndcore import RngState, as_matrix, softplus
from .objective import VBModel
from .variational import Mode, VariationalState, reparam_sample


@dataclass
class PredictiveSummary:
    """Per-point predictive mean and interval; arrays have shape (m, q)."""

    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    num_draws: int

    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)


def predictive_draws(model: VBModel, state: VariationalState, x_new, num_draws: int,
                     rng: RngState, include_noise: bool = True):
    """Return (phi draws, y* draws), each of shape (num_draws, m, q).

    With ``include_noise=False`` the y* draws equal the phi draws.
    """
    if num_draws < 2:
        raise ConfigError("num_draws must be >= 2")
    model.check_state(state)
    x_new = as_matrix(x_new, "x_new")
    m, q = x_new.shape[0], model.arch.n_outputs
    phi = np.empty((num_draws, m, q))
    ystar = np.empty_like(phi)
    for t in range(num_draws):
        w = reparam_sample(state.weights, rng.std_normal(model.arch.n_params))
        phi[t] = netgrad.forward(model.arch, w, x_new)
        if model.mode is Mode.SVAR:
            s = reparam_sample(state.variance_param, rng.std_normal(1))[0]
            v = softplus(s)
        else:
            v = model.sigma0_sq
        if include_noise:
            ystar[t] = phi[t] + np.sqrt(v) * rng.std_normal(m * q).reshape(m, q)
        else:
            ystar[t] = phi[t]
    return phi, ystar


def summarize_draws(phi, ystar, level: float = 0.95) -> PredictiveSummary:
    """Mean of phi draws; linear-interpolated empirical quantiles of y* draws."""
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    lower, upper = np.quantile(ystar, [lo_q, hi_q], axis=0)
    return PredictiveSummary(phi.mean(axis=0), lower, upper, level, phi.shape[0])


def predict(model: VBModel, state: VariationalState, x_new, num_draws: int = 1000,
            rng: RngState | None = None, level: float = 0.95,
            include_noise: bool = True) -> PredictiveSummary:
    rng = RngState(0) if rng is None else rng
    phi, ystar = predictive_draws(model, state, x_new, num_draws, rng, include_noise)
    return summarize_draws(phi, ystar, level)


def _vectors(*arrays):
    out = [np.ravel(np.asarray(a, dtype=np.float64)) for a in arrays]
    if len({a.size for a in out}) != 1:
        raise ShapeError(f"length mismatch: {[a.size for a in out]}")
    return out


def mspe(y, yhat) -> float:
    y, yhat = _vectors(y, yhat)
    if y.size == 0:
        raise ShapeError("mspe needs at least one point")
    return float(np.mean((y - yhat) ** 2))


def coverage(y, lower, upper) -> float:
    """Fraction of points with lower <= y <= upper (closed intervals)."""
    y, lower, upper = _vectors(y, lower, upper)
    if y.size == 0:
        raise ShapeError("coverage needs at least one point")
    return float(np.mean((lower <= y) & (y <= upper)))
