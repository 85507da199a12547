"""Gaussian regression log-likelihoods with fixed or learned variance.

The learned variance is softplus(s) for an unconstrained scalar s.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .ndcore import as_matrix, softplus, softplus_deriv

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class FixedVarianceLik:
    sigma0_sq: float

    def __post_init__(self):
        if not self.sigma0_sq > 0:
            raise ConfigError(f"sigma0_sq must be positive, got {self.sigma0_sq}")


@dataclass(frozen=True)
class LearnedVarianceLik:
    s: float

    @property
    def variance(self) -> float:
        return softplus(self.s)


def _residuals(y, yhat):
    y = as_matrix(y, "y")
    yhat = as_matrix(yhat, "yhat")
    if y.shape != yhat.shape:
        raise ShapeError(f"y shape {y.shape} does not match yhat shape {yhat.shape}")
    return y - yhat


def _gaussian_loglik(resid, variance):
    n, q = resid.shape
    return float(-0.5 * n * q * (_LOG_2PI + np.log(variance)) - np.sum(resid * resid) / (2.0 * variance))


def log_lik_fixed(lik: FixedVarianceLik | float, y, yhat) -> float:
    v = lik.sigma0_sq if isinstance(lik, FixedVarianceLik) else FixedVarianceLik(lik).sigma0_sq
    return _gaussian_loglik(_residuals(y, yhat), v)


def log_lik_learned(s: float, y, yhat) -> float:
    return _gaussian_loglik(_residuals(y, yhat), softplus(float(s)))


def grad_log_lik(y, yhat, *, s: float | None = None, sigma0_sq: float | None = None):
    """Return (d loglik / d yhat, d loglik / d s). Exactly one of ``s`` and
    ``sigma0_sq`` is given; the second element is None in fixed mode."""
    if (s is None) == (sigma0_sq is None):
        raise ConfigError("pass exactly one of s or sigma0_sq")
    resid = _residuals(y, yhat)
    v = softplus(float(s)) if s is not None else FixedVarianceLik(sigma0_sq).sigma0_sq
    d_yhat = resid / v
    if s is None:
        return d_yhat, None
    nq = resid.size
    d_v = -nq / (2.0 * v) + np.sum(resid * resid) / (2.0 * v * v)
    return d_yhat, float(d_v * softplus_deriv(float(s)))
