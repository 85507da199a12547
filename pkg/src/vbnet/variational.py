"""Diagonal Gaussian variational posteriors with softplus-parameterized scale.

``softplus(rho)`` is the standard deviation: samples are
``mu + eps * softplus(rho)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .ndcore import softplus, softplus_deriv, softplus_inv

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class Mode(str, enum.Enum):
    FIXED = "fixed"
    SVAR = "svar"


@dataclass
class GaussianVariational:
    mu: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64)).copy()
        self.rho = np.atleast_1d(np.asarray(self.rho, dtype=np.float64)).copy()
        if self.mu.shape != self.rho.shape or self.mu.ndim != 1:
            raise ShapeError(f"mu {self.mu.shape} and rho {self.rho.shape} must be equal-length vectors")

    @property
    def sigma(self) -> np.ndarray:
        return softplus(self.rho)

    def __len__(self):
        return self.mu.size

    def copy(self) -> "GaussianVariational":
        return GaussianVariational(self.mu, self.rho)


@dataclass
class VariationalState:
    """Variational parameters (mu_w, rho_w) and, in SVAR mode, (mu_L, rho_L)."""

    weights: GaussianVariational
    variance_param: GaussianVariational | None = None

    @property
    def mode(self) -> Mode:
        return Mode.FIXED if self.variance_param is None else Mode.SVAR

    def copy(self) -> "VariationalState":
        vp = None if self.variance_param is None else self.variance_param.copy()
        return VariationalState(self.weights.copy(), vp)

    def to_vector(self) -> np.ndarray:
        parts = [self.weights.mu, self.weights.rho]
        if self.variance_param is not None:
            parts += [self.variance_param.mu, self.variance_param.rho]
        return np.concatenate(parts)

    def from_vector(self, vec) -> "VariationalState":
        """New state with this one's shapes, filled from ``vec``."""
        vec = np.asarray(vec, dtype=np.float64)
        d = len(self.weights)
        weights = GaussianVariational(vec[:d], vec[d:2 * d])
        vp = None
        if self.variance_param is not None:
            vp = GaussianVariational(vec[2 * d:2 * d + 1], vec[2 * d + 1:2 * d + 2])
        if vec.size != 2 * d + (0 if vp is None else 2):
            raise ShapeError("vector length does not match state")
        return VariationalState(weights, vp)


def init_state(mu_w, mode: Mode, init_variance: float | None = None,
               rho_init: float = -3.0) -> VariationalState:
    """Weights start at ``mu_w`` with rho = ``rho_init``; in SVAR mode mu_L is
    chosen so softplus(mu_L) equals ``init_variance``."""
    mu_w = np.asarray(mu_w, dtype=np.float64)
    weights = GaussianVariational(mu_w, np.full_like(mu_w, rho_init))
    if Mode(mode) is Mode.FIXED:
        return VariationalState(weights)
    if init_variance is None or init_variance <= 0:
        raise ValueError("SVAR mode needs a positive init_variance")
    vp = GaussianVariational([softplus_inv(init_variance)], [rho_init])
    return VariationalState(weights, vp)


def _check(v: GaussianVariational, arr, name):
    arr = np.atleast_1d(np.asarray(arr, dtype=np.float64))
    if arr.shape != v.mu.shape:
        raise ShapeError(f"{name} has shape {arr.shape}, expected {v.mu.shape}")
    return arr


def reparam_sample(v: GaussianVariational, eps, sigma=None) -> np.ndarray:
    """``sigma`` may pass a precomputed softplus(rho)."""
    eps = _check(v, eps, "eps")
    return v.mu + eps * (v.sigma if sigma is None else sigma)


def log_q(v: GaussianVariational, theta, sigma=None) -> float:
    theta = _check(v, theta, "theta")
    sigma = v.sigma if sigma is None else sigma
    z = (theta - v.mu) / sigma
    return float(np.sum(-HALF_LOG_2PI - np.log(sigma) - 0.5 * z * z))


def grad_log_terms(v: GaussianVariational, eps, upstream_dtheta, include_log_q: bool = True,
                   sigma=None):
    """Gradients (d_mu, d_rho) of ``g(theta) + log q(theta; mu, rho)`` where
    theta = mu + eps * softplus(rho) and ``upstream_dtheta`` = dg/dtheta.

    The log q term enters both through theta and through its own mu and
    sigma; with ``include_log_q=False`` only the pathwise chain rule for g
    is applied.
    """
    eps = _check(v, eps, "eps")
    up = _check(v, upstream_dtheta, "upstream_dtheta")
    sigma = v.sigma if sigma is None else sigma
    dsig_drho = softplus_deriv(v.rho)
    if not include_log_q:
        return up.copy(), up * eps * dsig_drho
    # with theta - mu = eps * sigma, the log q partials are:
    #   through theta: -eps / sigma; direct in mu: +eps / sigma;
    #   direct in sigma: (eps^2 - 1) / sigma
    d_theta = up - eps / sigma
    d_mu = d_theta + eps / sigma
    d_rho = (d_theta * eps + (eps * eps - 1.0) / sigma) * dsig_drho
    return d_mu, d_rho
