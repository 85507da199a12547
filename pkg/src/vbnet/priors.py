"""Log prior densities over network parameters and their gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianPrior:
    """Isotropic N(0, variance) on every coordinate."""

    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigError(f"prior variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class SpikeSlabPrior:
    """pi * N(0, slab_variance) + (1 - pi) * N(0, spike_variance) per coordinate,
    with the Bernoulli indicator marginalized out."""

    slab_variance: float = 1.0
    spike_variance: float = 1e-4
    inclusion_prob: float = 0.5

    def __post_init__(self):
        if not (self.slab_variance > 0 and self.spike_variance > 0):
            raise ConfigError("mixture variances must be positive")
        if not self.spike_variance < self.slab_variance:
            raise ConfigError("spike variance must be smaller than slab variance")
        if not 0.0 <= self.inclusion_prob <= 1.0:
            raise ConfigError(f"inclusion_prob must lie in [0, 1], got {self.inclusion_prob}")


def _normal_logpdf(theta, variance):
    return -0.5 * (_LOG_2PI + np.log(variance)) - 0.5 * theta * theta / variance


def log_prior_gaussian(prior: GaussianPrior, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    return float(np.sum(_normal_logpdf(theta, prior.variance)))


def _component_logs(prior: SpikeSlabPrior, theta):
    # log(0) = -inf is intended at pi in {0, 1}
    with np.errstate(divide="ignore"):
        log_pi = np.log(prior.inclusion_prob)
        log_1mpi = np.log1p(-prior.inclusion_prob)
    return (log_pi + _normal_logpdf(theta, prior.slab_variance),
            log_1mpi + _normal_logpdf(theta, prior.spike_variance))


def log_prior_spike_slab(prior: SpikeSlabPrior, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    slab, spike = _component_logs(prior, theta)
    return float(np.sum(np.logaddexp(slab, spike)))


def slab_responsibility(prior: SpikeSlabPrior, theta) -> np.ndarray:
    """Posterior probability that each coordinate came from the slab."""
    theta = np.asarray(theta, dtype=np.float64)
    slab, spike = _component_logs(prior, theta)
    with np.errstate(invalid="ignore"):
        return np.exp(slab - np.logaddexp(slab, spike))


def log_prior(prior, theta) -> float:
    if isinstance(prior, GaussianPrior):
        return log_prior_gaussian(prior, theta)
    if isinstance(prior, SpikeSlabPrior):
        return log_prior_spike_slab(prior, theta)
    raise ConfigError(f"unsupported prior {prior!r}")


def log_prior_and_grad(prior, theta) -> tuple[float, np.ndarray]:
    """Log density and its gradient, sharing the mixture component terms."""
    theta = np.asarray(theta, dtype=np.float64)
    if isinstance(prior, SpikeSlabPrior):
        slab, spike = _component_logs(prior, theta)
        total = np.logaddexp(slab, spike)
        r = np.exp(slab - total)
        grad = -theta * (r / prior.slab_variance + (1.0 - r) / prior.spike_variance)
        return float(np.sum(total)), grad
    return log_prior(prior, theta), grad_log_prior(prior, theta)


def grad_log_prior(prior, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if isinstance(prior, GaussianPrior):
        return -theta / prior.variance
    if isinstance(prior, SpikeSlabPrior):
        r = slab_responsibility(prior, theta)
        return r * (-theta / prior.slab_variance) + (1.0 - r) * (-theta / prior.spike_variance)
    raise ConfigError(f"unsupported prior {prior!r}")
