"""Single-sample Monte-Carlo variational objective and its exact gradient.

    f = log q(W, S) - scale * log L(W, S | x, y) - log p(W, S)

evaluated at one reparameterized draw. Its expectation is the negative
ELBO (up to the likelihood scale used for mini-batching).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import likelihood, netgrad, priors
from .errors import ConfigError, NumericalError
from .ndcore import RngState, as_matrix
from .priors import GaussianPrior, SpikeSlabPrior
from .variational import (GaussianVariational, Mode, VariationalState, grad_log_terms, log_q,
                          reparam_sample)


@dataclass(frozen=True)
class VBModel:
    """Everything the objective needs besides the variational state and data.

    ``sigma0_sq`` is the likelihood variance in FIXED mode; ``s_prior`` is
    the Gaussian prior on the unconstrained variance parameter in SVAR mode.
    """

    arch: netgrad.Architecture
    prior: GaussianPrior | SpikeSlabPrior = field(default_factory=GaussianPrior)
    mode: Mode = Mode.SVAR
    sigma0_sq: float | None = None
    s_prior: GaussianPrior = field(default_factory=GaussianPrior)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.mode is Mode.FIXED and not (self.sigma0_sq and self.sigma0_sq > 0):
            raise ConfigError("FIXED mode requires a positive sigma0_sq")

    def check_state(self, state: VariationalState):
        if len(state.weights) != self.arch.n_params:
            raise ConfigError(f"state has {len(state.weights)} weights, "
                              f"architecture needs {self.arch.n_params}")
        if state.mode is not self.mode:
            raise ConfigError(f"state is {state.mode.value}, model is {self.mode.value}")


@dataclass
class ObjectiveEval:
    f_value: float
    grad: VariationalState
    sampled_w: np.ndarray
    sampled_s: float | None
    log_q: float
    log_lik: float
    log_prior: float


def objective_at(model: VBModel, state: VariationalState, x, y, eps_w, eps_s=None,
                 lik_scale: float = 1.0) -> ObjectiveEval:
    """Objective and gradient at explicitly supplied noise ``eps_w`` (and
    ``eps_s`` in SVAR mode)."""
    model.check_state(state)
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    sigma_w = state.weights.sigma
    w = reparam_sample(state.weights, eps_w, sigma_w)
    yhat, cache = netgrad.forward(model.arch, w, x, return_cache=True)

    lq = log_q(state.weights, w, sigma_w)
    lp, dlp_w = priors.log_prior_and_grad(model.prior, w)
    if model.mode is Mode.SVAR:
        eps_s = np.atleast_1d(np.asarray(eps_s, dtype=np.float64))
        s = float(reparam_sample(state.variance_param, eps_s)[0])
        ll = likelihood.log_lik_learned(s, y, yhat)
        d_yhat, d_s = likelihood.grad_log_lik(y, yhat, s=s)
        lq += log_q(state.variance_param, [s])
        lp += priors.log_prior_gaussian(model.s_prior, [s])
    else:
        s = None
        ll = likelihood.log_lik_fixed(model.sigma0_sq, y, yhat)
        d_yhat, _ = likelihood.grad_log_lik(y, yhat, sigma0_sq=model.sigma0_sq)

    f = lq - lik_scale * ll - lp
    if not np.isfinite(f):
        raise NumericalError(f"non-finite objective (log q={lq}, log L={ll}, log p={lp})")

    # d(-scale*logL - log p)/dW, then chain through the sampler incl. log q
    up_w = -lik_scale * netgrad.backward(model.arch, w, x, d_yhat, cache=cache)
    up_w -= dlp_w
    d_mu_w, d_rho_w = grad_log_terms(state.weights, eps_w, up_w, sigma=sigma_w)
    grad_vp = None
    if s is not None:
        up_s = -lik_scale * d_s - priors.grad_log_prior(model.s_prior, np.array([s]))
        d_mu_s, d_rho_s = grad_log_terms(state.variance_param, eps_s, up_s)
        grad_vp = GaussianVariational(d_mu_s, d_rho_s)
    grad = VariationalState(GaussianVariational(d_mu_w, d_rho_w), grad_vp)
    return ObjectiveEval(float(f), grad, w, s, float(lq), float(ll), float(lp))


def draw_noise(model: VBModel, rng: RngState):
    eps_w = rng.std_normal(model.arch.n_params)
    eps_s = rng.std_normal(1) if model.mode is Mode.SVAR else None
    return eps_w, eps_s


def eval_objective(model: VBModel, state: VariationalState, x, y, rng: RngState,
                   lik_scale: float = 1.0) -> ObjectiveEval:
    eps_w, eps_s = draw_noise(model, rng)
    return objective_at(model, state, x, y, eps_w, eps_s, lik_scale=lik_scale)


def eval_objective_averaged(model: VBModel, state: VariationalState, x, y, rng: RngState,
                            num_samples: int = 1, lik_scale: float = 1.0) -> ObjectiveEval:
    """Mean value and gradient over ``num_samples`` independent draws taken
    sequentially from ``rng``. Sampled W/S fields hold the last draw."""
    if num_samples < 1:
        raise ConfigError("num_samples must be >= 1")
    evals = [eval_objective(model, state, x, y, rng, lik_scale) for _ in range(num_samples)]
    if num_samples == 1:
        return evals[0]
    mean = lambda attr: float(np.mean([getattr(e, attr) for e in evals]))
    grad_vec = np.mean([e.grad.to_vector() for e in evals], axis=0)
    last = evals[-1]
    return ObjectiveEval(mean("f_value"), state.from_vector(grad_vec), last.sampled_w,
                         last.sampled_s, mean("log_q"), mean("log_lik"), mean("log_prior"))
