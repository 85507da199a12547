"""Stochastic-gradient training of the variational posterior and of the
point-estimate (frequentist) baseline network."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import netgrad
from .errors import ConfigError, NumericalError
from .ndcore import RngState, as_matrix
from .objective import VBModel, eval_objective_averaged
from .variational import Mode, VariationalState, init_state

log = logging.getLogger(__name__)

SMOOTH_WINDOW = 100


@dataclass
class TrainerConfig:
    steps: int = 5000
    lr: float = 1e-3
    gamma_w: float | None = None  # defaults to lr
    gamma_l: float | None = None  # defaults to gamma_w
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    num_mc_samples: int = 1
    batch_size: int | None = None
    patience: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.gamma_w is None:
            self.gamma_w = self.lr
        if self.gamma_l is None:
            self.gamma_l = self.gamma_w
        if self.gamma_w < 0 or self.gamma_l < 0 or self.lr < 0:
            raise ConfigError("learning rates must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.num_mc_samples < 1:
            raise ConfigError("num_mc_samples must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be >= 1")


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grad):
        return params - self.lr * grad


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m *= self.beta1
        self.m += (1 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1 - self.beta2) * np.square(grad)
        denom = np.sqrt(self.v / (1 - self.beta2**self.t))
        denom += self.eps
        step = self.m / denom
        step *= self.lr / (1 - self.beta1**self.t)
        return params - step


def make_optimizer(cfg: TrainerConfig, lr):
    """``lr`` may be a scalar or a per-parameter array."""
    if cfg.optimizer == "sgd":
        return SGD(lr)
    return Adam(lr, cfg.beta1, cfg.beta2, cfg.eps_adam)


@dataclass
class TrainLog:
    f_values: np.ndarray
    sampled_s: np.ndarray | None
    grad_norms: np.ndarray
    final_state: VariationalState | None = None

    @property
    def steps_run(self) -> int:
        return int(self.f_values.size)

    def smoothed(self, window: int = SMOOTH_WINDOW) -> np.ndarray:
        """Trailing moving average of f (shorter windows at the start)."""
        c = np.concatenate([[0.0], np.cumsum(self.f_values)])
        idx = np.arange(1, self.f_values.size + 1)
        lo = np.maximum(idx - window, 0)
        return (c[idx] - c[lo]) / (idx - lo)


class _Patience:
    def __init__(self, patience):
        self.patience = patience
        self.window = []
        self.best = np.inf
        self.since_best = 0

    def should_stop(self, f):
        if self.patience is None:
            return False
        self.window.append(f)
        if len(self.window) > SMOOTH_WINDOW:
            self.window.pop(0)
        smooth = float(np.mean(self.window))
        if smooth < self.best:
            self.best, self.since_best = smooth, 0
        else:
            self.since_best += 1
        return self.since_best >= self.patience


def _batches(n, batch_size, rng):
    """Index arrays for one step; full batch when ``batch_size`` is None."""
    if batch_size is None or batch_size >= n:
        return None
    return rng.permutation(n)[:batch_size]


def initial_state(model: VBModel, y, seed: int, rho_init: float = -3.0) -> VariationalState:
    """mu_w from the symmetric uniform init; SVAR variance starts at var(y)/2."""
    mu_w = netgrad.init_params(model.arch, RngState(seed).child(0))
    var_y = float(np.var(as_matrix(y, "y")))
    init_var = var_y / 2 if var_y > 0 else 1.0
    return init_state(mu_w, model.mode, init_var if model.mode is Mode.SVAR else None, rho_init)


def fit_vb(model: VBModel, x, y, cfg: TrainerConfig, state: VariationalState | None = None):
    """Minimize the Monte-Carlo objective; returns (final state, TrainLog).

    Weight parameters (mu_w, rho_w) move with ``gamma_w`` and the variance
    parameters (mu_L, rho_L) with ``gamma_l``.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] == 0 or x.shape[0] != y.shape[0]:
        raise ConfigError(f"need equal, non-zero row counts, got {x.shape[0]} and {y.shape[0]}")
    state = initial_state(model, y, cfg.seed) if state is None else state.copy()
    model.check_state(state)

    root = RngState(cfg.seed)
    noise_rng, batch_rng = root.child(1), root.child(2)
    n = x.shape[0]
    d = len(state.weights)
    lr = np.full(state.to_vector().size, float(cfg.gamma_w))
    lr[2 * d:] = cfg.gamma_l
    opt = make_optimizer(cfg, lr)
    stopper = _Patience(cfg.patience)

    params = state.to_vector()
    f_values, s_values, norms = [], [], []
    for step in range(cfg.steps):
        idx = _batches(n, cfg.batch_size, batch_rng)
        xb, yb = (x, y) if idx is None else (x[idx], y[idx])
        scale = 1.0 if idx is None else n / idx.size
        try:
            ev = eval_objective_averaged(model, state, xb, yb, noise_rng, cfg.num_mc_samples, scale)
        except NumericalError as exc:
            raise NumericalError(str(exc), step=step) from exc
        g = ev.grad.to_vector()
        params = opt.step(params, g)
        if not np.all(np.isfinite(params)):
            raise NumericalError("non-finite variational parameters", step=step)
        state = state.from_vector(params)
        f_values.append(ev.f_value)
        s_values.append(np.nan if ev.sampled_s is None else ev.sampled_s)
        norms.append(float(np.linalg.norm(g)))
        if stopper.should_stop(ev.f_value):
            log.debug("patience exhausted at step %d", step)
            break

    train_log = TrainLog(np.asarray(f_values), np.asarray(s_values) if model.mode is Mode.SVAR else None,
                         np.asarray(norms), state)
    return state, train_log


@dataclass
class NNetFit:
    params: np.ndarray
    train_mse: float
    losses: np.ndarray = field(repr=False)


def mse_loss(arch, w, x, y):
    resid = netgrad.forward(arch, w, x) - y
    return float(np.mean(resid * resid))


def fit_frequentist(arch: netgrad.Architecture, x, y, cfg: TrainerConfig,
                    init: np.ndarray | None = None) -> NNetFit:
    """Point-estimate network trained on mean squared error."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] == 0 or x.shape[0] != y.shape[0]:
        raise ConfigError(f"need equal, non-zero row counts, got {x.shape[0]} and {y.shape[0]}")
    root = RngState(cfg.seed)
    w = netgrad.init_params(arch, root.child(0)) if init is None else np.array(init, dtype=float)
    batch_rng = root.child(2)
    opt = make_optimizer(cfg, cfg.gamma_w)
    n = x.shape[0]
    losses = []
    for step in range(cfg.steps):
        idx = _batches(n, cfg.batch_size, batch_rng)
        xb, yb = (x, y) if idx is None else (x[idx], y[idx])
        yhat, cache = netgrad.forward(arch, w, xb, return_cache=True)
        resid = yhat - yb
        loss = float(np.mean(resid * resid))
        if not np.isfinite(loss):
            raise NumericalError("non-finite training loss", step=step)
        g = netgrad.backward(arch, w, xb, 2.0 * resid / resid.size, cache=cache)
        w = opt.step(w, g)
        losses.append(loss)
    return NNetFit(w, mse_loss(arch, w, x, y), np.asarray(losses))
