"""Experiment configuration: defaults, YAML loading, merging and validation."""
from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .errors import ConfigError

MODELS = ("svar", "fixed", "nnet")
EXPERIMENTS = ("curve", "riboflavin")
SCENARIOS = ("pca", "dropout")

BASE = {
    "experiment": "curve",
    "scenario": "pca",
    "models": list(MODELS),
    "replications": 10,
    "seed": 2024,
    "workers": 1,
    "curve": {
        "n_train": 800,
        "n_test": 200,
        "train_support": [-0.1, 0.6],
        "test_support": [-0.25, 0.85],
        "noise": 0.02,
        "noise_is_variance": True,
    },
    "riboflavin": {
        "path": None,
        "target_column": "y",
        "delimiter": ",",
        "n_train": 56,
        "n_components": 25,
        "surrogate": {"n": 71, "p": 500, "n_active": 10, "n_factors": 10, "noise_var": 0.5},
    },
    "architecture": {"hidden": None, "activation": "relu"},
    "prior": {
        "kind": None,
        "variance": 1.0,
        "slab_variance": 1.0,
        "spike_variance": 1e-4,
        "inclusion_prob": 0.5,
        "s_variance": 1.0,
    },
    "trainer": {
        "steps": None,
        "lr": None,
        "gamma_w": None,
        "gamma_l": None,
        "optimizer": "adam",
        "num_mc_samples": 1,
        "batch_size": None,
        "patience": None,
    },
    "nnet_trainer": {},
    "predict": {"num_draws": 1000, "level": 0.95, "include_noise": True},
}

# Filled in for keys left as None, per experiment.
EXPERIMENT_DEFAULTS = {
    "curve": {"architecture": {"hidden": [64, 64]}, "trainer": {"steps": 5000, "lr": 1e-2}},
    "riboflavin": {"architecture": {"hidden": [128, 64]}, "trainer": {"steps": 3000, "lr": 1e-3}},
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _fill_none(cfg: dict, defaults: dict):
    for key, val in defaults.items():
        if isinstance(val, dict):
            _fill_none(cfg.setdefault(key, {}), val)
        elif cfg.get(key) is None:
            cfg[key] = copy.deepcopy(val)


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def resolve(*overrides: dict) -> dict:
    """Merge overrides onto the base config, apply experiment and scenario
    rules, and validate. Later overrides win."""
    cfg = copy.deepcopy(BASE)
    for o in overrides:
        cfg = deep_merge(cfg, o)
    unknown = set(cfg) - set(BASE)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    _fill_none(cfg, EXPERIMENT_DEFAULTS[cfg["experiment"]])
    if cfg["experiment"] == "riboflavin":
        if cfg["scenario"] not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if cfg["scenario"] == "dropout":
            cfg["prior"]["kind"] = "spike_slab"
    else:
        cfg["scenario"] = None
    if cfg["prior"]["kind"] is None:
        cfg["prior"]["kind"] = "gaussian"
    if cfg["prior"]["kind"] not in ("gaussian", "spike_slab"):
        raise ConfigError(f"unknown prior kind {cfg['prior']['kind']!r}")

    models = cfg["models"]
    if isinstance(models, str):
        models = [m.strip() for m in models.split(",") if m.strip()]
    if not models or any(m not in MODELS for m in models):
        raise ConfigError(f"models must be a non-empty subset of {MODELS}, got {models}")
    # fixed depends on the NNET fit for its variance calibration
    cfg["models"] = [m for m in MODELS if m in models]
    if int(cfg["replications"]) < 1:
        raise ConfigError("replications must be >= 1")
    if int(cfg["workers"]) < 1:
        raise ConfigError("workers must be >= 1")
    hidden = cfg["architecture"]["hidden"]
    if not hidden or any(int(h) < 1 for h in hidden):
        raise ConfigError("architecture.hidden must list at least one positive width")
    if int(cfg["predict"]["num_draws"]) < 2:
        raise ConfigError("predict.num_draws must be >= 2")
    return cfg


def dump(cfg: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=True), encoding="utf-8")
