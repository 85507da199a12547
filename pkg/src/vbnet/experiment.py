"""Replicated experiment runner and result summaries.

One replication generates or resamples the data, fits the point-estimate
network first (its train MSE calibrates the fixed likelihood variance),
then the requested variational models, and scores all of them on the
held-out split.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import netgrad
from .errors import ConfigError, NumericalError
from .inference import coverage, mspe, predict
from .ndcore import RngState, derive_seed, softplus
from .objective import VBModel
from .priors import GaussianPrior, SpikeSlabPrior
from .trainer import TrainerConfig, fit_frequentist, fit_vb
from .variational import Mode

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RESULTS_FILE = "results.json"
RIBO_VARIANCE_FLOOR = 0.2


def gen_surrogate(n: int, p: int, n_active: int, n_factors: int, noise_var: float,
                  rng: RngState) -> data_mod.Dataset:
    """High-dimensional stand-in for the riboflavin data: factor-correlated
    features and a response driven by a few of them."""
    if not 1 <= n_active <= p:
        raise ConfigError("n_active must be in [1, p]")
    factors = rng.std_normal(n * n_factors).reshape(n, n_factors)
    loadings = 0.7 * rng.std_normal(n_factors * p).reshape(n_factors, p)
    x = factors @ loadings + rng.std_normal(n * p).reshape(n, p)
    active = np.sort(rng.permutation(p)[:n_active])
    beta = rng.uniform(n_active, 0.5, 1.5) * np.where(rng.uniform(n_active) < 0.5, -1.0, 1.0)
    signal = x[:, active] @ beta
    y = signal / signal.std() + np.sqrt(noise_var) * rng.std_normal(n)
    return data_mod.Dataset(x, y[:, None], [f"g{j + 1}" for j in range(p)])


def load_base_dataset(cfg: dict):
    """The fixed dataset that riboflavin replications resample; None for
    the curve experiment (fresh data per replication)."""
    if cfg["experiment"] != "riboflavin":
        return None
    rc = cfg["riboflavin"]
    if rc["path"]:
        return data_mod.load_delimited(rc["path"], rc["target_column"], rc["delimiter"])
    s = rc["surrogate"]
    return gen_surrogate(int(s["n"]), int(s["p"]), int(s["n_active"]), int(s["n_factors"]),
                         float(s["noise_var"]), RngState(derive_seed(cfg["seed"], 10**6)))


def _make_prior(pc: dict):
    if pc["kind"] == "spike_slab":
        return SpikeSlabPrior(float(pc["slab_variance"]), float(pc["spike_variance"]),
                              float(pc["inclusion_prob"]))
    return GaussianPrior(float(pc["variance"]))


def _trainer_config(section: dict, seed: int) -> TrainerConfig:
    keys = TrainerConfig.__dataclass_fields__.keys()
    given = {k: v for k, v in section.items() if k in keys and k != "seed" and v is not None}
    return TrainerConfig(**given, seed=seed)


def prepare_replication(cfg: dict, rep: int, base: data_mod.Dataset | None):
    """Return (train, test) with standardized inputs/targets plus metadata."""
    rep_rng = RngState(derive_seed(cfg["seed"], rep)).child(0)
    meta = {}
    if cfg["experiment"] == "curve":
        cc = cfg["curve"]
        train = data_mod.gen_curve(int(cc["n_train"]), cc["train_support"], rep_rng,
                                   float(cc["noise"]), bool(cc["noise_is_variance"]))
        test = data_mod.gen_curve(int(cc["n_test"]), cc["test_support"], rep_rng,
                                  float(cc["noise"]), bool(cc["noise_is_variance"]))
        raw_test_x = test.x[:, 0].copy()
        train, test = data_mod.standardize(train, test)
        meta["test_x"] = raw_test_x
    else:
        rc = cfg["riboflavin"]
        train, test = data_mod.split(base, int(rc["n_train"]), rep_rng)
        train, test = data_mod.standardize(train, test)
        if cfg["scenario"] == "pca":
            pca = data_mod.fit_pca(train.x, int(rc["n_components"]))
            tr_scores, te_scores = pca.transform(train.x), pca.transform(test.x)
            sc = data_mod.Standardizer.fit(tr_scores)
            train = data_mod.replace(train, x=sc.transform(tr_scores))
            test = data_mod.replace(test, x=sc.transform(te_scores))
        meta["test_index"] = test.indices
    return train, test, meta


def _sigma0_sq(cfg: dict, train, nnet_mse: float) -> tuple[float, str]:
    if cfg["experiment"] == "curve":
        return nnet_mse, "nnet_train_mse"
    floor = RIBO_VARIANCE_FLOOR * float(np.var(train.y))
    return max(floor, nnet_mse), "max(0.2*var(y_train), nnet_train_mse)"


def _point_block(meta, y, mean, lower=None, upper=None):
    block = {"y": y.tolist(), "mean": mean.tolist()}
    if "test_x" in meta:
        block["x"] = meta["test_x"].tolist()
    if "test_index" in meta:
        block["index"] = [int(i) for i in meta["test_index"]]
    if lower is not None:
        block["lower"], block["upper"] = lower.tolist(), upper.tolist()
    return block


def run_replication(cfg: dict, rep: int, base=None):
    """Returns (records, timings) for one replication."""
    rep_seed = derive_seed(cfg["seed"], rep)
    train, test, meta = prepare_replication(cfg, rep, base)
    arch = netgrad.Architecture((train.x.shape[1], *map(int, cfg["architecture"]["hidden"]),
                                 train.y.shape[1]), cfg["architecture"]["activation"])
    y_scaler = train.y_scaler
    y_test = y_scaler.inverse(test.y).ravel()
    train_seed = derive_seed(rep_seed, 1)
    vb_cfg = _trainer_config(cfg["trainer"], train_seed)
    nn_cfg = _trainer_config({**cfg["trainer"], **cfg["nnet_trainer"]}, train_seed)
    prior = _make_prior(cfg["prior"])
    pc = cfg["predict"]
    in_support = None
    if "test_x" in meta:
        a, b = cfg["curve"]["train_support"]
        in_support = (meta["test_x"] >= a) & (meta["test_x"] <= b)

    def base_record(model):
        return {"schema_version": SCHEMA_VERSION, "experiment": cfg["experiment"],
                "scenario": cfg["scenario"], "replication": rep, "seed": rep_seed,
                "model": model, "status": "ok", "error": None, "n_features": arch.n_inputs,
                "n_train": train.n, "n_test": test.n, "mspe": None, "coverage": None,
                "coverage_in_support": None, "mean_half_width": None, "half_widths": None,
                "resolved": {}, "points": None}

    records, timings = [], []
    # NNET is always fitted: FIXED needs its train MSE
    t0 = time.perf_counter()
    nnet_fit = None
    try:
        nnet_fit = fit_frequentist(arch, train.x, train.y, nn_cfg)
    except NumericalError as exc:
        nnet_error = str(exc)
    if "nnet" in cfg["models"]:
        rec = base_record("nnet")
        if nnet_fit is None:
            rec.update(status="failed", error=nnet_error)
        else:
            mean = y_scaler.inverse(netgrad.forward(arch, nnet_fit.params, test.x)).ravel()
            rec["mspe"] = mspe(y_test, mean)
            rec["resolved"] = {"train_mse": nnet_fit.train_mse}
            rec["points"] = _point_block(meta, y_test, mean)
        records.append(rec)
        timings.append((rep, "nnet", time.perf_counter() - t0))

    for model_name in ("svar", "fixed"):
        if model_name not in cfg["models"]:
            continue
        t0 = time.perf_counter()
        rec = base_record(model_name)
        try:
            if model_name == "fixed":
                if nnet_fit is None:
                    raise NumericalError(f"NNET calibration fit failed: {nnet_error}")
                s0, rule = _sigma0_sq(cfg, train, nnet_fit.train_mse)
                model = VBModel(arch, prior, Mode.FIXED, sigma0_sq=s0)
                rec["resolved"] = {"sigma0_sq": s0, "sigma0_rule": rule,
                                   "nnet_train_mse": nnet_fit.train_mse}
            else:
                model = VBModel(arch, prior, Mode.SVAR,
                                s_prior=GaussianPrior(float(cfg["prior"]["s_variance"])))
            state, train_log = fit_vb(model, train.x, train.y, vb_cfg)
            if model_name == "svar":
                rec["resolved"] = {"learned_variance": softplus(float(state.variance_param.mu[0])),
                                   "mu_L": float(state.variance_param.mu[0]),
                                   "rho_L": float(state.variance_param.rho[0])}
            rec["resolved"]["final_smoothed_f"] = float(train_log.smoothed()[-1]) if train_log.steps_run else None
            summary = predict(model, state, test.x, int(pc["num_draws"]),
                              RngState(derive_seed(rep_seed, 2 if model_name == "svar" else 3)),
                              float(pc["level"]), bool(pc["include_noise"]))
            mean = y_scaler.inverse(summary.mean).ravel()
            lower = y_scaler.inverse(summary.lower).ravel()
            upper = y_scaler.inverse(summary.upper).ravel()
            half = 0.5 * (upper - lower)
            rec.update(mspe=mspe(y_test, mean), coverage=coverage(y_test, lower, upper),
                       mean_half_width=float(half.mean()), half_widths=half.tolist(),
                       points=_point_block(meta, y_test, mean, lower, upper))
            if in_support is not None and in_support.any():
                rec["coverage_in_support"] = coverage(y_test[in_support], lower[in_support],
                                                      upper[in_support])
        except NumericalError as exc:
            log.warning("replication %d, model %s failed: %s", rep, model_name, exc)
            rec.update(status="failed", error=str(exc))
        records.append(rec)
        timings.append((rep, model_name, time.perf_counter() - t0))
    order = {m: i for i, m in enumerate(cfg["models"])}
    records.sort(key=lambda r: order[r["model"]])
    return records, timings


def _run_one(args):
    cfg, rep, base = args
    return run_replication(cfg, rep, base)


def run_experiment(cfg: dict):
    """Run all replications; returns (records, timings) in replication order."""
    base = load_base_dataset(cfg)
    jobs = [(cfg, rep, base) for rep in range(int(cfg["replications"]))]
    if int(cfg["workers"]) > 1:
        with ProcessPoolExecutor(max_workers=int(cfg["workers"])) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    records = [r for recs, _ in results for r in recs]
    timings = [t for _, ts in results for t in ts]
    return records, timings


def write_results(cfg: dict, records, timings, out_dir) -> Path:
    """Write results.json, metrics.csv, points.csv (deterministic) and
    timings.csv (wall-clock, varies between runs)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg, "records": records}
    (out / RESULTS_FILE).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replication", "model", "status", "mspe", "coverage", "coverage_in_support",
                    "mean_half_width"])
        for r in records:
            w.writerow([r["replication"], r["model"], r["status"], _fmt(r["mspe"]), _fmt(r["coverage"]),
                        _fmt(r["coverage_in_support"]), _fmt(r["mean_half_width"])])
    with open(out / "points.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replication", "model", "point", "x", "y", "mean", "lower", "upper"])
        for r in records:
            pts = r["points"]
            if not pts:
                continue
            for i, yv in enumerate(pts["y"]):
                xv = pts["x"][i] if "x" in pts else pts.get("index", [""] * len(pts["y"]))[i]
                lo = pts["lower"][i] if "lower" in pts else None
                hi = pts["upper"][i] if "upper" in pts else None
                w.writerow([r["replication"], r["model"], i, _fmt(xv), _fmt(yv), _fmt(pts["mean"][i]),
                            _fmt(lo), _fmt(hi)])
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replication", "model", "seconds"])
        for rep, model, sec in timings:
            w.writerow([rep, model, f"{sec:.3f}"])
    return out / RESULTS_FILE


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def load_results(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


SUMMARY_METRICS = ("mspe", "coverage", "coverage_in_support")
QUANTILES = (("min", 0.0), ("q1", 0.25), ("median", 0.5), ("q3", 0.75), ("max", 1.0))


def summarize(records) -> list[dict]:
    """Five-number summaries (linear-interpolated quantiles) per model and
    metric over successful records."""
    records = list(records)
    if not records:
        raise ConfigError("no records to summarize")
    rows = []
    models = list(dict.fromkeys(r["model"] for r in records))
    for model in models:
        ok = [r for r in records if r["model"] == model and r["status"] == "ok"]
        for metric in SUMMARY_METRICS:
            vals = np.array([r[metric] for r in ok if r.get(metric) is not None], dtype=float)
            if vals.size == 0:
                continue
            row = {"model": model, "metric": metric, "count": int(vals.size)}
            for name, q in QUANTILES:
                row[name] = float(np.quantile(vals, q))
            rows.append(row)
    return rows


def write_summary(rows, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fields = ["model", "metric", "count"] + [n for n, _ in QUANTILES]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    (out / "summary.json").write_text(json.dumps({"schema_version": SCHEMA_VERSION, "summary": rows},
                                                 indent=1), encoding="utf-8")
