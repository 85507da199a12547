"""Command-line entry point: ``vbnet run | summarize | gen-data``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
failure in every replication.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import config as config_mod
from . import data as data_mod
from . import experiment
from .errors import ConfigError, DataError
from .ndcore import RngState

OUT_DIR_ENV = "VBNET_OUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("vbnet")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vbnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a replicated experiment")
    run.add_argument("--config", help="YAML config file")
    run.add_argument("--experiment", choices=config_mod.EXPERIMENTS)
    run.add_argument("--scenario", choices=config_mod.SCENARIOS)
    run.add_argument("--models", help="comma-separated subset of svar,fixed,nnet")
    run.add_argument("--replications", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--steps", type=int, help="training steps (trainer.steps)")
    run.add_argument("--data", help="riboflavin data file (riboflavin.path)")
    run.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./results)")

    summ = sub.add_parser("summarize", help="five-number summaries of a results file")
    summ.add_argument("results", help="results.json written by 'run'")
    summ.add_argument("--out-dir", help="where to write summary.csv/json (default: alongside results)")

    gen = sub.add_parser("gen-data", help="write a synthetic curve dataset as CSV")
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=data_mod.N_TRAIN_CURVE)
    gen.add_argument("--support", type=float, nargs=2, default=list(data_mod.TRAIN_SUPPORT))
    gen.add_argument("--noise", type=float, default=data_mod.CURVE_NOISE)
    gen.add_argument("--noise-is-sd", action="store_true", help="treat --noise as a standard deviation")
    gen.add_argument("--seed", type=int, default=0)
    return p


def _flag_overrides(args) -> dict:
    o = {}
    for key in ("experiment", "scenario", "models", "replications", "seed", "workers"):
        val = getattr(args, key)
        if val is not None:
            o[key] = val
    if args.steps is not None:
        o["trainer"] = {"steps": args.steps}
    if args.data is not None:
        o["riboflavin"] = {"path": args.data}
    return o


def _out_dir(args, default="results") -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or default)


def cmd_run(args) -> int:
    file_cfg = config_mod.load_config_file(args.config) if args.config else {}
    cfg = config_mod.resolve(file_cfg, _flag_overrides(args))
    out = _out_dir(args)
    records, timings = experiment.run_experiment(cfg)
    path = experiment.write_results(cfg, records, timings, out)
    rows = experiment.summarize(records)
    experiment.write_summary(rows, out)
    for row in rows:
        print(f"{row['model']:>6} {row['metric']:<20} median={row['median']:.4f} "
              f"[{row['min']:.4f}, {row['max']:.4f}] n={row['count']}")
    print(f"wrote {path}")
    failed = sorted({r["replication"] for r in records if r["status"] != "ok"})
    if records and all(r["status"] != "ok" for r in records):
        return EXIT_NUMERICAL
    if failed:
        log.warning("numerical failures in replications %s", failed)
    return EXIT_OK


def cmd_summarize(args) -> int:
    path = Path(args.results)
    if not path.is_file():
        raise DataError(f"no such results file: {path}")
    doc = experiment.load_results(path)
    rows = experiment.summarize(doc.get("records", []))
    experiment.write_summary(rows, Path(args.out_dir) if args.out_dir else path.parent)
    for row in rows:
        print(",".join(str(row[k]) for k in ("model", "metric", "count", "min", "q1", "median", "q3", "max")))
    return EXIT_OK


def cmd_gen_data(args) -> int:
    ds = data_mod.gen_curve(args.n, args.support, RngState(args.seed), args.noise,
                            noise_is_variance=not args.noise_is_sd)
    data_mod.save_delimited(ds, args.out)
    print(f"wrote {args.n} rows to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "summarize": cmd_summarize, "gen-data": cmd_gen_data}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
