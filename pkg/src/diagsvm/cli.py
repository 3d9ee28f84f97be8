"""Command line entry point.

Exit codes: 0 success, 2 config error, 3 oracle failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .data import DataConfig, build_dataset, save_csv
from .experiment import (
    ConfigError,
    apply_overrides,
    compute_oracle,
    load_config,
    run_comparison,
    run_experiment,
)
from .model import Dataset
from .oracle import IterationCapExceeded, NonSeparable

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE, EXIT_IO = 0, 2, 3, 4

CONFIG_HELP = """\
config keys (YAML):
  seed            integer, default 0; also the default data seed
  data.source     support_anchor | gaussian_blobs | file
  data.n_total    number of generated points (support_anchor: 80, blobs: even)
  data.std        blob standard deviation (default 0.4)
  data.path       input file when source=file (relative to the config file)
  data.format     csv (label last) | libsvm
  data.noise_p    fraction of training labels flipped, in [0, 1)
  data.split      training fraction in (0, 1]; the rest is the test set
  data.standardize  true to z-score features using training statistics
  data.seed       overrides seed for data generation
  kernel.type     linear | gaussian
  kernel.sigma2   Gaussian bandwidth: k(x, z) = exp(-|x - z|^2 / (2 sigma2))
  schedule.family constant | log | sqrt | linear | quadratic | exponential
  schedule.lambda0  initial regularization; lambda_t = lambda0 / g(t)
  gamma           auto (0.999 / |Q|_op) or a positive number <= 1/|Q|_op
  iterations      T >= 1; every trace has T + 1 rows
  compute_oracle  true to solve the max-margin problem and fill gap columns
  output_dir      directory for traces and summary.json
  algorithms      list of names or mappings with a 'name' key:
                    alg1
                    {name: alg2, alpha: 10}
                    {name: tikhonov_path, lambdas: [1, 0.1]}
                    {name: gd_margin, loss: logistic|exponential, gamma: g}
                    {name: subgrad_hinge, gamma: g, rule: constant|inv_sqrt,
                     w0: [..] | w0_angle_deg: a, w0_margin: m}
                  any entry may set 'label' to name its output file
  grid            mapping dotted key -> list of values; every combination runs

--set key.sub=value overrides a config key (value parsed as YAML).
Log level comes from the DIAGSVM_LOG_LEVEL environment variable.
"""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="diagsvm",
        description="Diagonal regularization solvers for max-margin classification.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run every algorithm and write traces plus summary.json"),
        ("compare", "as run, plus a wide comparison.csv keyed by t"),
        ("oracle", "print the max-margin solution and certificate as JSON"),
    ):
        sp = sub.add_parser(name, help=help_, epilog=CONFIG_HELP,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("config", type=Path)
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE")
        if name != "oracle":
            sp.add_argument("--output-dir", type=Path)
    sp = sub.add_parser("gen", help="generate a dataset and write it as CSV")
    sp.add_argument("data_config", type=Path,
                    help="YAML with the data.* keys (top level or under 'data')")
    sp.add_argument("out", type=Path)
    sp.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE")
    sp.add_argument("--part", choices=("train", "test", "all"), default="all",
                    help="which part of the split to write (default: all)")
    return p


def _load(args):
    cfg = load_config(args.config, args.overrides)
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = args.output_dir
        cfg.raw["output_dir"] = str(args.output_dir)
    return cfg


def _cmd_run(args, compare=False):
    cfg = _load(args)
    summary = (run_comparison if compare else run_experiment)(cfg)
    for name in summary["runs"]:
        print(Path(cfg.output_dir) / summary["runs"][name]["file"])
    return EXIT_OK


def _cmd_oracle(args):
    cfg = _load(args)
    train, _, _ = build_dataset(cfg.data)
    sol = compute_oracle(train, cfg.kernel)
    print(json.dumps(sol.to_dict(), indent=2))
    return EXIT_OK


def _cmd_gen(args):
    try:
        raw = yaml.safe_load(args.data_config.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(str(exc)) from exc
    raw = apply_overrides(raw, args.overrides)
    if "data" in raw:
        data = dict(raw["data"] or {})
        data.setdefault("seed", raw.get("seed", 0))
    else:
        data = raw
    try:
        cfg = DataConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    train, test, _ = build_dataset(cfg)
    if args.part == "train":
        ds = train
    elif args.part == "test":
        ds = test
    else:
        ds = Dataset(np.vstack([train.points, test.points]),
                     np.concatenate([train.labels, test.labels]))
    save_csv(ds, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("DIAGSVM_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_run(args, compare=True)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_gen(args)
    except (NonSeparable, IterationCapExceeded) as exc:
        print(f"diagsvm: oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except OSError as exc:
        print(f"diagsvm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"diagsvm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
