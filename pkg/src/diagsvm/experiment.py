"""Experiment configuration and runners behind the command line.

A config is a YAML mapping::

    seed: 0
    data: {source: support_anchor, n_total: 80}
    kernel: {type: linear}            # or {type: gaussian, sigma2: 0.15}
    schedule: {family: linear, lambda0: 4.0}
    gamma: auto
    iterations: 1000
    algorithms: [alg1, {name: alg2, alpha: 10}]
    compute_oracle: true
    output_dir: out
    grid: {schedule.lambda0: [0.01, 10, 100], data.noise_p: [0, 0.1, 0.2]}

``grid`` is optional; every combination of its values (in the order the keys
are listed) is run with every algorithm.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baselines import gd_margin_loss, separating_start, subgrad_hinge
from .data import DataConfig, build_dataset
from .metrics import (
    TRACE_COLUMNS,
    DegenerateIterate,
    MetricRow,
    angle_gap,
    margin,
    margin_gap,
)
from .model import Kernel, classify, dual_objective_t, gram, signed_matrix
from .oracle import solve_max_margin_gram
from .solvers import Schedule, SolverConfig, run, solve_tikhonov_dual

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "AlgorithmSpec",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_overrides",
    "format_value",
    "trace_csv",
    "run_experiment",
    "run_comparison",
    "compute_oracle",
]

ALGORITHMS = ("alg1", "alg2", "tikhonov_path", "gd_margin", "subgrad_hinge")

DEFAULTS = {
    "seed": 0,
    "data": {},
    "kernel": {"type": "linear"},
    "schedule": {"family": "linear", "lambda0": 1.0},
    "gamma": "auto",
    "iterations": 1000,
    "algorithms": ["alg1"],
    "compute_oracle": True,
    "output_dir": "out",
    "grid": {},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    label: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    data: DataConfig
    kernel: Kernel
    algorithms: list
    schedule: Schedule
    gamma: float | None
    iterations: int
    output_dir: Path
    compute_oracle: bool
    seed: int
    grid: dict
    raw: dict  # normalized mapping the config was built from


def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        if not isinstance(cur.get(p), dict):
            cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, val = item.split("=", 1)
        _set_dotted(raw, key.strip(), yaml.safe_load(val))
    return raw


def _algorithm_specs(entries) -> list:
    if not entries:
        raise ConfigError("at least one algorithm is required")
    specs, seen = [], {}
    for entry in entries:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"bad algorithm entry {entry!r}")
        params = dict(entry)
        name = params.pop("name")
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        label = params.pop("label", None)
        if label is None:
            label = name
            if name == "alg2":
                label = f"alg2_alpha{format_value(float(params.get('alpha', 3.0)))}"
            elif name == "gd_margin":
                label = f"gd_margin_{params.get('loss', 'logistic')}"
        count = seen.get(label, 0) + 1
        seen[label] = count
        if count > 1:
            label = f"{label}_{count}"
        if name == "alg2" and float(params.get("alpha", 3.0)) < 3:
            raise ConfigError("alg2 needs alpha >= 3")
        specs.append(AlgorithmSpec(name, label, params))
    return specs


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = copy.deepcopy(DEFAULTS)
    merged.update(copy.deepcopy(raw))
    try:
        seed = int(merged["seed"])
        data_raw = dict(merged["data"] or {})
        data_raw.setdefault("seed", seed)
        if data_raw.get("path") and base_dir is not None:
            p = Path(data_raw["path"])
            if not p.is_absolute():
                data_raw["path"] = str(base_dir / p)
                merged["data"]["path"] = data_raw["path"]
        data = DataConfig(**data_raw)
        kraw = dict(merged["kernel"] or {"type": "linear"})
        kernel = Kernel(kraw.pop("type", "linear"), kraw.pop("sigma2", None))
        if kraw:
            raise ConfigError(f"unknown kernel keys {sorted(kraw)}")
        schedule = Schedule(**merged["schedule"])
        gamma = merged["gamma"]
        gamma = None if gamma in (None, "auto") else float(gamma)
        iterations = int(merged["iterations"])
        if iterations < 1:
            raise ConfigError("iterations must be >= 1")
        algorithms = _algorithm_specs(merged["algorithms"])
        grid = dict(merged["grid"] or {})
        for key, vals in grid.items():
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"grid entry {key!r} must be a non-empty list")
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        data=data,
        kernel=kernel,
        algorithms=algorithms,
        schedule=schedule,
        gamma=gamma,
        iterations=iterations,
        output_dir=Path(merged["output_dir"]),
        compute_oracle=bool(merged["compute_oracle"]),
        seed=seed,
        grid=grid,
        raw=merged,
    )


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = apply_overrides(raw, overrides)
    return parse_config(raw, base_dir=path.parent)


def format_value(v) -> str:
    """Shortest round-trip decimal; ``None`` becomes an empty field."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in rows:
        writer.writerow([format_value(v) for v in r.as_tuple()])
    return buf.getvalue()


def _grid_points(cfg: ExperimentConfig):
    if not cfg.grid:
        yield "", cfg
        return
    keys = list(cfg.grid)
    for combo in itertools.product(*(cfg.grid[k] for k in keys)):
        raw = copy.deepcopy(cfg.raw)
        raw["grid"] = {}
        for k, v in zip(keys, combo):
            _set_dotted(raw, k, v)
        suffix = "__" + "_".join(
            f"{k.split('.')[-1]}={format_value(v) if isinstance(v, (int, float)) else v}"
            for k, v in zip(keys, combo)
        )
        sub = parse_config(raw)
        sub.output_dir = cfg.output_dir
        yield suffix, sub


def compute_oracle(train, kernel):
    g = gram(train, kernel)
    xs = signed_matrix(train) if kernel.is_linear else None
    return solve_max_margin_gram(g, xs)


def _primal_rows(trace, xs, sol, test):
    rows = []
    for t, w in enumerate(trace.ws):
        row = MetricRow(t=t, margin=margin(w, xs))
        if sol is not None:
            row.norm_error = float(np.linalg.norm(w - sol.w_star))
            try:
                row.margin_gap = margin_gap(w, sol, xs)
                row.angle_gap = angle_gap(w, sol)
            except DegenerateIterate:
                pass
        if test is not None and test.n > 0:
            row.test_error = float(np.mean(classify(test.points @ w) != test.labels))
        rows.append(row)
    return rows


def _tikhonov_rows(train, kernel, spec, sol, test, gamma):
    g = gram(train, kernel)
    xs = signed_matrix(train) if kernel.is_linear else None
    lambdas = spec.params.get("lambdas", [1.0, 0.1, 0.01, 0.001])
    tol = float(spec.params.get("tol", 1e-10))
    max_iter = int(spec.params.get("max_iter", 1_000_000))
    k_test = None if test is None or test.n == 0 else kernel(train.points, test.points)
    rows = []
    for k, lam in enumerate(lambdas):
        res = solve_tikhonov_dual(g, xs, float(lam), gamma, tol, max_iter)
        u = res.u
        qu = g.q @ u
        dual_obj = dual_objective_t(u, float(lam), g)
        row = MetricRow(t=k, lambda_t=float(lam), dual_obj=dual_obj,
                        margin=float(np.min(-qu)))
        if sol is not None:
            diff = u - sol.u_star
            row.dual_gap = dual_obj - sol.dual_value
            row.norm_error = math.sqrt(max(float(diff @ (g.q @ diff)), 0.0))
            nrm = math.sqrt(max(float(u @ qu), 0.0))
            if nrm > 1e-12:
                row.margin_gap = sol.margin_at_w_star / sol.norm_w_star - row.margin / nrm
                cos = float(qu @ sol.u_star) / (nrm * sol.norm_w_star)
                row.angle_gap = 1.0 - min(1.0, max(-1.0, cos))
        if k_test is not None:
            pred = classify(-((u * train.labels) @ k_test))
            row.test_error = float(np.mean(pred != test.labels))
        rows.append(row)
    return rows


def _run_one(spec, cfg, train, test, sol, g):
    kernel = cfg.kernel
    if spec.name in ("alg1", "alg2"):
        scfg = SolverConfig(
            schedule=cfg.schedule,
            iterations=cfg.iterations,
            gamma=cfg.gamma,
            alpha=float(spec.params.get("alpha", 3.0)),
        )
        tr = run(train, kernel, scfg, spec.name, oracle=sol, test_set=test, g=g)
        return tr.rows, {"gamma": tr.gamma}
    if spec.name == "tikhonov_path":
        gamma = cfg.gamma if cfg.gamma is not None else g.default_step()
        return _tikhonov_rows(train, kernel, spec, sol, test, gamma), {"gamma": gamma}
    if not kernel.is_linear:
        raise ConfigError(f"{spec.name} only supports the linear kernel")
    xs = signed_matrix(train)
    if spec.name == "gd_margin":
        gamma = float(spec.params.get("gamma", 0.1 / g.op_norm))
        tr = gd_margin_loss(train, spec.params.get("loss", "logistic"), gamma,
                            cfg.iterations, spec.params.get("w0"))
        return _primal_rows(tr, xs, sol, test), {"gamma": gamma}
    gamma = float(spec.params.get("gamma", 0.01 / g.op_norm))
    w0 = spec.params.get("w0")
    if w0 is None and "w0_angle_deg" in spec.params:
        ang = math.radians(float(spec.params["w0_angle_deg"]))
        w0 = separating_start(train, [math.cos(ang), math.sin(ang)],
                              float(spec.params.get("w0_margin", 2.0)))
    tr = subgrad_hinge(train, cfg.iterations, gamma,
                       spec.params.get("rule", "constant"), w0)
    return _primal_rows(tr, xs, sol, test), {"gamma": gamma}


def _row_dict(row):
    return {k: v for k, v in zip(TRACE_COLUMNS, row.as_tuple())}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _execute(cfg: ExperimentConfig):
    """Run every (grid point, algorithm) pair; returns (results, summary)."""
    start = time.perf_counter()
    results = {}
    summary = {"seed": cfg.seed, "config": cfg.raw, "grid_points": {}, "runs": {}}
    for suffix, sub in _grid_points(cfg):
        train, test, tr = build_dataset(sub.data)
        g = gram(train, sub.kernel)
        sol = None
        if sub.compute_oracle:
            sol = compute_oracle(train, sub.kernel)
        summary["grid_points"][suffix or "default"] = {
            "n_train": train.n,
            "n_test": test.n,
            "op_norm": g.op_norm,
            "gamma": sub.gamma if sub.gamma is not None else g.default_step(),
            "oracle": None if sol is None else sol.to_dict(),
            "standardizer": None if tr is None else tr.to_dict(),
        }
        for spec in sub.algorithms:
            name = f"{spec.label}{suffix}"
            t0 = time.perf_counter()
            rows, info = _run_one(spec, sub, train, test if test.n else None, sol, g)
            results[name] = rows
            summary["runs"][name] = {
                "algorithm": spec.name,
                "params": spec.params,
                "gamma": info["gamma"],
                "rows": len(rows),
                "terminal": _row_dict(rows[-1]),
                "wall_time": time.perf_counter() - t0,
            }
            log.info("%s: %d rows", name, len(rows))
    summary["wall_time"] = time.perf_counter() - start
    return results, summary


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Write ``<name>_trace.csv`` per run plus ``summary.json``."""
    results, summary = _execute(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in results.items():
        _write(out / f"{name}_trace.csv", trace_csv(rows))
        summary["runs"][name]["file"] = f"{name}_trace.csv"
    _write(out / "summary.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return summary


def run_comparison(cfg: ExperimentConfig, metrics=("margin_gap", "test_error")) -> dict:
    """Like ``run_experiment`` plus ``comparison.csv``: one row per ``t``, one
    column per (run, metric)."""
    summary = run_experiment(cfg)
    out = Path(cfg.output_dir)
    names = list(summary["runs"])
    tables = {}
    for name in names:
        with open(out / summary["runs"][name]["file"], encoding="utf-8") as fh:
            tables[name] = list(csv.DictReader(fh))
    length = max(len(t) for t in tables.values())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"{n}:{m}" for n in names for m in metrics])
    for t in range(length):
        line = [str(t)]
        for n in names:
            rows = tables[n]
            for m in metrics:
                line.append(rows[t][m] if t < len(rows) else "")
        writer.writerow(line)
    _write(out / "comparison.csv", buf.getvalue())
    summary["comparison_file"] = "comparison.csv"
    return summary
