"""Synthetic generators, label noise, file ingestion and preprocessing.

All randomness goes through ``numpy.random.Generator`` backed by PCG64, so a
given ``(parameters, seed)`` pair produces the same dataset on every
platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Dataset

__all__ = [
    "ParseError",
    "LabelError",
    "DataConfig",
    "ANCHOR_POINTS",
    "ANCHOR_W_STAR",
    "rng_for",
    "gen_support_anchor",
    "gen_gaussian_blobs",
    "flip_labels",
    "load_file",
    "save_csv",
    "Standardizer",
    "standardize",
    "split",
    "build_dataset",
]

# Two positive support vectors and their mirror images. The negative pair is
# taken symmetric to the positive one: (-1/2, -3/2) and (-3/2, -1/2).
ANCHOR_POINTS = np.array([[0.5, 1.5], [1.5, 0.5], [-0.5, -1.5], [-1.5, -0.5]])
ANCHOR_LABELS = np.array([1, 1, -1, -1])
ANCHOR_W_STAR = np.array([0.5, 0.5])

FILLER_BOX = 3.0
FILLER_BUFFER = 0.1


class ParseError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


class LabelError(ValueError):
    pass


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_support_anchor(n_total: int = 80, seed: int = 0) -> Dataset:
    """The four anchor support vectors plus fillers farther from the separator.

    Each filler ``z`` of class ``y`` is drawn uniformly from ``[-3, 3]^2`` and
    kept only if ``y <w*, z> >= 1.1`` with ``w* = (1/2, 1/2)``, so the anchor
    solution stays the unique min-norm separator.
    """
    if n_total < 4:
        raise ValueError("n_total must be at least 4")
    rng = rng_for(seed)
    n_fill = n_total - 4
    n_pos = (n_fill + 1) // 2
    pts, labs = [ANCHOR_POINTS], [ANCHOR_LABELS]
    for y, count in ((1, n_pos), (-1, n_fill - n_pos)):
        got = []
        while len(got) < count:
            z = rng.uniform(-FILLER_BOX, FILLER_BOX, size=2)
            if y * (z @ ANCHOR_W_STAR) >= 1.0 + FILLER_BUFFER:
                got.append(z)
        if got:
            pts.append(np.array(got))
            labs.append(np.full(count, y))
    return Dataset(np.vstack(pts), np.concatenate(labs))


def gen_gaussian_blobs(n_total: int = 1200, std: float = 0.4, seed: int = 0) -> Dataset:
    """Two isotropic Gaussian classes centred at ``+-(1/2, 1/2)``."""
    if n_total % 2:
        raise ValueError("n_total must be even")
    if std < 0:
        raise ValueError("std must be non-negative")
    rng = rng_for(seed)
    half = n_total // 2
    center = np.array([0.5, 0.5])
    pos = center + std * rng.standard_normal((half, 2))
    neg = -center + std * rng.standard_normal((half, 2))
    labels = np.concatenate([np.ones(half), -np.ones(half)])
    return Dataset(np.vstack([pos, neg]), labels)


def flip_labels(dataset: Dataset, p: float, seed: int = 0) -> Dataset:
    """Negate exactly ``round(p * n)`` labels chosen without replacement."""
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    k = int(round(p * dataset.n))
    if k == 0:
        return dataset
    idx = rng_for(seed).choice(dataset.n, size=k, replace=False)
    labels = dataset.labels.copy()
    labels[idx] *= -1
    return Dataset(dataset.points, labels)


def _map_labels(raw, path):
    values = sorted(set(raw))
    if len(values) != 2:
        raise LabelError(f"{path}: expected two distinct labels, found {values[:5]}")
    lo = values[0]
    return np.array([-1 if v == lo else 1 for v in raw])


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_file(path, format: str = "csv") -> Dataset:
    """Read a CSV (label in the last column) or LIBSVM file.

    Labels may be any two distinct numbers; the smaller maps to -1 and the
    larger to +1. A CSV first line that does not parse as numbers is treated
    as a header.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if format == "csv":
        rows, raw = [], []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            toks = [t.strip() for t in line.split(",")]
            if lineno == 1 and not all(_is_number(t) for t in toks):
                continue
            try:
                vals = [float(t) for t in toks]
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric field in {line!r}") from None
            if len(vals) < 2:
                raise ParseError(path, lineno, "need at least one feature and a label")
            if rows and len(vals) - 1 != len(rows[0]):
                raise ParseError(path, lineno, "inconsistent number of columns")
            rows.append(vals[:-1])
            raw.append(vals[-1])
        if not rows:
            raise ParseError(path, 0, "no data rows")
        return Dataset(np.array(rows), _map_labels(raw, path))
    if format == "libsvm":
        entries, raw, dim = [], [], 0
        for lineno, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            try:
                raw.append(float(toks[0]))
                feats = {}
                for tok in toks[1:]:
                    idx, val = tok.split(":")
                    idx = int(idx)
                    if idx < 1:
                        raise ValueError
                    feats[idx] = float(val)
            except ValueError:
                raise ParseError(path, lineno, f"malformed LIBSVM line {line!r}") from None
            if feats:
                dim = max(dim, max(feats))
            entries.append(feats)
        if not entries:
            raise ParseError(path, 0, "no data rows")
        x = np.zeros((len(entries), dim))
        for i, feats in enumerate(entries):
            for idx, val in feats.items():
                x[i, idx - 1] = val
        return Dataset(x, _map_labels(raw, path))
    raise ValueError(f"unknown format {format!r}")


def save_csv(dataset: Dataset, path) -> None:
    """Write one ``x_1,...,x_d,label`` line per point (shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y in zip(dataset.points, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in x) + f",{int(y)}\n")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, dataset: Dataset) -> Dataset:
        if dataset.n == 0:
            return dataset
        return Dataset((dataset.points - self.mean) / self.scale, dataset.labels)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}


def standardize(train: Dataset, test: Dataset):
    """Zero mean / unit std per feature, fitted on ``train`` only.

    Constant features get divisor 1.
    """
    if train.n == 0:
        raise ValueError("cannot standardize on an empty training set")
    mean = train.points.mean(axis=0)
    std = train.points.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    tr = Standardizer(mean, std)
    return tr.apply(train), tr.apply(test), tr


def split(dataset: Dataset, fraction: float, seed: int = 0):
    """Seeded shuffle; the first ``ceil(fraction * n)`` points go to train."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    perm = rng_for(seed).permutation(dataset.n)
    k = math.ceil(fraction * dataset.n - 1e-12)
    return dataset.subset(np.sort(perm[:k])), dataset.subset(np.sort(perm[k:]))


@dataclass(frozen=True)
class DataConfig:
    source: str = "support_anchor"  # support_anchor | gaussian_blobs | file
    n_total: int = 80
    std: float = 0.4
    path: str | None = None
    format: str = "csv"
    noise_p: float = 0.0
    split: float = 1.0
    standardize: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.source not in ("support_anchor", "gaussian_blobs", "file"):
            raise ValueError(f"unknown data source {self.source!r}")
        if self.source == "file" and not self.path:
            raise ValueError("file source needs a path")
        if not 0 <= self.noise_p < 1:
            raise ValueError("noise_p must lie in [0, 1)")
        if not 0 < self.split <= 1:
            raise ValueError("split must lie in (0, 1]")


def build_dataset(cfg: DataConfig):
    """Generate or load, split, flip training labels, standardize.

    Returns ``(train, test, standardizer_or_None)``. Label noise only touches
    the training part.
    """
    if cfg.source == "support_anchor":
        full = gen_support_anchor(cfg.n_total, cfg.seed)
    elif cfg.source == "gaussian_blobs":
        full = gen_gaussian_blobs(cfg.n_total, cfg.std, cfg.seed)
    else:
        full = load_file(cfg.path, cfg.format)
    train, test = split(full, cfg.split, cfg.seed + 1)
    train = flip_labels(train, cfg.noise_p, cfg.seed + 2)
    tr = None
    if cfg.standardize:
        train, test, tr = standardize(train, test)
    return train, test, tr
