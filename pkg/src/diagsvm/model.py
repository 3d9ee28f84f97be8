"""Core data types, signed Gram matrices and the dual objectives.

Every dual solver in the package only ever touches the signed Gram matrix
``Q[i, j] = y_i y_j K(x_i, x_j)``; with the linear kernel this is
``Xs @ Xs.T`` where ``Xs`` stacks the signed rows ``y_i x_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "Kernel",
    "SignedGram",
    "signed_matrix",
    "gram",
    "operator_norm",
    "dual_objective_t",
    "dual_objective_inf",
    "dual_to_primal",
    "decision_function",
    "predict",
    "classify",
]

BOX_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Labelled points ``(x_i, y_i)`` with ``y_i`` in ``{-1, +1}``."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must form an (n, d) array")
        labels = np.asarray(self.labels, dtype=float).ravel()
        if labels.shape[0] != points.shape[0]:
            raise ValueError(
                f"{points.shape[0]} points but {labels.shape[0]} labels"
            )
        if labels.size and not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "points", _frozen(points))
        lab = np.array(labels, dtype=np.int64)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.points[idx], self.labels[idx])

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class Kernel:
    """Linear kernel or Gaussian kernel ``exp(-|x - x'|^2 / (2 sigma2))``."""

    kind: str = "linear"
    sigma2: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "gaussian":
            if self.sigma2 is None or not self.sigma2 > 0:
                raise ValueError("gaussian kernel needs sigma2 > 0")
            object.__setattr__(self, "sigma2", float(self.sigma2))

    @classmethod
    def linear(cls) -> "Kernel":
        return cls("linear")

    @classmethod
    def gaussian(cls, sigma2: float) -> "Kernel":
        return cls("gaussian", sigma2)

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel matrix between the rows of ``a`` and the rows of ``b``."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ValueError(
                f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
            )
        if self.kind == "linear":
            return a @ b.T
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.sigma2))

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"type": "linear"}
        return {"type": "gaussian", "sigma2": self.sigma2}


@dataclass(frozen=True)
class SignedGram:
    """Signed Gram matrix with a cached spectral-norm estimate."""

    q: np.ndarray
    op_norm: float = field(default=float("nan"))

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("signed Gram matrix must be square")
        object.__setattr__(self, "q", _frozen(q))
        if math.isnan(self.op_norm):
            object.__setattr__(self, "op_norm", operator_norm(self.q))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def default_step(self, safety: float = 0.999) -> float:
        if self.op_norm <= 0:
            raise ValueError("zero operator norm: cannot pick a step size")
        return safety / self.op_norm


def signed_matrix(dataset: Dataset) -> np.ndarray:
    """Rows ``y_i * x_i``."""
    out = dataset.labels[:, None] * dataset.points
    out.setflags(write=False)
    return out


def gram(dataset: Dataset, kernel: Kernel | None = None) -> SignedGram:
    kernel = kernel or Kernel.linear()
    if kernel.is_linear:
        xs = signed_matrix(dataset)
        q = xs @ xs.T
    else:
        y = dataset.labels.astype(float)
        q = np.outer(y, y) * kernel(dataset.points, dataset.points)
    # Exact symmetry; the two triangles can differ in the last ulp.
    q = 0.5 * (q + q.T)
    return SignedGram(q)


def _power_iteration(q, v, max_iter, rtol):
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return 0.0
    v = v / nrm
    rq = 0.0
    for _ in range(max_iter):
        qv = q @ v
        new_rq = float(v @ qv)
        nrm = np.linalg.norm(qv)
        if nrm == 0.0:
            return 0.0
        v = qv / nrm
        if abs(new_rq - rq) <= rtol * abs(new_rq):
            return new_rq
        rq = new_rq
    return rq


def operator_norm(q: np.ndarray, max_iter: int = 20000, rtol: float = 1e-15) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    The start vector is the normalized all-ones vector. Since that vector can
    be orthogonal to the leading eigenvector (e.g. ``[[1, -1], [-1, 1]]``), a
    second run from a fixed pseudo-random vector is made and the larger
    Rayleigh quotient kept.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if n == 0 or not np.any(q):
        return 0.0
    est = _power_iteration(q, np.ones(n), max_iter, rtol)
    alt = np.random.default_rng(0).standard_normal(n)
    est = max(est, _power_iteration(q, alt, max_iter, rtol))
    return float(est)


def dual_objective_inf(u: np.ndarray, g: SignedGram) -> float:
    """Dual of the min-norm problem: ``u'Qu/2 + sum(u)`` on ``u <= 0``."""
    u = np.asarray(u, dtype=float)
    if np.any(u > BOX_TOL):
        return math.inf
    return float(0.5 * u @ (g.q @ u) + u.sum())


def dual_objective_t(u: np.ndarray, lam: float, g: SignedGram) -> float:
    """Dual of the hinge problem penalized with ``lam``; ``inf`` off the box."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    u = np.asarray(u, dtype=float)
    lo = -1.0 / lam
    if np.any(u > BOX_TOL) or np.any(u < lo - BOX_TOL * max(1.0, abs(lo))):
        return math.inf
    return float(0.5 * u @ (g.q @ u) + u.sum())


def dual_to_primal(u: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """``w = -Xs' u``."""
    u = np.asarray(u, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if u.shape != (xs.shape[0],):
        raise ValueError(f"u has shape {u.shape}, expected ({xs.shape[0]},)")
    return -(xs.T @ u)


def decision_function(u, dataset: Dataset, kernel: Kernel, x) -> np.ndarray:
    """Scores ``-sum_i u_i y_i K(x_i, x)`` for each row of ``x``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (dataset.n,):
        raise ValueError("dual point does not match the training set")
    k = kernel(dataset.points, x)
    return -((u * dataset.labels) @ k)


def predict(u, dataset: Dataset, kernel: Kernel, x) -> float:
    """Score of a single point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict takes a single point; use decision_function")
    return float(decision_function(u, dataset, kernel, x[None, :])[0])


def classify(scores) -> np.ndarray:
    """Sign with ties sent to +1."""
    return np.where(np.asarray(scores) >= 0, 1, -1)
