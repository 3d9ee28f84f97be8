"""Comparison methods: primal gradient descent on margin losses, subgradient
descent on the hinge sum, and gradient descent for least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset, signed_matrix

__all__ = [
    "MarginLoss",
    "PrimalTrace",
    "gd_margin_loss",
    "hinge_subgradient",
    "subgrad_hinge",
    "gd_least_squares",
    "separating_start",
]

EXP_CLIP = -700.0


@dataclass(frozen=True)
class MarginLoss:
    """``exponential``: ``exp(-a)``; ``logistic``: ``log(1 + exp(-a))``;
    ``hinge``: ``max(0, 1 - a)`` (subgradient only)."""

    variant: str

    def __post_init__(self):
        if self.variant not in ("exponential", "logistic", "hinge"):
            raise ValueError(f"unknown loss {self.variant!r}")

    def value(self, a):
        a = np.asarray(a, dtype=float)
        if self.variant == "exponential":
            return np.exp(-np.maximum(a, EXP_CLIP))
        if self.variant == "logistic":
            return np.logaddexp(0.0, -a)
        return np.maximum(1.0 - a, 0.0)

    def derivative(self, a):
        """Derivative; for the hinge, the subgradient with 0 at the kink."""
        a = np.asarray(a, dtype=float)
        if self.variant == "exponential":
            return -np.exp(-np.maximum(a, EXP_CLIP))
        if self.variant == "logistic":
            # -1 / (1 + e^a), written to avoid overflow for large |a|
            return -np.exp(-np.logaddexp(0.0, a))
        return hinge_subgradient(a)


def hinge_subgradient(a):
    return np.where(np.asarray(a, dtype=float) < 1.0, -1.0, 0.0)


@dataclass
class PrimalTrace:
    ws: np.ndarray  # (T+1, d)
    margins: np.ndarray  # min_i <w_t, x~_i>
    objective: np.ndarray | None = None

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.ws, axis=1)

    @property
    def directions(self) -> np.ndarray:
        nrm = self.norms
        out = np.zeros_like(self.ws)
        ok = nrm > 0
        out[ok] = self.ws[ok] / nrm[ok, None]
        return out


def _w0(w0, d):
    return np.zeros(d) if w0 is None else np.array(w0, dtype=float)


def gd_margin_loss(dataset: Dataset, loss: str, gamma: float, T: int, w0=None) -> PrimalTrace:
    """``w_{t+1} = w_t - gamma sum_i x~_i l'(<w_t, x~_i>)`` for a smooth loss.

    On separable data ``|w_t|`` diverges; only the direction converges.
    """
    ell = MarginLoss(loss)
    if ell.variant == "hinge":
        raise ValueError("use subgrad_hinge for the hinge loss")
    xs = signed_matrix(dataset)
    w = _w0(w0, dataset.d)
    ws = np.empty((T + 1, dataset.d))
    ws[0] = w
    for t in range(T):
        w = w - gamma * (xs.T @ ell.derivative(xs @ w))
        ws[t + 1] = w
    margins = np.min(ws @ xs.T, axis=1)
    obj = np.array([ell.value(xs @ wt).sum() for wt in ws])
    return PrimalTrace(ws, margins, obj)


def subgrad_hinge(dataset: Dataset, T: int, gamma: float = 1e-2,
                  rule: str = "constant", w0=None) -> PrimalTrace:
    """Subgradient descent on ``sum_i max(0, 1 - <w, x~_i>)``.

    ``rule="constant"`` uses ``gamma`` throughout; ``"inv_sqrt"`` uses
    ``gamma / sqrt(t + 1)``.
    """
    if rule not in ("constant", "inv_sqrt"):
        raise ValueError(f"unknown step rule {rule!r}")
    xs = signed_matrix(dataset)
    w = _w0(w0, dataset.d)
    ws = np.empty((T + 1, dataset.d))
    ws[0] = w
    for t in range(T):
        step = gamma if rule == "constant" else gamma / np.sqrt(t + 1.0)
        w = w - step * (xs.T @ hinge_subgradient(xs @ w))
        ws[t + 1] = w
    a = ws @ xs.T
    return PrimalTrace(ws, a.min(axis=1), np.maximum(1.0 - a, 0.0).sum(axis=1))


def gd_least_squares(X, y, gamma: float, T: int, w0=None) -> np.ndarray:
    """``w_{t+1} = w_t - gamma X'(X w_t - y)``; returns all iterates, shape (T+1, d)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    L = np.linalg.norm(X, 2) ** 2
    if gamma > 1.0 / L * (1 + 1e-12):
        raise ValueError(f"gamma={gamma} exceeds 1/|X'X|_op = {1.0 / L}")
    w = _w0(w0, X.shape[1])
    ws = np.empty((T + 1, X.shape[1]))
    ws[0] = w
    for t in range(T):
        w = w - gamma * (X.T @ (X @ w - y))
        ws[t + 1] = w
    return ws


def separating_start(dataset: Dataset, direction, target_margin: float = 2.0) -> np.ndarray:
    """Rescale ``direction`` so its margin on the data equals ``target_margin``.

    Useful as a separating but misdirected starting point for primal methods.
    """
    direction = np.asarray(direction, dtype=float)
    m = float(np.min(signed_matrix(dataset) @ direction))
    if m <= 0:
        raise ValueError("direction does not separate the data")
    return direction * (target_margin / m)
