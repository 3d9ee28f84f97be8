"""Scalar diagnostics for iterates: margins, gaps and the inertial energy.

Two flavours are provided. The primal functions take ``w`` and the signed
rows directly. The ``*_dual`` variants express the same quantities through a
dual point and the signed Gram matrix, which is all that is available for a
nonlinear kernel (``<w, w'> = u' Q u'`` and ``<w, x~_i> = -(Q u)_i``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .model import Dataset, Kernel, classify, decision_function

__all__ = [
    "DegenerateIterate",
    "MetricRow",
    "TRACE_COLUMNS",
    "margin",
    "margin_gap",
    "angle_gap",
    "direction_gap",
    "margin_dual",
    "margin_gap_dual",
    "angle_gap_dual",
    "norm_error_dual",
    "zero_one_error",
    "inertial_energy",
    "angle_margin_bounds",
]

EPS_NORM = 1e-12


class DegenerateIterate(ValueError):
    """Normalized quantity requested for an iterate with (near) zero norm."""


@dataclass
class MetricRow:
    t: int
    lambda_t: float | None = None
    dual_obj: float | None = None
    dual_gap: float | None = None
    norm_error: float | None = None
    margin: float | None = None
    margin_gap: float | None = None
    angle_gap: float | None = None
    test_error: float | None = None
    energy: float | None = None

    def as_tuple(self):
        return tuple(getattr(self, f.name) for f in fields(self))


TRACE_COLUMNS = tuple(f.name for f in fields(MetricRow))


def margin(w, xs) -> float:
    """Smallest functional margin ``min_i <w, x~_i>``."""
    return float(np.min(np.asarray(xs) @ np.asarray(w, dtype=float)))


def _check_norm(nrm, eps):
    if not nrm > eps:
        raise DegenerateIterate(f"iterate norm {nrm:.3e} is below {eps:.1e}")


def margin_gap(w, sol, xs, eps: float = EPS_NORM) -> float:
    """``M(w*/|w*|) - M(w/|w|)``."""
    w = np.asarray(w, dtype=float)
    nrm = float(np.linalg.norm(w))
    _check_norm(nrm, eps)
    best = margin(sol.w_star, xs) / sol.norm_w_star
    return best - margin(w, xs) / nrm


def angle_gap(w, sol, eps: float = EPS_NORM) -> float:
    """One minus the cosine between ``w`` and ``w*``; lies in ``[0, 2]``."""
    w = np.asarray(w, dtype=float)
    nrm = float(np.linalg.norm(w))
    _check_norm(nrm, eps)
    cos = float(w @ sol.w_star) / (nrm * sol.norm_w_star)
    return 1.0 - min(1.0, max(-1.0, cos))


def direction_gap(w, w_ref, eps: float = EPS_NORM) -> float:
    """``| w/|w| - w_ref/|w_ref| |``."""
    w = np.asarray(w, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float)
    nrm = float(np.linalg.norm(w))
    _check_norm(nrm, eps)
    return float(np.linalg.norm(w / nrm - w_ref / np.linalg.norm(w_ref)))


def margin_dual(u, q) -> float:
    return float(np.min(-(q @ np.asarray(u, dtype=float))))


def margin_gap_dual(u, sol, q, eps: float = EPS_NORM) -> float:
    u = np.asarray(u, dtype=float)
    qu = q @ u
    nrm = math.sqrt(max(float(u @ qu), 0.0))
    _check_norm(nrm, eps)
    best = sol.margin_at_w_star / sol.norm_w_star
    return best - float(np.min(-qu)) / nrm


def angle_gap_dual(u, sol, q, eps: float = EPS_NORM) -> float:
    u = np.asarray(u, dtype=float)
    qu = q @ u
    nrm = math.sqrt(max(float(u @ qu), 0.0))
    _check_norm(nrm, eps)
    cos = float(qu @ sol.u_star) / (nrm * sol.norm_w_star)
    return 1.0 - min(1.0, max(-1.0, cos))


def norm_error_dual(u, sol, q) -> float:
    diff = np.asarray(u, dtype=float) - sol.u_star
    return math.sqrt(max(float(diff @ (q @ diff)), 0.0))


def zero_one_error(u, train: Dataset, kernel: Kernel, test: Dataset) -> float:
    """Fraction of test points misclassified by the dual predictor."""
    if test.n == 0:
        raise ValueError("empty test set")
    pred = classify(decision_function(u, train, kernel, test.points))
    return float(np.mean(pred != test.labels))


def inertial_energy(t, u_t, u_prev, sol, alpha, gamma, dual_obj_t) -> float:
    """Lyapunov energy of the inertial scheme with ``nu = alpha - 1``.

    ``E_t = (t+alpha-1)^2 (D_t(u_t) - D_inf(u*))
           + |(alpha-1)(u_{t-1} - u*) + (t+alpha-1)(u_t - u_{t-1})|^2 / (2 gamma)``
    """
    if alpha < 3:
        raise ValueError("the energy is only monotone for alpha >= 3")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    u_t = np.asarray(u_t, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    k = t + alpha - 1.0
    v = (alpha - 1.0) * (u_prev - sol.u_star) + k * (u_t - u_prev)
    return k * k * (dual_obj_t - sol.dual_value) + float(v @ v) / (2.0 * gamma)


def angle_margin_bounds(w, sol, fro_norm: float):
    """Upper bounds on (angle gap, margin gap) in terms of ``|w - w*|``.

    Valid whenever ``|w| >= |w*| / 2``; returns ``None`` otherwise.
    """
    w = np.asarray(w, dtype=float)
    delta = 0.5 * sol.norm_w_star
    if np.linalg.norm(w) < delta:
        return None
    err = float(np.linalg.norm(w - sol.w_star))
    angle = err * err / (2.0 * delta * sol.norm_w_star)
    marg = fro_norm * err / (delta * sol.norm_w_star)
    return angle, marg
