"""Closed-form prox of the (scaled) conjugate hinge loss.

For step ``gamma`` and regularization ``lam`` the prox of
``s -> s + indicator_[-1/lam, 0](s)`` is the projection of ``p - gamma``
onto ``[-1/lam, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ProxParams", "prox_conj_hinge", "prox_conj_hinge_vec"]


@dataclass(frozen=True)
class ProxParams:
    gamma: float
    lam: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


def prox_conj_hinge(p: float, params: ProxParams) -> float:
    lo = -1.0 / params.lam
    return float(min(max(p - params.gamma, lo), 0.0))


def prox_conj_hinge_vec(p: np.ndarray, params: ProxParams) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=float) - params.gamma, -1.0 / params.lam, 0.0)
