"""Diagonal proximal-gradient solvers on the dual of the hinge problem.

``alg1`` is the projected iterative gradient step on the dual with a
regularization parameter that shrinks along a schedule; ``alg2`` adds the
inertial extrapolation ``z_t = u_t + t/(t+alpha) (u_t - u_{t-1})``. The
fixed-lambda variant (``solve_tikhonov_dual``) solves a single regularized
dual to tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    DegenerateIterate,
    MetricRow,
    angle_gap,
    angle_gap_dual,
    inertial_energy,
    margin,
    margin_dual,
    margin_gap,
    margin_gap_dual,
    norm_error_dual,
)
from .model import (
    Dataset,
    Kernel,
    SignedGram,
    classify,
    dual_objective_t,
    gram,
    signed_matrix,
)
from .prox import ProxParams, prox_conj_hinge_vec

__all__ = [
    "SCHEDULE_FAMILIES",
    "LAMBDA_FLOOR",
    "Schedule",
    "SolverConfig",
    "SolverState",
    "Trace",
    "schedule_value",
    "initial_state",
    "step_alg1",
    "step_alg2",
    "run",
    "TikhonovResult",
    "solve_tikhonov_dual",
]

SCHEDULE_FAMILIES = ("constant", "log", "sqrt", "linear", "quadratic", "exponential")

# lambda_t never drops below this; 1/lambda stays finite.
LAMBDA_FLOOR = 1e-300


@dataclass(frozen=True)
class Schedule:
    family: str = "linear"
    lambda0: float = 1.0

    def __post_init__(self):
        if self.family not in SCHEDULE_FAMILIES:
            raise ValueError(f"unknown schedule family {self.family!r}")
        if not self.lambda0 >= LAMBDA_FLOOR:
            raise ValueError(f"lambda0 must be >= {LAMBDA_FLOOR}")

    def __call__(self, t: int) -> float:
        return schedule_value(self, t)


def schedule_value(schedule: Schedule, t: int) -> float:
    """``lambda0 / g(t)`` with the divisor ``g`` clamped below at 1."""
    if t < 0:
        raise ValueError("t must be non-negative")
    fam, lam0 = schedule.family, schedule.lambda0
    if fam == "constant" or t == 0:
        return lam0
    if fam == "exponential":
        val = math.ldexp(lam0, -t)
        return max(min(val, lam0), LAMBDA_FLOOR)
    if fam == "log":
        div = math.log(t)
    elif fam == "sqrt":
        div = math.sqrt(t)
    elif fam == "linear":
        div = float(t)
    else:
        div = float(t) * float(t)
    return max(lam0 / max(div, 1.0), LAMBDA_FLOOR)


@dataclass(frozen=True)
class SolverConfig:
    schedule: Schedule
    iterations: int
    gamma: float | None = None  # None: 0.999 / |Q|_op
    alpha: float = 3.0
    u0: np.ndarray | None = None

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def resolve_gamma(self, g: SignedGram) -> float:
        if self.gamma is None:
            return g.default_step()
        if self.gamma > 1.0 / g.op_norm:
            raise ValueError(
                f"gamma={self.gamma} exceeds 1/|Q|_op = {1.0 / g.op_norm}"
            )
        return self.gamma


@dataclass(frozen=True)
class SolverState:
    t: int
    u: np.ndarray
    u_prev: np.ndarray
    w: np.ndarray | None
    lambda_t: float


@dataclass
class Trace:
    algorithm: str
    rows: list
    state: SolverState
    gamma: float
    op_norm: float
    alpha: float | None = None
    us: list | None = None  # dual iterates, when requested
    ws: list | None = field(default=None, repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows]
        )


def initial_state(g: SignedGram, xs, config: SolverConfig) -> SolverState:
    n = g.n
    lam0 = schedule_value(config.schedule, 0)
    u0 = np.zeros(n) if config.u0 is None else np.array(config.u0, dtype=float)
    if u0.shape != (n,):
        raise ValueError(f"u0 has shape {u0.shape}, expected ({n},)")
    if np.any(u0 > 0) or np.any(u0 < -1.0 / lam0):
        raise ValueError("u0 must lie in [-1/lambda0, 0]^n")
    w0 = None if xs is None else -(xs.T @ u0)
    return SolverState(0, u0, u0.copy(), w0, lam0)


def _advance(state, g_vec, gamma, xs, config):
    u_new = prox_conj_hinge_vec(g_vec, ProxParams(gamma, state.lambda_t))
    w_new = None if xs is None else -(xs.T @ u_new)
    t = state.t + 1
    return SolverState(t, u_new, state.u, w_new, schedule_value(config.schedule, t))


def step_alg1(state: SolverState, g: SignedGram, xs, config: SolverConfig,
              gamma: float | None = None) -> SolverState:
    """``u+ = clip(u - gamma Q u - gamma, -1/lambda_t, 0)``."""
    gamma = config.resolve_gamma(g) if gamma is None else gamma
    u = state.u
    return _advance(state, u - gamma * (g.q @ u), gamma, xs, config)


def step_alg2(state: SolverState, g: SignedGram, xs, config: SolverConfig,
              gamma: float | None = None) -> SolverState:
    """Inertial step. At ``t = 0`` the weight ``t/(t+alpha)`` vanishes, so the
    first step is a plain gradient step from ``u_0``."""
    if config.alpha < 3:
        raise ValueError("alpha must be >= 3")
    gamma = config.resolve_gamma(g) if gamma is None else gamma
    a_t = state.t / (state.t + config.alpha)
    z = state.u + a_t * (state.u - state.u_prev)
    return _advance(state, z - gamma * (g.q @ z), gamma, xs, config)


_STEPS = {"alg1": step_alg1, "alg2": step_alg2}


def _test_scorer(dataset, kernel, test_set):
    if test_set is None or test_set.n == 0:
        return None
    k_test = kernel(dataset.points, test_set.points)
    y = dataset.labels.astype(float)

    def error(u):
        pred = classify(-((u * y) @ k_test))
        return float(np.mean(pred != test_set.labels))

    return error


def _metric_row(state, g, xs, sol, test_error, algorithm, alpha, gamma):
    u = state.u
    dual_obj = dual_objective_t(u, state.lambda_t, g)
    row = MetricRow(t=state.t, lambda_t=state.lambda_t, dual_obj=dual_obj)
    if xs is not None:
        row.margin = margin(state.w, xs)
    else:
        row.margin = margin_dual(u, g.q)
    if sol is not None:
        row.dual_gap = dual_obj - sol.dual_value
        if xs is not None:
            row.norm_error = float(np.linalg.norm(state.w - sol.w_star))
        else:
            row.norm_error = norm_error_dual(u, sol, g.q)
        try:
            if xs is not None:
                row.margin_gap = margin_gap(state.w, sol, xs)
                row.angle_gap = angle_gap(state.w, sol)
            else:
                row.margin_gap = margin_gap_dual(u, sol, g.q)
                row.angle_gap = angle_gap_dual(u, sol, g.q)
        except DegenerateIterate:
            pass
        if algorithm == "alg2":
            row.energy = inertial_energy(
                state.t, u, state.u_prev, sol, alpha, gamma, dual_obj
            )
    if test_error is not None:
        row.test_error = test_error(u)
    return row


def run(
    dataset: Dataset,
    kernel: Kernel | None,
    config: SolverConfig,
    algorithm: str = "alg1",
    oracle=None,
    test_set: Dataset | None = None,
    keep_iterates: bool = False,
    g: SignedGram | None = None,
) -> Trace:
    """Run ``config.iterations`` steps and record ``iterations + 1`` metric rows."""
    if algorithm not in _STEPS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    kernel = kernel or Kernel.linear()
    g = gram(dataset, kernel) if g is None else g
    xs = signed_matrix(dataset) if kernel.is_linear else None
    gamma = config.resolve_gamma(g)
    step = _STEPS[algorithm]
    state = initial_state(g, xs, config)
    test_error = _test_scorer(dataset, kernel, test_set)

    rows, us, ws = [], [], []
    for _ in range(config.iterations + 1):
        rows.append(
            _metric_row(state, g, xs, oracle, test_error, algorithm,
                        config.alpha, gamma)
        )
        if keep_iterates:
            us.append(state.u)
            ws.append(state.w)
        if state.t < config.iterations:
            state = step(state, g, xs, config, gamma)
    return Trace(
        algorithm=algorithm,
        rows=rows,
        state=state,
        gamma=gamma,
        op_norm=g.op_norm,
        alpha=config.alpha if algorithm == "alg2" else None,
        us=us if keep_iterates else None,
        ws=ws if keep_iterates else None,
    )


@dataclass(frozen=True)
class TikhonovResult:
    u: np.ndarray
    w: np.ndarray | None
    iterations: int
    converged: bool

    def __iter__(self):
        # allows ``u, w = solve_tikhonov_dual(...)``
        return iter((self.u, self.w))


def solve_tikhonov_dual(
    g: SignedGram,
    xs,
    lam: float,
    gamma: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
    u0=None,
) -> TikhonovResult:
    """Proximal gradient on the dual with ``lambda`` frozen.

    Stops when ``|u_{k+1} - u_k| <= tol * gamma``; ``converged`` is False if
    ``max_iter`` was reached first.
    """
    gamma = g.default_step() if gamma is None else gamma
    if gamma > 1.0 / g.op_norm:
        raise ValueError("gamma exceeds 1/|Q|_op")
    params = ProxParams(gamma, lam)
    u = np.zeros(g.n) if u0 is None else np.array(u0, dtype=float)
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        u_new = prox_conj_hinge_vec(u - gamma * (g.q @ u), params)
        delta = float(np.linalg.norm(u_new - u))
        u = u_new
        if delta <= tol * gamma:
            converged = True
            break
    w = None if xs is None else -(np.asarray(xs).T @ u)
    return TikhonovResult(u, w, k, converged)
