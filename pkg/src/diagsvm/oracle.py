"""Independent reference computations.

These routines are deliberately slow and simple. They provide ground truth
for the solvers: the min-norm separating solution with a KKT certificate, a
direction grid search for the max-margin problem in the plane, a brute-force
prox, the pseudoinverse interpolant, and the Hoffman constant / Lojasiewicz
modulus on tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    Dataset,
    Kernel,
    SignedGram,
    dual_objective_inf,
    gram,
    signed_matrix,
)

__all__ = [
    "NonSeparable",
    "IterationCapExceeded",
    "InstanceTooLarge",
    "InconsistentSystem",
    "KKTResiduals",
    "OracleSolution",
    "solve_max_margin",
    "solve_max_margin_gram",
    "max_margin_direction_grid",
    "prox_bruteforce",
    "pseudoinverse_solution",
    "hoffman_constant",
    "estimate_mu",
]

ITERATION_CAP = 10_000_000


class NonSeparable(RuntimeError):
    """The data admit no separating hyperplane (in feature space)."""


class IterationCapExceeded(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


class InconsistentSystem(ValueError):
    pass


@dataclass(frozen=True)
class KKTResiduals:
    primal_feasibility: float  # max_i (1 - margin_i)_+
    complementary_slackness: float  # max_i |u_i| |margin_i - 1|
    dual_feasibility: float  # max_i (u_i)_+
    stationarity: float  # |w* + Xs' u*|

    def max(self) -> float:
        return max(
            self.primal_feasibility,
            self.complementary_slackness,
            self.dual_feasibility,
            self.stationarity,
        )

    def to_dict(self) -> dict:
        return {
            "primal_feasibility": self.primal_feasibility,
            "complementary_slackness": self.complementary_slackness,
            "dual_feasibility": self.dual_feasibility,
            "stationarity": self.stationarity,
        }


@dataclass(frozen=True)
class OracleSolution:
    """Min-norm separating solution and its dual certificate.

    ``w_star`` is ``None`` for a nonlinear kernel, where the primal solution
    lives in feature space; all metrics then go through ``u_star``.
    """

    w_star: np.ndarray | None
    u_star: np.ndarray
    norm_w_star: float
    margin_at_w_star: float
    kkt_residuals: KKTResiduals
    dual_value: float
    iterations: int
    tol: float

    @property
    def w_plus(self) -> np.ndarray:
        return self.w_star / self.norm_w_star

    def to_dict(self) -> dict:
        return {
            "w_star": None if self.w_star is None else self.w_star.tolist(),
            "u_star": self.u_star.tolist(),
            "norm_w_star": self.norm_w_star,
            "margin_at_w_star": self.margin_at_w_star,
            "dual_value": self.dual_value,
            "kkt_residuals": self.kkt_residuals.to_dict(),
            "iterations": self.iterations,
            "tol": self.tol,
        }


def _certificate(u, qu, w, xs):
    margins = -qu
    viol = np.maximum(1.0 - margins, 0.0)
    stat = 0.0 if xs is None else float(np.linalg.norm(w + xs.T @ u))
    return KKTResiduals(
        primal_feasibility=float(viol.max()),
        complementary_slackness=float(np.max(np.abs(u) * np.abs(margins - 1.0))),
        dual_feasibility=float(np.max(np.maximum(u, 0.0))),
        stationarity=stat,
    )


def solve_max_margin_gram(
    g: SignedGram,
    xs: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = ITERATION_CAP,
    sep_tol: float = 1e-9,
) -> OracleSolution:
    """Projected gradient on ``D_inf`` over ``u <= 0`` with step ``1/|Q|``.

    Stops once ``|u_{k+1} - u_k| <= tol * step``. Raises ``NonSeparable`` when
    an iterate proves the separation margin is numerically zero: for any
    ``u <= 0`` and separable data, ``sqrt(u'Qu) >= -sum(u) / |w*|``.
    """
    q = g.q
    n = g.n
    if g.op_norm <= 0:
        raise NonSeparable("zero Gram matrix: nothing separates")
    step = 1.0 / g.op_norm
    scale = math.sqrt(float(np.max(np.diag(q))))
    u = np.zeros(n)
    qu = np.zeros(n)
    it = 0
    for it in range(1, max_iter + 1):
        u_new = np.minimum(u - step * (qu + 1.0), 0.0)
        qu_new = q @ u_new
        delta = float(np.linalg.norm(u_new - u))
        u, qu = u_new, qu_new
        s = -float(u.sum())
        if s > 0 and math.sqrt(max(float(u @ qu), 0.0)) <= sep_tol * scale * s:
            raise NonSeparable(
                "dual iterates certify a separation margin below "
                f"{sep_tol:.0e} relative to the data scale"
            )
        if delta <= tol * step:
            break
    else:
        raise IterationCapExceeded(
            f"projected gradient did not reach tol={tol} in {max_iter} steps"
        )

    w = None if xs is None else -(xs.T @ u)
    norm_w = math.sqrt(max(float(u @ qu), 0.0))
    cert = _certificate(u, qu, w, xs)
    slack = 10.0 * tol * max(1.0, float(np.max(np.abs(u))))
    if cert.primal_feasibility > slack:
        raise NonSeparable(
            f"margin constraint violated by {cert.primal_feasibility:.3e} at the "
            "dual optimum"
        )
    if cert.max() > slack:
        raise IterationCapExceeded(
            f"KKT residual {cert.max():.3e} exceeds {slack:.3e}"
        )
    return OracleSolution(
        w_star=w,
        u_star=u,
        norm_w_star=norm_w,
        margin_at_w_star=float(np.min(-qu)),
        kkt_residuals=cert,
        dual_value=dual_objective_inf(u, g),
        iterations=it,
        tol=tol,
    )


def solve_max_margin(
    dataset: Dataset, kernel: Kernel | None = None, tol: float = 1e-10, **kw
) -> OracleSolution:
    kernel = kernel or Kernel.linear()
    g = gram(dataset, kernel)
    xs = signed_matrix(dataset) if kernel.is_linear else None
    return solve_max_margin_gram(g, xs, tol=tol, **kw)


def _direction_margins(xs, theta):
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return np.min(dirs @ xs.T, axis=1)


def max_margin_direction_grid(dataset: Dataset, k: int = 100_000) -> np.ndarray:
    """Unit direction maximizing the margin, by grid search on the circle.

    ``k`` equally spaced angles are scanned (ties go to the smaller angle),
    then the winning arc is refined by golden-section search.
    """
    if dataset.d != 2:
        raise ValueError("direction grid search needs d == 2")
    if k < 3:
        raise ValueError("need at least 3 grid directions")
    xs = signed_matrix(dataset)
    h = 2.0 * math.pi / k
    best_theta, best_val = 0.0, -math.inf
    chunk = 20_000
    for start in range(0, k, chunk):
        theta = np.arange(start, min(start + chunk, k)) * h
        vals = _direction_margins(xs, theta)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_theta = float(vals[j]), float(theta[j])
    if best_val <= 0:
        raise NonSeparable("no direction on the grid has a positive margin")

    def f(t):
        return float(_direction_margins(xs, np.array([t]))[0])

    a, b = best_theta - h, best_theta + h
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-13:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    theta = 0.5 * (a + b)
    if f(theta) < best_val:
        theta = best_theta
    return np.array([math.cos(theta), math.sin(theta)])


def prox_bruteforce(p: float, gamma: float, lam: float, grid_size: int = 10**6,
                    levels: int = 1) -> float:
    """Grid argmin of ``s + (s - p)^2 / (2 gamma)`` over ``[-1/lam, 0]``.

    With ``levels > 1`` the search is repeated on a fresh grid spanning the
    two cells around the previous winner (the objective is strictly convex,
    so the minimizer stays inside that window).
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    lo, hi = -1.0 / lam, 0.0
    best = lo
    for _ in range(levels):
        s = np.linspace(lo, hi, grid_size)
        best = float(s[np.argmin(s + (s - p) ** 2 / (2.0 * gamma))])
        h = (hi - lo) / (grid_size - 1)
        lo, hi = max(best - h, -1.0 / lam), min(best + h, 0.0)
    return best


def pseudoinverse_solution(X, y, atol: float = 1e-8) -> np.ndarray:
    """Minimal-norm interpolant ``X^+ y``; the system must be consistent."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.linalg.norm(X @ w - y))
    if res > atol:
        raise InconsistentSystem(f"y is not in the range of X (residual {res:.3e})")
    return w


def hoffman_constant(xs: np.ndarray) -> float:
    """Hoffman constant of ``{E u = b, A u <= a}`` with ``E = [Xs'; 1']``
    and ``A = [I; -I]``, as ``max 1 / sigma_min(B)`` over row subsets ``B``
    with linearly independent rows.

    Rows of ``A`` come in pairs ``+e_i, -e_i``; a subset holding both is
    dependent and flipping the sign of a row leaves the singular values
    unchanged, so it suffices to enumerate subsets of coordinates
    together with subsets of the rows of ``E``.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0]
    e_rows = np.vstack([xs.T, np.ones((1, n))])
    eye = np.eye(n)
    best = 0.0
    for ke in range(e_rows.shape[0] + 1):
        for es in itertools.combinations(range(e_rows.shape[0]), ke):
            for ka in range(0, n - ke + 1):
                for ids in itertools.combinations(range(n), ka):
                    if ke + ka == 0:
                        continue
                    b = np.vstack([e_rows[list(es)], eye[list(ids)]])
                    sv = np.linalg.svd(b, compute_uv=False)
                    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
                        continue
                    best = max(best, 1.0 / sv[-1])
    return best


def estimate_mu(dataset: Dataset, u0, sol: OracleSolution, max_n: int = 10) -> float:
    """Lojasiewicz modulus shared by all the regularized duals.

    ``mu = 1 / (8 tau^2 ((3 sqrt(M) + sqrt(2) R |Xs|_op)^2 + 2))`` with
    ``M = D_0(u0) - D_inf(u*)`` and ``R = |u0| + 2 |u*|``. Linear kernel only.
    """
    if dataset.n > max_n:
        raise InstanceTooLarge(f"n={dataset.n} > {max_n}: subset enumeration too costly")
    xs = signed_matrix(dataset)
    u0 = np.asarray(u0, dtype=float)
    g = gram(dataset)
    tau = hoffman_constant(xs)
    gap0 = 0.5 * float(u0 @ g.q @ u0) + float(u0.sum()) - sol.dual_value
    gap0 = max(gap0, 0.0)
    radius = float(np.linalg.norm(u0)) + 2.0 * float(np.linalg.norm(sol.u_star))
    x_op = float(np.linalg.norm(xs, 2))
    inner = (3.0 * math.sqrt(gap0) + math.sqrt(2.0) * radius * x_op) ** 2 + 2.0
    return 1.0 / (8.0 * tau * tau * inner)
