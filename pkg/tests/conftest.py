import itertools

import numpy as np
import pytest

from diagsvm.data import ANCHOR_LABELS, ANCHOR_POINTS, gen_support_anchor
from diagsvm.model import Dataset
from diagsvm.oracle import solve_max_margin

W_STAR = np.array([0.5, 0.5])


@pytest.fixture(scope="session")
def anchor4():
    return Dataset(ANCHOR_POINTS, ANCHOR_LABELS)


@pytest.fixture(scope="session")
def anchor80():
    return gen_support_anchor(80, seed=0)


@pytest.fixture(scope="session")
def sol4(anchor4):
    return solve_max_margin(anchor4)


@pytest.fixture(scope="session")
def sol80(anchor80):
    return solve_max_margin(anchor80)


def active_set_min_norm(xs, tol=1e-9):
    """Min-norm separator by enumerating candidate active sets.

    For each subset S the smallest w with <w, x~_i> = 1 on S is pinv(X_S) 1;
    the optimum is the smallest feasible candidate. Only for tiny n.
    """
    n = xs.shape[0]
    best = None
    for k in range(1, n + 1):
        for s in itertools.combinations(range(n), k):
            rows = xs[list(s)]
            w = np.linalg.pinv(rows) @ np.ones(k)
            if np.max(np.abs(rows @ w - 1.0)) > 1e-9:
                continue
            if np.min(xs @ w) < 1.0 - tol:
                continue
            if best is None or w @ w < best @ best:
                best = w
    return best


def random_separable(rng, n, d=2, gap=0.2):
    """Points labelled by a random hyperplane through the origin, keeping only
    those at distance >= gap from it."""
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    pts = []
    while len(pts) < n:
        z = rng.uniform(-2, 2, size=d)
        if abs(z @ w) >= gap:
            pts.append(z)
    pts = np.array(pts)
    labels = np.where(pts @ w > 0, 1, -1)
    if np.all(labels == labels[0]):
        pts[0] = -pts[0]
        labels[0] = -labels[0]
    return Dataset(pts, labels)
