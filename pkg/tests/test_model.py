import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from diagsvm.model import (
    Dataset,
    Kernel,
    SignedGram,
    classify,
    decision_function,
    dual_objective_inf,
    dual_objective_t,
    dual_to_primal,
    gram,
    operator_norm,
    predict,
    signed_matrix,
)
from diagsvm.solvers import SolverConfig, Schedule, run

from conftest import W_STAR

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), [1, 0])
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), [1])
    with pytest.raises(ValueError):
        Dataset(np.zeros(3), [1, 1, 1])
    ds = Dataset([[1.0, 2.0]], [-1])
    assert (ds.n, ds.d, len(ds)) == (1, 2, 1)
    with pytest.raises(ValueError):
        ds.points[0, 0] = 5.0


def test_signed_matrix_examples():
    ds = Dataset([[1.0, 2.0], [3.0, 4.0]], [1, 1])
    np.testing.assert_array_equal(signed_matrix(ds), ds.points)
    ds = Dataset([[0.5, 1.5], [-0.5, -1.5]], [1, -1])
    np.testing.assert_array_equal(signed_matrix(ds), [[0.5, 1.5], [0.5, 1.5]])


def test_gram_examples(anchor4):
    g = gram(Dataset([[1.0, 0.0]], [1]))
    np.testing.assert_array_equal(g.q, [[1.0]])
    # <(1/2, 3/2), (3/2, 1/2)> = 3/4 + 3/4
    assert gram(anchor4).q[0, 1] == pytest.approx(1.5, abs=1e-15)
    rng = np.random.default_rng(3)
    ds = Dataset(rng.standard_normal((7, 3)), rng.choice([-1, 1], 7))
    np.testing.assert_allclose(np.diag(gram(ds, Kernel.gaussian(0.7)).q), 1.0)


def test_gram_linear_equals_signed_product():
    rng = np.random.default_rng(1)
    ds = Dataset(rng.standard_normal((20, 4)), rng.choice([-1, 1], 20))
    xs = signed_matrix(ds)
    np.testing.assert_allclose(gram(ds).q, xs @ xs.T, atol=1e-12, rtol=0)


def test_gaussian_gram_by_definition():
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((6, 2))
    y = rng.choice([-1, 1], 6)
    s2 = 0.15
    g = gram(Dataset(pts, y), Kernel.gaussian(s2))
    for i in range(6):
        for j in range(6):
            k = math.exp(-np.sum((pts[i] - pts[j]) ** 2) / (2 * s2))
            assert g.q[i, j] == pytest.approx(y[i] * y[j] * k, abs=1e-14)
    assert np.array_equal(g.q, g.q.T)
    assert np.linalg.eigvalsh(g.q).min() > -1e-12


def test_kernel_validation():
    with pytest.raises(ValueError):
        Kernel.gaussian(0.0)
    with pytest.raises(ValueError):
        Kernel("poly")
    with pytest.raises(ValueError):
        Kernel.linear()(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("q, expected", [(np.eye(3), 1.0), (np.diag([2.0, 0.5]), 2.0)])
def test_operator_norm_examples(q, expected):
    assert operator_norm(q) == pytest.approx(expected, rel=1e-12)


def test_operator_norm_zero_and_orthogonal_start():
    assert operator_norm(np.zeros((3, 3))) == 0.0
    # the all-ones start vector is an eigenvector of eigenvalue 0 here
    assert operator_norm(np.array([[1.0, -1.0], [-1.0, 1.0]])) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        SignedGram(np.zeros((2, 2))).default_step()


@pytest.mark.parametrize("seed", range(10))
def test_operator_norm_matches_eigensolver(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((5, 5))
    q = a @ a.T
    lam = np.linalg.eigvalsh(q)[-1]
    assert operator_norm(q) == pytest.approx(lam, rel=1e-8)


def test_op_norm_dominates_rayleigh_quotients(anchor80):
    g = gram(anchor80)
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.standard_normal(g.n)
        assert v @ g.q @ v / (v @ v) <= g.op_norm * (1 + 1e-12)


def test_dual_objectives_examples(anchor4, sol4):
    g = gram(anchor4)
    z = np.zeros(4)
    assert dual_objective_t(z, 1.0, g) == 0.0
    assert dual_objective_inf(z, g) == 0.0
    bad = np.array([0.1, 0.0, 0.0, 0.0])
    assert dual_objective_t(bad, 1.0, g) == math.inf
    assert dual_objective_inf(bad, g) == math.inf
    assert dual_objective_t(np.full(4, -2.0), 1.0, g) == math.inf
    assert dual_objective_t(sol4.u_star, 4.0, g) == pytest.approx(-0.25, abs=1e-9)
    assert dual_objective_inf(sol4.u_star, g) == pytest.approx(-0.25, abs=1e-9)
    with pytest.raises(ValueError):
        dual_objective_t(z, 0.0, g)


@settings(max_examples=200, deadline=None)
@given(
    arrays(float, 4, elements=st.floats(-5, 0)),
    st.floats(1e-3, 10),
    st.floats(1e-3, 10),
)
def test_dual_objective_monotone_in_lambda(u, lam_a, lam_b):
    g = SignedGram(np.array([[2.0, 1.0, 0, 0], [1.0, 2.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 3.0]]))
    lo, hi = min(lam_a, lam_b), max(lam_a, lam_b)
    d_lo, d_hi = dual_objective_t(u, lo, g), dual_objective_t(u, hi, g)
    # smaller lambda = larger box, so the extended value can only drop
    assert d_lo <= d_hi
    if math.isfinite(d_lo):
        assert d_lo == dual_objective_inf(u, g)


def test_dual_to_primal_examples(anchor4, sol4):
    xs = np.array([[1.0, 0.0]])
    np.testing.assert_array_equal(dual_to_primal(np.zeros(1), xs), [0.0, 0.0])
    np.testing.assert_array_equal(dual_to_primal(np.array([-2.0]), xs), [2.0, 0.0])
    w = dual_to_primal(sol4.u_star, signed_matrix(anchor4))
    np.testing.assert_allclose(w, W_STAR, atol=1e-6)
    with pytest.raises(ValueError):
        dual_to_primal(np.zeros(3), xs)


@settings(max_examples=100, deadline=None)
@given(
    arrays(float, (6, 3), elements=finite),
    arrays(float, 6, elements=st.floats(-3, 0)),
    arrays(float, 3, elements=finite),
)
def test_linear_predict_is_inner_product(pts, u, x):
    ds = Dataset(pts, [1, -1, 1, 1, -1, -1])
    w = dual_to_primal(u, signed_matrix(ds))
    assert predict(u, ds, Kernel.linear(), x) == pytest.approx(
        float(w @ x), rel=1e-9, abs=1e-9
    )


def test_predict_tie_and_shape(anchor4):
    assert predict(np.zeros(4), anchor4, Kernel.linear(), [1.0, 2.0]) == 0.0
    assert classify([0.0, -1e-300, 2.0]).tolist() == [1, -1, 1]
    with pytest.raises(ValueError):
        predict(np.zeros(3), anchor4, Kernel.linear(), [1.0, 2.0])
    with pytest.raises(ValueError):
        predict(np.zeros(4), anchor4, Kernel.linear(), [[1.0, 2.0]])


def test_converged_dual_classifies_training_set(anchor80):
    cfg = SolverConfig(Schedule("linear", 4.0), 1000)
    tr = run(anchor80, Kernel.linear(), cfg)
    scores = decision_function(tr.state.u, anchor80, Kernel.linear(), anchor80.points)
    assert np.array_equal(classify(scores), anchor80.labels)
