import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidcraft.data import SupervisedSet
from bidcraft.errors import ConvergenceError, ShapeError, SpecError
from bidcraft.models import ModelKind, ModelSpec, fit, load_model, predict, save_model
from bidcraft.models.base import PARAMS, model_from_dict, model_to_dict
from bidcraft.models.linear import LinearHead, coordinate_descent, ridge
from bidcraft.models.neighbors import KNNHead
from bidcraft.models.svr import SVRHead, kernel_matrix, solve_svr_dual
from bidcraft.models.tree import grow_tree

SMALL = {
    ModelKind.KNN: {},
    ModelKind.CART: {"max_depth": 4},
    ModelKind.RANDOM_FOREST: {"n_estimators": 5, "max_depth": 4},
    ModelKind.GB_LEVELWISE: {"n_estimators": 10},
    ModelKind.GB_SECOND_ORDER: {"n_estimators": 10},
    ModelKind.GB_LEAFWISE: {"n_estimators": 10, "num_leaves": 8, "min_child_samples": 5},
    ModelKind.SVR: {"C": 10.0},
    ModelKind.RIDGE: {"alpha": 0.1},
    ModelKind.LASSO: {"alpha": 0.01},
    ModelKind.ELASTIC_NET: {"alpha": 0.01, "l1_ratio": 0.5},
}


def toy_set(n=60, p=12, h=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * 5 + 20
    Y = X[:, :h] * 0.5 + 3 + rng.normal(scale=0.1, size=(n, h))
    return SupervisedSet(X, Y, tuple(range(n)))


# -- spec ----------------------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(SpecError):
        ModelSpec("PROPHET")
    with pytest.raises(SpecError):
        ModelSpec(ModelKind.KNN, {"n_neighbors": 0})
    with pytest.raises(SpecError):
        ModelSpec(ModelKind.SVR, {"degree": 3})
    with pytest.raises(SpecError):
        ModelSpec(ModelKind.KNN, {"weights": "cosine"})
    spec = ModelSpec("SVR", {"C": 10})
    assert spec.kind is ModelKind.SVR and spec.resolved()["epsilon"] == 0.1
    assert ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_every_kind_has_defaults():
    assert set(PARAMS) == set(ModelKind)


# -- fit / predict contract ---------------------------------------------------------


@pytest.mark.parametrize("kind", list(ModelKind), ids=lambda k: k.value)
def test_fit_predict_round_trip(kind, tmp_path):
    data = toy_set()
    model = fit(ModelSpec(kind, SMALL[kind], seed=1), data, n_jobs=2)
    assert model.horizon == 6
    out = predict(model, data.X)
    assert out.shape == (60, 6) and np.all(np.isfinite(out))
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    assert np.array_equal(predict(again, data.X), out)
    assert model_to_dict(again) == json.loads(path.read_text())
    with pytest.raises(ShapeError):
        predict(model, data.X[:, :5])


def test_model_document_version_checked():
    doc = model_to_dict(fit(ModelSpec(ModelKind.RIDGE), toy_set()))
    doc["version"] = 99
    with pytest.raises(SpecError):
        model_from_dict(doc)


@pytest.mark.parametrize("kind", [ModelKind.RANDOM_FOREST, ModelKind.GB_LEAFWISE, ModelKind.SVR])
def test_fit_is_deterministic_and_thread_independent(kind):
    data = toy_set(seed=3)
    spec = ModelSpec(kind, SMALL[kind], seed=7)
    a = predict(fit(spec, data, n_jobs=1), data.X)
    b = predict(fit(spec, data, n_jobs=4), data.X)
    assert np.array_equal(a, b)


def test_forest_seed_matters():
    data = toy_set(seed=4)
    a = predict(fit(ModelSpec(ModelKind.RANDOM_FOREST, SMALL[ModelKind.RANDOM_FOREST], seed=1), data), data.X)
    b = predict(fit(ModelSpec(ModelKind.RANDOM_FOREST, SMALL[ModelKind.RANDOM_FOREST], seed=2), data), data.X)
    assert not np.array_equal(a, b)


def test_linear_models_recover_linear_signal():
    data = toy_set(n=200, seed=5)
    for kind in (ModelKind.RIDGE, ModelKind.LASSO, ModelKind.ELASTIC_NET):
        model = fit(ModelSpec(kind, SMALL[kind]), data)
        assert np.mean(np.abs(predict(model, data.X) - data.Y)) < 0.2


# -- trees ----------------------------------------------------------------------------


def test_tree_split_on_step():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    t = grow_tree(X, y, max_depth=1)
    assert t.n_leaves == 2 and t.depth == 1
    assert t.predict(np.array([[1.4], [1.6]])).tolist() == [1.0, 5.0]
    assert t.threshold[0] == 1.5


def test_tree_depth_and_split_limits():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 3))
    y = rng.normal(size=100)
    assert grow_tree(X, y, max_depth=3).depth <= 3
    assert grow_tree(X, y, min_samples_split=101).n_leaves == 1
    t = grow_tree(X, y, None, 2, "second_order", reg_lambda=0.0, min_samples_leaf=10, max_leaves=6)
    assert t.n_leaves <= 6


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=25))
@settings(max_examples=50)
def test_tree_leaf_means_preserve_total(ys):
    X = np.arange(len(ys), dtype=float)[:, None] % 5
    y = np.asarray(ys)
    t = grow_tree(X, y, max_depth=2)
    # mean leaves reproduce the training total
    assert t.predict(X).sum() == pytest.approx(y.sum(), abs=1e-7)


def test_second_order_leaf_shrinks():
    X = np.zeros((4, 1))
    y = np.array([2.0, 2.0, 2.0, 2.0])
    assert grow_tree(X, y, 1, 2, "second_order", reg_lambda=4.0).predict(X)[0] == 1.0


# -- linear -------------------------------------------------------------------------


def test_ridge_shrinks_with_alpha():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 4))
    y = X @ [1.0, 2.0, -1.0, 0.5]
    norms = [np.linalg.norm(ridge(X, y, a)[0]) for a in (0.0, 1.0, 10.0, 100.0)]
    assert norms == sorted(norms, reverse=True)


def test_ridge_objective_is_stationary():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    w, b = ridge(X, y, 2.0)
    r = y - X @ w - b
    assert np.allclose(-X.T @ r + 2.0 * w, 0.0, atol=1e-10)
    assert abs(r.sum()) < 1e-10


def test_lasso_kkt_conditions():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(80, 10))
    y = X[:, 0] * 3 - X[:, 1] + rng.normal(size=80)
    alpha = 0.2
    w, b = coordinate_descent(X, y, alpha, 1.0, tol=1e-10)
    grad = X.T @ (y - X @ w - b) / len(y)
    active = w != 0
    assert np.allclose(grad[active], alpha * np.sign(w[active]), atol=1e-6)
    assert np.all(np.abs(grad[~active]) <= alpha + 1e-6)
    assert np.sum(active) < 10


def test_lasso_large_alpha_gives_constant():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    head = LinearHead.fit(X, y, alpha=1e3, l1_ratio=1.0)
    assert np.all(head.coef == 0) and head.intercept == pytest.approx(y.mean())


def test_coordinate_descent_reports_non_convergence():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(30, 5))
    X[:, 1] = X[:, 0] + 1e-6 * rng.normal(size=30)
    with pytest.raises(ConvergenceError):
        coordinate_descent(X, X[:, 0] * 2, 1e-8, 0.5, tol=1e-14, max_iter=3)


def test_constant_feature_is_harmless():
    X = np.column_stack([np.arange(20.0), np.full(20, 7.0)])
    y = 2 * np.arange(20.0) + 1
    head = LinearHead.fit(X, y, alpha=0.0)
    assert np.allclose(head.predict(X), y)


# -- kNN ----------------------------------------------------------------------------


def test_knn_uniform_and_distance():
    X = np.array([[0.0], [1.0], [3.0]])
    y = np.array([0.0, 10.0, 30.0])
    uniform = KNNHead.fit(X, y, n_neighbors=2)
    assert uniform.predict(np.array([[0.4]])).tolist() == [5.0]
    dist = KNNHead.fit(X, y, n_neighbors=2, weights="distance")
    # weights 1/0.4 and 1/0.6
    assert dist.predict(np.array([[0.4]]))[0] == pytest.approx((0 / 0.4 + 10 / 0.6) / (1 / 0.4 + 1 / 0.6))
    assert dist.predict(np.array([[1.0]]))[0] == 10.0


def test_knn_ties_broken_by_training_order():
    X = np.array([[1.0], [-1.0], [1.0]])
    y = np.array([1.0, 2.0, 3.0])
    idx, _ = KNNHead.fit(X, y, n_neighbors=2).neighbors(np.array([[0.0]]))
    assert idx[0].tolist() == [0, 1]


def test_knn_more_neighbors_than_samples():
    head = KNNHead.fit(np.zeros((3, 2)), np.array([1.0, 2.0, 3.0]), n_neighbors=7)
    assert head.predict(np.ones((1, 2)))[0] == 2.0


# -- SVR ---------------------------------------------------------------------------


def test_svr_without_support_vectors_predicts_midrange():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(40, 3))
    y = rng.normal(scale=0.1, size=40)
    head = SVRHead.fit(X, y, epsilon=10.0)
    assert len(head.beta) == 0
    # no free variable: the bias sits midway in its feasible interval
    assert np.allclose(head.predict(X), (y.max() + y.min()) / 2)


def test_svr_linear_kernel_fits_line():
    X = np.linspace(-2, 2, 30)[:, None]
    y = 3 * X[:, 0] + 1
    head = SVRHead.fit(X, y, C=100.0, epsilon=0.01, kernel="linear")
    assert np.max(np.abs(head.predict(X) - y)) < 0.02


def test_svr_dual_rejects_bad_input():
    K = np.eye(3)
    with pytest.raises(ValueError):
        solve_svr_dual(K, np.zeros(2), 1.0, 0.1)
    with pytest.raises(ValueError):
        solve_svr_dual(K, np.zeros(3), 0.0, 0.1)


def test_svr_dual_iteration_cap():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(50, 2))
    K = kernel_matrix(X, X, "rbf", 1.0)
    with pytest.raises(ConvergenceError):
        solve_svr_dual(K, rng.normal(size=50) * 10, 100.0, 0.0, tol=1e-12, max_iter=2)


@given(st.integers(5, 25), st.floats(0.1, 10), st.floats(0.0, 0.5), st.integers(0, 10_000))
@settings(max_examples=40)
def test_svr_dual_invariants(n, C, eps, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = rng.normal(size=n)
    sol = solve_svr_dual(kernel_matrix(X, X, "rbf", 0.5), y, C, eps)
    assert np.all(np.abs(sol.beta) <= C)
    assert abs(sol.beta.sum()) <= 1e-6
    assert sol.violation < 1e-3


# -- cross-model identities ------------------------------------------------------------


def test_single_unbootstrapped_tree_forest_equals_cart():
    data = toy_set(n=80, seed=20)
    forest = fit(ModelSpec(ModelKind.RANDOM_FOREST, {"n_estimators": 1, "bootstrap": False, "max_depth": 5}), data)
    cart = fit(ModelSpec(ModelKind.CART, {"max_depth": 5}), data)
    assert np.array_equal(predict(forest, data.X), predict(cart, data.X))


def test_one_round_second_order_equals_stump_on_residuals():
    data = toy_set(n=70, seed=21)
    spec = ModelSpec(ModelKind.GB_SECOND_ORDER,
                     {"n_estimators": 1, "learning_rate": 1.0, "max_depth": 1, "reg_lambda": 0.0})
    gb = predict(fit(spec, data), data.X)
    for h in range(6):
        y = data.Y[:, h]
        stump = grow_tree(data.X, y - y.mean(), max_depth=1)
        assert np.array_equal(gb[:, h], y.mean() + stump.predict(data.X))


@given(st.integers(0, 10_000))
@settings(max_examples=20)
def test_knn_uniform_ignores_training_order(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(25, 3)).astype(float)  # many ties
    y = rng.normal(size=25)
    Xq = rng.integers(0, 5, size=(10, 3)).astype(float)
    perm = rng.permutation(25)
    a = KNNHead.fit(X, y, n_neighbors=4).predict(Xq)
    b = KNNHead.fit(X[perm], y[perm], n_neighbors=4).predict(Xq)
    # ties at the k-th distance may swap members; compare on tie-free queries only
    d = np.sort(((Xq[:, None, :] - X[None]) ** 2).sum(-1), axis=1)
    clean = d[:, 3] < d[:, 4]
    assert np.allclose(a[clean], b[clean], atol=1e-12)


def test_knn_distance_weights_exact_match():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    y = np.array([1.0, 2.0, 3.0])
    head = KNNHead.fit(X, y, n_neighbors=3, weights="distance")
    assert head.predict(X).tolist() == [1.0, 2.0, 3.0]


@pytest.mark.parametrize("c", [-50.0, 3.25, 1e3])
def test_svr_translation_equivariant(c):
    rng = np.random.default_rng(22)
    X = rng.normal(size=(60, 4))
    y = np.sin(X[:, 0]) + rng.normal(scale=0.1, size=60)
    base = SVRHead.fit(X, y, C=1.0, epsilon=0.1).predict(X)
    moved = SVRHead.fit(X, y + c, C=1.0, epsilon=0.1).predict(X)
    assert np.max(np.abs(moved - base - c)) <= 1e-8
