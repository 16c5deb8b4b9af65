import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bidcraft.data import SupervisedSet
from bidcraft.errors import FoldError, SearchError
from bidcraft.models import ModelKind
from bidcraft.tuning import SEARCH_SPACES, ParamGrid, Scoring, grid_search, kfold_indices, score


def toy_set(n=50, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 8)) + 10
    Y = X[:, :6] + rng.normal(scale=0.2, size=(n, 6))
    return SupervisedSet(X, Y, tuple(range(n)))


@given(st.integers(2, 200), st.integers(2, 20))
def test_kfold_partitions_in_order(n, k):
    if n < k:
        with pytest.raises(FoldError):
            kfold_indices(n, k)
        return
    folds = kfold_indices(n, k)
    assert len(folds) == k
    assert np.array_equal(np.concatenate(folds), np.arange(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1 and sizes == sorted(sizes, reverse=True)


def test_grid_sizes():
    sizes = {kind: len(ParamGrid.standard(kind)) for kind in SEARCH_SPACES}
    assert sizes[ModelKind.SVR] == 9
    assert sizes[ModelKind.KNN] == 6
    assert sizes[ModelKind.ELASTIC_NET] == 9
    assert sizes[ModelKind.RANDOM_FOREST] == 6
    grid = ParamGrid.standard(ModelKind.CART)
    assert len(grid.configs()) == len(grid) == 6


def test_score_variants():
    y = [10.0, 10.0]
    assert score(Scoring.MAE, y, [9.0, 12.0]) == 1.5
    assert score("mape", y, [9.0, 12.0]) == pytest.approx(0.15)
    assert score("neg-revenue", y, [9.0, 12.0]) == -9.0
    assert score("neg-revenue", y, [-3.0, 10.0]) == -10.0


def test_grid_search_picks_best_and_counts_fits():
    data = toy_set()
    cv = grid_search(ParamGrid.standard(ModelKind.KNN), data, k=5)
    assert len(cv.configs) == 6 and cv.n_fits == 30
    means = [c.mean for c in cv.configs]
    assert cv.best.mean == min(means)
    assert cv.best_index == means.index(min(means))  # first of equals
    doc = json.loads(cv.to_json())
    assert doc["best_params"] == cv.best.params and len(doc["configs"]) == 6


def test_grid_search_repeatable_across_threads():
    data = toy_set(seed=1)
    grid = ParamGrid(ModelKind.RANDOM_FOREST, {"n_estimators": [3, 5], "max_depth": [2, None]})
    a = grid_search(grid, data, k=3, seed=4, n_jobs=1)
    b = grid_search(grid, data, k=3, seed=4, n_jobs=4)
    assert a.to_dict() == b.to_dict()


def test_failed_configs_are_excluded():
    data = toy_set()
    # an iteration cap of 1 cannot converge; the other config can
    grid = ParamGrid(ModelKind.LASSO, {"max_iter": [1, 10_000]}, {"alpha": 0.001, "tol": 1e-12})
    cv = grid_search(grid, data, k=3)
    assert cv.configs[0].failed and not cv.configs[1].failed
    assert cv.best_index == 1
    with pytest.raises(SearchError):
        grid_search(ParamGrid(ModelKind.LASSO, {"max_iter": [1]}, {"alpha": 0.001, "tol": 1e-12}), data, k=3)


def test_grid_search_too_few_samples():
    with pytest.raises(FoldError):
        grid_search(ParamGrid.standard(ModelKind.RIDGE), toy_set(n=3), k=5)
