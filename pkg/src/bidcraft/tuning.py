"""Grid search with ordered k-fold cross-validation."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import SupervisedSet
from .errors import BidcraftError, FoldError, SearchError
from .evaluation import mae, mape, revenue
from .models import ModelKind, ModelSpec, fit, predict
from .parallel import pmap


class Scoring(str, Enum):
    MAE = "mae"
    MAPE = "mape"
    NEG_REVENUE = "neg-revenue"


def score(scoring: Scoring, y, y_hat) -> float:
    """Loss to minimise, computed on flattened slot-level values."""
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    scoring = Scoring(scoring)
    if scoring is Scoring.MAE:
        return mae(y, y_hat)
    if scoring is Scoring.MAPE:
        value = mape(y, y_hat)
        if value is None:
            raise ValueError("MAPE undefined: every validation price is zero")
        return value
    # a negative forecast cannot be submitted; score it as a zero bid
    return -revenue(y, np.maximum(y_hat, 0.0))


def kfold_indices(n: int, k: int) -> list[np.ndarray]:
    """Contiguous, unshuffled folds; the first ``n % k`` folds hold one extra index."""
    if k < 2 or n < k:
        raise FoldError(f"need n >= k >= 2, got n={n}, k={k}")
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    return [np.arange(bounds[i], bounds[i + 1]) for i in range(k)]


# standard search space per model kind
SEARCH_SPACES: dict[ModelKind, dict[str, list]] = {
    ModelKind.SVR: {"C": [0.1, 1, 10], "epsilon": [0.1, 0.2, 0.5]},
    ModelKind.GB_LEVELWISE: {"n_estimators": [100, 200], "learning_rate": [0.01, 0.1], "max_depth": [3, 5]},
    ModelKind.GB_SECOND_ORDER: {"n_estimators": [100, 200], "learning_rate": [0.01, 0.1], "max_depth": [3, 5]},
    ModelKind.GB_LEAFWISE: {"n_estimators": [100, 200], "learning_rate": [0.01, 0.1], "num_leaves": [31, 50]},
    ModelKind.RANDOM_FOREST: {"n_estimators": [100, 200], "max_depth": [None, 10, 20]},
    ModelKind.CART: {"max_depth": [None, 10, 20], "min_samples_split": [2, 10]},
    ModelKind.KNN: {"n_neighbors": [3, 5, 7], "weights": ["uniform", "distance"]},
    ModelKind.RIDGE: {"alpha": [0.1, 1.0, 10.0]},
    ModelKind.LASSO: {"alpha": [0.1, 1.0, 10.0]},
    ModelKind.ELASTIC_NET: {"alpha": [0.1, 1.0, 10.0], "l1_ratio": [0.1, 0.5, 0.9]},
}


@dataclass(frozen=True)
class ParamGrid:
    kind: ModelKind
    axes: dict
    base: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if any(len(v) == 0 for v in self.axes.values()):
            raise ValueError("every grid axis needs at least one value")

    @classmethod
    def standard(cls, kind, **base) -> "ParamGrid":
        kind = ModelKind(kind)
        return cls(kind, {k: list(v) for k, v in SEARCH_SPACES[kind].items()}, base)

    def configs(self) -> list[dict]:
        names = list(self.axes)
        return [{**self.base, **dict(zip(names, combo))} for combo in itertools.product(*self.axes.values())]

    def __len__(self) -> int:
        return int(np.prod([len(v) for v in self.axes.values()]))


@dataclass
class ConfigResult:
    params: dict
    fold_scores: list
    mean: float | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class CvResult:
    kind: ModelKind
    scoring: Scoring
    k: int
    seed: int
    configs: list
    best_index: int
    n_fits: int

    @property
    def best(self) -> ConfigResult:
        return self.configs[self.best_index]

    @property
    def best_spec(self) -> ModelSpec:
        return ModelSpec(self.kind, dict(self.best.params), self.seed)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "scoring": self.scoring.value,
            "k": self.k,
            "seed": self.seed,
            "n_fits": self.n_fits,
            "best_index": self.best_index,
            "best_params": self.best.params,
            "configs": [
                {"params": c.params, "fold_scores": c.fold_scores, "mean": c.mean, "error": c.error}
                for c in self.configs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def grid_search(grid: ParamGrid, data: SupervisedSet, k: int = 5, scoring=Scoring.MAE, seed: int = 0,
                n_jobs: int | None = None) -> CvResult:
    scoring = Scoring(scoring)
    folds = kfold_indices(len(data), k)
    configs = grid.configs()
    specs = [ModelSpec(grid.kind, params, seed) for params in configs]

    def run(task):
        ci, fi = task
        held = folds[fi]
        train = np.concatenate([f for j, f in enumerate(folds) if j != fi])
        try:
            model = fit(specs[ci], data.subset(train), n_jobs=1)
            return score(scoring, data.Y[held], predict(model, data.X[held])), None
        except (BidcraftError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return None, f"fold {fi}: {type(exc).__name__}: {exc}"

    tasks = [(ci, fi) for ci in range(len(configs)) for fi in range(k)]
    outcomes = pmap(run, tasks, n_jobs)
    results = []
    for ci, params in enumerate(configs):
        scores, errors = [], []
        for fi in range(k):
            s, err = outcomes[ci * k + fi]
            scores.append(s)
            if err:
                errors.append(err)
        if errors:
            results.append(ConfigResult(params, scores, None, "; ".join(errors)))
        else:
            results.append(ConfigResult(params, scores, float(np.mean(scores))))
    ok = [i for i, r in enumerate(results) if not r.failed]
    if not ok:
        raise SearchError(f"all {len(configs)} configurations failed: {results[0].error}")
    best = min(ok, key=lambda i: (results[i].mean, i))
    return CvResult(grid.kind, scoring, k, seed, results, best, len(tasks))
