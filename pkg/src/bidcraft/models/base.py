"""Model specifications and the multi-horizon fit/predict contract.

Every model kind is fitted as one independent single-output head per
forecast position (six for a day of 4-hour blocks).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from numbers import Integral, Real

import numpy as np

from ..data import SupervisedSet
from ..errors import ShapeError, SpecError
from ..parallel import pmap
from .ensemble import BoostingHead, ForestHead, TreeHead
from .linear import LinearHead
from .neighbors import KNNHead
from .svr import SVRHead

FORMAT = "bidcraft.model"
FORMAT_VERSION = 1


class ModelKind(str, Enum):
    KNN = "KNN"
    CART = "CART"
    RANDOM_FOREST = "RANDOM_FOREST"
    GB_LEVELWISE = "GB_LEVELWISE"
    GB_SECOND_ORDER = "GB_SECOND_ORDER"
    GB_LEAFWISE = "GB_LEAFWISE"
    SVR = "SVR"
    RIDGE = "RIDGE"
    LASSO = "LASSO"
    ELASTIC_NET = "ELASTIC_NET"


def _int(lo=None, optional=False):
    def check(v):
        if v is None:
            return optional
        return isinstance(v, Integral) and not isinstance(v, bool) and (lo is None or v >= lo)

    return check


def _real(lo=None, hi=None, strict=False):
    def check(v):
        if not isinstance(v, Real) or isinstance(v, bool) or not np.isfinite(v):
            return False
        if lo is not None and (v <= lo if strict else v < lo):
            return False
        return hi is None or v <= hi

    return check


def _choice(*options):
    return lambda v: v in options


def _gamma(v):
    return v == "scale" or _real(0, strict=True)(v)


def _flag(v):
    return isinstance(v, bool)


_BOOST = {"n_estimators": (100, _int(0)), "learning_rate": (0.1, _real(0, strict=True))}

# name -> (default, validator); grid axes plus pinned defaults
PARAMS: dict[ModelKind, dict] = {
    ModelKind.KNN: {"n_neighbors": (5, _int(1)), "weights": ("uniform", _choice("uniform", "distance"))},
    ModelKind.CART: {"max_depth": (None, _int(1, optional=True)), "min_samples_split": (2, _int(2))},
    ModelKind.RANDOM_FOREST: {
        "n_estimators": (100, _int(1)),
        "max_depth": (None, _int(1, optional=True)),
        "min_samples_split": (2, _int(2)),
        "bootstrap": (True, _flag),
    },
    ModelKind.GB_LEVELWISE: {**_BOOST, "max_depth": (3, _int(1)), "min_samples_split": (2, _int(2))},
    ModelKind.GB_SECOND_ORDER: {
        **_BOOST,
        "max_depth": (3, _int(1)),
        "reg_lambda": (1.0, _real(0)),
        "gamma": (0.0, _real(0)),
    },
    ModelKind.GB_LEAFWISE: {
        **_BOOST,
        "num_leaves": (31, _int(2)),
        "min_child_samples": (20, _int(1)),
        "reg_lambda": (0.0, _real(0)),
        "max_depth": (None, _int(1, optional=True)),
    },
    ModelKind.SVR: {
        "C": (1.0, _real(0, strict=True)),
        "epsilon": (0.1, _real(0)),
        "kernel": ("rbf", _choice("rbf", "linear")),
        "gamma": ("scale", _gamma),
        "tol": (1e-3, _real(0, strict=True)),
        "max_iter": (100_000, _int(1)),
    },
    ModelKind.RIDGE: {"alpha": (1.0, _real(0))},
    ModelKind.LASSO: {"alpha": (1.0, _real(0)), "tol": (1e-6, _real(0, strict=True)), "max_iter": (10_000, _int(1))},
    ModelKind.ELASTIC_NET: {
        "alpha": (1.0, _real(0)),
        "l1_ratio": (0.5, _real(0, 1)),
        "tol": (1e-6, _real(0, strict=True)),
        "max_iter": (10_000, _int(1)),
    },
}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        try:
            kind = ModelKind(self.kind)
        except ValueError:
            raise SpecError(f"unknown model kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        allowed = PARAMS[kind]
        hp = dict(self.hyperparameters)
        for name, value in hp.items():
            if name not in allowed:
                raise SpecError(f"{kind.value} has no hyperparameter {name!r}")
            if not allowed[name][1](value):
                raise SpecError(f"{kind.value}: invalid value {value!r} for {name!r}")
        object.__setattr__(self, "hyperparameters", hp)

    def resolved(self) -> dict:
        """Hyperparameters with defaults filled in."""
        return {name: self.hyperparameters.get(name, default) for name, (default, _) in PARAMS[self.kind].items()}

    def with_params(self, **params) -> "ModelSpec":
        return ModelSpec(self.kind, {**self.hyperparameters, **params}, self.seed)

    @property
    def label(self) -> str:
        return self.kind.value.lower()

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparameters": self.hyperparameters, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], dict(d.get("hyperparameters", {})), int(d.get("seed", 0)))


_HEAD_TYPES = {
    ModelKind.KNN: KNNHead,
    ModelKind.CART: TreeHead,
    ModelKind.RANDOM_FOREST: ForestHead,
    ModelKind.GB_LEVELWISE: BoostingHead,
    ModelKind.GB_SECOND_ORDER: BoostingHead,
    ModelKind.GB_LEAFWISE: BoostingHead,
    ModelKind.SVR: SVRHead,
    ModelKind.RIDGE: LinearHead,
    ModelKind.LASSO: LinearHead,
    ModelKind.ELASTIC_NET: LinearHead,
}


def fit_head(spec: ModelSpec, X, y, head: int = 0):
    """Fit one single-output predictor of ``spec`` on ``(X, y)``."""
    hp = spec.resolved()
    kind = spec.kind
    if kind is ModelKind.KNN:
        return KNNHead.fit(X, y, **hp)
    if kind is ModelKind.CART:
        return TreeHead.fit(X, y, **hp)
    if kind is ModelKind.RANDOM_FOREST:
        return ForestHead.fit(X, y, **hp, seed=spec.seed, head=head)
    if kind is ModelKind.GB_LEVELWISE:
        return BoostingHead.fit(X, y, flavor="levelwise", **hp)
    if kind is ModelKind.GB_SECOND_ORDER:
        return BoostingHead.fit(X, y, flavor="second_order", **hp)
    if kind is ModelKind.GB_LEAFWISE:
        return BoostingHead.fit(X, y, flavor="leafwise", **hp)
    if kind is ModelKind.SVR:
        return SVRHead.fit(X, y, **hp)
    if kind is ModelKind.RIDGE:
        return LinearHead.fit(X, y, alpha=hp["alpha"])
    if kind is ModelKind.LASSO:
        return LinearHead.fit(X, y, alpha=hp["alpha"], l1_ratio=1.0, tol=hp["tol"], max_iter=hp["max_iter"])
    return LinearHead.fit(X, y, **hp)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    heads: tuple
    input_len: int

    @property
    def horizon(self) -> int:
        return len(self.heads)


def fit(spec: ModelSpec, data: SupervisedSet, n_jobs: int | None = None) -> TrainedModel:
    if not len(data):
        raise ValueError("cannot fit on an empty SupervisedSet")
    X = np.asarray(data.X, dtype=float)
    Y = np.asarray(data.Y, dtype=float)
    heads = pmap(lambda h: fit_head(spec, X, Y[:, h], head=h), range(Y.shape[1]), n_jobs)
    return TrainedModel(spec, tuple(heads), X.shape[1])


def predict(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.input_len:
        raise ShapeError(f"expected feature rows of length {model.input_len}, got shape {X.shape}")
    return np.column_stack([h.predict(X) for h in model.heads])


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "input_len": model.input_len,
        "heads": [h.state() for h in model.heads],
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != FORMAT or doc.get("version") != FORMAT_VERSION:
        raise SpecError(f"not a {FORMAT} v{FORMAT_VERSION} document")
    spec = ModelSpec.from_dict(doc["spec"])
    head_type = _HEAD_TYPES[spec.kind]
    return TrainedModel(spec, tuple(head_type.from_state(s) for s in doc["heads"]), int(doc["input_len"]))


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
