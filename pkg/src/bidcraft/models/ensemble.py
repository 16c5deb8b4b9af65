"""Tree ensembles: bagged forests and three gradient-boosting flavours."""

from __future__ import annotations

import numpy as np

from .tree import Tree, grow_tree


class TreeHead:
    """A single CART tree."""

    def __init__(self, tree: Tree):
        self.tree = tree

    @classmethod
    def fit(cls, X, y, *, max_depth=None, min_samples_split=2) -> "TreeHead":
        return cls(grow_tree(X, y, max_depth, min_samples_split))

    def predict(self, X) -> np.ndarray:
        return self.tree.predict(X)

    def state(self) -> dict:
        return {"tree": self.tree.state()}

    @classmethod
    def from_state(cls, s: dict) -> "TreeHead":
        return cls(Tree.from_state(s["tree"]))


class ForestHead:
    def __init__(self, trees):
        self.trees = list(trees)

    @classmethod
    def fit(cls, X, y, *, n_estimators=100, max_depth=None, min_samples_split=2, bootstrap=True, seed=0, head=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(y)
        trees = []
        for t in range(n_estimators):
            if bootstrap:
                rng = np.random.default_rng(np.random.SeedSequence([seed, head, t]))
                rows = rng.integers(0, n, size=n)
                trees.append(grow_tree(X[rows], y[rows], max_depth, min_samples_split))
            else:
                trees.append(grow_tree(X, y, max_depth, min_samples_split))
        return cls(trees)

    def predict(self, X) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def state(self) -> dict:
        return {"trees": [t.state() for t in self.trees]}

    @classmethod
    def from_state(cls, s: dict) -> "ForestHead":
        return cls(Tree.from_state(t) for t in s["trees"])


class BoostingHead:
    """Squared-loss gradient boosting started from the training mean.

    ``flavor`` selects how each round's tree is grown:

    * ``levelwise``: depth-limited CART on residuals, mean leaves.
    * ``second_order``: depth-limited, leaf value sum(g)/(sum(h) + reg_lambda).
    * ``leafwise``: best-first growth up to ``num_leaves`` leaves.
    """

    def __init__(self, base: float, learning_rate: float, trees, loss_curve=()):
        self.base = float(base)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)
        self.loss_curve = list(loss_curve)

    @classmethod
    def fit(cls, X, y, *, flavor, n_estimators=100, learning_rate=0.1, max_depth=3, min_samples_split=2,
            reg_lambda=0.0, gamma=0.0, num_leaves=31, min_child_samples=20):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        base = float(y.mean())
        pred = np.full(len(y), base)
        trees, curve = [], [float(np.mean((y - pred) ** 2))]
        for _ in range(n_estimators):
            resid = y - pred
            if flavor == "levelwise":
                tree = grow_tree(X, resid, max_depth, min_samples_split)
            elif flavor == "second_order":
                tree = grow_tree(X, resid, max_depth, 2, "second_order", reg_lambda=reg_lambda, min_gain=gamma)
            elif flavor == "leafwise":
                tree = grow_tree(
                    X, resid, max_depth, 2, "second_order",
                    reg_lambda=reg_lambda, min_samples_leaf=min_child_samples, max_leaves=num_leaves,
                )
            else:
                raise ValueError(f"unknown boosting flavor {flavor!r}")
            pred = pred + learning_rate * tree.predict(X)
            trees.append(tree)
            curve.append(float(np.mean((y - pred) ** 2)))
        return cls(base, learning_rate, trees, curve)

    def predict(self, X) -> np.ndarray:
        out = np.full(len(X), self.base)
        for t in self.trees:
            out = out + self.learning_rate * t.predict(X)
        return out

    def state(self) -> dict:
        return {
            "base": self.base,
            "learning_rate": self.learning_rate,
            "trees": [t.state() for t in self.trees],
            "loss_curve": self.loss_curve,
        }

    @classmethod
    def from_state(cls, s: dict) -> "BoostingHead":
        return cls(s["base"], s["learning_rate"], (Tree.from_state(t) for t in s["trees"]), s["loss_curve"])
