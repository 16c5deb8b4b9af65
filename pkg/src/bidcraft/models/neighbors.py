"""Brute-force k-nearest-neighbour regression (Euclidean distance)."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


class KNNHead:
    def __init__(self, X, y, n_neighbors: int = 5, weights: str = "uniform"):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float).ravel()
        self.n_neighbors = int(n_neighbors)
        self.weights = weights

    @classmethod
    def fit(cls, X, y, *, n_neighbors=5, weights="uniform") -> "KNNHead":
        return cls(X, y, n_neighbors, weights)

    def neighbors(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest training rows.

        Equidistant candidates are ordered by training index.
        """
        sq = cdist(np.asarray(Xq, dtype=float), self.X, "sqeuclidean")
        k = min(self.n_neighbors, len(self.y))
        idx = np.argsort(sq, axis=1, kind="stable")[:, :k]
        return idx, np.sqrt(np.take_along_axis(sq, idx, axis=1))

    def predict(self, Xq) -> np.ndarray:
        idx, dist = self.neighbors(Xq)
        targets = self.y[idx]
        if self.weights == "uniform":
            return targets.mean(axis=1)
        out = np.empty(len(idx))
        for row in range(len(idx)):
            zero = dist[row] == 0
            if zero.any():
                # exact matches dominate: average only the coincident points
                out[row] = targets[row, zero].mean()
            else:
                w = 1.0 / dist[row]
                out[row] = w @ targets[row] / w.sum()
        return out

    def state(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist(), "n_neighbors": self.n_neighbors, "weights": self.weights}

    @classmethod
    def from_state(cls, s: dict) -> "KNNHead":
        X = np.array(s["X"], dtype=float)
        return cls(X, s["y"], s["n_neighbors"], s["weights"])
