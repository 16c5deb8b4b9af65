"""Regularised linear models: ridge (direct solve) and elastic net
(cyclic coordinate descent).  LASSO is the ``l1_ratio = 1`` case."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError


class Standardizer:
    """Per-feature centring and scaling; constant features map to zero."""

    def __init__(self, mean, scale):
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(X.mean(axis=0), scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def state(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_state(cls, s: dict) -> "Standardizer":
        return cls(s["mean"], s["scale"])


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def coordinate_descent(X, y, alpha: float, l1_ratio: float, tol: float = 1e-6, max_iter: int = 10_000):
    """Minimise ``(1/2n)|y - Xw - b|^2 + alpha*l1_ratio*|w|_1
    + (alpha/2)*(1 - l1_ratio)*|w|^2``.

    The intercept is unpenalised and eliminated by centring.  Sweeps run
    over the Gram matrix; convergence is declared when the largest
    coordinate change in a sweep drops below ``tol``.

    Returns
    -------
    (w, b) : weights of shape (p,) and the intercept.
    """
    if alpha < 0 or not 0 <= l1_ratio <= 1:
        raise ValueError("need alpha >= 0 and 0 <= l1_ratio <= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc = X - x_mean
    gram = Xc.T @ Xc / n
    corr = Xc.T @ (y - y_mean) / n
    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    w = np.zeros(p)
    diag = np.diag(gram).copy()
    for _ in range(max_iter):
        biggest = 0.0
        for j in range(p):
            if diag[j] == 0.0:
                continue
            rho = corr[j] - gram[j] @ w + diag[j] * w[j]
            new = soft_threshold(rho, l1) / (diag[j] + l2)
            step = abs(new - w[j])
            if step > biggest:
                biggest = step
            w[j] = new
        if biggest < tol:
            break
    else:
        raise ConvergenceError(f"coordinate descent did not converge in {max_iter} sweeps", biggest)
    return w, float(y_mean - x_mean @ w)


def ridge(X, y, alpha: float):
    """Minimise ``|y - Xw - b|^2 + alpha*|w|^2`` via an augmented least-squares solve."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    p = X.shape[1]
    x_mean, y_mean = X.mean(axis=0), y.mean()
    A = X - x_mean
    b = y - y_mean
    if alpha > 0:
        A = np.vstack([A, np.sqrt(alpha) * np.eye(p)])
        b = np.concatenate([b, np.zeros(p)])
    w = np.linalg.lstsq(A, b, rcond=None)[0]
    return w, float(y_mean - x_mean @ w)


class LinearHead:
    """Standardised linear predictor; coefficients are stored on the raw scale."""

    def __init__(self, coef, intercept: float):
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)

    @classmethod
    def fit(cls, X, y, *, alpha, l1_ratio=None, tol=1e-6, max_iter=10_000) -> "LinearHead":
        scaler = Standardizer.fit(X)
        Xs = scaler.transform(X)
        if l1_ratio is None:
            w, b = ridge(Xs, y, alpha)
        else:
            w, b = coordinate_descent(Xs, y, alpha, l1_ratio, tol=tol, max_iter=max_iter)
        coef = w / scaler.scale
        return cls(coef, b - scaler.mean @ coef)

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def state(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_state(cls, s: dict) -> "LinearHead":
        return cls(s["coef"], s["intercept"])
