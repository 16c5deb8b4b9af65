"""Epsilon-insensitive support vector regression.

The dual is solved in its doubled form (one variable per side of the
tube) with SMO pair updates and second-order working-set selection:

    min  1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a <= C

with a = [alpha; alpha*], s = [1; -1], p = [eps - y; eps + y] and
Q[t, u] = s[t] s[u] K[t mod n, u mod n].  The regression coefficients are
beta = alpha - alpha* and f(x) = sum_i beta_i K(x_i, x) + bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConvergenceError
from .linear import Standardizer

TAU = 1e-12


@dataclass(frozen=True)
class DualSolution:
    beta: np.ndarray
    bias: float
    violation: float
    iterations: int


def solve_svr_dual(K, y, C: float, epsilon: float, tol: float = 1e-3, max_iter: int = 100_000) -> DualSolution:
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if K.shape != (n, n):
        raise ValueError(f"kernel shape {K.shape} does not match {n} targets")
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-8:
        raise ValueError("kernel matrix is not symmetric")
    if C <= 0 or epsilon < 0:
        raise ValueError("need C > 0 and epsilon >= 0")

    sign = np.concatenate([np.ones(n), -np.ones(n)])
    alpha = np.zeros(2 * n)
    grad = np.concatenate([epsilon - y, epsilon + y])
    kdiag = np.tile(np.diag(K), 2)

    def q_row(t):
        return sign[t] * sign * np.tile(K[t % n], 2)

    violation = np.inf
    it = 0
    while True:
        neg_sg = -sign * grad
        up = np.where(sign > 0, alpha < C, alpha > 0)
        low = np.where(sign > 0, alpha > 0, alpha < C)
        if not up.any() or not low.any():
            violation = 0.0
            break
        i = int(np.argmax(np.where(up, neg_sg, -np.inf)))
        g_max = neg_sg[i]
        g_min = np.min(neg_sg[low])
        violation = g_max - g_min
        if violation < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not converge in {max_iter} iterations", violation)
        it += 1

        Ki = np.tile(K[i % n], 2)
        b = g_max - neg_sg
        cand = low & (b > 0)
        a = kdiag[i] + kdiag - 2.0 * Ki
        a = np.where(a > 0, a, TAU)
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))

        Qi = sign[i] * sign * Ki
        Qj = q_row(j)
        ai, aj = alpha[i], alpha[j]
        if sign[i] != sign[j]:
            quad = kdiag[i] + kdiag[j] + 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = kdiag[i] + kdiag[j] - 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
                if aj > C:
                    aj, ai = C, total - C
            else:
                if aj < 0:
                    aj, ai = 0.0, total
                if ai < 0:
                    ai, aj = 0.0, total
        d_i, d_j = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        grad += Qi * d_i + Qj * d_j

    beta = alpha[:n] - alpha[n:]
    return DualSolution(beta, -_rho(alpha, grad, sign, C), float(violation), it)


def _rho(alpha, grad, sign, C) -> float:
    sg = sign * grad
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(np.mean(sg[free]))
    ub_mask = (at_upper & (sign < 0)) | (at_lower & (sign > 0))
    lb_mask = (at_upper & (sign > 0)) | (at_lower & (sign < 0))
    ub = np.min(sg[ub_mask]) if ub_mask.any() else np.inf
    lb = np.max(sg[lb_mask]) if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "rbf":
        return np.exp(-gamma * cdist(A, B, "sqeuclidean"))
    if kernel == "linear":
        return np.asarray(A) @ np.asarray(B).T
    raise ValueError(f"unknown kernel {kernel!r}")


class SVRHead:
    """Kernel SVR on standardised inputs; only support vectors are kept."""

    def __init__(self, scaler, support, beta, bias, kernel, gamma):
        self.scaler = scaler
        self.support = np.asarray(support, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.bias = float(bias)
        self.kernel = kernel
        self.gamma = float(gamma)

    @classmethod
    def fit(cls, X, y, *, C=1.0, epsilon=0.1, kernel="rbf", gamma="scale", tol=1e-3, max_iter=100_000):
        scaler = Standardizer.fit(X)
        Xs = scaler.transform(X)
        if gamma == "scale":
            var = Xs.var()
            gamma = 1.0 / (Xs.shape[1] * var) if var > 0 else 1.0
        y = np.asarray(y, dtype=float)
        # centred targets make the solution path independent of the price level
        shift = y.mean()
        sol = solve_svr_dual(kernel_matrix(Xs, Xs, kernel, gamma), y - shift, C, epsilon, tol, max_iter)
        keep = sol.beta != 0
        return cls(scaler, Xs[keep].reshape(-1, Xs.shape[1]), sol.beta[keep], sol.bias + shift, kernel, gamma)

    def predict(self, X) -> np.ndarray:
        Xs = self.scaler.transform(X)
        if not len(self.beta):
            return np.full(len(Xs), self.bias)
        return kernel_matrix(Xs, self.support, self.kernel, self.gamma) @ self.beta + self.bias

    def state(self) -> dict:
        return {
            "scaler": self.scaler.state(),
            "support": self.support.tolist(),
            "beta": self.beta.tolist(),
            "bias": self.bias,
            "kernel": self.kernel,
            "gamma": self.gamma,
        }

    @classmethod
    def from_state(cls, s: dict) -> "SVRHead":
        support = np.array(s["support"], dtype=float).reshape(-1, len(s["scaler"]["mean"]))
        return cls(Standardizer.from_state(s["scaler"]), support, s["beta"], s["bias"], s["kernel"], s["gamma"])
