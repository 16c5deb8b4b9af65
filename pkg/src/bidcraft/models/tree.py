"""Regression trees.

One grower serves plain CART (mean leaves) and the boosting flavours
(second-order leaves ``sum(residual) / (count + reg_lambda)`` under squared
loss, where the hessian is 1 per sample).  Growth is depth-first by
default or best-first when ``max_leaves`` is given.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] != LEAF]
        return self.value[node]

    def state(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_state(cls, s: dict) -> "Tree":
        return cls(
            np.array(s["feature"], dtype=np.int64),
            np.array(s["threshold"], dtype=float),
            np.array(s["left"], dtype=np.int64),
            np.array(s["right"], dtype=np.int64),
            np.array(s["value"], dtype=float),
        )


def _leaf_value(r: np.ndarray, lam: float) -> float:
    if lam == 0 and r.size and np.all(r == r[0]):
        return float(r[0])
    return float(r.sum() / (r.size + lam))


def _best_split(X, r, idx, lam, min_leaf):
    """Best (gain, feature, threshold) for the node holding ``idx``, or None."""
    m = idx.size
    if m < 2 * min_leaf:
        return None
    Xn = X[idx]
    rn = r[idx]
    if lam == 0:
        # shift-invariant criterion; centring keeps the sums well conditioned
        rn = rn - rn.mean()
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    left = np.cumsum(rn[order], axis=0)[:-1]
    total = rn.sum()
    n_left = np.arange(1, m, dtype=float)[:, None]
    n_right = m - n_left
    gain = left**2 / (n_left + lam) + (total - left) ** 2 / (n_right + lam) - total**2 / (m + lam)
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    # feature-major flattening: ties go to the lowest feature, then lowest position
    flat = int(np.argmax(gain.T))
    f, pos = divmod(flat, m - 1)
    lo, hi = xs[pos, f], xs[pos + 1, f]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(gain[pos, f]), f, float(thr)


def grow_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    leaf_value_rule: str = "mean",
    *,
    reg_lambda: float = 0.0,
    min_samples_leaf: int = 1,
    max_leaves: int | None = None,
    min_gain: float = 0.0,
) -> Tree:
    """Grow a regression tree on ``(X, y)``.

    With ``leaf_value_rule="second_order"`` the targets are read as
    residuals (negative gradients of squared loss) and ``reg_lambda``
    shrinks leaf values and split gains.  A node of mixed targets under
    the unregularised rule is split even at zero gain, so a tree of
    unlimited depth memorises distinct inputs.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or len(X) != len(r) or not len(r):
        raise ValueError("grow_tree needs a non-empty 2-D X matching y")
    if leaf_value_rule == "mean":
        lam = 0.0
    elif leaf_value_rule == "second_order":
        lam = float(reg_lambda)
    else:
        raise ValueError(f"unknown leaf_value_rule {leaf_value_rule!r}")

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(_leaf_value(r[idx], lam))
        return len(feature) - 1

    def candidate(idx, depth):
        if idx.size < min_samples_split or (max_depth is not None and depth >= max_depth):
            return None
        rn = r[idx]
        if np.all(rn == rn[0]):
            return None
        found = _best_split(X, r, idx, lam, min_samples_leaf)
        if found is None:
            return None
        gain = found[0]
        if lam == 0 and min_gain == 0:
            return found if max_leaves is None or gain > 0 else None
        return found if gain > min_gain else None

    def apply(node, idx, split):
        _, f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        return (left[node], li), (right[node], ri)

    root_idx = np.arange(len(r))
    root = new_node(root_idx)
    if max_leaves is None:
        stack = [(root, root_idx, 0)]
        while stack:
            node, idx, depth = stack.pop()
            split = candidate(idx, depth)
            if split is None:
                continue
            (ln, li), (rn_, ri) = apply(node, idx, split)
            stack.append((rn_, ri, depth + 1))
            stack.append((ln, li, depth + 1))
    else:
        heap, counter, n_leaves = [], 0, 1
        split = candidate(root_idx, 0)
        if split is not None:
            heap.append((-split[0], counter, root, root_idx, 0, split))
        while heap and n_leaves < max_leaves:
            _, _, node, idx, depth, split = heapq.heappop(heap)
            children = apply(node, idx, split)
            n_leaves += 1
            for child, cidx in children:
                csplit = candidate(cidx, depth + 1)
                if csplit is not None:
                    counter += 1
                    heapq.heappush(heap, (-csplit[0], counter, child, cidx, depth + 1, csplit))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )
