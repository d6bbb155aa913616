"""CART regression trees with squared-error splitting.

Tie rule: among splits whose impurity reduction is within a relative
``1e-12`` of the best, the lowest feature index wins, then the lowest
threshold. Candidate thresholds are midpoints between consecutive distinct
sorted feature values; routing sends ``x[f] <= threshold`` left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset
from .numerics import RandomSource

PURE_TOL = 1e-12
GAIN_TOL = 1e-12
LEAF = -1


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class TreeConfig:
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: Optional[int] = None
    max_features: Optional[int] = None

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")

    def to_dict(self):
        return {
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
        }


class RegressionTree:
    """Binary tree stored as flat node arrays.

    ``feature[i] == -1`` marks a leaf. ``value`` holds the mean training
    outcome of each node and ``n_node`` its training count.
    """

    def __init__(self, feature, threshold, left, right, value, n_node, n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.n_node = np.asarray(n_node, dtype=np.int64)
        self.n_features = int(n_features)
        self.depth = self._depth()

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def _depth(self):
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.node_count else 0

    def used_features(self) -> set:
        return {int(f) for f in self.feature if f != LEAF}

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = self._check_X(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f != LEAF
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold[node]
            child = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, child, node)
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def _check_X(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def to_dict(self, node: int = 0) -> dict:
        """Nested-node representation; leaves carry ``prediction`` and ``n_leaf``."""
        if self.feature[node] == LEAF:
            return {"prediction": float(self.value[node]), "n_leaf": int(self.n_node[node])}
        return {
            "feature_index": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "n_node": int(self.n_node[node]),
            "value": float(self.value[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    def serialize(self) -> dict:
        return {"n_features": self.n_features, "root": self.to_dict()}

    @classmethod
    def deserialize(cls, doc: dict) -> "RegressionTree":
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "value", "n_node")}

        def add(nd):
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(LEAF if k in ("feature", "left", "right") else 0)
            if "prediction" in nd:
                cols["value"][i] = nd["prediction"]
                cols["n_node"][i] = nd["n_leaf"]
                cols["threshold"][i] = np.nan
                return i
            cols["feature"][i] = nd["feature_index"]
            cols["threshold"][i] = nd["threshold"]
            cols["value"][i] = nd.get("value", np.nan)
            cols["n_node"][i] = nd.get("n_node", 0)
            cols["left"][i] = add(nd["left"])
            cols["right"][i] = add(nd["right"])
            return i

        add(doc["root"])
        return cls(n_features=doc["n_features"], **cols)

    @classmethod
    def from_nested(cls, root: dict, n_features: int) -> "RegressionTree":
        """Build a tree by hand from nested nodes (useful for fixtures)."""
        return cls.deserialize({"n_features": n_features, "root": root})


def _build(X, y, config: TreeConfig, rng: Optional[RandomSource]):
    """Grow the tree breadth-first, splitting every node of a level at once.

    Rows of all active nodes are sorted by (node, feature value) for every
    feature in one ``argsort``; segment-wise cumulative sums then give the
    squared-error reduction of every candidate split.
    """
    n, p = X.shape
    max_features = p if config.max_features is None else min(config.max_features, p)
    if max_features < p and rng is None:
        raise ValueError("feature subsampling requires a RandomSource")
    max_depth = np.inf if config.max_depth is None else config.max_depth
    msl = config.min_samples_leaf

    order0 = np.argsort(X, axis=0, kind="stable")
    rank = np.empty_like(order0)
    np.put_along_axis(rank, order0, np.arange(n)[:, None], axis=0)

    feature = [LEAF]
    threshold = [np.nan]
    left = [LEAF]
    right = [LEAF]
    value = [float(np.mean(y))]
    n_node = [n]

    def splittable(count, depth):
        return (count >= config.min_samples_split) & (count >= 2 * msl) & (depth < max_depth)

    rows = np.arange(n)
    slot = np.zeros(n, dtype=np.int64)
    ids = np.array([0])
    depth = 0
    if not splittable(n, 0):
        rows = rows[:0]

    while len(rows):
        A = len(ids)
        m = len(rows)
        counts = np.bincount(slot, minlength=A)
        mean = np.bincount(slot, weights=y[rows], minlength=A) / counts
        yc = y[rows] - mean[slot]

        order = np.argsort(slot[:, None] * n + rank[rows], axis=0)
        xs = np.take_along_axis(X[rows], order, axis=0)
        ys = yc[order]
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        seg = np.repeat(np.arange(A), counts)

        csum = np.cumsum(ys, axis=0)
        before = np.vstack((np.zeros((1, p)), csum))[starts]
        ls = csum - before[seg]
        total = (csum[starts + counts - 1] - before)[seg]
        n_left = (np.arange(m) - starts[seg] + 1).astype(float)[:, None]
        n_right = counts[seg][:, None] - n_left
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = ls**2 / n_left + (total - ls) ** 2 / n_right - total**2 / counts[seg][:, None]

        valid = np.zeros((m, p), dtype=bool)
        valid[:-1] = xs[1:] > xs[:-1]
        valid &= (n_right >= msl) & (n_left >= msl)
        ysorted = ys[:, 0]
        pure = (np.maximum.reduceat(ysorted, starts) - np.minimum.reduceat(ysorted, starts)) <= PURE_TOL
        valid &= ~pure[seg][:, None]
        if max_features < p:
            chosen = np.zeros((A, p), dtype=bool)
            for a in range(A):
                chosen[a, rng.gen.choice(p, size=max_features, replace=False)] = True
            valid &= chosen[seg]
        gain = np.where(valid, gain, -np.inf)

        best = np.maximum.reduceat(gain, starts, axis=0).max(axis=1)
        sse = np.bincount(slot, weights=yc**2, minlength=A)
        does_split = np.isfinite(best) & (best > GAIN_TOL * sse / counts)
        if not does_split.any():
            break

        # tie rule: lowest feature index, then lowest threshold
        cutoff = best - GAIN_TOL * np.abs(best)
        near = gain >= cutoff[seg][:, None]
        f_best = np.argmax(np.logical_or.reduceat(near, starts, axis=0), axis=1)
        pos_ok = near[np.arange(m), f_best[seg]]
        pos = np.minimum.reduceat(np.where(pos_ok, np.arange(m), m), starts)

        split_slots = np.flatnonzero(does_split)
        child_base = np.full(A, -1, dtype=np.int64)
        child_base[split_slots] = 2 * np.arange(len(split_slots))
        fs = f_best[split_slots]
        lo = xs[pos[split_slots], fs]
        hi = xs[pos[split_slots] + 1, fs]
        thr = 0.5 * (lo + hi)
        thr = np.where((lo <= thr) & (thr < hi), thr, lo)

        node_thr = np.full(A, np.nan)
        node_thr[split_slots] = thr
        node_f = np.zeros(A, dtype=np.int64)
        node_f[split_slots] = fs

        keep = does_split[slot]
        rows, slot = rows[keep], slot[keep]
        go_right = X[rows, node_f[slot]] > node_thr[slot]
        slot = child_base[slot] + go_right

        n_children = 2 * len(split_slots)
        c_counts = np.bincount(slot, minlength=n_children)
        c_vals = np.bincount(slot, weights=y[rows], minlength=n_children) / c_counts
        c_ids = np.arange(len(feature), len(feature) + n_children)
        feature.extend([LEAF] * n_children)
        threshold.extend([np.nan] * n_children)
        left.extend([LEAF] * n_children)
        right.extend([LEAF] * n_children)
        value.extend(c_vals.tolist())
        n_node.extend(c_counts.tolist())
        for k, a in enumerate(split_slots):
            i = ids[a]
            feature[i] = int(fs[k])
            threshold[i] = float(thr[k])
            left[i] = int(c_ids[2 * k])
            right[i] = int(c_ids[2 * k + 1])

        depth += 1
        alive = splittable(c_counts, depth)
        remap = np.cumsum(alive) - 1
        keep = alive[slot]
        rows, slot = rows[keep], remap[slot[keep]]
        ids = c_ids[alive]

    return RegressionTree(feature, threshold, left, right, value, n_node, p)


def fit_tree(data: Dataset, config: TreeConfig = TreeConfig(), rng: Optional[RandomSource] = None):
    """Greedy CART fit on ``data`` minimizing within-node squared error."""
    return fit_tree_arrays(data.X, data.y, config, rng)


def fit_tree_arrays(X, y, config: TreeConfig = TreeConfig(), rng=None) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise FitError("cannot fit a tree on an empty dataset")
    if len(y) != X.shape[0]:
        raise FitError("X and y lengths differ")
    return _build(X, y, config, rng)


def predict_tree(tree: RegressionTree, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_tree expects a single feature vector")
    if np.isnan(x).any():
        raise ValueError("feature vector contains NaN")
    return float(tree.predict(x)[0])
