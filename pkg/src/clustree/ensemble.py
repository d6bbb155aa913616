"""Weighted sum-of-trees: one base learner per training group, combined with
classifier-derived similarity weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset
from .forest import RandomForest, fit_forest_arrays
from .numerics import RandomSource, as_source
from .stage1 import GroupClassifier, deserialize_classifier, fit_classifier
from .tree import RegressionTree, TreeConfig, fit_tree_arrays

TREE = "tree"
FOREST = "forest"
POINT = "point"
GROUP = "group"


class EnsembleError(ValueError):
    pass


@dataclass
class WeightedEnsemble:
    base_kind: str
    learners: list
    classifier: GroupClassifier
    group_labels: list
    feature_names: list
    tree_config: TreeConfig = field(default_factory=TreeConfig)
    forest_size: Optional[int] = None
    group_sizes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not len(self.learners) == len(self.classifier.class_labels) == len(self.group_labels):
            raise EnsembleError("learners, classifier classes and group labels are misaligned")
        if list(self.classifier.class_labels) != list(self.group_labels):
            raise EnsembleError("classifier class order differs from learner order")

    @property
    def n_groups(self) -> int:
        return len(self.learners)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def learner_predictions(self, X) -> np.ndarray:
        """Per-learner predictions, shape (n_rows, J)."""
        X = self._check(X)
        return np.column_stack([m.predict(X) for m in self.learners])

    def weights(self, X) -> np.ndarray:
        return self.classifier.predict_proba(self._check(X))

    def predict(self, X, groups=None, mode: Optional[str] = None) -> np.ndarray:
        """Predict rows of ``X``.

        When ``groups`` (test group labels) is given the default is
        group-averaged weighting, otherwise per-point weighting.
        """
        return self.predict_with_weights(X, groups, mode)[0]

    def predict_with_weights(self, X, groups=None, mode: Optional[str] = None):
        X = self._check(X)
        if X.shape[0] == 0:
            raise ValueError("no rows to predict")
        if mode is None:
            mode = POINT if groups is None else GROUP
        W = self.weights(X)
        if mode == GROUP:
            if groups is None:
                W = np.broadcast_to(W.mean(axis=0), W.shape).copy()
            else:
                groups = np.asarray([str(g) for g in groups], dtype=object)
                for g in np.unique(groups):
                    rows = groups == g
                    W[rows] = W[rows].mean(axis=0)
        elif mode != POINT:
            raise ValueError(f"unknown prediction mode {mode!r}")
        T = self.learner_predictions(X)
        return np.sum(W * T, axis=1), W

    def used_features(self) -> set:
        return set().union(*(m.used_features() for m in self.learners))

    def serialize(self) -> dict:
        return {
            "base_kind": self.base_kind,
            "group_labels": list(self.group_labels),
            "feature_names": list(self.feature_names),
            "tree_config": self.tree_config.to_dict(),
            "forest_size": self.forest_size,
            "group_sizes": dict(self.group_sizes),
            "classifier": self.classifier.serialize(),
            "learners": [m.serialize() for m in self.learners],
        }

    @classmethod
    def deserialize(cls, doc: dict) -> "WeightedEnsemble":
        load = RegressionTree.deserialize if doc["base_kind"] == TREE else RandomForest.deserialize
        return cls(
            base_kind=doc["base_kind"],
            learners=[load(d) for d in doc["learners"]],
            classifier=deserialize_classifier(doc["classifier"]),
            group_labels=list(doc["group_labels"]),
            feature_names=list(doc["feature_names"]),
            tree_config=TreeConfig(**doc["tree_config"]),
            forest_size=doc.get("forest_size"),
            group_sizes=dict(doc.get("group_sizes", {})),
        )


def fit_ensemble(data: Dataset, base_kind: str = TREE, stage1_kind: str = "logistic",
                 tree_config: TreeConfig = TreeConfig(), forest_size: Optional[int] = None,
                 rng=None) -> WeightedEnsemble:
    """Fit the group classifier and one base learner per training group.

    ``forest_size`` defaults to the number of training groups ``J``.
    Learner ``j`` draws from ``rng.child(j)``, so learners do not depend on
    each other's randomness.
    """
    if base_kind not in (TREE, FOREST):
        raise EnsembleError(f"unknown base learner {base_kind!r}")
    labels = data.group_labels()
    if len(labels) < 2:
        raise EnsembleError(f"the weighted ensemble needs at least 2 training groups, got {len(labels)}")
    rng = as_source(rng)
    classifier = fit_classifier(data, stage1_kind)
    J = len(labels)
    if base_kind == FOREST and forest_size is None:
        forest_size = J
    learners, sizes = [], {}
    for j, g in enumerate(labels):
        rows = data.groups == g
        X, y = data.X[rows], data.y[rows]
        sizes[g] = int(rows.sum())
        if base_kind == TREE:
            learners.append(fit_tree_arrays(X, y, tree_config, rng.child(j)))
        else:
            learners.append(fit_forest_arrays(X, y, forest_size, tree_config, rng.child(j)))
    return WeightedEnsemble(base_kind, learners, classifier, labels, list(data.feature_names),
                            tree_config, forest_size if base_kind == FOREST else None, sizes)


def predict_point(ens: WeightedEnsemble, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_point expects a single feature vector")
    return float(ens.predict(x, mode=POINT)[0])


def predict_group(ens: WeightedEnsemble, test_rows, mode: str = GROUP) -> np.ndarray:
    """Predict every row of one test group.

    In group mode a single weight vector, the mean over the group's rows,
    is shared by all rows.
    """
    test_rows = np.asarray(test_rows, dtype=float)
    if test_rows.ndim != 2 or test_rows.shape[0] == 0:
        raise ValueError("test_rows must be a non-empty 2-D array")
    if mode == GROUP:
        return ens.predict(test_rows, groups=np.zeros(len(test_rows)), mode=GROUP)
    return ens.predict(test_rows, mode=mode)
