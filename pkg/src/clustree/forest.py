from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .numerics import RandomSource
from .tree import RegressionTree, TreeConfig, fit_tree_arrays


@dataclass
class RandomForest:
    """Bagged regression trees; prediction is the mean over members."""

    trees: list
    seeds: list
    bootstrap: bool = True
    config: TreeConfig = field(default_factory=TreeConfig)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def member_predictions(self, X) -> np.ndarray:
        """Array of shape (n_trees, n_rows)."""
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        return self.member_predictions(X).mean(axis=0)

    def used_features(self) -> set:
        return set().union(*(t.used_features() for t in self.trees))

    def serialize(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "bootstrap": self.bootstrap,
            "config": self.config.to_dict(),
            "seeds": [int(s) for s in self.seeds],
            "trees": [t.serialize() for t in self.trees],
        }

    @classmethod
    def deserialize(cls, doc: dict) -> "RandomForest":
        return cls(
            trees=[RegressionTree.deserialize(t) for t in doc["trees"]],
            seeds=list(doc["seeds"]),
            bootstrap=doc["bootstrap"],
            config=TreeConfig(**doc["config"]),
        )


def fit_forest_arrays(X, y, n_trees: int, config: TreeConfig = TreeConfig(),
                      rng: RandomSource = None, bootstrap: bool = True) -> RandomForest:
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    rng = rng if rng is not None else RandomSource(0)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    seeds = [rng.next_seed() for _ in range(n_trees)]
    trees = []
    for s in seeds:
        tree_rng = RandomSource(s)
        if bootstrap:
            rows = tree_rng.gen.integers(0, n, size=n)
            trees.append(fit_tree_arrays(X[rows], y[rows], config, tree_rng))
        else:
            trees.append(fit_tree_arrays(X, y, config, tree_rng))
    return RandomForest(trees, seeds, bootstrap, config)


def fit_forest(data: Dataset, n_trees: int, config: TreeConfig = TreeConfig(),
               rng: RandomSource = None, bootstrap: bool = True) -> RandomForest:
    """Fit ``n_trees`` trees, each on a bootstrap resample of size ``n_obs``.

    Per-tree seeds are drawn from ``rng`` up front and stored on the forest,
    so any member can be refit in isolation.
    """
    return fit_forest_arrays(data.X, data.y, n_trees, config, rng, bootstrap)


def predict_forest(forest: RandomForest, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_forest expects a single feature vector")
    return float(forest.predict(x)[0])
