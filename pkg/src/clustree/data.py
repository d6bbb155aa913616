from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    """Feature matrix ``X`` (n_obs x p), outcomes ``y`` and group labels.

    Group labels are stored as strings; any hashable label is converted with
    ``str``. ``feature_names`` defaults to ``x1..xp``.
    """

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    feature_names: list = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
        n, p = X.shape
        if n < 1:
            raise DataError("dataset is empty")
        y = np.asarray(self.y, dtype=float).ravel()
        groups = np.asarray([str(g) for g in np.asarray(self.groups).ravel()], dtype=object)
        if len(y) != n or len(groups) != n:
            raise DataError(
                f"length mismatch: X has {n} rows, y has {len(y)}, groups has {len(groups)}"
            )
        if np.isnan(X).any() or np.isnan(y).any():
            raise DataError("missing values (NaN) are not allowed")
        names = self.feature_names
        if names is None:
            names = [f"x{j + 1}" for j in range(p)]
        names = [str(s) for s in names]
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} features")
        self.X, self.y, self.groups, self.feature_names = X, y, groups, names

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def group_labels(self) -> list:
        """Sorted distinct group labels."""
        return sorted(set(self.groups))

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.groups[rows], list(self.feature_names))

    def group(self, label) -> "Dataset":
        return self.subset(self.groups == str(label))

    def split_by_group(self) -> dict:
        return {g: self.group(g) for g in self.group_labels()}
