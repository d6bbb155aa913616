"""Variable importance and pairwise interaction (VIVI) matrices.

Importance is permutation importance (increase in MSE). Interaction is
Friedman's H^2 computed on a quantile grid: the two-feature partial
dependence surface is centered, and the one-feature curves are its grid
marginals, so the additive part is an orthogonal projection and
H^2 is always in [0, 1].
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .numerics import RandomSource, as_source

DENOM_TOL = 1e-12


@dataclass
class ViviMatrix:
    """p x p matrix: importance on the diagonal, H^2 interaction off it."""

    matrix: np.ndarray
    feature_names: list
    raw_importance: np.ndarray = field(default=None)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        p = len(self.feature_names)
        if self.matrix.shape != (p, p):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {p} feature names")

    @property
    def importance(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def interaction(self) -> np.ndarray:
        out = self.matrix.copy()
        np.fill_diagonal(out, 0.0)
        return out

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", *self.feature_names])
            for name, row in zip(self.feature_names, self.matrix):
                w.writerow([name, *(repr(float(v)) for v in row)])

    @classmethod
    def read_csv(cls, path) -> "ViviMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        names = rows[0][1:]
        return cls(np.array([[float(v) for v in r[1:]] for r in rows[1:]]), names)


def _predict(model, X):
    return np.asarray(model.predict(X), dtype=float)


def permutation_importance(model, data: Dataset, repeats: int = 10, rng=None, clamp: bool = True):
    """Mean increase in MSE when each column is permuted.

    Negative values are clamped to zero unless ``clamp`` is false.
    """
    X, y = data.X, data.y
    if getattr(model, "n_features", X.shape[1]) != X.shape[1]:
        raise ValueError(f"model expects {model.n_features} features, data has {X.shape[1]}")
    rng = as_source(rng)
    base = np.mean((y - _predict(model, X)) ** 2)
    out = np.zeros(X.shape[1])
    for f in range(X.shape[1]):
        deltas = []
        for _ in range(repeats):
            Xp = X.copy()
            Xp[:, f] = X[rng.gen.permutation(len(X)), f]
            deltas.append(np.mean((y - _predict(model, Xp)) ** 2) - base)
        out[f] = np.mean(deltas)
    return np.maximum(out, 0.0) if clamp else out


def quantile_grid(values, grid_size: int) -> np.ndarray:
    """Distinct empirical quantiles; capped at the number of distinct values."""
    distinct = np.unique(values)
    if len(distinct) <= grid_size:
        return distinct
    return np.unique(np.quantile(values, np.linspace(0, 1, grid_size)))


def partial_dependence_2d(model, X, i, j, gi, gj) -> np.ndarray:
    """Mean prediction over rows of ``X`` with columns ``i, j`` set to each grid pair."""
    n = len(X)
    a, b = np.meshgrid(gi, gj, indexing="ij")
    big = np.tile(X, (a.size, 1))
    big[:, i] = np.repeat(a.ravel(), n)
    big[:, j] = np.repeat(b.ravel(), n)
    return _predict(model, big).reshape(a.size, n).mean(axis=1).reshape(a.shape)


def h_squared(pd2) -> float:
    pd2 = pd2 - pd2.mean()
    pdi = pd2.mean(axis=1, keepdims=True)
    pdj = pd2.mean(axis=0, keepdims=True)
    denom = np.sum(pd2**2)
    if denom < DENOM_TOL:
        return 0.0
    return float(np.sum((pd2 - pdi - pdj) ** 2) / denom)


def pairwise_interaction(model, data: Dataset, grid_size: int = 10) -> np.ndarray:
    X = data.X
    p = X.shape[1]
    grids = [quantile_grid(X[:, f], grid_size) for f in range(p)]
    constant = [f for f in range(p) if len(grids[f]) < 2]
    if constant:
        names = [data.feature_names[f] for f in constant]
        warnings.warn(f"constant features {names}: interaction set to 0")
    H = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            if i in constant or j in constant:
                continue
            H[i, j] = H[j, i] = h_squared(partial_dependence_2d(model, X, i, j, grids[i], grids[j]))
    return H


def vivi(model, data: Dataset, repeats: int = 10, grid_size: int = 10, rng=None) -> ViviMatrix:
    raw = permutation_importance(model, data, repeats, rng, clamp=False)
    M = pairwise_interaction(model, data, grid_size)
    np.fill_diagonal(M, np.maximum(raw, 0.0))
    return ViviMatrix(M, list(data.feature_names), raw)


def weighted_vivi(vivis, w) -> ViviMatrix:
    """Element-wise weighted sum of VIVI matrices sharing one feature order."""
    vivis = list(vivis)
    w = np.asarray(w, dtype=float)
    if len(vivis) != len(w) or not vivis:
        raise ValueError(f"{len(vivis)} matrices for {len(w)} weights")
    names = vivis[0].feature_names
    for v in vivis[1:]:
        if v.feature_names != names or v.matrix.shape != vivis[0].matrix.shape:
            raise ValueError("VIVI matrices differ in shape or feature order")
    M = np.tensordot(w, np.stack([v.matrix for v in vivis]), axes=1)
    return ViviMatrix(M, list(names))
