"""Weighted sum-of-trees prediction for observations from unseen groups."""

from .data import Dataset
from .ensemble import WeightedEnsemble, fit_ensemble, predict_group, predict_point
from .forest import RandomForest, fit_forest, predict_forest
from .numerics import RandomSource
from .simgen import SimConfig, generate
from .stage1 import fit_classifier, group_averaged_weights, predict_weights
from .tree import RegressionTree, TreeConfig, fit_tree, predict_tree

__all__ = [
    "Dataset", "RandomSource", "TreeConfig", "RegressionTree", "fit_tree", "predict_tree",
    "RandomForest", "fit_forest", "predict_forest", "fit_classifier", "predict_weights",
    "group_averaged_weights", "WeightedEnsemble", "fit_ensemble", "predict_point",
    "predict_group", "SimConfig", "generate",
]
