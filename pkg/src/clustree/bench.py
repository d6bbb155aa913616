"""Replicated comparison of the weighted ensembles against pooled trees and forests."""

from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ensemble import FOREST, TREE, fit_ensemble
from .forest import fit_forest_arrays
from .numerics import RandomSource
from .simgen import SimConfig, generate
from .tree import TreeConfig, fit_tree_arrays

log = logging.getLogger(__name__)

DT = "decision-tree"
RF = "random-forest-J"
WST = "weighted-sum-of-trees"
WSF = "weighted-sum-of-forests"
METHODS = (DT, RF, WST, WSF)

RESULT_HEADER = ["setting", "dgp", "n", "K", "sigma_alpha", "replicate", "method",
                 "mse", "fit_seconds", "predict_seconds"]
SUMMARY_HEADER = ["setting", "dgp", "n", "K", "sigma_alpha", "method", "n_ok", "n_failed",
                  "mse_mean", "mse_median", "mse_q1", "mse_q3",
                  "fit_seconds_mean", "fit_seconds_median",
                  "predict_seconds_mean", "predict_seconds_median"]


def standardize_outcome(train_y, test_y):
    """Center and scale both vectors by the training mean and (population) std."""
    train_y = np.asarray(train_y, dtype=float)
    test_y = np.asarray(test_y, dtype=float)
    mean = float(train_y.mean())
    std = float(train_y.std())
    if not std > 0:
        raise ValueError("training outcome has zero variance")
    return (train_y - mean) / std, (test_y - mean) / std, mean, std


def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("mse of empty vectors")
    return float(np.mean((y_true - y_pred) ** 2))


@dataclass
class BenchmarkSpec:
    setting: int
    n: Sequence[int]
    K: Sequence[int]
    sigma_alpha: Sequence[float] = (1.0,)
    dgp: Sequence[str] = ("mu1",)
    replicates: int = 20
    methods: Sequence[str] = METHODS
    seed: int = 0
    stage1: str = "logistic"
    forest_size: Optional[int] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        self.n = [int(v) for v in np.atleast_1d(self.n)]
        self.K = [int(v) for v in np.atleast_1d(self.K)]
        self.sigma_alpha = [float(v) for v in np.atleast_1d(self.sigma_alpha)]
        self.dgp = [str(v) for v in np.atleast_1d(self.dgp)]
        # validates every cell up front
        self.configs()

    def configs(self) -> list:
        if self.setting == 3:
            grid = itertools.product(self.dgp, self.n, self.K)
            return [SimConfig(3, n, K, dgp=d) for d, n, K in grid]
        grid = itertools.product(self.sigma_alpha, self.n, self.K)
        return [SimConfig(self.setting, n, K, sigma_alpha=s) for s, n, K in grid]

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkSpec":
        return cls(**doc)


@dataclass
class BenchmarkResult:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def select(self, method=None, **where) -> list:
        out = []
        for r in self.rows:
            if method is not None and r["method"] != method:
                continue
            if all(r[k] == v for k, v in where.items()):
                out.append(r)
        return out

    def mse_values(self, method, **where) -> np.ndarray:
        return np.array([r["mse"] for r in self.select(method, **where)], dtype=float)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_HEADER)
            for r in self.rows:
                w.writerow([_fmt(r[k]) for k in RESULT_HEADER])

    def summary(self) -> list:
        keyf = lambda r: tuple(r[k] for k in ("setting", "dgp", "n", "K", "sigma_alpha", "method"))
        out = []
        for key, grp in itertools.groupby(sorted(self.rows, key=lambda r: _sort_key(keyf(r))), key=keyf):
            grp = list(grp)
            m = np.array([r["mse"] for r in grp], dtype=float)
            ok = np.isfinite(m)
            fit = np.array([r["fit_seconds"] for r in grp], dtype=float)[ok]
            pred = np.array([r["predict_seconds"] for r in grp], dtype=float)[ok]
            m = m[ok]
            stats = [float("nan")] * 8
            if ok.any():
                q1, med, q3 = np.quantile(m, [0.25, 0.5, 0.75])
                stats = [m.mean(), med, q1, q3, fit.mean(), np.median(fit), pred.mean(), np.median(pred)]
            out.append(dict(zip(SUMMARY_HEADER, [*key, int(ok.sum()), int((~ok).sum()), *map(float, stats)])))
        return out

    def write_summary_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for r in self.summary():
                w.writerow([_fmt(r[k]) for k in SUMMARY_HEADER])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sort_key(key):
    return tuple("" if v is None else (f"{v:020.6f}" if isinstance(v, (int, float)) else v) for v in key)


def cell_seed(base_seed: int, cfg: SimConfig, replicate: int) -> int:
    """Seed of one (configuration, replicate) cell, independent of grid order."""
    sigma = "" if cfg.setting == 3 else repr(float(cfg.sigma_alpha))
    key = f"{base_seed}|{cfg.setting}|{cfg.dgp or ''}|{cfg.n}|{cfg.K}|{sigma}|{replicate}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


@dataclass
class FitRecord:
    method: str
    mse: float
    fit_seconds: float
    predict_seconds: float
    n_trees: int
    error: Optional[str] = None


def fit_and_score(method, train, test_X, test_y, test_groups, rng, stage1="logistic",
                  forest_size=None, config=TreeConfig()) -> FitRecord:
    """Fit one method on standardized training data and score it on the test rows."""
    J = len(train.group_labels())
    t0 = time.perf_counter()
    if method == DT:
        model = fit_tree_arrays(train.X, train.y, config, rng)
        n_trees = 1
    elif method == RF:
        model = fit_forest_arrays(train.X, train.y, J, config, rng)
        n_trees = model.n_trees
    elif method in (WST, WSF):
        base = TREE if method == WST else FOREST
        size = (forest_size or J) if base == FOREST else None
        model = fit_ensemble(train, base, stage1, config, size, rng)
        n_trees = J if base == TREE else sum(m.n_trees for m in model.learners)
    else:
        raise ValueError(f"unknown method {method!r}")
    t1 = time.perf_counter()
    if method in (WST, WSF):
        pred = model.predict(test_X, groups=test_groups)
    else:
        pred = model.predict(test_X)
    t2 = time.perf_counter()
    return FitRecord(method, mse(test_y, pred), t1 - t0, t2 - t1, n_trees)


def run_cell(spec: BenchmarkSpec, cfg: SimConfig, replicate: int):
    seed = cell_seed(spec.seed, cfg, replicate)
    base = dict(setting=cfg.setting, dgp=cfg.dgp, n=cfg.n, K=cfg.K,
                sigma_alpha=None if cfg.setting == 3 else cfg.sigma_alpha, replicate=replicate)
    rows, failures = [], []
    try:
        sim = generate(SimConfig(**{**cfg.to_dict(), "seed": seed}), RandomSource(seed))
        ytr, yte, _, _ = standardize_outcome(sim.train.y, sim.test.y)
        train = sim.train
        train.y = ytr
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        msg = f"{base}: data generation failed: {exc}"
        failures.append(msg)
        for method in spec.methods:
            rows.append({**base, "method": method, "mse": float("nan"),
                         "fit_seconds": float("nan"), "predict_seconds": float("nan")})
        return rows, failures
    cell_rng = RandomSource(seed)
    for method in spec.methods:
        rng = cell_rng.child(METHODS.index(method))
        try:
            rec = fit_and_score(method, train, sim.test.X, yte, sim.test.groups, rng,
                                spec.stage1, spec.forest_size)
            rows.append({**base, "method": method, "mse": rec.mse,
                         "fit_seconds": rec.fit_seconds, "predict_seconds": rec.predict_seconds})
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            failures.append(f"{base} {method}: {exc}")
            rows.append({**base, "method": method, "mse": float("nan"),
                         "fit_seconds": float("nan"), "predict_seconds": float("nan")})
    return rows, failures


def run_benchmark(spec: BenchmarkSpec, threads: int = 1, progress=None) -> BenchmarkResult:
    """Run every (configuration, replicate) cell; results are in grid order.

    Cell seeds depend only on ``spec.seed`` and the cell itself, so results
    do not depend on ``threads``. Timing columns are only comparable when
    ``threads == 1``.
    """
    cells = [(cfg, r) for cfg in spec.configs() for r in range(spec.replicates)]
    result = BenchmarkResult()
    if threads <= 1:
        outputs = []
        for i, (cfg, r) in enumerate(cells):
            outputs.append(run_cell(spec, cfg, r))
            if progress:
                progress(i + 1, len(cells))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(lambda c: run_cell(spec, *c), cells))
    for rows, failures in outputs:
        result.rows.extend(rows)
        result.failures.extend(failures)
    for f in result.failures:
        log.warning("benchmark cell failed: %s", f)
    return result


def spec_to_dict(spec: BenchmarkSpec) -> dict:
    return asdict(spec)
