"""Fit and predict wall-clock times per method as n grows (single-threaded)."""

import argparse
import csv
from pathlib import Path

import numpy as np

from clustree.bench import METHODS, fit_and_score, standardize_outcome
from clustree.data import Dataset
from clustree.numerics import RandomSource
from clustree.simgen import SimConfig, generate

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[20, 100, 500])
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--out", type=Path, default=Path("results/runtime.csv"))
    args = p.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in args.n:
        for method in METHODS:
            fit, pred = [], []
            for r in range(args.runs):
                sim = generate(SimConfig(1, n, args.K, seed=r))
                ytr, yte, _, _ = standardize_outcome(sim.train.y, sim.test.y)
                train = Dataset(sim.train.X, ytr, sim.train.groups)
                rec = fit_and_score(method, train, sim.test.X, yte, sim.test.groups, RandomSource(r))
                fit.append(rec.fit_seconds)
                pred.append(rec.predict_seconds)
            rows.append([n, args.K, method, np.mean(fit), np.median(fit), np.mean(pred), np.median(pred)])
            print(f"n={n:<4} {method:<24} fit mean {np.mean(fit):.4f}s median {np.median(fit):.4f}s")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "K", "method", "fit_seconds_mean", "fit_seconds_median",
                    "predict_seconds_mean", "predict_seconds_median"])
        w.writerows(rows)
    for method in METHODS:
        t = {r[0]: r[4] for r in rows if r[2] == method}
        lo, hi = min(t), max(t)
        print(f"{method:<24} median fit-time ratio n={hi}/n={lo}: {t[hi] / t[lo]:.1f}x")
