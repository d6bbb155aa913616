"""Shared helpers for the experiment scripts."""

import argparse
import logging
import time
from pathlib import Path

import numpy as np

from clustree.bench import run_benchmark


def parser(description, replicates=20):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--replicates", type=int, default=replicates)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    return p


def run_and_save(spec, name, args, by):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run_benchmark(spec, threads=args.threads,
                        progress=lambda i, n: logging.info("cell %d/%d", i, n) if i % 10 == 0 else None)
    res.write_csv(args.out_dir / f"{name}.csv")
    res.write_summary_csv(args.out_dir / f"{name}_summary.csv")
    print(f"{len(res.rows)} rows in {time.perf_counter() - t0:.0f}s -> {args.out_dir / name}.csv")
    for row in res.summary():
        print(f"  {by}={row[by]!s:>5} n={row['n']:<4} K={row['K']:<3} {row['method']:<24} "
              f"median {row['mse_median']:.3f}  mean {row['mse_mean']:.3f}  failed {row['n_failed']}")
    if res.failures:
        print(f"{len(res.failures)} failed cells, first: {res.failures[0]}")
    return res


def median_mse(res, method, **where):
    return float(np.median(res.mse_values(method, **where)))
