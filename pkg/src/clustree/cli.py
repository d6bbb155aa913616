"""``clustree`` command line: simulate, fit, predict, benchmark, importance.

Every option can also be set through an environment variable named
``CLUSTREE_<COMMAND>_<OPTION>``, e.g. ``CLUSTREE_FIT_SEED=3``.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import bench
from .data import DataError, Dataset
from .ensemble import FOREST, GROUP, POINT, TREE, EnsembleError, fit_ensemble
from .importance import vivi, weighted_vivi
from .io import CsvError, align_features, load_model, read_dataset, save_model, write_dataset
from .numerics import RandomSource
from .simgen import DGPS, SimConfig, generate
from .stage1 import ClassifierError, group_averaged_weights

USER_ERRORS = (DataError, EnsembleError, ClassifierError, ValueError, OSError)


def _fail(msg):
    raise click.ClickException(msg)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Weighted sum-of-trees models for out-of-sample groups."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--setting", type=click.IntRange(1, 3), required=True)
@click.option("--dgp", type=click.Choice(DGPS), default=None, help="Required for setting 3.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Observations per group.")
@click.option("--K", "K", type=click.IntRange(min=2), required=True, help="Total number of groups.")
@click.option("--sigma-alpha", type=click.FloatRange(min=0), default=1.0, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--out-train", type=click.Path(dir_okay=False), required=True)
@click.option("--out-test", type=click.Path(dir_okay=False), required=True)
@click.option("--out-meta", type=click.Path(dir_okay=False), default=None,
              help="Sidecar JSON with the config and true means (default: <out-train>.meta.json).")
def simulate(setting, dgp, n, K, sigma_alpha, seed, out_train, out_test, out_meta):
    """Write one simulated train/test pair of CSV files."""
    if setting == 3 and dgp is None:
        raise click.UsageError("--dgp is required for --setting 3")
    if setting != 3 and dgp is not None:
        raise click.UsageError("--dgp only applies to --setting 3")
    cfg = SimConfig(setting, n, K, sigma_alpha=sigma_alpha, dgp=dgp, seed=seed)
    sim = generate(cfg, RandomSource(seed))
    out_meta = out_meta or str(out_train) + ".meta.json"
    try:
        write_dataset(out_train, sim.train)
        write_dataset(out_test, sim.test)
        meta = {
            "config": cfg.to_dict(),
            "train_groups": sim.train.group_labels(),
            "test_groups": sim.test.group_labels(),
            "train_mu": [float(v) for v in sim.train_mu],
            "test_mu": [float(v) for v in sim.test_mu],
        }
        Path(out_meta).write_text(json.dumps(meta) + "\n", encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot write output: {exc}")
    click.echo(f"train: {sim.train.n_obs} rows, {len(sim.train.group_labels())} groups -> {out_train}")
    click.echo(f"test: {sim.test.n_obs} rows, {len(sim.test.group_labels())} groups -> {out_test}")


@main.command()
@click.option("--train-csv", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--base", type=click.Choice([TREE, FOREST]), default=TREE, show_default=True)
@click.option("--stage1", type=click.Choice(["logistic", "nb"]), default="logistic", show_default=True)
@click.option("--forest-size", type=click.IntRange(min=1), default=None,
              help="Trees per group forest (default: number of training groups).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--out-model", type=click.Path(dir_okay=False), required=True)
def fit(train_csv, base, stage1, forest_size, seed, out_model):
    """Fit a weighted ensemble on a training CSV."""
    try:
        data, _ = read_dataset(train_csv)
        model = fit_ensemble(data, base, stage1, forest_size=forest_size, rng=RandomSource(seed))
        save_model(out_model, model)
    except USER_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"J = {model.n_groups}")
    for g in model.group_labels:
        click.echo(f"  {g}: {model.group_sizes[g]} rows")
    if base == FOREST:
        total = sum(m.n_trees for m in model.learners)
        click.echo(f"{model.n_groups} forests x {model.forest_size} trees = {total} trees")
    click.echo(f"model -> {out_model}")


def _weights_header(model):
    return [f"w_{g}" for g in model.group_labels]


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--test-csv", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mode", type=click.Choice([POINT, GROUP]), default=GROUP, show_default=True)
@click.option("--reorder", is_flag=True, help="Permute test columns by name to match the model.")
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True)
def predict(model_path, test_csv, mode, reorder, out_csv):
    """Predict a test CSV; group mode shares averaged weights within each group."""
    try:
        model = load_model(model_path)
        data, has_y = read_dataset(test_csv, require_y=False)
        data = align_features(data, model.feature_names, reorder)
        pred, W = model.predict_with_weights(data.X, data.groups, mode)
        with open(out_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group", *(["y_true"] if has_y else []), "y_pred", *_weights_header(model)])
            for i in range(data.n_obs):
                y_true = [repr(float(data.y[i]))] if has_y else []
                w.writerow([data.groups[i], *y_true, repr(float(pred[i])),
                            *(repr(float(v)) for v in W[i])])
    except USER_ERRORS as exc:
        _fail(str(exc))
    if has_y:
        click.echo(f"mse = {bench.mse(data.y, pred):.6g}")
    click.echo(f"{data.n_obs} predictions -> {out_csv}")


def _load_spec(path):
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith((".yml", ".yaml")):
        import yaml

        return yaml.safe_load(text)
    return json.loads(text)


@main.command()
@click.option("--spec-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON or YAML file with BenchmarkSpec fields; overrides the grid flags.")
@click.option("--setting", type=click.IntRange(1, 3), default=1, show_default=True)
@click.option("--n", "n", type=click.IntRange(min=1), multiple=True)
@click.option("--K", "K", type=click.IntRange(min=2), multiple=True)
@click.option("--sigma-alpha", type=click.FloatRange(min=0), multiple=True)
@click.option("--dgp", type=click.Choice(DGPS), multiple=True)
@click.option("--replicates", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--method", "methods", type=click.Choice(bench.METHODS), multiple=True)
@click.option("--stage1", type=click.Choice(["logistic", "nb"]), default="logistic", show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True)
@click.option("--summary-csv", type=click.Path(dir_okay=False), default=None)
def benchmark(spec_file, setting, n, K, sigma_alpha, dgp, replicates, methods, stage1, seed,
              threads, out_csv, summary_csv):
    """Run the replicated simulation comparison and write tidy results."""
    try:
        if spec_file:
            spec = bench.BenchmarkSpec.from_dict(_load_spec(spec_file))
        else:
            spec = bench.BenchmarkSpec(
                setting=setting, n=list(n) or [20], K=list(K) or [20],
                sigma_alpha=list(sigma_alpha) or [1.0], dgp=list(dgp) or ["mu1"],
                replicates=replicates, methods=list(methods) or list(bench.METHODS),
                seed=seed, stage1=stage1,
            )
    except (ValueError, TypeError, OSError) as exc:
        raise click.UsageError(f"invalid benchmark spec: {exc}")
    result = bench.run_benchmark(spec, threads=threads)
    try:
        result.write_csv(out_csv)
        if summary_csv:
            result.write_summary_csv(summary_csv)
    except OSError as exc:
        _fail(f"cannot write output: {exc}")
    click.echo(f"{len(result.rows)} result rows -> {out_csv}")
    if result.failures:
        for f in result.failures:
            click.echo(f"failed: {f}", err=True)
        _fail(f"{len(result.failures)} benchmark cell(s) failed")


def _parse_weights(spec, model, reorder):
    if spec == "uniform":
        return np.full(model.n_groups, 1.0 / model.n_groups)
    if spec.startswith("from-model:"):
        rows, _ = read_dataset(spec.split(":", 1)[1], require_y=False)
        rows = align_features(rows, model.feature_names, reorder)
        return group_averaged_weights(model.classifier, rows.X)
    raise click.BadParameter("expected 'uniform' or 'from-model:<group-rows-csv>'", param_hint="--weights")


def _safe_name(label):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data-csv", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--repeats", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--grid-size", type=click.IntRange(min=2), default=10, show_default=True)
@click.option("--weights", "weights_spec", default="uniform", show_default=True,
              help="'uniform' or 'from-model:<group-rows-csv>'.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--reorder", is_flag=True)
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True,
              help="Combined matrix; per-group matrices go next to it as <stem>.<group>.csv.")
def importance(model_path, data_csv, repeats, grid_size, weights_spec, seed, reorder, out_csv):
    """Per-group VIVI matrices and their weighted combination.

    Each group's learner is evaluated on that group's rows of the data CSV,
    or on all rows when the group is absent from it. Unclamped permutation
    importances go to <stem>.raw_importance.csv.
    """
    try:
        model = load_model(model_path)
        data, _ = read_dataset(data_csv)
        data = align_features(data, model.feature_names, reorder)
        w = _parse_weights(weights_spec, model, reorder)
        root = RandomSource(seed)
        out = Path(out_csv)
        mats = []
        for j, (g, learner) in enumerate(zip(model.group_labels, model.learners)):
            rows = data.groups == g
            subset = data.subset(rows) if rows.any() else data
            m = vivi(learner, subset, repeats, grid_size, root.child(j))
            path = out.with_name(f"{out.stem}.{_safe_name(g)}{out.suffix or '.csv'}")
            m.write_csv(path)
            mats.append(m)
            click.echo(f"{g}: -> {path}")
        combined = weighted_vivi(mats, w)
        combined.write_csv(out)
        raw_path = out.with_name(f"{out.stem}.raw_importance{out.suffix or '.csv'}")
        with open(raw_path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["group", *model.feature_names])
            for g, m in zip(model.group_labels, mats):
                wr.writerow([g, *(repr(float(v)) for v in m.raw_importance)])
    except USER_ERRORS as exc:
        _fail(str(exc))
    click.echo("weights: " + ", ".join(f"{g}={v:.4f}" for g, v in zip(model.group_labels, w)))
    click.echo(f"combined -> {out}")


def run():
    main(auto_envvar_prefix="CLUSTREE")


if __name__ == "__main__":
    run()
