"""CSV datasets and JSON model files.

Dataset CSV: header ``group,y,<feature_1>,...,<feature_p>``; ``y`` may be
omitted for prediction inputs. Model files are JSON documents whose first
key is ``format_version``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .data import DataError, Dataset
from .ensemble import WeightedEnsemble

FORMAT_VERSION = 1
MODEL_KIND = "weighted-sum-of-trees"


class CsvError(DataError):
    pass


def read_dataset(path, require_y: bool = True):
    """Parse a dataset CSV; returns ``(Dataset, has_y)``.

    Data rows are numbered from 1 (the header is not counted) in error
    messages. Without a ``y`` column the outcome is filled with zeros.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvError(f"{path}: cannot open: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "group":
            raise CsvError(f"{path}: first column must be 'group', got {header[:1]}")
        has_y = len(header) > 1 and header[1] == "y"
        if require_y and not has_y:
            raise CsvError(f"{path}: second column must be 'y'")
        names = header[2:] if has_y else header[1:]
        if not names:
            raise CsvError(f"{path}: no feature columns")
        if len(set(names)) != len(names):
            raise CsvError(f"{path}: duplicate feature names")
        groups, ys, rows = [], [], []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise CsvError(f"{path}: row {i} has {len(rec)} cells, expected {len(header)}")
            groups.append(rec[0])
            if rec[0] == "":
                raise CsvError(f"{path}: row {i}, column 'group' is empty")
            vals = []
            for col, cell in zip(header[1:], rec[1:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvError(f"{path}: row {i}, column {col!r}: {cell!r} is not a number") from None
                if not math.isfinite(v):
                    raise CsvError(f"{path}: row {i}, column {col!r}: value must be finite")
                vals.append(v)
            if has_y:
                ys.append(vals[0])
                vals = vals[1:]
            rows.append(vals)
    if not rows:
        raise CsvError(f"{path}: no data rows")
    X = np.array(rows, dtype=float)
    y = np.array(ys, dtype=float) if has_y else np.zeros(len(rows))
    return Dataset(X, y, groups, names), has_y


def write_dataset(path, data: Dataset):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "y", *data.feature_names])
        for g, yv, row in zip(data.groups, data.y, data.X):
            w.writerow([g, repr(float(yv)), *(repr(float(v)) for v in row)])


def align_features(data: Dataset, names, reorder: bool = False) -> Dataset:
    """Check that ``data`` has exactly the model's features, in order.

    With ``reorder`` the columns are permuted by name instead.
    """
    names = list(names)
    have = list(data.feature_names)
    if have == names:
        return data
    missing = [n for n in names if n not in have]
    extra = [n for n in have if n not in names]
    if missing or extra:
        raise DataError(f"feature mismatch: missing {missing}, extra {extra}")
    if not reorder:
        raise DataError("feature order differs from the model; pass --reorder to permute by name")
    idx = [have.index(n) for n in names]
    return Dataset(data.X[:, idx], data.y, data.groups, names)


def model_document(model: WeightedEnsemble) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": MODEL_KIND, **model.serialize()}


def save_model(path, model: WeightedEnsemble):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_document(model), fh)
        fh.write("\n")


def load_model(path) -> WeightedEnsemble:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"{path}: cannot open: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model file: {exc}") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format version {version!r}")
    if doc.get("kind") != MODEL_KIND:
        raise DataError(f"{path}: unexpected model kind {doc.get('kind')!r}")
    return WeightedEnsemble.deserialize(doc)
