"""CSV datasets in, JSON reports out.

CSV files hold one sample per row, comma separated, with an optional header
row (detected when any cell of the first row is not a number). In memory the
data is ``d x n`` (features by samples).
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError

__all__ = ["load_csv", "save_csv", "save_report", "load_report", "atomic_write_text", "to_jsonable"]

REPORT_VERSION = "0.1.0"


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _encode(values):
    ids = {}
    return np.array([ids.setdefault(v, len(ids)) for v in values], dtype=np.int64)


def load_csv(path, label_column="label", require_labels=False, header=None):
    """Read a samples-as-rows CSV file.

    Returns ``(A, labels, names)`` with ``A`` of shape ``d x n``, ``labels``
    re-encoded to ``0..c-1`` by first appearance (or ``None``), and the
    feature names. ``label_column`` is a header name or a 0-based column
    index. ``header`` forces header detection on or off.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    rows = [[c.strip() for c in row] for row in rows]
    if header is None:
        header = not all(_is_number(c) for c in rows[0])
    names = rows[0] if header else None
    body = rows[1:] if header else rows
    first_line = 2 if header else 1
    if not body:
        raise DataFormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: line {first_line + i} has {len(row)} columns, expected {width}"
            )

    label_idx = None
    if isinstance(label_column, int):
        label_idx = label_column if -width <= label_column < width else None
        if label_idx is not None:
            label_idx %= width
    elif label_column is not None and names is not None and label_column in names:
        label_idx = names.index(label_column)
    if require_labels and label_idx is None:
        raise DataFormatError(f"{path}: label column {label_column!r} not found")

    feat_cols = [j for j in range(width) if j != label_idx]
    if not feat_cols:
        raise DataFormatError(f"{path}: no feature columns")
    values = np.empty((len(body), len(feat_cols)))
    for i, row in enumerate(body):
        for jj, j in enumerate(feat_cols):
            try:
                v = float(row[j])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {first_line + i}, column {j + 1}: non-numeric value {row[j]!r}"
                ) from None
            if not math.isfinite(v):
                raise DataFormatError(f"{path}: line {first_line + i}, column {j + 1}: non-finite value")
            values[i, jj] = v
    labels = _encode([row[label_idx] for row in body]) if label_idx is not None else None
    feat_names = [names[j] for j in feat_cols] if names else [f"f{j}" for j in range(len(feat_cols))]
    return np.ascontiguousarray(values.T), labels, feat_names


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_csv(path, A, labels=None, names=None, label_column="label"):
    """Write ``A`` (``d x n``) as a samples-as-rows CSV with a header row."""
    A = np.asarray(A, dtype=float)
    d, n = A.shape
    names = list(names) if names is not None else [f"f{j}" for j in range(d)]
    if len(names) != d:
        raise ValueError(f"{len(names)} names for {d} features")
    header = names + ([label_column] if labels is not None else [])
    lines = [",".join(header)]
    for i in range(n):
        cells = ["%.17g" % v for v in A[:, i]]
        if labels is not None:
            cells.append(str(int(labels[i])))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def to_jsonable(obj):
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def save_report(report, path):
    """Write ``report`` (dict or object with ``to_dict``) as sorted-key JSON.

    A ``version`` field is added when absent.
    """
    data = to_jsonable(report)
    if not isinstance(data, dict):
        data = {"result": data}
    data.setdefault("version", REPORT_VERSION)
    text = json.dumps(data, sort_keys=True, indent=2, allow_nan=True) + "\n"
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
