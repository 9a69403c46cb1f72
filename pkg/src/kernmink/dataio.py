"""CSV ingestion and deterministic JSON output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .clustering import Dataset

__all__ = ["DataError", "load_dataset", "load_vector", "write_csv", "dumps", "file_sha256",
           "report_schema"]


class DataError(ValueError):
    """Input file problem; the message carries the row/column location."""


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    return rows


def load_dataset(path, label_column=None, header=None, require_nonnegative: bool = False) -> Dataset:
    """Read a comma-separated numeric table.

    Parameters
    ----------
    path : str or Path
    label_column : str, int or None
        Column holding integer class labels, by header name or 0-based index.
        It is removed from the features.
    header : bool or None
        ``None`` detects a header: the first row is one if any cell is not a
        number.
    require_nonnegative : bool
        Reject negative features (kernel mapping needs histograms).
    """
    rows = _read_rows(path)
    if header is None:
        header = not all(_is_number(c) for c in rows[0])
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    first_line = 2 if header else 1
    if not body:
        raise DataError(f"{path}: no data rows")
    width = len(body[0])
    if names is not None and len(names) != width:
        raise DataError(f"{path}: header has {len(names)} columns, data has {width}")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, int) or str(label_column).lstrip("-").isdigit():
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += width
        elif names is None:
            raise DataError(f"{path}: label column {label_column!r} given by name but file has no header")
        elif label_column not in names:
            raise DataError(f"{path}: no column named {label_column!r}")
        else:
            label_idx = names.index(label_column)
        if not 0 <= label_idx < width:
            raise DataError(f"{path}: label column index {label_column} out of range")

    feats = np.empty((len(body), width - (label_idx is not None)))
    labels = np.empty(len(body), dtype=np.int64) if label_idx is not None else None
    for r, row in enumerate(body):
        line = first_line + r
        if len(row) != width:
            raise DataError(f"{path}: line {line} has {len(row)} columns, expected {width}")
        out_c = 0
        for c, tok in enumerate(row):
            tok = tok.strip()
            if c == label_idx:
                try:
                    val = float(tok)
                except ValueError:
                    raise DataError(f"{path}: line {line}, column {c + 1}: bad label {tok!r}") from None
                if not val.is_integer():
                    raise DataError(f"{path}: line {line}, column {c + 1}: label {tok!r} is not an integer")
                labels[r] = int(val)
                continue
            try:
                val = float(tok)
            except ValueError:
                raise DataError(f"{path}: line {line}, column {c + 1}: cannot parse {tok!r}") from None
            if not math.isfinite(val):
                raise DataError(f"{path}: line {line}, column {c + 1}: non-finite value {tok!r}")
            if require_nonnegative and val < 0:
                raise DataError(f"{path}: line {line}, column {c + 1}: negative feature {tok!r} "
                                "not allowed with a kernel map")
            feats[r, out_c] = val
            out_c += 1
    if feats.shape[1] == 0:
        raise DataError(f"{path}: no feature columns")
    return Dataset(feats, labels=labels)


def load_vector(path) -> np.ndarray:
    """Integer vector from a one-column file (optional header line)."""
    rows = _read_rows(path)
    if not _is_number(rows[0][0]):
        rows = rows[1:]
    out = []
    for i, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise DataError(f"{path}: row {i} has {len(row)} columns, expected 1")
        try:
            val = float(row[0])
        except ValueError:
            raise DataError(f"{path}: row {i}: cannot parse {row[0]!r}") from None
        if not val.is_integer():
            raise DataError(f"{path}: row {i}: {row[0]!r} is not an integer")
        out.append(int(val))
    return np.asarray(out, dtype=np.int64)


def write_csv(fh, values, header=None, labels=None, label_name="label"):
    """Write a matrix (floats in round-trip ``repr`` form) with an optional label column."""
    writer = csv.writer(fh, lineterminator="\n")
    if header is not None:
        writer.writerow(list(header) + ([label_name] if labels is not None else []))
    for i, row in enumerate(np.asarray(values, dtype=float)):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(int(labels[i])))
        writer.writerow(cells)


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        val = float(obj)
        if not math.isfinite(val):
            raise ValueError(f"cannot encode non-finite float {val} in a report")
        text = f"{val:.17g}"
        if text.lstrip("-").isdigit():
            text += ".0"
        out.append(text)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)) + ":")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, val in enumerate(obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                out.append(",")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text in insertion key order with every float at 17 significant digits."""
    out = []
    _encode(obj, out)
    return "".join(out)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def report_schema() -> dict:
    text = resources.files("kernmink").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
