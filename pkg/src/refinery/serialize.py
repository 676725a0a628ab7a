"""Text serialization helpers: full-precision JSON documents and CSV/JSON row emission."""

import csv
import io
import json
import math
import os
from collections.abc import Mapping

import numpy as np


def format_float(x):
    """Format a float with 17 significant digits so it round-trips bit-exactly."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def _scalar(value):
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if hasattr(value, "item"):  # numpy scalar
        return _scalar(value.item())
    raise TypeError(f"unsupported JSON value {value!r}")


def dumps(obj):
    """Compact JSON with 17-significant-digit floats and insertion-ordered keys."""
    if isinstance(obj, Mapping):
        inner = ", ".join(f"{_scalar(str(k))}: {dumps(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    return _scalar(obj)


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, "item"):
        return _cell(value.item())
    return str(value)


def render_rows(rows, fmt="csv", columns=None):
    """Render homogeneous row dicts as CSV (header + rows, LF endings) or a JSON array."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    for row in rows:
        if list(row.keys()) != list(columns):
            raise ValueError("rows must share identical keys in identical order")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        return dumps([dict(row) for row in rows]) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(rows, fmt="csv", path=None, columns=None):
    """Write rows to ``path`` (UTF-8) or return the text when ``path`` is None or '-'."""
    text = render_rows(rows, fmt, columns)
    if path is None or path == "-":
        return text
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text

