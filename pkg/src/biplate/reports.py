"""Deterministic CSV/JSON serialization shared by the report types."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields, is_dataclass

import numpy as np

FLOAT_FORMAT = ".12g"


def fmt(value) -> str:
    """Render a cell with fixed formatting (12 significant digits for floats)."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FORMAT)
    return str(value)


def write_csv(rows, columns, handle=None) -> str:
    """Write ``rows`` (dicts) with a fixed column order; returns the text when no handle is given."""
    out = io.StringIO() if handle is None else handle
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return out.getvalue() if handle is None else ""


def jsonable(obj):
    """Convert dataclasses, numpy scalars and arrays into plain JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return jsonable(obj.to_dict())
        return {f.name: jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(format(v, FLOAT_FORMAT))
    return obj


def dump_json(obj, handle=None) -> str:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True)
    if handle is not None:
        handle.write(text + "\n")
    return text
