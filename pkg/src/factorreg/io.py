"""CSV and JSON helpers for panel data (rows are time, columns are series)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import ParseError

FLOAT_FMT = "%.17g"


def read_panel(path, header: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Read a numeric CSV panel; returns ``(array, column_names)``.

    Raises ``ParseError`` naming the 1-based file line of a ragged row or a
    non-numeric cell.
    """
    path = Path(path)
    names = None
    rows = []
    width = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if header and names is None:
                names = [cell.strip() for cell in row]
                width = len(names)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ParseError(f"{path}: row {lineno} has a non-numeric field") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=float), names


def write_panel(path, X, prefix: str | None = None) -> None:
    """Write ``X`` with full precision; a header ``prefix1, prefix2, ...`` if ``prefix``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    header = ",".join(f"{prefix}{j + 1}" for j in range(X.shape[1])) if prefix else ""
    np.savetxt(path, X, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload) -> None:
    """Write JSON with shortest round-trip floats; NaN and inf become null."""
    text = json.dumps(_jsonable(payload), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from None
