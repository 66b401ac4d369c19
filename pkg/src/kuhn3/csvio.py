"""Column-oriented CSV files that round-trip floats exactly.

Floats are written with ``repr`` (shortest string that parses back to the
same double), NaN as an empty field.  Files are written to a temporary
name in the target directory and moved into place.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "" if math.isnan(x) else repr(x)
    return str(x)


def to_csv_text(columns: Mapping[str, Sequence]) -> str:
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path: str | os.PathLike, columns: Mapping[str, Sequence]) -> Path:
    return atomic_write_text(path, to_csv_text(columns))


def _parse_column(values: list[str]):
    try:
        if all(v != "" and v.lstrip("-").isdigit() for v in values):
            return np.array([int(v) for v in values], dtype=np.int64)
        return np.array([float(v) if v != "" else math.nan for v in values])
    except ValueError:
        return values


def parse_csv_text(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [()] * len(header)
    return {name: _parse_column(list(col)) for name, col in zip(header, cols)}


def read_csv(path: str | os.PathLike) -> dict:
    """Columns keyed by header; integer, float (NaN for empty) or string lists."""
    return parse_csv_text(Path(path).read_text())
