"""CSV and JSON writers shared by the command-line front end.

Floats are written with 17 significant digits, which round-trips every
double, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    return f"{float(v):.17g}"


def matrix_csv(m) -> str:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in a)


def vector_csv(v) -> str:
    return "".join(fmt(x) + "\n" for x in np.asarray(v, dtype=float).ravel())


def _clean(obj):
    """Make numpy scalars and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def write_rows(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return path
