"""Tidy CSV/JSON writers and metadata sidecars.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical outputs; NaN is written as an empty cell.
Timestamps appear only in the ``.meta.json`` sidecars.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from tvmg.mean_group import CoefficientPath, SignificanceReport


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def metadata(version: str, inputs=(), **fields) -> dict:
    meta = {
        "version": version,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "inputs": {str(p): file_digest(p) for p in inputs},
    }
    meta.update(fields)
    return meta


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


# Row builders -----------------------------------------------------------------

PATH_HEADER = ["time", "var", "beta", "se", "ci_lo", "ci_hi", "n_eff"]


def path_rows(path: CoefficientPath):
    for t, label in enumerate(path.time_labels):
        for k, var in enumerate(path.var_names):
            yield [int(label), var, path.beta_mg[t, k], path.se[t, k],
                   path.ci_lo[t, k], path.ci_hi[t, k], int(path.n_eff[t])]


def path_json(path: CoefficientPath) -> list[dict]:
    return [dict(zip(PATH_HEADER, row)) for row in path_rows(path)]


SIGNIFICANCE_HEADER = ["var", "start", "end", "direction", "length"]


def significance_rows(report: SignificanceReport):
    for var, iv in report.rows():
        yield [var, iv.start, iv.end, "positive" if iv.direction > 0 else "negative", iv.length]
