"""Deterministic CSV datasets with ``#``-prefixed metadata lines.

Floats are written with 17 significant digits so values round-trip exactly.
No timestamps or host details are written, so identical inputs give
identical bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import as_jsonable

FLOAT_FORMAT = ".17g"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, FLOAT_FORMAT)


def column_name(observable: str, label: str) -> str:
    if any(c in label for c in ",[]\n"):
        raise ValueError(f"curve label {label!r} may not contain commas, brackets or newlines")
    return f"{observable}[{label}]" if label else observable


def _meta_value(v) -> str:
    return json.dumps(as_jsonable(v), sort_keys=True, separators=(",", ":"))


def write_csv(path, columns: dict, metadata: dict) -> Path:
    """Write equal-length ``columns`` (name -> sequence) in insertion order."""
    names = list(columns)
    lengths = {len(columns[n]) for n in names}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    lines = [f"# {k}: {_meta_value(v)}" for k, v in metadata.items()]
    lines.append(",".join(names))
    n = lengths.pop() if lengths else 0
    cols = [columns[c] for c in names]
    for i in range(n):
        lines.append(",".join(fmt(c[i]) for c in cols))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class Dataset:
    metadata: dict
    columns: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def read_csv(path) -> Dataset:
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = json.loads(val)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), len(header or []))
    return Dataset(meta, {h: data[:, i] for i, h in enumerate(header or [])})


def trajectory_columns(traj, label: str = "", observables=None) -> dict:
    """Observable columns of one trajectory, named ``obs[label]``."""
    out = {}
    for key, vals in traj.records.items():
        if key == "leakage_modes":
            continue
        if observables is not None and key not in observables and key != "leakage":
            continue
        out[column_name(key, label)] = np.asarray(vals)
    return out
