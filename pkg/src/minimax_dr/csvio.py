"""
CSV import and export of proximal datasets.

The file needs a header row. A column mapping names the columns of each
variable block; X, Z and W may span several columns::

    {"X": ["x1", "x2"], "Z": ["z"], "W": ["w"], "A": "a", "Y": "y"}

Values are written with ``repr`` so a round trip reproduces every float
bit-for-bit.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .proximal import ProximalDataset

BLOCKS = ("X", "Z", "W", "A", "Y")


def default_columns(data: ProximalDataset) -> dict:
    """Column names used by :func:`write_dataset` when no mapping is given."""
    cols = {}
    for block in ("X", "Z", "W"):
        width = getattr(data, block).shape[1]
        cols[block] = [f"{block.lower()}{j + 1}" for j in range(width)]
    cols["A"] = "a"
    cols["Y"] = "y"
    return cols


def normalize_columns(mapping) -> dict:
    """Validate a column mapping; single names become one-element lists for X, Z and W."""
    if not isinstance(mapping, dict):
        raise ConfigError("column mapping must be a mapping of X, Z, W, A, Y to column names")
    missing = [b for b in BLOCKS if b not in mapping]
    if missing:
        raise ConfigError(f"column mapping lacks {', '.join(missing)}")
    out = {}
    for block in ("X", "Z", "W"):
        names = mapping[block]
        names = [names] if isinstance(names, str) else list(names)
        if not names:
            raise ConfigError(f"column mapping for {block} is empty")
        out[block] = [str(n) for n in names]
    for block in ("A", "Y"):
        name = mapping[block]
        if isinstance(name, (list, tuple)):
            if len(name) != 1:
                raise ConfigError(f"{block} must map to exactly one column")
            name = name[0]
        out[block] = str(name)
    return out


def parse_columns(text: str) -> dict:
    """Parse the command-line mapping form ``X=x1,x2;Z=z;W=w;A=a;Y=y``."""
    mapping = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if "=" not in part:
            raise ConfigError(f"malformed column mapping entry {part!r}")
        key, value = (s.strip() for s in part.split("=", 1))
        if key not in BLOCKS:
            raise ConfigError(f"unknown block {key!r} in column mapping")
        names = [v.strip() for v in value.split(",") if v.strip()]
        mapping[key] = names if key in ("X", "Z", "W") else (names[0] if len(names) == 1 else names)
    return normalize_columns(mapping)


def write_dataset(data: ProximalDataset, path, columns=None):
    columns = normalize_columns(columns or default_columns(data))
    header = columns["X"] + columns["Z"] + columns["W"] + [columns["A"], columns["Y"]]
    for block in ("X", "Z", "W"):
        if len(columns[block]) != getattr(data, block).shape[1]:
            raise ConfigError(f"{block} has {getattr(data, block).shape[1]} columns but the mapping names "
                              f"{len(columns[block])}")
    body = np.hstack([data.X, data.Z, data.W, data.A[:, None], data.Y[:, None]])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in body:
            writer.writerow([repr(float(v)) for v in row])


def read_dataset(path, columns=None) -> ProximalDataset:
    """Load a :class:`ProximalDataset` from a CSV file with a header row.

    Raises
    ------
    ConfigError
        A mapped column is absent from the header.
    DataError
        Empty file, a non-numeric or non-finite cell (with its row and
        column), or a treatment value outside {0, 1} (with its row). Row
        numbers count data rows from 1.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path} has a header but no data rows")

    if columns is None:
        columns = _infer_columns(header)
    columns = normalize_columns(columns)
    index = {name: j for j, name in enumerate(header)}
    wanted = columns["X"] + columns["Z"] + columns["W"] + [columns["A"], columns["Y"]]
    for name in wanted:
        if name not in index:
            raise ConfigError(f"column {name!r} not found in {path}")

    values = {}
    for name in dict.fromkeys(wanted):
        j = index[name]
        col = np.empty(len(rows))
        for i, row in enumerate(rows, start=1):
            if j >= len(row):
                raise DataError(f"row {i} has no value for column {name!r}", row=i, column=name)
            try:
                v = float(row[j])
            except ValueError:
                raise DataError(f"non-numeric value {row[j]!r} at row {i}, column {name!r}",
                                row=i, column=name) from None
            if not math.isfinite(v):
                raise DataError(f"non-finite value at row {i}, column {name!r}", row=i, column=name)
            col[i - 1] = v
        values[name] = col

    A = values[columns["A"]]
    bad = np.flatnonzero((A != 0) & (A != 1))
    if bad.size:
        i = int(bad[0]) + 1
        raise DataError(f"treatment column {columns['A']!r} is not binary at row {i}: {A[bad[0]]!r}",
                        row=i, column=columns["A"])
    stack = lambda names: np.column_stack([values[n] for n in names])
    data = ProximalDataset(X=stack(columns["X"]), Z=stack(columns["Z"]), W=stack(columns["W"]),
                           A=A, Y=values[columns["Y"]])
    if A.sum() in (0, data.n):
        raise DataError(f"treatment column {columns['A']!r} contains a single arm", column=columns["A"])
    return data


def _infer_columns(header) -> dict:
    """Mapping for files written with :func:`default_columns` names."""
    cols = {b: [h for h in header if h[:1] == b.lower() and h[1:].isdigit()] for b in ("X", "Z", "W")}
    cols["A"], cols["Y"] = "a", "y"
    if not all(cols[b] for b in ("X", "Z", "W")):
        raise ConfigError("no column mapping given and the header does not follow the x1/z1/w1/a/y layout")
    return cols
