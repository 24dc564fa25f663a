"""Reader for the flatsat trace CSV schema.

Columns are fixed; absent channels appear as empty cells and surface here
as all-NaN arrays.  Figure kinds declare which channels they need and get
a MissingChannelError naming the first absent column.
"""

from __future__ import annotations

import csv

import numpy as np

HEADER = [
    "t", "x", "y", "z", "vx", "vy", "vz",
    "v1", "v2", "v3", "T", "phi", "theta",
    "V", "gamma", "lambda", "w1", "w2", "xr", "yr", "zr", "sat_active",
]


class TraceFormatError(ValueError):
    """CSV does not conform to the trace schema."""


class EmptyTraceError(TraceFormatError):
    """CSV has a header but no data rows."""


class MissingChannelError(TraceFormatError):
    def __init__(self, column: str, path):
        super().__init__(f"column {column!r} is empty in {path}")
        self.column = column


def read_trace(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTraceError(f"{path} is empty") from None
        if header != HEADER:
            raise TraceFormatError(f"{path} header does not match the trace schema")
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyTraceError(f"{path} has no data rows")
    cols: dict[str, np.ndarray] = {}
    arr = np.array(rows, dtype=object)
    for j, name in enumerate(HEADER):
        vals = [float(c) if c != "" else np.nan for c in arr[:, j]]
        cols[name] = np.array(vals, dtype=float)
    return cols


def require_channels(trace: dict[str, np.ndarray], names: list[str], path) -> None:
    for name in names:
        if name not in trace or np.isnan(trace[name]).all():
            raise MissingChannelError(name, path)
