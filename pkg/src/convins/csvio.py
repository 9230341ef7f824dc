"""Lossless CSV emission with atomic whole-file writes."""

from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_table(path, header: list[str], columns) -> None:
    """Write equal-length columns under `header`; floats use 17 significant digits."""
    columns = [np.asarray(c) for c in columns]
    if len(columns) != len(header):
        raise ValueError("column count does not match header")
    n = len(columns[0]) if columns else 0
    if any(len(c) != n for c in columns):
        raise ValueError("columns differ in length")
    fmt = ["%d" if np.issubdtype(c.dtype, np.integer) or c.dtype == bool else "%.17g"
           for c in columns]
    buf = io.BytesIO()
    data = np.column_stack([c.astype(float) for c in columns]) if columns else np.empty((0, 0))
    np.savetxt(buf, data, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    atomic_write_bytes(path, buf.getvalue())


def write_rows(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def read_table(path, expected_header: list[str] | None = None) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by `write_table` into a column dict."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if expected_header is not None and header != list(expected_header):
            raise ValueError(f"{path.name}: unexpected header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
    if data.size == 0:
        data = np.empty((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}
