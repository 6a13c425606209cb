"""MFIELD v1 text format.

Header ``MFIELD v1 nx ny N x0 x1 y0 y1``, then one line per node (``j``
outer, ``i`` inner) holding ``2 N^2`` floats, real and imaginary parts
interleaved, row-major over the node matrix, formatted ``%.17g``.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Grid, MatrixField


def _fmt(x: float) -> str:
    return "%.17g" % x


def dumps(field: MatrixField, extra_lines=()) -> str:
    g = field.grid
    buf = io.StringIO()
    buf.write(f"MFIELD v1 {g.nx} {g.ny} {field.n} {_fmt(g.x0)} {_fmt(g.x1)} "
              f"{_fmt(g.y0)} {_fmt(g.y1)}\n")
    flat = field.data.reshape(g.ny * g.nx, field.n * field.n)
    inter = np.empty((flat.shape[0], 2 * flat.shape[1]))
    inter[:, 0::2] = flat.real
    inter[:, 1::2] = flat.imag
    for row in inter:
        buf.write(" ".join(_fmt(v) for v in row))
        buf.write("\n")
    for line in extra_lines:
        buf.write(line.rstrip("\n") + "\n")
    return buf.getvalue()


def loads(text: str) -> MatrixField:
    lines = text.splitlines()
    if not lines:
        raise ConfigError("empty MFIELD document")
    head = lines[0].split()
    if len(head) != 9 or head[0] != "MFIELD" or head[1] != "v1":
        raise ConfigError(f"bad MFIELD header: {lines[0]!r}")
    nx, ny, n = (int(v) for v in head[2:5])
    x0, x1, y0, y1 = (float(v) for v in head[5:9])
    grid = Grid(x0, x1, y0, y1, nx, ny)
    body = lines[1:1 + nx * ny]
    if len(body) != nx * ny:
        raise ConfigError("MFIELD body shorter than nx*ny lines")
    vals = np.array([[float(v) for v in line.split()] for line in body])
    if vals.shape != (nx * ny, 2 * n * n):
        raise ConfigError("MFIELD row width does not match N")
    data = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(ny, nx, n, n)
    valid = np.isfinite(data).all(axis=(2, 3))
    return MatrixField(grid, data, None if valid.all() else valid)


def write_field(path, field: MatrixField, extra_lines=()) -> None:
    Path(path).write_text(dumps(field, extra_lines), encoding="utf-8")


def read_field(path) -> MatrixField:
    return loads(Path(path).read_text(encoding="utf-8"))
