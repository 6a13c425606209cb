"""Uniform rectangular grids, matrix-valued fields and finite differences.

A :class:`MatrixField` stores one ``N x N`` complex matrix per node as an
array of shape ``(ny, nx, N, N)``: row index ``j`` (the y direction) is
outermost, column index ``i`` (the x direction) next.  "conj" is always the
entrywise complex conjugate, never the conjugate transpose.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

MIN_NODES = 9
STENCIL_MARGIN = 2



@dataclass(frozen=True)
class Grid:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (np.isfinite([self.x0, self.x1, self.y0, self.y1]).all()):
            raise ConfigError("grid bounds must be finite")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ConfigError(
                f"grid bounds must satisfy x0 < x1 and y0 < y1, got "
                f"x=[{self.x0}, {self.x1}], y=[{self.y0}, {self.y1}]")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ConfigError("node counts must be integers")
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ConfigError(
                f"need at least {MIN_NODES} nodes per axis, got nx={self.nx}, ny={self.ny}")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny) * self.hy

    @property
    def z(self) -> np.ndarray:
        """Complex node coordinates, shape ``(ny, nx)``."""
        return self.x[None, :] + 1j * self.y[:, None]

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.x1 - self.x0, self.y1 - self.y0))

    @property
    def center_index(self) -> tuple[int, int]:
        """``(i, j)`` of the node closest to the rectangle centre."""
        return (self.nx // 2, self.ny // 2)

    def node(self, i: int, j: int) -> complex:
        return complex(self.x0 + i * self.hx, self.y0 + j * self.hy)

    def refine(self) -> "Grid":
        """Node-aligned refinement: every old node is a new node."""
        return Grid(self.x0, self.x1, self.y0, self.y1, 2 * self.nx - 1, 2 * self.ny - 1)

    def with_size(self, nx: int, ny: Optional[int] = None) -> "Grid":
        return Grid(self.x0, self.x1, self.y0, self.y1, nx, nx if ny is None else ny)


def make_grid(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> Grid:
    return Grid(float(x0), float(x1), float(y0), float(y1), int(nx), int(ny))


@dataclass(frozen=True)
class StencilMask:
    """Interior region: nodes at least ``margin`` away from the boundary ring."""

    margin: int = STENCIL_MARGIN

    def __post_init__(self):
        if self.margin < STENCIL_MARGIN:
            raise ConfigError(f"mask margin must be >= {STENCIL_MARGIN}")

    def array(self, grid: Grid) -> np.ndarray:
        m = self.margin
        out = np.zeros(grid.shape, dtype=bool)
        out[m:grid.ny - m, m:grid.nx - m] = True
        return out


@dataclass(frozen=True, eq=False)
class MatrixField:
    """An ``N x N`` complex matrix at each node of ``grid``.

    ``valid`` marks nodes that carry a defined value; ``None`` means every
    node does.  Undefined nodes hold NaN (derivative boundary ring, flagged
    inverses) and such a field is called partial.
    """

    grid: Grid
    data: np.ndarray
    valid: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 4 or data.shape[:2] != self.grid.shape or data.shape[2] != data.shape[3]:
            raise ConfigError(
                f"field data must have shape (ny, nx, N, N) = {self.grid.shape + ('N', 'N')}, "
                f"got {data.shape}")
        if data.shape[2] < 1:
            raise ConfigError("matrix dimension must be >= 1")
        valid = self.valid
        if valid is not None:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != self.grid.shape:
                raise ConfigError("validity mask shape does not match the grid")
            if valid.all():
                valid = None
        finite = np.isfinite(data).all(axis=(2, 3))
        if valid is None and not finite.all():
            raise ConfigError("field contains non-finite entries but is not flagged partial")
        if valid is not None and not finite[valid].all():
            raise ConfigError("field contains non-finite entries at nodes flagged valid")
        data.setflags(write=False)
        if valid is not None:
            valid.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "valid", valid)

    @property
    def n(self) -> int:
        return self.data.shape[2]

    @property
    def partial(self) -> bool:
        return self.valid is not None

    @property
    def valid_mask(self) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.grid.shape, dtype=bool)
        return self.valid

    def at(self, i: int, j: int) -> np.ndarray:
        return self.data[j, i]

    def frobenius(self) -> np.ndarray:
        """Per-node Frobenius norm, shape ``(ny, nx)``."""
        return np.sqrt((np.abs(self.data) ** 2).sum(axis=(2, 3)))

    # Operator sugar over ``pointwise``.
    def __add__(self, other):
        return pointwise("add", self, other)

    def __sub__(self, other):
        return pointwise("sub", self, other)

    def __matmul__(self, other):
        return pointwise("matmul", self, other)

    def __mul__(self, alpha):
        return pointwise("scale", self, alpha=alpha)

    __rmul__ = __mul__

    def __neg__(self):
        return pointwise("scale", self, alpha=-1.0)

    def conj(self) -> "MatrixField":
        return pointwise("conj", self)

    @property
    def T(self) -> "MatrixField":
        return pointwise("transpose", self)

    def __repr__(self):
        g = self.grid
        return (f"MatrixField(N={self.n}, nx={g.nx}, ny={g.ny}, "
                f"domain=[{g.x0}, {g.x1}]x[{g.y0}, {g.y1}], partial={self.partial})")


def constant_field(grid: Grid, matrix) -> MatrixField:
    m = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    data = np.broadcast_to(m, grid.shape + m.shape).copy()
    return MatrixField(grid, data)


def zero_field(grid: Grid, n: int) -> MatrixField:
    return MatrixField(grid, np.zeros(grid.shape + (n, n), dtype=np.complex128))


def identity_field(grid: Grid, n: int) -> MatrixField:
    return constant_field(grid, np.eye(n))


def scalar_field(grid: Grid, values) -> MatrixField:
    """Wrap an ``(ny, nx)`` complex array as an ``N = 1`` field."""
    values = np.asarray(values, dtype=np.complex128)
    return MatrixField(grid, values[:, :, None, None])


def build_field(grid: Grid, n: int, builder) -> MatrixField:
    """Sample a field builder (see :mod:`moutard_lab.builders`) at every node."""
    from .builders import as_builder

    builder = as_builder(builder)
    data = builder.evaluate(grid.z, n)
    return MatrixField(grid, data)


def _combine_valid(*fields: MatrixField) -> Optional[np.ndarray]:
    masks = [f.valid for f in fields if f.valid is not None]
    if not masks:
        return None
    return np.logical_and.reduce(masks)


def check_compatible(*fields: MatrixField) -> None:
    first = fields[0]
    for other in fields[1:]:
        if not isinstance(other, MatrixField):
            raise ConfigError(f"expected MatrixField, got {type(other).__name__}")
        if other.grid != first.grid:
            raise ConfigError("fields live on different grids")
        if other.n != first.n:
            raise ConfigError(f"matrix dimension mismatch: {first.n} vs {other.n}")


def pointwise(op: str, *operands: MatrixField, alpha: complex = 1.0) -> MatrixField:
    """Nodewise algebra: add, sub, matmul, scale, conj, transpose.

    ``add``/``sub``/``matmul`` take two or more operands and fold left.
    """
    if not operands:
        raise ConfigError("pointwise needs at least one operand")
    check_compatible(*operands)
    first = operands[0]
    datas = [f.data for f in operands]
    if op in ("add", "sub", "matmul"):
        if len(operands) < 2:
            raise ConfigError(f"{op} needs at least two operands")
        out = datas[0]
        for d in datas[1:]:
            if op == "add":
                out = out + d
            elif op == "sub":
                out = out - d
            else:
                out = out @ d
    elif op in ("scale", "conj", "transpose"):
        if len(operands) != 1:
            raise ConfigError(f"{op} takes exactly one operand")
        if op == "scale":
            out = complex(alpha) * datas[0]
        elif op == "conj":
            out = np.conj(datas[0])
        else:
            out = np.swapaxes(datas[0], 2, 3)
    else:
        raise ConfigError(f"unknown pointwise op {op!r}")
    valid = _combine_valid(*operands)
    if valid is not None:
        out = np.where(valid[:, :, None, None], out, np.nan)
    return MatrixField(first.grid, out, valid)


@dataclass(frozen=True)
class InvertibilityReport:
    """Outcome of a nodewise inversion.

    ``flagged`` holds ``(i, j)`` node indices whose matrix is singular,
    non-finite or has condition number above ``cond_max``.
    """

    min_abs_det: float
    max_cond: float
    cond_max: float
    flagged: tuple = ()
    singular: tuple = ()

    @property
    def clean(self) -> bool:
        return not self.flagged

    def flagged_mask(self, grid: Grid) -> np.ndarray:
        out = np.zeros(grid.shape, dtype=bool)
        for i, j in self.flagged:
            out[j, i] = True
        return out

    def clean_on(self, region: np.ndarray) -> bool:
        """True when no flagged node lies inside ``region`` (shape ``(ny, nx)``)."""
        return not any(region[j, i] for i, j in self.flagged)


def inverse_field(f: MatrixField, cond_max: float = 1e8):
    """Invert every node matrix; returns ``(inverse, report)``.

    The condition estimate of a node is ``max(cond_2(M), max_field ||M||_2 /
    sigma_min(M))``; the second term catches nearly vanishing scalars, whose
    plain condition number is always 1.  Nodes that are singular or whose
    estimate exceeds ``cond_max`` are flagged and the inverse is partial
    there (NaN, invalid).
    """
    data = f.data
    finite = np.isfinite(data).all(axis=(2, 3)) & f.valid_mask
    det = np.full(f.grid.shape, np.nan + 0j)
    cond = np.full(f.grid.shape, np.inf)
    if finite.any():
        block = data[finite]
        det[finite] = np.linalg.det(block)
        sv = np.linalg.svd(block, compute_uv=False)
        scale = sv[:, 0].max()
        with np.errstate(divide="ignore", invalid="ignore"):
            # cond_2 of the node, or its smallest singular value measured
            # against the largest matrix norm on the field, whichever is worse
            cond[finite] = np.maximum(sv[:, 0] / sv[:, -1], scale / sv[:, -1])
    singular = ~finite | (det == 0) | ~np.isfinite(cond)
    flagged = singular | (cond > cond_max)
    good = ~flagged
    inv = np.full(data.shape, np.nan + 0j)
    if good.any():
        inv[good] = np.linalg.inv(data[good])
    absdet = np.abs(det)
    report = InvertibilityReport(
        min_abs_det=float(np.nanmin(np.where(finite, absdet, np.nan))) if finite.any() else 0.0,
        max_cond=float(np.max(np.where(finite, cond, -np.inf))) if finite.any() else float("inf"),
        cond_max=float(cond_max),
        flagged=tuple((int(i), int(j)) for j, i in zip(*np.nonzero(flagged))),
        singular=tuple((int(i), int(j)) for j, i in zip(*np.nonzero(singular))),
    )
    return MatrixField(f.grid, inv, None if good.all() else good), report


def _axis_derivative(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    out = np.full(data.shape, np.nan + 0j)
    n = data.shape[axis]
    m = STENCIL_MARGIN
    core = [slice(None)] * data.ndim
    core[axis] = slice(m, n - m)

    def shifted(k):
        sl = [slice(None)] * data.ndim
        sl[axis] = slice(m + k, n - m + k)
        return data[tuple(sl)]

    # grouped as differences so constants give exactly zero
    acc = (8.0 * (shifted(1) - shifted(-1)) - (shifted(2) - shifted(-2))) / 12.0
    out[tuple(core)] = acc / h
    return out


def _derivative(f: MatrixField, sign: float) -> MatrixField:
    g = f.grid
    dx = _axis_derivative(f.data, 1, g.hx)
    dy = _axis_derivative(f.data, 0, g.hy)
    out = 0.5 * (dx + (sign * 1j) * dy)
    valid = StencilMask().array(g)
    if f.valid is not None:
        # a derivative is defined only where the whole 5-point cross is valid
        src = f.valid
        ok = np.zeros(g.shape, dtype=bool)
        ny, nx = g.shape
        ok[2:ny - 2, 2:nx - 2] = True
        for k in range(-2, 3):
            ok[2:ny - 2, 2:nx - 2] &= src[2:ny - 2, 2 + k:nx - 2 + k]
            ok[2:ny - 2, 2:nx - 2] &= src[2 + k:ny - 2 + k, 2:nx - 2]
        valid &= ok
    out = np.where(valid[:, :, None, None], out, np.nan)
    return MatrixField(g, out, valid)


def dbar(f: MatrixField) -> MatrixField:
    """d/dzbar = (d/dx + i d/dy) / 2, 4th order; undefined on the 2-node ring."""
    return _derivative(f, +1.0)


def dz(f: MatrixField) -> MatrixField:
    """d/dz = (d/dx - i d/dy) / 2, 4th order; undefined on the 2-node ring."""
    return _derivative(f, -1.0)


def region_array(grid: Grid, region=None) -> np.ndarray:
    if region is None:
        return StencilMask().array(grid)
    if isinstance(region, StencilMask):
        return region.array(grid)
    region = np.asarray(region, dtype=bool)
    if region.shape != grid.shape:
        raise ConfigError("region mask shape does not match the grid")
    return region


def norms(f: MatrixField, region=None) -> dict:
    """``sup`` and ``l2`` of the nodewise Frobenius norm over ``region``.

    ``region`` is a :class:`StencilMask` (default margin 2) or a boolean
    ``(ny, nx)`` array; it is intersected with the field's valid nodes.
    """
    mask = region_array(f.grid, region) & f.valid_mask
    if not mask.any():
        raise ConfigError("norm over an empty region")
    fro2 = (np.abs(f.data[mask]) ** 2).sum(axis=(1, 2))
    return {
        "sup": float(np.sqrt(fro2.max())),
        "l2": float(np.sqrt(f.grid.hx * f.grid.hy * fro2.sum())),
    }


def sup_norm(f: MatrixField, region=None) -> float:
    return norms(f, region)["sup"]
