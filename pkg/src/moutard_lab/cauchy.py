"""Solid Cauchy (Pompeiu) area operators on the grid rectangle.

    T f(z)    = 1/pi  sum_{zeta != z} f(zeta) / (z - zeta)          hx hy
    Tbar f(z) = 1/pi  sum_{zeta != z} f(zeta) / (conj z - conj zeta) hx hy

Midpoint rule over the node cells, the singular cell contributing zero.
``dbar(T f) = f`` and ``dz(Tbar f) = f`` hold in the continuum.  The
discrete sum is a 2-D convolution with a fixed kernel table, so the
``fast-convolution`` mode evaluates the very same sum by zero-padded FFT.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import ConfigError
from .grid import Grid, MatrixField

MODES = ("direct", "fast-convolution")
SINGULAR_CELL_RULES = ("zero", "disk-correction")
DIRECT_COST_WARNING = 200_000


def kernel_table(grid: Grid, conjugate: bool = False) -> np.ndarray:
    """Weights ``hx hy / (pi (dx + i dy))`` for offsets ``-(n-1)..(n-1)``.

    Index ``[dj + ny - 1, di + nx - 1]`` holds the weight of the source at
    offset ``(-di, -dj)`` from the target, i.e. target minus source is
    ``di hx + i dj hy``.
    """
    di = np.arange(-(grid.nx - 1), grid.nx) * grid.hx
    dj = np.arange(-(grid.ny - 1), grid.ny) * grid.hy
    w = di[None, :] + 1j * dj[:, None]
    if conjugate:
        w = np.conj(w)
    out = np.zeros(w.shape, dtype=np.complex128)
    nz = w != 0
    # Singular cell: the kernel is odd, so the principal value over the
    # centred square vanishes; the area-matched disk correction is zero too.
    out[nz] = grid.hx * grid.hy / (np.pi * w[nz])
    return out


@dataclass(frozen=True)
class PompeiuPlan:
    grid: Grid
    mode: str = "fast-convolution"
    singular_cell_rule: str = "zero"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown Pompeiu mode {self.mode!r}; expected one of {MODES}")
        if self.singular_cell_rule not in SINGULAR_CELL_RULES:
            raise ConfigError(f"unknown singular-cell rule {self.singular_cell_rule!r}")

    def kernel(self, conjugate: bool = False) -> np.ndarray:
        key = ("kernel", conjugate)
        if key not in self._cache:
            self._cache[key] = kernel_table(self.grid, conjugate)
        return self._cache[key]

    def toeplitz_blocks(self, conjugate: bool = False) -> np.ndarray:
        """Kernel rearranged as ``[t, q, s]`` so one target row is one GEMM.

        Row ``j`` of the result is ``blocks[:, ny-1-j : 2ny-1-j, :]``
        (reshaped to ``nx x (ny nx)``) times the flattened field.
        """
        key = ("blocks", conjugate)
        if key not in self._cache:
            g = self.grid
            kern = self.kernel(conjugate)
            t = np.arange(g.nx)[:, None]
            s = np.arange(g.nx)[None, :]
            blocks = kern[:, t - s + g.nx - 1][::-1]
            self._cache[key] = np.ascontiguousarray(blocks.transpose(1, 0, 2))
        return self._cache[key]

    def _fft_shape(self):
        g = self.grid
        return (sfft.next_fast_len(3 * g.ny - 2), sfft.next_fast_len(3 * g.nx - 2))

    def kernel_fft(self, conjugate: bool = False) -> np.ndarray:
        key = ("kfft", conjugate)
        if key not in self._cache:
            self._cache[key] = sfft.fft2(self.kernel(conjugate), s=self._fft_shape())
        return self._cache[key]

    def apply(self, f: MatrixField, conjugate: bool = False) -> MatrixField:
        if f.grid != self.grid:
            raise ConfigError("field grid does not match the Pompeiu plan")
        if f.partial:
            raise ConfigError("Pompeiu operator needs a field that is finite on all nodes")
        g = self.grid
        if self.mode == "direct":
            if g.nx * g.ny > DIRECT_COST_WARNING:
                warnings.warn(
                    f"direct Pompeiu sum on {g.nx * g.ny} nodes is quadratic in the node count; "
                    "consider mode='fast-convolution'", RuntimeWarning, stacklevel=3)
            blocks = self.toeplitz_blocks(conjugate)
            n = f.n
            flat = f.data.reshape(g.ny * g.nx, n * n)
            out = np.empty((g.ny, g.nx, n * n), dtype=np.complex128)
            for j in range(g.ny):
                rows = blocks[:, g.ny - 1 - j:2 * g.ny - 1 - j, :].reshape(g.nx, g.ny * g.nx)
                out[j] = rows @ flat
            out = out.reshape(f.data.shape)
        else:
            shape = self._fft_shape()
            spec = sfft.fft2(f.data, s=shape, axes=(0, 1))
            spec *= self.kernel_fft(conjugate)[:, :, None, None]
            full = sfft.ifft2(spec, axes=(0, 1))
            out = full[g.ny - 1:2 * g.ny - 1, g.nx - 1:2 * g.nx - 1]
        return MatrixField(g, out)


def make_plan(grid: Grid, mode: str = "fast-convolution",
              singular_cell_rule: str = "zero") -> PompeiuPlan:
    return PompeiuPlan(grid, mode, singular_cell_rule)


def _plan_for(f: MatrixField, plan) -> PompeiuPlan:
    if plan is None:
        return PompeiuPlan(f.grid)
    if isinstance(plan, str):
        return PompeiuPlan(f.grid, plan)
    return plan


def pompeiu_T(f: MatrixField, plan: PompeiuPlan | str | None = None) -> MatrixField:
    """Area antiderivative for dbar: ``dbar(pompeiu_T(f)) ~ f``."""
    return _plan_for(f, plan).apply(f, conjugate=False)


def pompeiu_Tbar(f: MatrixField, plan: PompeiuPlan | str | None = None) -> MatrixField:
    """Area antiderivative for dz: ``dz(pompeiu_Tbar(f)) ~ f``."""
    return _plan_for(f, plan).apply(f, conjugate=True)
