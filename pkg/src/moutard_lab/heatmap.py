"""Binary PPM (P6) heatmaps of nodewise Frobenius norms.

The colour table is a fixed 256-entry viridis-like ramp built from a
polynomial fit, so images are bit-reproducible without plotting libraries.
Undefined nodes are drawn black.  A sidecar ``<path>.txt`` records the
value range.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import MatrixField

_POLY = np.array([
    [0.2777273272234177, 0.005407344544966578, 0.3340998053353061],
    [0.1050930431085774, 1.404613529898575, 1.384590162594685],
    [-0.3308618287255563, 0.214847559468213, 0.09509516302823659],
    [-4.634230498983486, -5.799100973351585, -19.33244095627987],
    [6.228269936347081, 14.17993336680509, 56.69055260068105],
    [4.776384997670288, -13.74514537774601, -65.35303263337234],
    [-5.435455855934631, 4.645852612178535, 26.3124352495832],
])


def colour_table() -> np.ndarray:
    t = np.linspace(0.0, 1.0, 256)[:, None]
    rgb = np.zeros((256, 3))
    for c in _POLY[::-1]:
        rgb = rgb * t + c
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


TABLE = colour_table()


def render(field: MatrixField):
    """Return ``(pixels, vmin, vmax)``; pixel row 0 is the top (largest y)."""
    values = field.frobenius()
    valid = field.valid_mask & np.isfinite(values)
    if valid.any():
        vmin = float(values[valid].min())
        vmax = float(values[valid].max())
    else:
        vmin = vmax = 0.0
    span = vmax - vmin
    idx = np.zeros(values.shape, dtype=np.int64)
    if span > 0:
        scaled = (np.where(valid, values, vmin) - vmin) / span
        idx = np.clip((scaled * 255.0).astype(np.int64), 0, 255)
    pix = TABLE[idx]
    pix[~valid] = 0
    return pix[::-1], vmin, vmax


def write_ppm(path, field: MatrixField, label: str = "") -> None:
    pix, vmin, vmax = render(field)
    h, w = pix.shape[:2]
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pix).tobytes())
    Path(str(path) + ".txt").write_text(
        f"field={label} min={vmin:.17g} max={vmax:.17g} quantity=frobenius\n", encoding="utf-8")
