"""Residuals of the four systems and refinement studies.

    sys1:  dbar Psi + A Psi + B conj(Psi)
    sys2:  dbar Psi + B conj(Psi)
    sys3:  dz Psi+ - conj(Psi+) B
    sys6:  dbar Psi + A Psi
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, MoutardLabError
from .grid import MatrixField, StencilMask, check_compatible, dbar, dz, norms, region_array

SYSTEMS = {
    "sys1": ("Psi", "A", "B"),
    "sys2": ("Psi", "B"),
    "sys3": ("PsiPlus", "B"),
    "sys6": ("Psi", "A"),
}


@dataclass(frozen=True)
class ResidualReport:
    system_id: str
    sup: float
    l2: float
    region: object


def residual_field(system_id: str, **fields: MatrixField) -> MatrixField:
    if system_id not in SYSTEMS:
        raise ConfigError(f"unknown system {system_id!r}; expected one of {sorted(SYSTEMS)}")
    needed = SYSTEMS[system_id]
    if set(fields) != set(needed):
        raise ConfigError(f"{system_id} needs fields {needed}, got {tuple(sorted(fields))}")
    check_compatible(*fields.values())
    if system_id == "sys1":
        psi = fields["Psi"]
        return dbar(psi) + fields["A"] @ psi + fields["B"] @ psi.conj()
    if system_id == "sys2":
        psi = fields["Psi"]
        return dbar(psi) + fields["B"] @ psi.conj()
    if system_id == "sys3":
        pp = fields["PsiPlus"]
        return dz(pp) - pp.conj() @ fields["B"]
    psi = fields["Psi"]
    return dbar(psi) + fields["A"] @ psi


def residual(system_id: str, region=None, **fields: MatrixField) -> ResidualReport:
    """Norms of the system's left-hand side over the interior (or ``region``)."""
    r = residual_field(system_id, **fields)
    region = StencilMask() if region is None else region
    nr = norms(r, region)
    return ResidualReport(system_id, nr["sup"], nr["l2"], region)


def exclusion_region(grid, singular_mask: np.ndarray, radius: float, base=None) -> np.ndarray:
    """Interior nodes farther than ``radius`` from every node in ``singular_mask``."""
    region = region_array(grid, base).copy()
    if singular_mask.any() and radius > 0:
        z = grid.z
        for pt in z[singular_mask]:
            region &= np.abs(z - pt) > radius
    elif singular_mask.any():
        region &= ~singular_mask
    return region


@dataclass(frozen=True)
class ConvergenceRow:
    scenario: str
    n: int
    h: float
    metric: str
    value: float
    order_est: Optional[float] = None


def order_estimate(coarse: float, fine: float) -> float:
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return math.log2(coarse / fine)


def check_sizes(sizes) -> list:
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise ConfigError("a convergence study needs at least two grid sizes")
    for a, b in zip(sizes, sizes[1:]):
        if b <= a:
            raise ConfigError(f"grid sizes must increase strictly, got {sizes}")
        if b != 2 * a - 1:
            raise ConfigError(f"sizes must refine node-aligned (n_next = 2n - 1), got {a} -> {b}")
    if any(s % 2 == 0 for s in sizes):
        raise ConfigError(f"grid sizes must be odd, got {sizes}")
    return sizes


class StudyError(MoutardLabError):
    """Pipeline failure at one refinement level; ``cause`` is the original error."""

    def __init__(self, n, cause):
        super().__init__(f"n={n}: {cause}")
        self.n = n
        self.cause = cause


def run_levels(scenario, sizes=None) -> list:
    """Run every level of ``scenario``; errors carry the failing size."""
    from .scenarios import run_level

    sizes = list(scenario.sizes if sizes is None else sizes)
    levels = []
    for n in sizes:
        try:
            levels.append(run_level(scenario, n))
        except MoutardLabError as exc:
            raise StudyError(n, exc) from exc
    return levels


def rows_from_levels(name: str, levels) -> list:
    rows = []
    previous = {}
    for level in levels:
        for metric, value in level.metrics.items():
            order = None
            if metric in previous:
                order = order_estimate(previous[metric], value)
            rows.append(ConvergenceRow(name, level.n, level.h, metric, float(value), order))
            previous[metric] = value
    return rows


def convergence_study(scenario, sizes=None) -> list:
    """Run ``scenario`` at each size; one row per metric and level.

    ``order_est`` is ``log2(value_coarse / value_fine)`` and is ``None`` on
    the first level.
    """
    sizes = check_sizes(scenario.sizes if sizes is None else sizes)
    return rows_from_levels(scenario.name, run_levels(scenario, sizes))


def rows_by_metric(rows) -> dict:
    out = {}
    for r in rows:
        out.setdefault(r.metric, []).append(r)
    return out


def write_convergence_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "n", "h", "metric", "value", "order_est"])
        for r in rows:
            w.writerow([r.scenario, r.n, "%.17g" % r.h, r.metric, "%.17g" % r.value,
                        "" if r.order_est is None else "%.17g" % r.order_est])
