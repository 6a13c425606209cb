"""Moutard potentials.

``omega`` integrates the closed differential

    d omega = -conj(M) dz + M dzbar,    M = Phi+ conj(Phi),

from a basepoint along grid axes with the composite trapezoid rule.  Along
x the integrand is ``M - conj(M)`` and along y it is ``-i (M + conj(M))``;
both are purely imaginary, so with an imaginary basepoint constant the
real part of the result is zero up to rounding.

``omega_hat`` is the Pompeiu representative ``T(F+ Phi) (+ constant)`` of
an antiderivative with ``dbar omega_hat = F+ Phi``; no reality condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .builders import parse_matrix
from .cauchy import PompeiuPlan
from .errors import ConfigError
from .grid import MatrixField, check_compatible, dbar, dz, sup_norm


@dataclass(frozen=True, eq=False)
class PotentialField:
    omega: MatrixField
    skew_real_defect: float
    path_defect: float
    C0: np.ndarray
    basepoint: tuple
    warnings: tuple = field(default=())

    @property
    def grid(self):
        return self.omega.grid


def _prefix_trapezoid(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Running trapezoid integral from index 0 along ``axis``."""
    f = np.moveaxis(f, axis, 0)
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * h, axis=0)
    return np.moveaxis(out, 0, axis)


def _as_constant(C0, n) -> np.ndarray:
    if C0 is None:
        return np.zeros((n, n), dtype=np.complex128)
    m = parse_matrix(C0, n)
    if np.any(m.real != 0):
        raise ConfigError("basepoint constant C0 must be purely imaginary entrywise")
    return m


def omega(Phi: MatrixField, PhiPlus: MatrixField, basepoint: Optional[tuple] = None,
          C0=None, B: Optional[MatrixField] = None, tol: float = 1e-6) -> PotentialField:
    """Potential with ``dbar omega = Phi+ conj(Phi)``, ``dz omega = -conj(Phi+) Phi``.

    ``basepoint`` is a node index ``(i, j)`` (default: centre node) and
    ``C0`` the purely imaginary value there (scalar means ``C0 * I``).  If
    ``B`` is given, the inputs are checked against sys2 and sys3 and a
    warning is attached when either residual exceeds ``100 * tol``.
    """
    check_compatible(Phi, PhiPlus)
    g = Phi.grid
    n = Phi.n
    C = _as_constant(C0, n)
    i0, j0 = g.center_index if basepoint is None else basepoint
    if not (0 <= i0 < g.nx and 0 <= j0 < g.ny):
        raise ConfigError(f"basepoint {(i0, j0)} outside the grid")

    M = PhiPlus.data @ np.conj(Phi.data)
    Mc = np.conj(M)
    fx = M - Mc                  # d omega / dx
    fy = -1j * (M + Mc)          # d omega / dy
    Px = _prefix_trapezoid(fx, g.hx, axis=1)
    Py = _prefix_trapezoid(fy, g.hy, axis=0)

    # horizontal along row j0, then vertical along each column
    first = Px[j0] - Px[j0, i0]                        # (nx, N, N)
    canon = C + first[None, :, :, :] + (Py - Py[j0][None])
    # vertical along column i0, then horizontal along each row
    up = Py[:, i0] - Py[j0, i0]                        # (ny, N, N)
    alt = C + up[:, None, :, :] + (Px - Px[:, i0][:, None])

    diff = canon - alt
    path_defect = float(np.sqrt((np.abs(diff) ** 2).sum(axis=(2, 3))).max())
    skew_real_defect = float(np.abs(canon.real).max())
    projected = 0.5 * (canon - np.conj(canon))

    notes = []
    if B is not None:
        from .verify import residual

        r2 = residual("sys2", Psi=Phi, B=B).sup
        r3 = residual("sys3", PsiPlus=PhiPlus, B=B).sup
        if r2 > 100 * tol or r3 > 100 * tol:
            notes.append(
                f"inputs are not near-solutions (sys2 residual {r2:.3g}, "
                f"sys3 residual {r3:.3g}); the potential is path dependent")
    return PotentialField(MatrixField(g, projected), skew_real_defect, path_defect, C,
                          (int(i0), int(j0)), tuple(notes))


def project_skew_real(f: MatrixField) -> MatrixField:
    """``(f - conj f) / 2``: keep the imaginary parts of all entries."""
    return MatrixField(f.grid, 0.5 * (f.data - np.conj(f.data)), f.valid)


def omega_hat(Phi: MatrixField, FPlus: MatrixField, plan: Optional[PompeiuPlan] = None,
              constant=None) -> MatrixField:
    """``T(F+ Phi)``, optionally plus a constant (holomorphic) matrix."""
    check_compatible(Phi, FPlus)
    plan = PompeiuPlan(Phi.grid) if plan is None else plan
    out = plan.apply(FPlus @ Phi)
    if constant is not None:
        c = parse_matrix(constant, Phi.n)
        out = MatrixField(out.grid, out.data + c)
    return out


def integrability_defect(Phi: MatrixField, PhiPlus: MatrixField) -> float:
    """``sup || dz(Phi+ conj Phi) + dbar(conj(Phi+) Phi) ||`` over the interior."""
    check_compatible(Phi, PhiPlus)
    return sup_norm(dz(PhiPlus @ Phi.conj()) + dbar(PhiPlus.conj() @ Phi))
