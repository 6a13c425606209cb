"""Moutard-type transformations and gauge reductions.

Two-sided pivot map for sys2/sys3 (see :mod:`moutard_lab.verify`), pivots
``F``, ``F+``, potential ``W = omega_{F,F+}``:

    Psi~  = Psi  - F W^-1 omega_{Psi,F+}
    Psi+~ = Psi+ - omega_{F,Psi+} W^-1 F+
    B~    = B    + F W^-1 F+

One-sided pivot map for sys6, ``dbar Psi + A Psi = 0``, with
``What = omega_hat_{F,F+}``:

    Psi~ = Psi - F What^-1 omega_hat_{Psi,F+},   A~ = A + F What^-1 F+

Potentials are inputs, so their constants stay under the caller's control.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, SingularFieldError
from .grid import (InvertibilityReport, MatrixField, StencilMask, check_compatible,
                   dbar, identity_field, inverse_field, norms)
from .potential import PotentialField

DEFAULT_COND_MAX = 1e8


@dataclass(frozen=True, eq=False)
class TheoremOneResult:
    psi_t: MatrixField
    psi_plus_t: MatrixField
    b_t: MatrixField
    invertibility: InvertibilityReport
    input_residuals: dict


@dataclass(frozen=True, eq=False)
class PropOneResult:
    psi_t: MatrixField
    a_t: MatrixField
    invertibility: InvertibilityReport


@dataclass(frozen=True, eq=False)
class GaugeResult:
    psi_t: MatrixField
    b_t: MatrixField
    invertibility: InvertibilityReport


@dataclass(frozen=True, eq=False)
class RemarkResult:
    g: MatrixField
    a_t: MatrixField
    residual: float
    residual_l2: float
    invertible: InvertibilityReport
    omega_hat_report: InvertibilityReport
    region: np.ndarray


def _omega_field(w) -> MatrixField:
    return w.omega if isinstance(w, PotentialField) else w


def _refuse_if_flagged(report: InvertibilityReport, what: str, reason: str):
    if not report.clean:
        raise SingularFieldError(
            f"singular {what}: {len(report.flagged)} node(s) singular or with condition "
            f"above {report.cond_max:.3g} (min |det| {report.min_abs_det:.3g}), "
            f"first {report.flagged[:5]}", report, reason)


def checked_inverse(f: MatrixField, cond_max: float, what: str, reason: str = "singular-field"):
    inv, report = inverse_field(f, cond_max)
    _refuse_if_flagged(report, what, reason)
    return inv, report


def transform_theorem1(B, F, FPlus, Psi, PsiPlus, omega_FF, omega_PsiF, omega_FPsiPlus,
                       cond_max: float = DEFAULT_COND_MAX,
                       check_tol: Optional[float] = None) -> TheoremOneResult:
    """Apply the two-sided pivot map nodewise.

    Input residuals under sys2/sys3 are always measured and returned;
    with ``check_tol`` set, any of them above it is a :class:`ConfigError`.
    Refuses (:class:`SingularFieldError`) if ``omega_FF`` is singular or
    worse conditioned than ``cond_max`` at any node.
    """
    from .verify import residual

    W, Wpsi, Wfp = (_omega_field(w) for w in (omega_FF, omega_PsiF, omega_FPsiPlus))
    check_compatible(B, F, FPlus, Psi, PsiPlus, W, Wpsi, Wfp)
    res = {
        "F": residual("sys2", Psi=F, B=B).sup,
        "Psi": residual("sys2", Psi=Psi, B=B).sup,
        "FPlus": residual("sys3", PsiPlus=FPlus, B=B).sup,
        "PsiPlus": residual("sys3", PsiPlus=PsiPlus, B=B).sup,
    }
    if check_tol is not None:
        bad = {k: v for k, v in res.items() if v > check_tol}
        if bad:
            raise ConfigError(f"inputs do not solve their systems to {check_tol:.3g}: {bad}")
    Winv, report = checked_inverse(W, cond_max, "omega_{F,F+}", "singular-omega")
    psi_t = Psi - F @ Winv @ Wpsi
    psi_plus_t = PsiPlus - Wfp @ Winv @ FPlus
    b_t = B + F @ Winv @ FPlus
    return TheoremOneResult(psi_t, psi_plus_t, b_t, report, res)


def transform_prop1(A, F, FPlus, Psi, omega_hat_FF, omega_hat_PsiF,
                    cond_max: float = DEFAULT_COND_MAX) -> PropOneResult:
    check_compatible(A, F, FPlus, Psi, omega_hat_FF, omega_hat_PsiF)
    Winv, report = checked_inverse(omega_hat_FF, cond_max, "omega_hat_{F,F+}",
                                     "singular-omega")
    psi_t = Psi - F @ Winv @ omega_hat_PsiF
    a_t = A + F @ Winv @ FPlus
    return PropOneResult(psi_t, a_t, report)


def gauge_reduce(A, B, Psi, g, cond_max: float = DEFAULT_COND_MAX) -> GaugeResult:
    """``Psi~ = g^-1 Psi``, ``B~ = g^-1 B conj(g)``: sys1 to sys2."""
    check_compatible(A, B, Psi, g)
    ginv, report = checked_inverse(g, cond_max, "gauge factor g", "singular-gauge")
    return GaugeResult(ginv @ Psi, ginv @ B @ g.conj(), report)


def remark_check(A, F, FPlus, Psi, omega_hat_FF, Lambda,
                 cond_max: float = DEFAULT_COND_MAX, exclusion_radius: float = 0.0,
                 region=None) -> RemarkResult:
    """Check ``dbar(g Psi) + A~ (g Psi) = 0`` for ``g = 1 - F What^-1 Lambda``.

    Singular nodes of ``omega_hat_FF`` are not an error: ``g`` and ``A~``
    are left undefined there and the residual is measured on the interior
    minus a disk of ``exclusion_radius`` around each such node.  The
    invertibility of ``g`` is reported, never enforced.
    """
    from .verify import exclusion_region

    check_compatible(A, F, FPlus, Psi, omega_hat_FF, Lambda)
    grid = A.grid
    Winv, w_report = inverse_field(omega_hat_FF, cond_max)
    eye = identity_field(grid, A.n)
    g = eye - F @ Winv @ Lambda
    a_t = A + F @ Winv @ FPlus
    gpsi = g @ Psi
    lhs = dbar(gpsi) + a_t @ gpsi
    base = StencilMask() if region is None else region
    mask = exclusion_region(grid, w_report.flagged_mask(grid), exclusion_radius, base)
    nr = norms(lhs, mask)
    _, g_report = inverse_field(g, cond_max)
    return RemarkResult(g, a_t, nr["sup"], nr["l2"], g_report, w_report, mask)
