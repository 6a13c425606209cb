"""Fixed-point constructions of concrete solutions.

All solvers iterate ``X <- step(X)`` where ``step`` involves one Pompeiu
application, and stop once the discrete fixed-point residual
``sup ||X - step(X)||`` is below ``tol``.  The returned field therefore
solves the discretised integral equation to ``tol``; the PDE residual
measured by finite differences is additionally limited by the quadrature
floor of the Pompeiu operator and is reported, not iterated on.

    sys2:   Psi  = H  - T(B conj Psi)           H holomorphic
    sys3:   Psi+ = H+ + Tbar(conj(Psi+) B)      H+ antiholomorphic
    sys1:   Psi  = H  - T(A Psi + B conj Psi)
    gauge:       g    = I  - T(A g)
    lambda:      L    = T(L A + F+)
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cauchy import PompeiuPlan
from .errors import ConfigError, ContractionError, ConvergenceError, SingularFieldError
from .grid import MatrixField, dbar, dz, identity_field, inverse_field, sup_norm


@dataclass(frozen=True)
class IterationSettings:
    tol: float = 1e-10
    max_iter: int = 60
    contraction_guard: float = 0.9

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not 0 < self.contraction_guard <= 1:
            raise ConfigError("contraction_guard must lie in (0, 1]")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    residual_sup: float
    delta_sup: float


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "residual_sup", "delta_sup"])
        for rec in history:
            w.writerow([rec.iter, "%.17g" % rec.residual_sup, "%.17g" % rec.delta_sup])


def operator_norm_estimate(grid) -> float:
    """Crude a-priori bound on the sup-norm of T: twice the domain diameter."""
    return 2.0 * grid.diameter


def contraction_estimate(plan: PompeiuPlan, *coefficients: MatrixField) -> float:
    size = sum(float(c.frobenius().max()) for c in coefficients)
    return operator_norm_estimate(plan.grid) * size


def _check_contraction(plan, settings, name, *coefficients):
    q = contraction_estimate(plan, *coefficients)
    if q >= settings.contraction_guard:
        raise ContractionError(
            f"{name}: contraction estimate q={q:.3g} >= guard {settings.contraction_guard}; "
            f"scale the coefficient down (||T||_est={operator_norm_estimate(plan.grid):.3g})")
    return q


def _sup(f: MatrixField) -> float:
    return float(f.frobenius().max())


def fixed_point(step: Callable[[MatrixField], MatrixField], x0: MatrixField,
                settings: IterationSettings, name: str = "fixed point",
                history: Optional[list] = None) -> MatrixField:
    """Picard iteration until ``sup ||x - step(x)|| <= tol``.

    Returns the last iterate whose residual was verified.  Records
    ``(iter, residual_sup, delta_sup)`` in ``history`` when given, where
    ``delta_sup`` is the change from the previous iterate.
    """
    log = [] if history is None else history
    x = x0
    prev = None
    for k in range(settings.max_iter + 1):
        nxt = step(x)
        residual = _sup(x - nxt)
        delta = 0.0 if prev is None else _sup(x - prev)
        log.append(IterationRecord(k, residual, delta))
        if residual <= settings.tol:
            return x
        prev, x = x, nxt
    raise ConvergenceError(
        f"{name}: no convergence in {settings.max_iter} iterations "
        f"(last residual {log[-1].residual_sup:.3g})", log)


def _plan(field: MatrixField, plan) -> PompeiuPlan:
    if plan is None:
        return PompeiuPlan(field.grid)
    if isinstance(plan, str):
        return PompeiuPlan(field.grid, plan)
    return plan


def _check_seed(kind: str, seed: MatrixField, settings: IterationSettings):
    d = dbar(seed) if kind == "holomorphic" else dz(seed)
    err = sup_norm(d)
    if err > 10 * settings.tol:
        raise ConfigError(f"seed is not {kind}: derivative sup {err:.3g} > {10 * settings.tol:.3g}")


def solve_system2(B: MatrixField, H: MatrixField, settings: IterationSettings = IterationSettings(),
                  plan=None, history: Optional[list] = None) -> MatrixField:
    """Solve ``dbar Psi + B conj(Psi) = 0`` with holomorphic part ``H``."""
    plan = _plan(B, plan)
    _check_seed("holomorphic", H, settings)
    _check_contraction(plan, settings, "sys2", B)
    return fixed_point(lambda psi: H - plan.apply(B @ psi.conj()), H, settings,
                       "sys2", history)


def solve_system3(B: MatrixField, Hplus: MatrixField,
                  settings: IterationSettings = IterationSettings(), plan=None,
                  history: Optional[list] = None) -> MatrixField:
    """Solve ``dz Psi+ - conj(Psi+) B = 0`` with antiholomorphic part ``Hplus``."""
    plan = _plan(B, plan)
    _check_seed("antiholomorphic", Hplus, settings)
    _check_contraction(plan, settings, "sys3", B)
    return fixed_point(lambda pp: Hplus + plan.apply(pp.conj() @ B, conjugate=True), Hplus,
                       settings, "sys3", history)


def solve_system1(A: MatrixField, B: MatrixField, H: MatrixField,
                  settings: IterationSettings = IterationSettings(), plan=None,
                  history: Optional[list] = None) -> MatrixField:
    """Solve ``dbar Psi + A Psi + B conj(Psi) = 0`` with holomorphic part ``H``."""
    plan = _plan(A, plan)
    _check_seed("holomorphic", H, settings)
    _check_contraction(plan, settings, "sys1", A, B)
    return fixed_point(lambda psi: H - plan.apply(A @ psi + B @ psi.conj()), H, settings,
                       "sys1", history)


def solve_gauge(A: MatrixField, settings: IterationSettings = IterationSettings(), plan=None,
                history: Optional[list] = None, cond_max: float = 1e8) -> MatrixField:
    """Gauge factor with ``dbar g + A g = 0``, ``g = I - T(A g)``.

    Raises :class:`SingularFieldError` if ``g`` fails to be invertible.
    """
    plan = _plan(A, plan)
    _check_contraction(plan, settings, "gauge", A)
    eye = identity_field(A.grid, A.n)
    g = fixed_point(lambda g: eye - plan.apply(A @ g), eye, settings, "gauge", history)
    _, report = inverse_field(g, cond_max)
    if not report.clean:
        raise SingularFieldError(
            f"gauge factor singular or ill conditioned at {len(report.flagged)} node(s), "
            f"first {report.flagged[:5]}", report, "singular-gauge")
    return g


def solve_lambda(A: MatrixField, Fplus: MatrixField,
                 settings: IterationSettings = IterationSettings(), plan=None,
                 history: Optional[list] = None) -> MatrixField:
    """Solve ``dbar L = L A + F+`` via ``L = T(L A + F+)``, starting at ``T(F+)``."""
    plan = _plan(A, plan)
    _check_contraction(plan, settings, "lambda", A)
    lam0 = plan.apply(Fplus)
    return fixed_point(lambda lam: plan.apply(lam @ A + Fplus), lam0, settings, "lambda",
                       history)


def monotone_after_first(history) -> bool:
    """Residual ratio below one from the second iteration on."""
    res = [r.residual_sup for r in history]
    return all(b < a for a, b in zip(res[1:], res[2:]) if a > 0)


def residual_ratios(history) -> np.ndarray:
    res = np.array([r.residual_sup for r in history])
    return res[1:] / res[:-1]
