"""scikit-learn style wrappers.

Each transformation is split the way sklearn splits ``fit``/``transform``:
``fit`` consumes the pivot data (``F``, ``F+``, coefficients) and stores
every derived quantity as a trailing-underscore attribute, ``transform``
maps new solutions.  ``get_params``/``set_params``/``clone`` come from
:class:`~sklearn.base.BaseEstimator`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cauchy import PompeiuPlan
from .errors import ConfigError
from .grid import MatrixField, check_compatible, zero_field
from .moutard import (DEFAULT_COND_MAX, checked_inverse, gauge_reduce)
from .potential import omega, omega_hat
from .seeds import IterationSettings, solve_gauge


def check_field(X, n=None, allow_partial=False, name="X") -> MatrixField:
    """Validate a MatrixField argument: type, matrix size, finiteness."""
    if not isinstance(X, MatrixField):
        raise ConfigError(f"{name} must be a MatrixField, got {type(X).__name__}")
    if n is not None and X.n != n:
        raise ConfigError(f"{name} has N={X.n}, expected N={n}")
    if X.partial and not allow_partial:
        raise ConfigError(f"{name} is partial (undefined at some nodes)")
    return X


def check_same_grid(reference: MatrixField, *others: MatrixField) -> None:
    check_compatible(reference, *others)


class PompeiuTransform(TransformerMixin, BaseEstimator):
    """``X -> T X`` (or ``Tbar X`` with ``conjugate=True``) on the fitted grid."""

    def __init__(self, mode="fast-convolution", singular_cell_rule="zero", conjugate=False):
        self.mode = mode
        self.singular_cell_rule = singular_cell_rule
        self.conjugate = conjugate

    def fit(self, X, y=None):
        X = check_field(X)
        self.plan_ = PompeiuPlan(X.grid, self.mode, self.singular_cell_rule)
        self.grid_ = X.grid
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        X = check_field(X)
        if X.grid != self.grid_:
            raise ConfigError("field grid differs from the grid seen in fit")
        return self.plan_.apply(X, conjugate=self.conjugate)


class MoutardTransform(TransformerMixin, BaseEstimator):
    """Two-sided pivot map for ``dbar Psi + B conj(Psi) = 0`` and its conjugate system.

    ``fit(F, F_plus, B)`` builds ``omega_{F,F+}`` with basepoint constant
    ``i * c0 * I`` and the new coefficient ``b_t_``.  ``transform(Psi)``
    returns the transformed solution; ``transform_conjugate(Psi_plus)`` the
    transformed conjugate solution.  Their potentials take the constant
    ``i * omega_constant * I``; ``None`` reuses ``c0``, so the pivots map to 0.
    """

    def __init__(self, c0=10.0, omega_constant=None, basepoint=None,
                 cond_max=DEFAULT_COND_MAX):
        self.c0 = c0
        self.omega_constant = omega_constant
        self.basepoint = basepoint
        self.cond_max = cond_max

    def fit(self, F, F_plus, B=None):
        F = check_field(F, name="F")
        F_plus = check_field(F_plus, F.n, name="F_plus")
        check_same_grid(F, F_plus)
        B = zero_field(F.grid, F.n) if B is None else check_field(B, F.n, name="B")
        check_same_grid(F, B)
        n = F.n
        self.omega_ = omega(F, F_plus, self.basepoint, 1j * self.c0 * np.eye(n))
        self.omega_inv_, self.invertibility_ = checked_inverse(
            self.omega_.omega, self.cond_max, "omega_{F,F+}", "singular-omega")
        self.F_, self.F_plus_, self.B_ = F, F_plus, B
        self.b_t_ = B + F @ self.omega_inv_ @ F_plus
        return self

    def _constant(self):
        c = self.c0 if self.omega_constant is None else self.omega_constant
        return 1j * c * np.eye(self.F_.n)

    def transform(self, Psi):
        check_is_fitted(self, "omega_")
        Psi = check_field(Psi, self.F_.n, name="Psi")
        w = omega(Psi, self.F_plus_, self.omega_.basepoint, self._constant())
        return Psi - self.F_ @ self.omega_inv_ @ w.omega

    def transform_conjugate(self, Psi_plus):
        check_is_fitted(self, "omega_")
        Psi_plus = check_field(Psi_plus, self.F_.n, name="Psi_plus")
        w = omega(self.F_, Psi_plus, self.omega_.basepoint, self._constant())
        return Psi_plus - w.omega @ self.omega_inv_ @ self.F_plus_


class PropOneTransform(TransformerMixin, BaseEstimator):
    """One-sided pivot map for ``dbar Psi + A Psi = 0``.

    ``kappa`` is a constant (holomorphic) matrix added to ``T(F+ F)``; it
    selects the representative of ``omega_hat_{F,F+}``.  ``kappa_psi`` does
    the same for ``omega_hat_{Psi,F+}`` (``None`` reuses ``kappa``).
    """

    def __init__(self, kappa=0.0, kappa_psi=None, mode="fast-convolution",
                 cond_max=DEFAULT_COND_MAX):
        self.kappa = kappa
        self.kappa_psi = kappa_psi
        self.mode = mode
        self.cond_max = cond_max

    def fit(self, F, F_plus, A=None):
        F = check_field(F, name="F")
        F_plus = check_field(F_plus, F.n, name="F_plus")
        A = zero_field(F.grid, F.n) if A is None else check_field(A, F.n, name="A")
        check_same_grid(F, F_plus, A)
        self.plan_ = PompeiuPlan(F.grid, self.mode)
        self.omega_hat_ = omega_hat(F, F_plus, self.plan_, self.kappa)
        self.omega_hat_inv_, self.invertibility_ = checked_inverse(
            self.omega_hat_, self.cond_max, "omega_hat_{F,F+}", "singular-omega")
        self.F_, self.F_plus_ = F, F_plus
        self.a_t_ = A + F @ self.omega_hat_inv_ @ F_plus
        return self

    def transform(self, Psi):
        check_is_fitted(self, "omega_hat_")
        Psi = check_field(Psi, self.F_.n, name="Psi")
        k = self.kappa if self.kappa_psi is None else self.kappa_psi
        w = omega_hat(Psi, self.F_plus_, self.plan_, k)
        return Psi - self.F_ @ self.omega_hat_inv_ @ w


class GaugeReducer(TransformerMixin, BaseEstimator):
    """Removes ``A`` from ``dbar Psi + A Psi + B conj(Psi) = 0``.

    ``fit(A)`` solves for the gauge factor ``g_``; ``transform(Psi)`` gives
    ``g^-1 Psi`` and ``reduce_coefficient(B)`` gives ``g^-1 B conj(g)``.
    """

    def __init__(self, tol=1e-10, max_iter=60, contraction_guard=0.9,
                 mode="fast-convolution", cond_max=DEFAULT_COND_MAX):
        self.tol = tol
        self.max_iter = max_iter
        self.contraction_guard = contraction_guard
        self.mode = mode
        self.cond_max = cond_max

    def fit(self, A, y=None):
        A = check_field(A, name="A")
        settings = IterationSettings(self.tol, self.max_iter, self.contraction_guard)
        self.history_ = []
        self.g_ = solve_gauge(A, settings, PompeiuPlan(A.grid, self.mode), self.history_,
                              self.cond_max)
        self.A_ = A
        return self

    def transform(self, Psi):
        check_is_fitted(self, "g_")
        Psi = check_field(Psi, self.A_.n, name="Psi")
        return gauge_reduce(self.A_, zero_field(Psi.grid, Psi.n), Psi, self.g_,
                            self.cond_max).psi_t

    def reduce_coefficient(self, B):
        check_is_fitted(self, "g_")
        B = check_field(B, self.A_.n, name="B")
        return gauge_reduce(self.A_, B, zero_field(B.grid, B.n), self.g_, self.cond_max).b_t
