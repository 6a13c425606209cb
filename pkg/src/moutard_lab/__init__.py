"""Moutard-type transformations for matrix generalized analytic functions on grids.

Solutions of ``dbar Psi + A Psi + B conj(Psi) = 0`` (and the conjugate
system ``dz Psi+ - conj(Psi+) B = 0``) are represented as
:class:`MatrixField` samples on a uniform rectangular grid.  The package
constructs solutions by Picard iteration on the Pompeiu operator, builds
the closed-form potentials that the transformations need, applies the
transformations and measures how well the outputs solve their systems.
"""
from .cauchy import PompeiuPlan, make_plan, pompeiu_T, pompeiu_Tbar
from .errors import (ConfigError, ContractionError, ConvergenceError, MoutardLabError,
                     NumericalRefusal, SingularFieldError)
from .estimators import (GaugeReducer, MoutardTransform, PompeiuTransform, PropOneTransform,
                         check_field)
from .grid import (Grid, InvertibilityReport, MatrixField, StencilMask, build_field,
                   constant_field, dbar, dz, identity_field, inverse_field, make_grid, norms,
                   pointwise, scalar_field, zero_field)
from .moutard import gauge_reduce, remark_check, transform_prop1, transform_theorem1
from .potential import PotentialField, integrability_defect, omega, omega_hat, project_skew_real
from .seeds import (IterationSettings, solve_gauge, solve_lambda, solve_system1, solve_system2,
                    solve_system3)
from .verify import ConvergenceRow, ResidualReport, convergence_study, residual

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContractionError", "ConvergenceError", "ConvergenceRow", "GaugeReducer",
    "Grid", "InvertibilityReport", "IterationSettings", "MatrixField", "MoutardLabError",
    "MoutardTransform", "NumericalRefusal", "PompeiuPlan", "PompeiuTransform",
    "PotentialField", "PropOneTransform", "ResidualReport", "SingularFieldError",
    "StencilMask", "build_field", "check_field", "constant_field", "convergence_study", "dbar",
    "dz", "gauge_reduce", "identity_field", "integrability_defect", "inverse_field",
    "make_grid", "make_plan", "norms", "omega", "omega_hat", "pointwise", "pompeiu_T",
    "pompeiu_Tbar", "project_skew_real", "remark_check", "residual", "scalar_field",
    "solve_gauge", "solve_lambda", "solve_system1", "solve_system2", "solve_system3",
    "transform_prop1", "transform_theorem1", "zero_field",
]
