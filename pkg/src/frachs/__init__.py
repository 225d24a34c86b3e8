"""
frachs: numerical lab for the fractional Hardy-Sobolev inequality with the
spectral Dirichlet Laplacian.

Entry points:
- make_params / make_grid          parameters and tensor grids
- eigenpairs / spectral_form       spectral calculus of the Dirichlet Laplacian
- extend / extension_energy        weighted extension to the half-space
- halfspace_minimizer              reduced half-space minimizer and decay checks
- minimize_quotient                quotient minimization on bounded domains
- curvature_functionals            boundary-curvature diagnostics
- run_experiment                   named experiments with JSON/CSV reports
"""

import logging as _logging

try:
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("frachs")
except Exception:
    __version__ = "0.1.0"

_logger = _logging.getLogger("frachs")
if not _logger.handlers:
    _handler = _logging.StreamHandler()
    _handler.setFormatter(_logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
    _logger.addHandler(_handler)
    _logger.setLevel(_logging.WARNING)

from .core import FracParams, Grid, GridFunction, make_grid, make_params
from .spectral import (
    eigenpairs,
    dirichlet_laplacian,
    rayleigh_quotient,
    riesz_form,
    spectral_form,
    weighted_norm,
)
from .extension import bessel_k, conormal_derivative, extend, extension_energy
from .halfspace import (
    decay_certificate,
    green_kernel,
    halfspace_minimizer,
    kelvin,
    kernel_bound_margin,
    kernel_normalizations,
    level_lambda,
)
from .variational import minimize_quotient, nonattainment_diagnostic, pohozaev_terms
from .geometry import (
    correction_integrals,
    curvature_functionals,
    flatten_map,
    trial_function,
    trial_quotient_sweep,
)
from .experiments import run_experiment

__all__ = [
    "__version__",
    "FracParams",
    "Grid",
    "GridFunction",
    "make_params",
    "make_grid",
    "dirichlet_laplacian",
    "eigenpairs",
    "spectral_form",
    "riesz_form",
    "weighted_norm",
    "rayleigh_quotient",
    "bessel_k",
    "extend",
    "extension_energy",
    "conormal_derivative",
    "green_kernel",
    "kernel_normalizations",
    "kernel_bound_margin",
    "kelvin",
    "halfspace_minimizer",
    "decay_certificate",
    "level_lambda",
    "minimize_quotient",
    "nonattainment_diagnostic",
    "pohozaev_terms",
    "curvature_functionals",
    "flatten_map",
    "trial_function",
    "correction_integrals",
    "trial_quotient_sweep",
    "run_experiment",
]
