"""Pseudo-spectral solver and diagnostics harness for alpha-regularized
Navier-Stokes models (ml-alpha, leray-alpha, nse) on the periodic 3-torus."""

__version__ = "0.1.0"

from .forcing import ForcingSpec, forcing_length, grashof, narrowband_force
from .integrator import SimState, cfl_dt, make_plan, step
from .model import (
    ModelKind,
    ModelParams,
    helmholtz_filter,
    nonlinear_term,
    rhs,
    unfilter,
)
from .spectral import (
    SpectralVectorField,
    TorusGrid,
    dealiased_product,
    make_grid,
    project_solenoidal,
    sobolev_moment,
    sup_norms,
    transform_to_physical,
    transform_to_spectral,
)

__all__ = [
    "__version__",
    "TorusGrid",
    "SpectralVectorField",
    "make_grid",
    "transform_to_physical",
    "transform_to_spectral",
    "project_solenoidal",
    "sobolev_moment",
    "sup_norms",
    "dealiased_product",
    "ModelKind",
    "ModelParams",
    "helmholtz_filter",
    "unfilter",
    "nonlinear_term",
    "rhs",
    "SimState",
    "cfl_dt",
    "step",
    "make_plan",
    "ForcingSpec",
    "narrowband_force",
    "forcing_length",
    "grashof",
]
