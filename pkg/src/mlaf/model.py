"""Helmholtz filter and right-hand-side assembly for the alpha-model family.

Three members share one advective skeleton, differing only in which field
advects which:

    ml-alpha     du/dt + (u . grad) ubar = nu lap u - grad p + f
    leray-alpha  du/dt + (ubar . grad) u = nu lap u - grad p + f
    nse          du/dt + (u . grad) u    = nu lap u - grad p + f

with ``ubar = (I - alpha^2 lap)^{-1} u`` (diagonal symbol
``1/(1 + alpha^2 |k|^2)``).  Pressure is never represented: the solenoidal
projection absorbs it, and the filter's auxiliary pressure is constant for
divergence-free input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import testhooks
from .errors import ConfigurationError
from .spectral import (
    SpectralVectorField,
    advect,
    divergence_linf,
    project_solenoidal,
    sobolev_moment,
)

__all__ = [
    "ModelKind",
    "ModelParams",
    "helmholtz_filter",
    "unfilter",
    "nonlinear_term",
    "rhs",
    "explicit_tendency",
]


class ModelKind(enum.Enum):
    ML_ALPHA = "ml-alpha"
    LERAY_ALPHA = "leray-alpha"
    NSE = "nse"


@dataclass(frozen=True)
class ModelParams:
    """Viscosity, filter length and model selector."""

    nu: float
    alpha: float = 0.0
    kind: ModelKind = ModelKind.ML_ALPHA

    def __post_init__(self):
        if not (self.nu > 0):
            raise ConfigurationError(f"model.nu: must be > 0, got {self.nu}")
        if self.alpha < 0:
            raise ConfigurationError(f"model.alpha: must be >= 0, got {self.alpha}")

    @property
    def effective_alpha(self) -> float:
        """Filter length actually applied; the NSE limit forces the identity."""
        return 0.0 if self.kind is ModelKind.NSE else self.alpha


def helmholtz_filter(u: SpectralVectorField, alpha: float) -> SpectralVectorField:
    """Apply ``(I - alpha^2 lap)^{-1}``: coefficients divided by ``1 + alpha^2 |k|^2``.

    Diagonal in Fourier space, so it commutes with spectral derivatives and
    preserves zero mean and solenoidality.  ``alpha = 0`` returns the input.
    """
    if alpha == 0.0:
        return u
    g = u.grid
    return SpectralVectorField(
        g, u.coeffs / (1.0 + alpha**2 * g.k2), solenoidal=u.solenoidal
    )


def unfilter(ubar: SpectralVectorField, alpha: float) -> SpectralVectorField:
    """Exact inverse of :func:`helmholtz_filter`."""
    if alpha == 0.0:
        return ubar
    g = ubar.grid
    return SpectralVectorField(
        g, ubar.coeffs * (1.0 + alpha**2 * g.k2), solenoidal=ubar.solenoidal
    )


def _advecting_pair(kind: ModelKind, u, ubar):
    if kind is ModelKind.ML_ALPHA:
        return u, ubar
    if kind is ModelKind.LERAY_ALPHA:
        return ubar, u
    return u, u


def nonlinear_term(
    kind: ModelKind, u: SpectralVectorField, ubar: SpectralVectorField
) -> SpectralVectorField:
    """Dealiased, solenoidally projected advective term for the given model.

    Returns the projection of ``(a . grad) b`` with (a, b) = (u, ubar) for
    ml-alpha, (ubar, u) for leray-alpha and (u, u) for nse.
    """
    a, b = _advecting_pair(kind, u, ubar)
    conv, _ = advect(u.grid, a.coeffs, b.coeffs)
    raw = SpectralVectorField(u.grid, conv)
    if testhooks.SKIP_PROJECTION:
        return raw
    return project_solenoidal(raw)


def _require_solenoidal_forcing(f: SpectralVectorField):
    scale = f.norm_l2() * f.grid.k0
    if divergence_linf(f) > 1e-12 * max(scale, 1e-300):
        raise ConfigurationError("forcing: must be divergence-free (k . f(k) != 0)")


def explicit_tendency(
    u: SpectralVectorField, params: ModelParams, f: SpectralVectorField | None
) -> SpectralVectorField:
    """Non-stiff part of the tendency, ``-(a . grad) b + f``.

    The viscous term is excluded here on purpose: integrators apply it
    exactly through the per-mode integrating factor.
    """
    ubar = helmholtz_filter(u, params.effective_alpha)
    adv = nonlinear_term(params.kind, u, ubar)
    c = -adv.coeffs
    if f is not None:
        c = c + f.coeffs
    return SpectralVectorField(u.grid, c, solenoidal=not testhooks.SKIP_PROJECTION)


def rhs(
    u: SpectralVectorField, params: ModelParams, f: SpectralVectorField | None
) -> SpectralVectorField:
    """Full tendency ``-(a . grad) b + nu lap u + f`` in spectral space.

    Refuses non-solenoidal forcing.  The result is divergence-free and
    zero-mean; see :func:`explicit_tendency` for the split the integrator
    uses.
    """
    if f is not None:
        _require_solenoidal_forcing(f)
    expl = explicit_tendency(u, params, f)
    g = u.grid
    return SpectralVectorField(
        g, expl.coeffs - params.nu * g.k2 * u.coeffs, solenoidal=expl.solenoidal and u.solenoidal
    )


def filter_sandwich_bounds(u: SpectralVectorField, alpha: float) -> tuple:
    """Evaluate the three members of the Poincare sandwich
    ``alpha^2 ||ubar||_{H2} <= ||u||_{L2} <= (L^2/(4 pi^2) + alpha^2) ||ubar||_{H2}``
    with the homogeneous H2 seminorm ``sqrt(integral |lap ubar|^2)``.

    Returns (lower, middle, upper).
    """
    ubar = helmholtz_filter(u, alpha)
    h2 = np.sqrt(sobolev_moment(ubar, 2))
    l2 = np.sqrt(sobolev_moment(u, 0))
    L = u.grid.L
    return alpha**2 * h2, l2, (L**2 / (4 * np.pi**2) + alpha**2) * h2
