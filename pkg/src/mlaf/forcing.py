"""Time-independent, divergence-free body force on a single wavenumber shell.

"Narrow band" is realized as the exact lattice shell ``|m|^2 = shell_m^2``,
which turns the single-scale property into an identity: with
``ell = 1/(k0 * shell_m)`` every derivative moment satisfies
``Phi_N = ell^(-2N) * Phi_0`` exactly.  Phases come from a Philox generator
keyed by the seed, drawn over the shell's half-space representatives in
lexicographic order, so the same seed yields the same physical force on any
grid that can hold the shell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .spectral import SpectralVectorField, TorusGrid, sobolev_moment

__all__ = ["ForcingSpec", "narrowband_force", "forcing_length", "f_rms", "grashof"]


@dataclass(frozen=True)
class ForcingSpec:
    """Shell radius (in units of k0), target rms amplitude, and phase seed."""

    shell_m: int
    amplitude: float
    seed: int = 0

    def __post_init__(self):
        if self.shell_m < 2:
            raise ConfigurationError(
                f"forcing.shell_m: must be >= 2, got {self.shell_m}"
            )
        if not (self.amplitude > 0):
            raise ConfigurationError(
                f"forcing.amplitude: must be > 0, got {self.amplitude}"
            )


def shell_representatives(shell_m: int):
    """Half-space lattice vectors with ``|m|^2 = shell_m^2``, sorted.

    One of each conjugate pair, chosen by first-nonzero-positive and ordered
    lexicographically so the random draw sequence is grid-independent.
    """
    s2 = shell_m * shell_m
    reps = []
    for mx in range(-shell_m, shell_m + 1):
        for my in range(-shell_m, shell_m + 1):
            rem = s2 - mx * mx - my * my
            if rem < 0:
                continue
            mz = math.isqrt(rem)
            if mz * mz != rem:
                continue
            for z in {mz, -mz}:
                m = (mx, my, z)
                if m > (0, 0, 0):
                    reps.append(m)
    return sorted(reps)


def _polarization_basis(m: np.ndarray) -> tuple:
    """Deterministic orthonormal pair spanning the plane orthogonal to m."""
    helper = np.array([0.0, 0.0, 1.0])
    if m[0] == 0 and m[1] == 0:
        helper = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(m, helper)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(m, e1)
    e2 = e2 / np.linalg.norm(e2)
    return e1, e2


def narrowband_force(grid: TorusGrid, spec: ForcingSpec) -> SpectralVectorField:
    """Construct the shell-supported force, normalized so ``L^{-3/2} ||f|| = amplitude``.

    Each shell mode carries a random phase and a random polarization
    orthogonal to its wavevector; both are deterministic in the seed.
    """
    if spec.shell_m > grid.dealias_cut - 1:
        raise ConfigurationError(
            f"forcing.shell_m: shell {spec.shell_m} does not fit below the dealias "
            f"cut {grid.dealias_cut} of an n = {grid.n} grid"
        )
    reps = shell_representatives(spec.shell_m)
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    n = grid.n
    c = np.zeros(grid.spectral_shape, dtype=np.complex128)
    for m in reps:
        theta, psi = rng.uniform(0.0, 2.0 * np.pi, size=2)
        mv = np.array(m, dtype=float)
        e1, e2 = _polarization_basis(mv)
        amp = np.exp(1j * theta) * (np.cos(psi) * e1 + np.sin(psi) * e2)
        mx, my, mz = m
        if mz > 0:
            c[:, mx % n, my % n, mz] = amp
        elif mz < 0:
            c[:, (-mx) % n, (-my) % n, -mz] = np.conj(amp)
        else:
            c[:, mx % n, my % n, 0] = amp
            c[:, (-mx) % n, (-my) % n, 0] = np.conj(amp)
    f = SpectralVectorField(grid, c, solenoidal=True)
    current = f_rms(f)
    return SpectralVectorField(
        grid, f.coeffs * (spec.amplitude / current), solenoidal=True
    )


def forcing_length(grid: TorusGrid, spec: ForcingSpec) -> float:
    """Forcing length scale ``ell = 1/(k0 * shell_m)`` (inverse wavenumber, no 2 pi)."""
    return 1.0 / (grid.k0 * spec.shell_m)


def f_rms(f: SpectralVectorField) -> float:
    """Root-mean-square amplitude ``L^{-3/2} ||f||_{L2}``."""
    return float(np.sqrt(sobolev_moment(f, 0) / f.grid.L**3))


def grashof(f: SpectralVectorField, ell: float, nu: float, L: float) -> float:
    """Grashof number ``Gr = ell^3 f_rms / nu^2`` with ``f_rms = L^{-3/2} ||f||``."""
    if not (nu > 0):
        raise ConfigurationError(f"model.nu: must be > 0, got {nu}")
    rms = float(np.sqrt(sobolev_moment(f, 0))) / L**1.5
    return ell**3 * rms / nu**2
