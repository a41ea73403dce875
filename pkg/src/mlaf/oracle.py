"""Brute-force reference implementations on tiny grids.

Everything here is deliberately literal and slow: the advective term is the
triple-loop convolution

    [(a . grad) b]^(k) = sum_{p+q=k} i k0 (a^(p) . q) b^(q),

truncated to the dealias mask and then projected, and the reference
integrator is textbook fixed-step RK4.  The main spectral path must match
this module, never the other way around.  Grids are capped at n = 8
(cost O(n^6)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .spectral import SpectralVectorField, TorusGrid

__all__ = ["DenseField", "dense_nonlinear", "reference_integrate"]

_MAX_N = 8


@dataclass(frozen=True, eq=False)
class DenseField:
    """Full-lattice complex coefficients, shape (3, n, n, n), fft index order.

    Hermitian-symmetric with zero mean, like the half-spectrum field type.
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.grid.n > _MAX_N:
            raise ConfigurationError(f"oracle grids are capped at n = {_MAX_N}")
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (3, self.grid.n, self.grid.n, self.grid.n):
            raise GridMismatchError(f"dense coefficient shape {c.shape} is wrong")
        c[:, 0, 0, 0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_field(cls, field: SpectralVectorField) -> "DenseField":
        """Expand a half-spectrum field to the full lattice via conjugation."""
        g = field.grid
        n = g.n
        nz = n // 2 + 1
        full = np.zeros((3, n, n, n), dtype=np.complex128)
        full[..., :nz] = field.coeffs
        perm = (n - np.arange(n)) % n
        mirrored = np.conj(field.coeffs[:, perm][:, :, perm])
        for mz in range(1, (n + 1) // 2):
            full[..., n - mz] = mirrored[..., mz]
        return cls(g, full)

    def to_field(self) -> SpectralVectorField:
        nz = self.grid.n // 2 + 1
        return SpectralVectorField(self.grid, self.coeffs[..., :nz].copy())

    def mode(self, m: tuple) -> np.ndarray:
        """Coefficient 3-vector at integer lattice vector m."""
        n = self.grid.n
        return self.coeffs[:, m[0] % n, m[1] % n, m[2] % n]


def _lattice_range(n: int):
    """Integer frequencies present on an n-grid, in fft index order."""
    return np.fft.fftfreq(n, 1.0 / n).astype(int)


def _project_mode(m: np.ndarray, c: np.ndarray) -> np.ndarray:
    m2 = float(m @ m)
    if m2 == 0.0:
        return np.zeros(3, dtype=np.complex128)
    return c - m * ((m @ c) / m2)


def dense_nonlinear(a: DenseField, b: DenseField) -> DenseField:
    """Exact truncated convolution of ``(a . grad) b``, solenoidally projected.

    Inputs are truncated to the dealias mask first (they are elements of the
    Galerkin space), matching the main path's contract.
    """
    if not a.grid.compatible(b.grid):
        raise GridMismatchError("dense fields live on different grids")
    g = a.grid
    n, cut, k0 = g.n, g.dealias_cut, g.k0
    freqs = _lattice_range(n)

    # Collect masked input modes as (m, coeff) lists.
    def masked_modes(d: DenseField):
        modes = []
        for ix, mx in enumerate(freqs):
            for iy, my in enumerate(freqs):
                for iz, mz in enumerate(freqs):
                    if max(abs(mx), abs(my), abs(mz)) <= cut:
                        c = d.coeffs[:, ix, iy, iz]
                        if c.any():
                            modes.append((np.array([mx, my, mz]), c))
        return modes

    a_modes = masked_modes(a)
    b_modes = masked_modes(b)

    out = np.zeros((3, n, n, n), dtype=np.complex128)
    for p, ca in a_modes:
        for q, cb in b_modes:
            k = p + q
            if max(abs(k[0]), abs(k[1]), abs(k[2])) <= cut:
                out[:, k[0] % n, k[1] % n, k[2] % n] += (1j * k0) * (ca @ q) * cb

    # Solenoidal projection, mode by mode.
    for ix, mx in enumerate(freqs):
        for iy, my in enumerate(freqs):
            for iz, mz in enumerate(freqs):
                m = np.array([mx, my, mz])
                out[:, ix, iy, iz] = _project_mode(m, out[:, ix, iy, iz])
    return DenseField(g, out)


def _dense_rhs(u: DenseField, nu: float, alpha: float, kind: str, f: DenseField) -> np.ndarray:
    """Full tendency of the alpha-model family in dense form."""
    g = u.grid
    freqs = _lattice_range(g.n)
    m2 = (
        freqs[:, None, None] ** 2 + freqs[None, :, None] ** 2 + freqs[None, None, :] ** 2
    ).astype(float)
    k2 = g.k0**2 * m2
    ubar = DenseField(g, u.coeffs / (1.0 + alpha**2 * k2))
    if kind == "ml-alpha":
        adv = dense_nonlinear(u, ubar)
    elif kind == "leray-alpha":
        adv = dense_nonlinear(ubar, u)
    elif kind == "nse":
        adv = dense_nonlinear(u, u)
    else:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    return -adv.coeffs - nu * k2 * u.coeffs + f.coeffs


def reference_integrate(
    u: DenseField,
    f: DenseField,
    nu: float,
    alpha: float,
    kind: str,
    dt: float,
    steps: int,
) -> DenseField:
    """Advance the dense state with classical RK4 (trajectory oracle)."""
    g = u.grid
    y = u.coeffs.copy()
    for _ in range(steps):
        k1 = _dense_rhs(DenseField(g, y), nu, alpha, kind, f)
        k2 = _dense_rhs(DenseField(g, y + 0.5 * dt * k1), nu, alpha, kind, f)
        k3 = _dense_rhs(DenseField(g, y + 0.5 * dt * k2), nu, alpha, kind, f)
        k4 = _dense_rhs(DenseField(g, y + dt * k3), nu, alpha, kind, f)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return DenseField(g, y)
