import numpy as np
import pytest

from mlaf.spectral import (
    SpectralVectorField,
    TorusGrid,
    make_grid,
    project_solenoidal,
    transform_to_spectral,
)

TWO_PI = 2.0 * np.pi


def random_solenoidal(grid, seed, masked=True, scale=1.0):
    """Seeded random divergence-free field, truncated to the dealias mask."""
    rng = np.random.default_rng(seed)
    phys = rng.standard_normal((3, grid.n, grid.n, grid.n))
    u = project_solenoidal(transform_to_spectral(grid, phys))
    c = u.coeffs * scale
    if masked:
        c = c * grid.mask
    return SpectralVectorField(grid, c, solenoidal=True)


def taylor_green(grid, amplitude=1.0):
    x = grid.coordinates() * grid.k0
    phys = np.zeros((3, grid.n, grid.n, grid.n))
    phys[0] = amplitude * np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
    phys[1] = -amplitude * np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    u = project_solenoidal(transform_to_spectral(grid, phys))
    return SpectralVectorField(grid, u.coeffs * grid.mask, solenoidal=True)


def single_mode(grid, m, amp, component=0):
    """Real field  2 Re(amp e^{i k0 m.x})  along one component."""
    n = grid.n
    c = np.zeros(grid.spectral_shape, dtype=np.complex128)
    mx, my, mz = m
    if mz >= 0:
        c[component, mx % n, my % n, mz] = amp
    else:
        c[component, (-mx) % n, (-my) % n, -mz] = np.conj(amp)
    if mz == 0:
        c[component, (-mx) % n, (-my) % n, 0] = np.conj(amp)
    return SpectralVectorField(grid, c)


@pytest.fixture(scope="session")
def grid8():
    return make_grid(8, TWO_PI)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, TWO_PI)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, TWO_PI)
