import numpy as np
import pytest

from mlaf.diagnostics import tau
from mlaf.errors import ConfigurationError
from mlaf.forcing import (
    ForcingSpec,
    f_rms,
    forcing_length,
    grashof,
    narrowband_force,
    shell_representatives,
)
from mlaf.spectral import divergence_linf, make_grid, sobolev_moment

from conftest import TWO_PI


class TestForcingSpec:
    def test_shell_too_small(self):
        with pytest.raises(ConfigurationError, match="shell_m"):
            ForcingSpec(shell_m=1, amplitude=1.0)

    def test_nonpositive_amplitude(self):
        with pytest.raises(ConfigurationError, match="amplitude"):
            ForcingSpec(shell_m=3, amplitude=0.0)

    def test_shell_must_fit_under_mask(self, grid16):
        # n = 16 has cut 5, so shell_m <= 4
        with pytest.raises(ConfigurationError, match="shell_m"):
            narrowband_force(grid16, ForcingSpec(shell_m=5, amplitude=1.0))


class TestShellRepresentatives:
    def test_axis_shell(self):
        reps = shell_representatives(2)
        # |m|^2 = 4: only the six axis vectors (+-2, 0, 0) etc; three reps
        assert reps == [(0, 0, 2), (0, 2, 0), (2, 0, 0)]

    def test_representatives_cover_half_space(self):
        for s in (2, 3, 4):
            reps = shell_representatives(s)
            assert all(m > (0, 0, 0) for m in reps)
            assert all(m[0] ** 2 + m[1] ** 2 + m[2] ** 2 == s * s for m in reps)
            # no conjugate pairs
            assert not any((-a, -b, -c) in reps for (a, b, c) in reps)


class TestNarrowbandForce:
    def test_shell_identity_exact(self, grid32):
        spec = ForcingSpec(shell_m=3, amplitude=0.7, seed=5)
        f = narrowband_force(grid32, spec)
        ell = forcing_length(grid32, spec)
        phi0 = sobolev_moment(f, 0)
        for order in range(7):
            expect = ell ** (-2 * order) * phi0
            assert sobolev_moment(f, order) == pytest.approx(expect, rel=1e-12)

    def test_divergence_free(self, grid32):
        f = narrowband_force(grid32, ForcingSpec(shell_m=3, amplitude=1.0, seed=6))
        assert divergence_linf(f) <= 1e-13 * f.norm_l2() * grid32.k0

    def test_amplitude_normalization(self, grid32):
        spec = ForcingSpec(shell_m=4, amplitude=0.37, seed=7)
        f = narrowband_force(grid32, spec)
        assert f_rms(f) == pytest.approx(0.37, rel=1e-13)

    def test_same_seed_bit_identical(self, grid32):
        spec = ForcingSpec(shell_m=3, amplitude=0.5, seed=8)
        f1 = narrowband_force(grid32, spec)
        f2 = narrowband_force(grid32, spec)
        assert np.array_equal(f1.coeffs, f2.coeffs)

    def test_different_seed_differs(self, grid32):
        f1 = narrowband_force(grid32, ForcingSpec(3, 0.5, seed=8))
        f2 = narrowband_force(grid32, ForcingSpec(3, 0.5, seed=9))
        assert not np.array_equal(f1.coeffs, f2.coeffs)

    def test_same_field_across_resolutions(self, grid32):
        # The phase draw is keyed to the lattice shell, not the grid, so the
        # physical force is identical on any grid that holds the shell.
        g64 = make_grid(64, TWO_PI)
        spec = ForcingSpec(shell_m=3, amplitude=0.5, seed=11)
        f32 = narrowband_force(grid32, spec)
        f64 = narrowband_force(g64, spec)
        nz = 17
        # compare every mode of the 32^3 half-spectrum against its 64^3 slot
        for ix in range(32):
            mx = ix if ix < 16 else ix - 32
            for iy in range(32):
                my = iy if iy < 16 else iy - 32
                got = f64.coeffs[:, mx % 64, my % 64, 0:nz]
                ref = f32.coeffs[:, ix, iy, :]
                assert np.array_equal(got, ref)

    def test_support_is_exactly_the_shell(self, grid32):
        f = narrowband_force(grid32, ForcingSpec(shell_m=3, amplitude=0.5, seed=12))
        on_shell = grid32.m2 == 9
        assert np.all(f.coeffs[:, ~on_shell] == 0.0)
        assert np.abs(f.coeffs[:, on_shell]).max() > 0.0


class TestGrashof:
    def test_unit_values(self, grid32):
        spec = ForcingSpec(shell_m=3, amplitude=1.0, seed=1)
        f = narrowband_force(grid32, spec)
        # f_rms = 1 by normalization; Gr = ell^3 / nu^2
        ell = forcing_length(grid32, spec)
        assert grashof(f, 1.0, 1.0, grid32.L) == pytest.approx(
            f_rms(f), rel=1e-12
        )
        assert grashof(f, ell, 1.0, grid32.L) == pytest.approx(ell**3, rel=1e-12)

    def test_doubling_nu_quarters(self, grid32):
        f = narrowband_force(grid32, ForcingSpec(3, 0.8, seed=2))
        g1 = grashof(f, 0.5, 0.1, grid32.L)
        g2 = grashof(f, 0.5, 0.2, grid32.L)
        assert g1 / g2 == pytest.approx(4.0, rel=1e-12)

    def test_constructed_force_closed_form(self, grid32):
        spec = ForcingSpec(shell_m=3, amplitude=0.45, seed=3)
        f = narrowband_force(grid32, spec)
        ell = forcing_length(grid32, spec)
        nu = 0.07
        assert grashof(f, ell, nu, grid32.L) == pytest.approx(
            ell**3 * 0.45 / nu**2, rel=1e-12
        )


class TestTau:
    def test_gr_e(self):
        assert tau(np.e, 1.0, 1.0) == pytest.approx(np.e ** (-0.5), rel=1e-14)

    def test_gr_at_most_one_rejected(self):
        with pytest.raises(ConfigurationError, match="Gr <= 1"):
            tau(1.0, 1.0, 1.0)
        with pytest.raises(ConfigurationError, match="Gr <= 1"):
            tau(0.5, 1.0, 1.0)

    def test_ell_doubling_quadruples(self):
        assert tau(10.0, 2.0, 1.0) / tau(10.0, 1.0, 1.0) == pytest.approx(4.0)

    def test_finite_positive_above_one(self):
        for gr in (1.0001, 2.0, 1e6):
            t = tau(gr, 0.5, 0.01)
            assert np.isfinite(t) and t > 0
