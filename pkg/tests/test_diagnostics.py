import math

import numpy as np
import pytest

from mlaf.diagnostics import (
    AverageAccumulator,
    RunSeries,
    default_c_ref,
    j_moment,
    kappa,
    ladder_check,
    moment_ladder,
    record,
    reynolds,
    tau,
    time_average,
)
from mlaf.errors import ConfigurationError
from mlaf.forcing import ForcingSpec, forcing_length, grashof, narrowband_force
from mlaf.integrator import SimState, make_plan, step
from mlaf.model import ModelKind, ModelParams, helmholtz_filter
from mlaf.spectral import SpectralVectorField, sobolev_moment

from conftest import random_solenoidal, single_mode, taylor_green


def _forced_series(grid, n_steps=120, sample_every=10, amplitude=0.4, nu=0.05, alpha=0.3):
    params = ModelParams(nu=nu, alpha=alpha)
    spec = ForcingSpec(2, amplitude, seed=21)
    f = narrowband_force(grid, spec)
    ell = forcing_length(grid, spec)
    gr = grashof(f, ell, nu, grid.L)
    st = SimState(0.0, taylor_green(grid, 0.8), params, f)
    dt = 0.02
    plan = make_plan(grid, params, dt)
    series = RunSeries(
        params=params, n=grid.n, L=grid.L, n_max=6, dt=dt,
        forcing=spec, ell=ell, gr=gr, seed=21,
    )
    series.records.append(record(st, f, params, 6))
    for k in range(1, n_steps + 1):
        st = step(st, dt, plan)
        if k % sample_every == 0:
            series.records.append(record(st, f, params, 6))
    return series


class TestRecord:
    def test_single_mode_closed_forms(self, grid16):
        g = grid16
        A = 0.9
        params = ModelParams(nu=0.1, alpha=0.4)
        u = single_mode(g, (0, 0, 1), A / 2j)  # A sin(k0 z)
        rec = record(SimState(0.0, u, params, None), None, params, 6)
        sym = 1.0 + params.alpha**2 * g.k0**2
        for m in range(7):
            h = A**2 * g.k0 ** (2 * m) * g.L**3 / 2
            assert rec.H[m] == pytest.approx(h, rel=1e-12)
            assert rec.Hbar[m] == pytest.approx(h / sym**2, rel=1e-12)
        assert rec.inj == 0.0
        assert np.all(rec.Phi == 0.0)
        expected_visc = params.nu * (rec.Hbar[1] + params.alpha**2 * rec.Hbar[2])
        assert rec.visc == pytest.approx(expected_visc, rel=1e-14)
        # single solenoidal mode: no advection, so dE/dt = -visc exactly
        assert rec.dE_dt_exact == pytest.approx(-rec.visc, rel=1e-12)

    def test_zero_state_all_zero(self, grid16):
        params = ModelParams(nu=0.1, alpha=0.2)
        z = SpectralVectorField.zero(grid16)
        rec = record(SimState(0.0, z, params, None), None, params, 6)
        assert np.all(rec.H == 0) and np.all(rec.Hbar == 0)
        assert rec.sup_ubar == 0 and rec.sup_grad_ubar == 0
        assert rec.inj == 0 and rec.visc == 0 and rec.dE_dt_exact == 0

    def test_energy_rate_matches_centered_difference(self, grid16):
        # dE/dt from the RHS against (E(t+dt) - E(t-dt)) / 2dt, second order:
        # quartering dt should cut the disagreement by about 16.
        params = ModelParams(nu=0.05, alpha=0.3)
        f = narrowband_force(grid16, ForcingSpec(2, 0.4, seed=2))
        u0 = taylor_green(grid16, 0.8)

        def fd_error(dt):
            st = SimState(0.0, u0, params, f)
            plan = make_plan(grid16, params, dt)
            sm = step(st, dt, plan)          # t0 + dt
            sp = step(sm, dt, plan)          # t0 + 2 dt
            mid = record(sm, f, params, 2)
            e0 = record(st, f, params, 2)
            e2 = record(sp, f, params, 2)
            a2 = params.alpha**2
            e_of = lambda r: 0.5 * (r.Hbar[0] + a2 * r.Hbar[1])
            fd = (e_of(e2) - e_of(e0)) / (2 * dt)
            return abs(fd - mid.dE_dt_exact)

        e_coarse, e_fine = fd_error(0.04), fd_error(0.01)
        assert e_coarse / e_fine == pytest.approx(16.0, rel=0.35)

    def test_skew_residual_at_roundoff(self, grid16):
        params = ModelParams(nu=0.05, alpha=0.25)
        u = random_solenoidal(grid16, 3, scale=0.5)
        rec = record(SimState(0.0, u, params, None), None, params, 4)
        scale = math.sqrt(rec.H[0] * rec.Hbar[1] * rec.Hbar[0])
        assert abs(rec.skew_residual) <= 1e-11 * scale


class TestJMoment:
    def test_tau_zero_alpha_zero_reduces_to_hbar(self, grid16):
        params = ModelParams(nu=0.1, alpha=0.0)
        u = random_solenoidal(grid16, 4)
        rec = record(SimState(0.0, u, params, None), None, params, 6)
        for m in range(5):
            assert j_moment(rec, m, 0.0, 0.0) == rec.Hbar[m]
            assert rec.Hbar[m] == pytest.approx(rec.H[m], rel=1e-14)

    def test_single_mode_closed_form(self, grid16):
        alpha = 0.3
        params = ModelParams(nu=0.1, alpha=alpha)
        u = single_mode(grid16, (0, 1, 0), 0.5)
        rec = record(SimState(0.0, u, params, None), None, params, 6)
        for m in range(5):
            expect = rec.Hbar[m] + 2 * alpha**2 * rec.Hbar[m + 1]
            assert j_moment(rec, m, 0.0, alpha) == pytest.approx(expect, rel=1e-14)

    def test_random_record_reevaluation(self, grid16):
        params = ModelParams(nu=0.1, alpha=0.35)
        f = narrowband_force(grid16, ForcingSpec(2, 0.5, seed=5))
        u = random_solenoidal(grid16, 6)
        rec = record(SimState(0.0, u, params, f), f, params, 6)
        t_val = 0.12
        for m in range(5):
            direct = (rec.Hbar[m] + t_val * rec.Phi[m]) + 2 * 0.35**2 * (
                rec.Hbar[m + 1] + t_val * rec.Phi[m + 1]
            )
            assert j_moment(rec, m, t_val, 0.35) == pytest.approx(direct, rel=1e-14)

    def test_order_overflow_rejected(self, grid16):
        params = ModelParams(nu=0.1)
        u = random_solenoidal(grid16, 7)
        rec = record(SimState(0.0, u, params, None), None, params, 6)
        with pytest.raises(ConfigurationError):
            j_moment(rec, 6, 0.0, 0.1)


class TestKappa:
    def test_single_mode_gives_k0(self, grid16):
        params = ModelParams(nu=0.1, alpha=0.25)
        u = single_mode(grid16, (1, 0, 0), 0.7j)
        rec = record(SimState(0.0, u, params, None), None, params, 6)
        j = [j_moment(rec, m, 0.0, 0.25) for m in range(6)]
        for m in range(1, 6):
            for r in range(m):
                assert kappa(j, m, r) == pytest.approx(grid16.k0, rel=1e-12)

    def test_geometric_moments(self):
        a = 2.7
        j = [5.0 * a**m for m in range(6)]
        for m in range(1, 6):
            for r in range(m):
                assert kappa(j, m, r) == pytest.approx(math.sqrt(a), rel=1e-13)

    def test_invalid_orders(self):
        j = [1.0, 2.0, 3.0]
        with pytest.raises(ConfigurationError):
            kappa(j, 1, 1)
        with pytest.raises(ConfigurationError):
            kappa(j, 0, 1)
        with pytest.raises(ConfigurationError):
            kappa([0.0, 1.0], 1, 0)


class TestTimeAverage:
    def test_constant_series(self):
        acc = AverageAccumulator(spinup=0.0)
        for t in np.linspace(0, 5, 11):
            acc.add(t, {"x": 3.25})
        assert time_average(acc)["x"] == pytest.approx(3.25, rel=1e-15)

    def test_linear_series_midpoint(self):
        acc = AverageAccumulator(spinup=0.0)
        for t in np.linspace(0, 4, 21):
            acc.add(t, {"x": 2.0 * t + 1.0})
        assert time_average(acc)["x"] == pytest.approx(5.0, rel=1e-14)  # value at t = 2

    def test_linearity(self):
        acc1 = AverageAccumulator()
        acc2 = AverageAccumulator()
        acc3 = AverageAccumulator()
        rng = np.random.default_rng(8)
        for t in np.linspace(0, 3, 13):
            a, b = rng.standard_normal(2)
            acc1.add(t, {"v": a})
            acc2.add(t, {"v": b})
            acc3.add(t, {"v": 2 * a + 0.5 * b})
        m1, m2, m3 = (time_average(a)["v"] for a in (acc1, acc2, acc3))
        assert m3 == pytest.approx(2 * m1 + 0.5 * m2, abs=1e-14)

    def test_spinup_discards_early_samples(self):
        acc = AverageAccumulator(spinup=2.0)
        for t in np.linspace(0, 4, 21):
            acc.add(t, {"x": 100.0 if t < 2.0 else 1.0})
        assert time_average(acc)["x"] == pytest.approx(1.0, rel=1e-14)

    def test_empty_window_rejected(self):
        acc = AverageAccumulator(spinup=10.0)
        acc.add(1.0, {"x": 1.0})
        with pytest.raises(ConfigurationError):
            time_average(acc)

    def test_vector_values(self):
        acc = AverageAccumulator()
        for t in (0.0, 1.0, 2.0):
            acc.add(t, {"h": np.array([t, 2 * t])})
        out = time_average(acc)["h"]
        assert np.allclose(out, [1.0, 2.0], rtol=1e-14)


class TestReynolds:
    def test_unit_average(self):
        L = 2 * np.pi
        u, re = reynolds(L**3, 0.5, 0.1, L)
        assert u == pytest.approx(1.0)
        assert re == pytest.approx(0.5 / 0.1)

    def test_quadrupling_average_doubles_re(self):
        L = 2 * np.pi
        _, re1 = reynolds(2.0, 1.0, 0.1, L)
        _, re4 = reynolds(8.0, 1.0, 0.1, L)
        assert re4 / re1 == pytest.approx(2.0, rel=1e-14)

    def test_steady_linear_balance_closed_form(self, grid16):
        # Forced single shell with the nonlinear term identically zero for a
        # lone mode pair: the exact steady state is u = f / (nu k_f^2), so
        # U = f_rms / (nu k_f^2) and Re follows in closed form.
        g = grid16
        nu = 0.2
        params = ModelParams(nu=nu, alpha=0.0, kind=ModelKind.NSE)
        amp = 0.05
        c = np.zeros(g.spectral_shape, dtype=np.complex128)
        c[0, 0, 2, 0] = amp  # f = 2 amp cos(2 k0 y) x-hat, solenoidal
        c[0, (-0) % 16, (16 - 2) % 16, 0] = amp
        f = SpectralVectorField(g, c, solenoidal=True)
        kf = 2 * g.k0
        u_steady = SpectralVectorField(g, f.coeffs / (nu * kf**2), solenoidal=True)
        from mlaf.model import rhs

        tend = rhs(u_steady, params, f)
        assert np.abs(tend.coeffs).max() <= 1e-14 * np.abs(f.coeffs).max()
        h0 = sobolev_moment(u_steady, 0)
        ell = 1.0 / kf
        u_scale, re = reynolds(h0, ell, nu, g.L)
        from mlaf.forcing import f_rms

        expect_u = f_rms(f) / (nu * kf**2)
        assert u_scale == pytest.approx(expect_u, rel=1e-12)
        assert re == pytest.approx(expect_u * ell / nu, rel=1e-12)


class TestLadderCheck:
    def test_n0_exact_energy_identity(self, grid16):
        series = _forced_series(grid16)
        rep = ladder_check(series, 0)
        assert rep.c_ref == 0.0
        assert rep.pass_fraction == 1.0
        assert rep.fitted_constant <= 0.0 + 1e-12

    def test_default_c_ref_doubling(self):
        assert default_c_ref(0) == 0.0
        assert default_c_ref(1) == 10.0
        assert default_c_ref(3) == 40.0
        assert default_c_ref(2, prefactor=3.0) == 12.0

    def test_rungs_hold_and_report_fit(self, grid16):
        series = _forced_series(grid16)
        for order in (1, 2, 3):
            rep = ladder_check(series, order)
            assert rep.pass_fraction == 1.0
            assert 0 <= rep.fitted_constant < default_c_ref(order)
            assert rep.j_form is not None and all(v >= 0 for v in rep.j_form.values())
            assert rep.fd_crosscheck_rel is not None

    def test_order_beyond_n_max_rejected(self, grid16):
        series = _forced_series(grid16, n_steps=20)
        with pytest.raises(ConfigurationError):
            ladder_check(series, 5)  # needs Hbar_7

    def test_insufficient_samples_rejected(self, grid16):
        series = _forced_series(grid16, n_steps=0)
        with pytest.raises(ConfigurationError):
            ladder_check(series, 1)
