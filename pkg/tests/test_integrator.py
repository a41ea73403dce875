import math

import numpy as np
import pytest

from mlaf.diagnostics import record
from mlaf.errors import CflViolation
from mlaf.forcing import ForcingSpec, narrowband_force
from mlaf.integrator import CFL_NUMBER, SimState, cfl_dt, make_plan, step
from mlaf.model import ModelKind, ModelParams
from mlaf.spectral import SpectralVectorField, divergence_linf, make_grid

from conftest import TWO_PI, random_solenoidal, single_mode, taylor_green


class TestCflDt:
    def test_quiescent_state_floor(self, grid16):
        params = ModelParams(nu=0.1)
        st = SimState(0.0, SpectralVectorField.zero(grid16), params, None)
        dt = cfl_dt(st)
        assert np.isfinite(dt) and dt > 1e6  # floor keeps it finite but huge

    def test_unit_velocity_formula(self):
        g = make_grid(32, TWO_PI)
        u = single_mode(g, (0, 0, 1), 0.5j)  # sup |u| = 1 on a 32-grid
        st = SimState(0.0, u, ModelParams(nu=0.1), None)
        assert cfl_dt(st) == pytest.approx(CFL_NUMBER * TWO_PI / 32, rel=1e-12)

    def test_doubling_n_halves_dt(self):
        for n in (16, 32):
            g = make_grid(n, TWO_PI)
            u = single_mode(g, (0, 0, 1), 0.5j)
            st = SimState(0.0, u, ModelParams(nu=0.1), None)
            if n == 16:
                dt16 = cfl_dt(st)
            else:
                assert cfl_dt(st) == pytest.approx(dt16 / 2, rel=1e-12)


class TestStep:
    def test_exact_viscous_decay_single_mode(self, grid16):
        params = ModelParams(nu=0.3, alpha=0.2)
        u = single_mode(grid16, (0, 2, 0), 0.4 - 0.1j)
        st = SimState(0.0, u, params, None)
        out = step(st, 0.05, with_nonlinear=False)
        factor = math.exp(-params.nu * (2 * grid16.k0) ** 2 * 0.05)
        err = np.abs(out.u.coeffs - u.coeffs * factor).max() / np.abs(u.coeffs).max()
        assert err <= 1e-14

    def test_zero_state_fixed_point(self, grid16):
        st = SimState(0.0, SpectralVectorField.zero(grid16), ModelParams(nu=1e-12), None)
        out = step(st, 0.1)
        assert np.all(out.u.coeffs == 0.0)
        assert out.t == pytest.approx(0.1)

    def test_cfl_violation_names_admissible_dt(self, grid16):
        st = SimState(0.0, taylor_green(grid16, 1.0), ModelParams(nu=0.05), None)
        with pytest.raises(CflViolation) as exc:
            step(st, 1.0)
        assert exc.value.admissible_dt < 1.0
        assert "admissible" in str(exc.value)

    def test_order_three_self_convergence(self, grid16):
        params = ModelParams(nu=0.05, alpha=0.25)
        u0 = taylor_green(grid16)
        T = 0.5

        def endpoint(n_steps):
            st = SimState(0.0, u0, params, None)
            plan = make_plan(grid16, params, T / n_steps)
            for _ in range(n_steps):
                st = step(st, T / n_steps, plan)
            return st.u.coeffs

        ref = endpoint(320)
        errs = [np.abs(endpoint(m) - ref).max() for m in (40, 80, 160)]
        assert 6.5 <= errs[0] / errs[1] <= 9.5
        assert 6.5 <= errs[1] / errs[2] <= 9.5

    def test_projection_and_mask_enforced(self, grid16):
        params = ModelParams(nu=0.05, alpha=0.3)
        f = narrowband_force(grid16, ForcingSpec(2, 0.3, seed=1))
        st = SimState(0.0, taylor_green(grid16), params, f)
        plan = make_plan(grid16, params, 0.02)
        for _ in range(20):
            st = step(st, 0.02, plan)
        assert divergence_linf(st.u) <= 1e-12 * st.u.norm_l2() * grid16.k0
        assert np.all(st.u.coeffs[:, ~grid16.mask] == 0.0)


class TestEnergyBalance:
    def test_semi_discrete_identity_along_run(self, grid16):
        params = ModelParams(nu=0.05, alpha=0.3)
        f = narrowband_force(grid16, ForcingSpec(2, 0.4, seed=3))
        st = SimState(0.0, taylor_green(grid16, 0.8), params, f)
        plan = make_plan(grid16, params, 0.02)
        for k in range(100):
            st = step(st, 0.02, plan)
            if k % 10 == 0:
                rec = record(st, f, params, 4)
                scale = max(abs(rec.dE_dt_exact), abs(rec.visc), abs(rec.inj))
                assert abs(rec.dE_dt_exact + rec.visc - rec.inj) <= 1e-10 * scale

    def test_unforced_decay_bound_per_step(self, grid16):
        params = ModelParams(nu=0.08, alpha=0.3)
        st = SimState(0.0, taylor_green(grid16), params, None)
        dt = 0.02
        plan = make_plan(grid16, params, dt)
        rate = 2.0 * params.nu * grid16.k0**2

        def energy(state):
            rec = record(state, None, params, 2)
            return 0.5 * (rec.Hbar[0] + params.alpha**2 * rec.Hbar[1])

        prev = energy(st)
        for k in range(100):
            st = step(st, dt, plan)
            if k % 10 == 9:
                cur = energy(st)
                assert cur <= prev * math.exp(-rate * 10 * dt) * (1 + 1e-8)
                prev = cur


class TestDivergenceDrift:
    def test_drift_stays_at_roundoff_over_many_steps(self, grid8):
        # 10^4 production steps on the oracle-sized grid (unforced: the 8^3
        # dealias cut cannot hold a forcing shell)
        params = ModelParams(nu=0.02, alpha=0.25)
        st = SimState(0.0, random_solenoidal(grid8, 5, scale=0.3), params, None)
        dt = 0.01
        plan = make_plan(grid8, params, dt)
        worst = 0.0
        for k in range(10_000):
            st = step(st, dt, plan)
            if k % 500 == 0:
                worst = max(worst, divergence_linf(st.u) / (st.u.norm_l2() * grid8.k0))
        assert worst <= 1e-12
