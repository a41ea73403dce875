"""Self-contained property suite behind ``mlaf verify``.

Each check is a named callable returning (ok, detail).  The suite covers the
exact identities (transforms, projection, Parseval, moment convexity, filter
algebra, forcing shell), oracle equivalence of the dealiased nonlinear term,
convergence orders of the integrator, the unforced decay bound, the
alpha -> 0 ratio test, and short evolved-state checks (skew-symmetry,
divergence drift, energy balance) that exercise the production step path.
The whole suite is sized to finish in well under ten minutes on one core.
"""

from __future__ import annotations

import math

import numpy as np

from .diagnostics import j_moment, kappa, moment_ladder, record
from .forcing import ForcingSpec, f_rms, forcing_length, grashof, narrowband_force
from .integrator import SimState, make_plan, step
from .model import (
    ModelKind,
    ModelParams,
    filter_sandwich_bounds,
    helmholtz_filter,
    nonlinear_term,
    unfilter,
)
from .oracle import DenseField, dense_nonlinear, reference_integrate
from .spectral import (
    SpectralVectorField,
    TorusGrid,
    dealiased_product,
    divergence_linf,
    inner_product,
    make_grid,
    project_solenoidal,
    sobolev_moment,
    sup_norms,
    transform_to_physical,
    transform_to_spectral,
)

__all__ = ["VERIFY_CHECKS", "run_verify", "random_solenoidal"]


def random_solenoidal(grid: TorusGrid, seed: int, masked: bool = True) -> SpectralVectorField:
    rng = np.random.default_rng(seed)
    phys = rng.standard_normal((3, grid.n, grid.n, grid.n))
    u = project_solenoidal(transform_to_spectral(grid, phys))
    if masked:
        u = SpectralVectorField(grid, u.coeffs * grid.mask, solenoidal=True)
    return u


def _taylor_green(grid: TorusGrid, amplitude: float = 1.0) -> SpectralVectorField:
    x = grid.coordinates() * grid.k0
    phys = np.zeros((3, grid.n, grid.n, grid.n))
    phys[0] = amplitude * np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
    phys[1] = -amplitude * np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    u = project_solenoidal(transform_to_spectral(grid, phys))
    return SpectralVectorField(grid, u.coeffs * grid.mask, solenoidal=True)


def _short_run(grid, params, f, u0, dt, steps):
    state = SimState(0.0, u0, params, f)
    plan = make_plan(grid, params, dt)
    for _ in range(steps):
        state = step(state, dt, plan)
    return state


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_transform_roundtrip():
    g = make_grid(16, 2 * np.pi)
    rng = np.random.default_rng(10)
    phys = rng.standard_normal((3, 16, 16, 16))
    phys -= phys.mean(axis=(1, 2, 3), keepdims=True)
    back = transform_to_physical(transform_to_spectral(g, phys))
    err = np.max(np.abs(back - phys)) / np.max(np.abs(phys))
    return err <= 1e-13, f"roundtrip rel err {err:.2e}"

def check_projection():
    g = make_grid(16, 2 * np.pi)
    u = random_solenoidal(g, 11, masked=False)
    v = transform_to_spectral(g, np.random.default_rng(12).standard_normal((3, 16, 16, 16)))
    pu = project_solenoidal(u)
    div_rel = divergence_linf(pu) / (pu.norm_l2() * g.k0)
    idem = np.max(np.abs(project_solenoidal(pu).coeffs - pu.coeffs))
    adj = abs(inner_product(project_solenoidal(v), u) - inner_product(v, pu))
    scale = v.norm_l2() * u.norm_l2()
    ok = div_rel <= 1e-13 and idem <= 1e-14 * np.abs(pu.coeffs).max() + 1e-300 and adj <= 1e-12 * scale
    return ok, f"div {div_rel:.2e}, idem {idem:.2e}, self-adjoint {adj / scale:.2e}"

def check_parseval():
    g = make_grid(16, 2 * np.pi)
    rng = np.random.default_rng(13)
    phys = rng.standard_normal((3, 16, 16, 16))
    phys -= phys.mean(axis=(1, 2, 3), keepdims=True)
    u = transform_to_spectral(g, phys)
    h0 = sobolev_moment(u, 0)
    direct = float((phys**2).sum(axis=0).mean() * g.L**3)
    err = abs(h0 - direct) / direct
    return err <= 1e-12, f"Parseval rel err {err:.2e}"

def check_moment_convexity():
    g = make_grid(16, 2 * np.pi)
    ok = True
    worst = 0.0
    for seed in (20, 21, 22):
        h = moment_ladder(random_solenoidal(g, seed), 6)
        for m in range(1, 6):
            slack = h[m] ** 2 / (h[m - 1] * h[m + 1])
            worst = max(worst, slack)
            ok &= slack <= 1 + 1e-12
    return ok, f"max H_N^2/(H_(N-1) H_(N+1)) = {worst:.15f}"

def check_single_mode_closed_forms():
    g = make_grid(16, 2 * np.pi)
    A = 1.3
    x = g.coordinates()
    phys = np.zeros((3, 16, 16, 16))
    phys[0] = A * np.sin(g.k0 * x[2])
    u = transform_to_spectral(g, phys, solenoidal=True)
    errs = []
    for m in range(7):
        expect = A**2 * g.k0 ** (2 * m) * g.L**3 / 2
        errs.append(abs(sobolev_moment(u, m) - expect) / expect)
    s_u, s_g = sup_norms(u)
    errs.append(abs(s_u - A) / A)
    errs.append(abs(s_g - A * g.k0) / (A * g.k0))
    alpha = 1.0 / g.k0
    ub = helmholtz_filter(u, alpha)
    errs.append(np.max(np.abs(ub.coeffs - u.coeffs / 2)) / np.abs(u.coeffs).max())
    for m in range(6):
        expect = sobolev_moment(u, m) / (1 + alpha**2 * g.k0**2) ** 2
        errs.append(abs(sobolev_moment(ub, m) - expect) / expect)
    # kappa on a single mode: all J ratios collapse to k0 powers
    params = ModelParams(nu=1.0, alpha=0.5)
    rec = record(SimState(0.0, u, params, None), None, params, 6)
    j = [j_moment(rec, m, 0.0, 0.5) for m in range(6)]
    for m in range(1, 6):
        errs.append(abs(kappa(j, m, 0) - g.k0) / g.k0)
    worst = max(errs)
    return worst <= 1e-12, f"worst closed-form rel err {worst:.2e}"

def check_oracle_equivalence():
    worst = 0.0
    for n, seed in ((4, 30), (6, 31), (8, 32), (8, 33)):
        g = TorusGrid(n, 2 * np.pi)
        a = random_solenoidal(g, seed)
        b = random_solenoidal(g, seed + 100)
        da, db = DenseField.from_field(a), DenseField.from_field(b)
        spectral = DenseField.from_field(
            nonlinear_term(ModelKind.ML_ALPHA, a, helmholtz_filter(b, 0.3))
        )
        dense = dense_nonlinear(da, DenseField.from_field(helmholtz_filter(b, 0.3)))
        scale = np.abs(dense.coeffs).max()
        worst = max(worst, np.abs(spectral.coeffs - dense.coeffs).max() / scale)
        # componentwise product against the same contract
        prod = dealiased_product(a, b)
        pd = DenseField.from_field(prod)
        conv = _dense_componentwise(g, da, db)
        worst = max(worst, np.abs(pd.coeffs - conv).max() / max(np.abs(conv).max(), 1e-300))
    return worst <= 1e-12, f"max oracle mismatch {worst:.2e}"

def _dense_componentwise(g, da, db):
    n, cut = g.n, g.dealias_cut
    freqs = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = np.zeros((3, n, n, n), complex)
    idx = [(i, m) for i, m in enumerate(freqs)]
    for ix, mx in idx:
        for iy, my in idx:
            for iz, mz in idx:
                if max(abs(mx), abs(my), abs(mz)) > cut:
                    continue
                ca = da.coeffs[:, ix, iy, iz]
                if not ca.any():
                    continue
                for jx, px in idx:
                    for jy, py in idx:
                        for jz, pz in idx:
                            if max(abs(px), abs(py), abs(pz)) > cut:
                                continue
                            kx, ky, kz = mx + px, my + py, mz + pz
                            if max(abs(kx), abs(ky), abs(kz)) > cut:
                                continue
                            out[:, kx % n, ky % n, kz % n] += ca * db.coeffs[:, jx, jy, jz]
    out[:, 0, 0, 0] = 0
    return out

def check_filter_identities():
    g = make_grid(16, 2 * np.pi)
    u = random_solenoidal(g, 40)
    alpha = 0.35
    ub = helmholtz_filter(u, alpha)
    errs = []
    # round trip
    errs.append(np.max(np.abs(unfilter(ub, alpha).coeffs - u.coeffs)) / np.abs(u.coeffs).max())
    # diagonality: Hbar_N two routes
    for m in range(7):
        direct = sobolev_moment(ub, m)
        dens = g.hermitian_weight * (np.abs(u.coeffs) ** 2).sum(axis=0)
        route2 = float(g.L**3 * np.sum(dens * g.k2**m / (1 + alpha**2 * g.k2) ** 2))
        errs.append(abs(direct - route2) / max(direct, 1e-300))
    # Poincare sandwich
    lo, mid, hi = filter_sandwich_bounds(u, alpha)
    ok_sandwich = lo <= mid * (1 + 1e-12) and mid <= hi * (1 + 1e-12)
    worst = max(errs)
    return worst <= 1e-12 and ok_sandwich, (
        f"filter algebra err {worst:.2e}, sandwich {lo:.4g} <= {mid:.4g} <= {hi:.4g}"
    )

def check_forcing_shell():
    g = make_grid(32, 2 * np.pi)
    spec = ForcingSpec(shell_m=3, amplitude=0.7, seed=42)
    f = narrowband_force(g, spec)
    ell = forcing_length(g, spec)
    phi = moment_ladder(f, 6)
    errs = [abs(phi[m] - ell ** (-2 * m) * phi[0]) / (ell ** (-2 * m) * phi[0]) for m in range(7)]
    errs.append(abs(f_rms(f) - spec.amplitude) / spec.amplitude)
    div = divergence_linf(f) / (f.norm_l2() * g.k0)
    f2 = narrowband_force(g, spec)
    deterministic = np.array_equal(f.coeffs, f2.coeffs)
    gr = grashof(f, ell, 0.1, g.L)
    gr_expected = ell**3 * spec.amplitude / 0.1**2
    errs.append(abs(gr - gr_expected) / gr_expected)
    worst = max(errs)
    return worst <= 1e-12 and div <= 1e-13 and deterministic, (
        f"shell identity err {worst:.2e}, div {div:.2e}, deterministic {deterministic}"
    )

def check_skew_and_divergence_drift():
    g = make_grid(16, 2 * np.pi)
    params = ModelParams(nu=0.05, alpha=0.3)
    spec = ForcingSpec(shell_m=2, amplitude=0.3, seed=7)
    f = narrowband_force(g, spec)
    state = SimState(0.0, _taylor_green(g), params, f)
    dt = 0.5 * 0.4 * g.dx / 1.0
    plan = make_plan(g, params, dt)
    worst_skew = 0.0
    worst_div = 0.0
    for k in range(200):
        state = step(state, dt, plan)
        if k % 20 == 0:
            rec = record(state, f, params, 6)
            scale = math.sqrt(rec.H[0] * rec.Hbar[1] * rec.Hbar[0])
            worst_skew = max(worst_skew, abs(rec.skew_residual) / scale)
            worst_div = max(
                worst_div, divergence_linf(state.u) / (state.u.norm_l2() * g.k0)
            )
    return worst_skew <= 1e-11 and worst_div <= 1e-12, (
        f"skew residual {worst_skew:.2e}, divergence drift {worst_div:.2e}"
    )

def check_energy_identity():
    g = make_grid(16, 2 * np.pi)
    params = ModelParams(nu=0.05, alpha=0.3)
    f = narrowband_force(g, ForcingSpec(shell_m=2, amplitude=0.3, seed=7))
    state = SimState(0.0, _taylor_green(g), params, f)
    dt = 0.5 * 0.4 * g.dx
    plan = make_plan(g, params, dt)
    worst = 0.0
    for k in range(150):
        state = step(state, dt, plan)
        if k % 15 == 0:
            rec = record(state, f, params, 6)
            scale = max(abs(rec.dE_dt_exact), abs(rec.visc), abs(rec.inj))
            worst = max(worst, abs(rec.dE_dt_exact + rec.visc - rec.inj) / scale)
    return worst <= 1e-10, f"energy balance residual {worst:.2e}"

def check_integrator_order():
    g = make_grid(16, 2 * np.pi)
    params = ModelParams(nu=0.05, alpha=0.25)
    u0 = _taylor_green(g)
    T = 0.5

    def endpoint(n_steps):
        return _short_run(g, params, None, u0, T / n_steps, n_steps).u.coeffs

    ref = endpoint(320)
    e1 = np.abs(endpoint(40) - ref).max()
    e2 = np.abs(endpoint(80) - ref).max()
    e3 = np.abs(endpoint(160) - ref).max()
    r1, r2 = e1 / e2, e2 / e3
    ok = 6.5 <= r1 <= 9.5 and 6.5 <= r2 <= 9.5
    return ok, f"dt-halving ratios {r1:.2f}, {r2:.2f} (order 3 target 8)"

def check_oracle_trajectory():
    g = TorusGrid(8, 2 * np.pi)
    u0 = random_solenoidal(g, 50)
    u0 = SpectralVectorField(g, u0.coeffs * 0.1, solenoidal=True)
    params = ModelParams(nu=0.1, alpha=0.3)
    dt, steps = 0.002, 50
    final = _short_run(g, params, None, u0, dt, steps)
    dense = reference_integrate(
        DenseField.from_field(u0),
        DenseField(g, np.zeros((3, 8, 8, 8), complex)),
        0.1,
        0.3,
        "ml-alpha",
        dt,
        steps,
    )
    err = np.abs(DenseField.from_field(final.u).coeffs - dense.coeffs).max()
    rel = err / np.abs(dense.coeffs).max()
    # RK4 self-convergence of the oracle itself, at a dt large enough to sit
    # above the roundoff floor.
    u_big = SpectralVectorField(g, u0.coeffs * 10.0, solenoidal=True)
    zero_f = DenseField(g, np.zeros((3, 8, 8, 8), complex))
    d0 = DenseField.from_field(u_big)
    T = 0.8
    ends = [
        reference_integrate(d0, zero_f, 0.05, 0.3, "ml-alpha", T / m, m).coeffs
        for m in (10, 20, 40)
    ]
    e_coarse = np.abs(ends[0] - ends[2]).max()
    e_fine = np.abs(ends[1] - ends[2]).max()
    # errors vs the dt/4 run: ratio (1 - 1/256)/(1/16 - 1/256) = 17 for order 4
    ratio = e_coarse / e_fine
    return rel <= 1e-8 and 12 <= ratio <= 22, (
        f"trajectory mismatch {rel:.2e}, oracle RK4 halving ratio {ratio:.1f}"
    )

def check_decay_bound():
    g = make_grid(16, 2 * np.pi)
    params = ModelParams(nu=0.08, alpha=0.3)
    u0 = _taylor_green(g)
    state = SimState(0.0, u0, params, None)
    dt = 0.5 * 0.4 * g.dx
    plan = make_plan(g, params, dt)
    rec0 = record(state, None, params, 2)
    e0 = 0.5 * (rec0.Hbar[0] + params.alpha**2 * rec0.Hbar[1])
    rate = 2.0 * params.nu * g.k0**2
    ok = True
    worst = 0.0
    for k in range(1, 301):
        state = step(state, dt, plan)
        if k % 25 == 0:
            rec = record(state, None, params, 2)
            e = 0.5 * (rec.Hbar[0] + params.alpha**2 * rec.Hbar[1])
            bound = e0 * math.exp(-rate * state.t) * (1 + 1e-8)
            worst = max(worst, e / bound)
            ok &= e <= bound
    return ok, f"max E(t)/bound = {worst:.6f}"

def check_alpha_convergence():
    g = make_grid(16, 2 * np.pi)
    u0 = _taylor_green(g)
    T, steps = 0.4, 40
    dt = T / steps
    finals = {}
    for alpha in (0.0, 0.2, 0.1, 0.05):
        params = ModelParams(nu=0.05, alpha=alpha)
        finals[alpha] = _short_run(g, params, None, u0, dt, steps).u.coeffs
    base = np.sqrt(np.sum(np.abs(finals[0.0]) ** 2))
    errs = [np.sqrt(np.sum(np.abs(finals[a] - finals[0.0]) ** 2)) / base for a in (0.2, 0.1, 0.05)]
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    ok = 3.2 <= r1 <= 4.8 and 3.2 <= r2 <= 4.8
    return ok, f"alpha-halving ratios {r1:.2f}, {r2:.2f} (O(alpha^2) target 4)"

def check_kappa_identities():
    g = make_grid(16, 2 * np.pi)
    params = ModelParams(nu=0.05, alpha=0.3)
    f = narrowband_force(g, ForcingSpec(shell_m=2, amplitude=0.3, seed=9))
    state = SimState(0.0, _taylor_green(g, 0.5), params, f)
    dt = 0.25 * 0.4 * g.dx
    plan = make_plan(g, params, dt)
    worst_ident = 0.0
    min_ratio = np.inf
    for k in range(120):
        state = step(state, dt, plan)
        if k % 30 == 0:
            rec = record(state, f, params, 6)
            j = [j_moment(rec, m, 0.01, params.alpha) for m in range(6)]
            for m in range(2, 5):
                lhs = kappa(j, m, 0) ** (2 * m)
                rhs = kappa(j, m, 1) ** (2 * (m - 1)) * kappa(j, 1, 0) ** 2
                worst_ident = max(worst_ident, abs(lhs - rhs) / rhs)
            for m in range(1, 6):
                min_ratio = min(min_ratio, kappa(j, m, 0) / g.k0)
    ok = worst_ident <= 1e-12 and min_ratio >= 1 - 1e-12
    return ok, f"chain identity err {worst_ident:.2e}, min kappa/k0 = {min_ratio:.3f}"


VERIFY_CHECKS = [
    ("transform roundtrip", check_transform_roundtrip),
    ("solenoidal projection", check_projection),
    ("Parseval", check_parseval),
    ("moment log-convexity", check_moment_convexity),
    ("single-mode closed forms", check_single_mode_closed_forms),
    ("oracle equivalence (n=4,6,8)", check_oracle_equivalence),
    ("filter identities", check_filter_identities),
    ("forcing shell identity", check_forcing_shell),
    ("skew-symmetry / divergence drift", check_skew_and_divergence_drift),
    ("energy identity", check_energy_identity),
    ("integrator order 3", check_integrator_order),
    ("trajectory vs dense RK4", check_oracle_trajectory),
    ("unforced decay bound", check_decay_bound),
    ("alpha -> 0 convergence", check_alpha_convergence),
    ("kappa chain identities", check_kappa_identities),
]


def run_single_check(fn) -> tuple:
    """Evaluate one check; a crash counts as a failure, not an abort."""
    try:
        return fn()
    except Exception as exc:
        return False, f"raised {type(exc).__name__}: {exc}"


def run_verify(print_fn=print) -> bool:
    """Run every check, print a pass/fail table, return overall success."""
    all_ok = True
    width = max(len(name) for name, _ in VERIFY_CHECKS)
    for name, fn in VERIFY_CHECKS:
        ok, detail = run_single_check(fn)
        all_ok &= ok
        print_fn(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    print_fn("verify: " + ("all checks passed" if all_ok else "FAILURES detected"))
    return all_ok
