"""Run orchestration: drive the solver, emit CSV/checkpoints/report JSON.

One simulate call produces, under ``outdir``:

    diagnostics.csv   one row per sample, schema below, 17 significant digits
    last_good.ckpt    rolling checkpoint, survives a NaN abort
    final.ckpt        state at the end of the run
    report.json       config echo, ladder and bound reports, identities,
                      final-state shell spectrum

CSV header (with the default n_max = 6)::

    t,H0,...,H6,Hbar0,...,Hbar6,Phi0,...,Phi6,sup_ubar,sup_grad_ubar,inj,visc,dEdt

The time step is fixed for the whole run: either ``time.dt`` from the config
(required for bit-identical resume) or half the CFL limit of the initial
state, where the velocity scale also floors in ``sqrt(amplitude * ell)`` so
a forced run started from weak data is not over-stepped once it spins up.
A NaN in any sampled functional aborts the run; instability is a finding,
not a recoverable condition.
"""

from __future__ import annotations

import csv
import json
import math
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundReport, bound_suite
from .checkpoint import load_checkpoint, save_checkpoint, state_from_checkpoint
from .config import RunConfig
from .diagnostics import (
    DiagnosticsRecord,
    RunSeries,
    default_c_ref,
    ladder_check,
    record,
    reynolds,
    series_averages,
)
from .errors import ConfigurationError
from .forcing import ForcingSpec, forcing_length, grashof, narrowband_force
from .integrator import CFL_NUMBER, SimState, make_plan, step
from .model import ModelParams
from .spectral import (
    SpectralVectorField,
    TorusGrid,
    make_grid,
    project_solenoidal,
    sup_norms,
    transform_to_spectral,
)

__all__ = ["RunResult", "RunAborted", "run_simulate", "run_sweep", "csv_header"]


class RunAborted(RuntimeError):
    """The state went non-finite; the last good checkpoint is on disk."""


@dataclass
class RunResult:
    config: RunConfig
    series: RunSeries
    report: dict
    outdir: Path

    @property
    def csv_path(self) -> Path:
        return self.outdir / "diagnostics.csv"

    @property
    def report_path(self) -> Path:
        return self.outdir / "report.json"

    @property
    def checkpoint_path(self) -> Path:
        return self.outdir / "final.ckpt"


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

def taylor_green(grid: TorusGrid, amplitude: float) -> SpectralVectorField:
    """Classical Taylor-Green vortex, divergence-free by construction."""
    x = grid.coordinates() * grid.k0
    phys = np.zeros((3, grid.n, grid.n, grid.n))
    phys[0] = amplitude * np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
    phys[1] = -amplitude * np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    u = transform_to_spectral(grid, phys)
    u = project_solenoidal(u)
    return SpectralVectorField(u.grid, u.coeffs * grid.mask, solenoidal=True)


def random_band(grid: TorusGrid, amplitude: float, seed: int) -> SpectralVectorField:
    """Random solenoidal field on shells 1..3, rms velocity = amplitude."""
    rng = np.random.Generator(np.random.Philox(key=seed ^ 0x5EED))
    phys = rng.standard_normal((3, grid.n, grid.n, grid.n))
    u = project_solenoidal(transform_to_spectral(grid, phys))
    band = (grid.m2 >= 1) & (grid.m2 <= 9)
    c = u.coeffs * band
    u = SpectralVectorField(grid, c, solenoidal=True)
    h0 = float(np.sqrt((grid.hermitian_weight * (np.abs(u.coeffs) ** 2).sum(axis=0)).sum()))
    return SpectralVectorField(grid, u.coeffs * (amplitude / h0), solenoidal=True)


def initial_condition(grid: TorusGrid, cfg: RunConfig) -> SpectralVectorField:
    if cfg.ic_kind == "taylor-green":
        return taylor_green(grid, cfg.ic_amplitude)
    if cfg.ic_kind == "random":
        return random_band(grid, cfg.ic_amplitude, cfg.ic_seed)
    return SpectralVectorField.zero(grid)


def choose_dt(cfg: RunConfig, grid: TorusGrid, u0: SpectralVectorField, ell: float | None):
    if cfg.dt is not None:
        return cfg.dt
    sup_u, _ = sup_norms(u0)
    floor = 1e-12 * cfg.nu / grid.L
    scale = max(sup_u, floor)
    if cfg.forcing_enabled and ell is not None:
        scale = max(scale, math.sqrt(cfg.amplitude * ell))
    return 0.5 * CFL_NUMBER * grid.dx / scale


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def csv_header(n_max: int) -> list:
    cols = ["t"]
    cols += [f"H{m}" for m in range(n_max + 1)]
    cols += [f"Hbar{m}" for m in range(n_max + 1)]
    cols += [f"Phi{m}" for m in range(n_max + 1)]
    cols += ["sup_ubar", "sup_grad_ubar", "inj", "visc", "dEdt"]
    return cols


def _csv_row(rec: DiagnosticsRecord) -> list:
    vals = (
        [rec.t]
        + list(rec.H)
        + list(rec.Hbar)
        + list(rec.Phi)
        + [rec.sup_ubar, rec.sup_grad_ubar, rec.inj, rec.visc, rec.dE_dt_exact]
    )
    return [f"{v:.16e}" for v in vals]


def shell_spectrum(u: SpectralVectorField) -> dict:
    """Shell-binned energy of the final state, for the report and plots."""
    g = u.grid
    dens = (g.hermitian_weight * (np.abs(u.coeffs) ** 2).sum(axis=0)) * (0.5 * g.L**3)
    shell = np.rint(np.sqrt(g.m2.astype(float))).astype(int)
    smax = int(shell.max())
    e = np.zeros(smax + 1)
    np.add.at(e, shell.ravel(), dens.ravel())
    return {"m": list(range(1, smax + 1)), "E": [float(v) for v in e[1:]]}


# ---------------------------------------------------------------------------
# Main entry points
# ---------------------------------------------------------------------------

def run_simulate(cfg: RunConfig, resume_from=None) -> RunResult:
    """Execute a configured run and write all artifacts; see module docstring."""
    cfg.validate()
    t_start = _time.perf_counter()
    grid = make_grid(cfg.n, cfg.L, cfg.n_max)
    params = ModelParams(nu=cfg.nu, alpha=cfg.alpha, kind=cfg.kind)

    f = None
    ell = None
    gr = None
    if cfg.forcing_enabled:
        spec = ForcingSpec(shell_m=cfg.shell_m, amplitude=cfg.amplitude, seed=cfg.seed)
        f = narrowband_force(grid, spec)
        ell = forcing_length(grid, spec)
        gr = grashof(f, ell, cfg.nu, cfg.L)

    if resume_from is not None:
        ck = load_checkpoint(resume_from)
        u0 = state_from_checkpoint(ck, grid)
        t0 = ck.t
    else:
        u0 = initial_condition(grid, cfg)
        t0 = 0.0

    dt = choose_dt(cfg, grid, u0, ell)
    n_steps = max(1, math.ceil((cfg.t_end - t0) / dt - 1e-9))
    plan = make_plan(grid, params, dt)

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    series = RunSeries(
        params=params,
        n=cfg.n,
        L=cfg.L,
        n_max=cfg.n_max,
        dt=dt,
        forcing=ForcingSpec(cfg.shell_m, cfg.amplitude, cfg.seed) if cfg.forcing_enabled else None,
        ell=ell,
        gr=gr,
        seed=cfg.seed,
    )

    state = SimState(t0, u0, params, f)
    csv_path = outdir / "diagnostics.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(cfg.n_max))

        def sample(st: SimState):
            rec = record(st, f, params, cfg.n_max)
            if not np.isfinite(rec.H[0]) or not np.isfinite(rec.dE_dt_exact):
                raise RunAborted(
                    f"non-finite state at t = {st.t:.6g}; "
                    f"last good checkpoint: {outdir / 'last_good.ckpt'}"
                )
            series.records.append(rec)
            writer.writerow(_csv_row(rec))
            save_checkpoint(outdir / "last_good.ckpt", st.u, params, st.t, cfg.seed)

        sample(state)
        for k in range(1, n_steps + 1):
            state = step(state, dt, plan)
            if k % cfg.output_every == 0:
                sample(state)

    save_checkpoint(outdir / "final.ckpt", state.u, params, state.t, cfg.seed)

    report = render_report(cfg, series, final_state=state, wall_time=_time.perf_counter() - t_start)
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return RunResult(config=cfg, series=series, report=report, outdir=outdir)


def resolve_spinup(cfg: RunConfig, series: RunSeries) -> float:
    """Config spinup, or the automatic default of five large-eddy times."""
    if cfg.spinup is not None:
        return cfg.spinup
    if series.ell is None or not series.records:
        return 0.0
    avgs = series_averages(series, spinup=0.0)
    u_scale, _ = reynolds(float(avgs["H"][0]), series.ell, cfg.nu, cfg.L)
    if u_scale <= 0:
        return 0.0
    t_end = series.records[-1].t
    return min(5.0 * series.ell / u_scale, 0.5 * t_end)


def identity_residuals(series: RunSeries) -> dict:
    """Worst-case energy-balance and skew-symmetry residuals over the run."""
    energy_rel = 0.0
    skew_rel = 0.0
    for r in series.records:
        scale = max(abs(r.dE_dt_exact), abs(r.visc), abs(r.inj), 1e-300)
        energy_rel = max(energy_rel, abs(r.dE_dt_exact + r.visc - r.inj) / scale)
        sk_scale = math.sqrt(r.H[0] * r.Hbar[1] * r.Hbar[0])
        if sk_scale > 0:
            skew_rel = max(skew_rel, abs(r.skew_residual) / sk_scale)
    return {"energy_residual_max_rel": energy_rel, "skew_residual_max_rel": skew_rel}


def render_report(
    cfg: RunConfig, series: RunSeries, final_state: SimState | None = None, wall_time: float = 0.0
) -> dict:
    spinup = resolve_spinup(cfg, series)
    ladder = [
        ladder_check(series, n, default_c_ref(n, cfg.ladder_c_prefactor)).to_dict()
        for n in range(0, cfg.n_max - 1)
    ]
    bounds = bound_suite(series, spinup)
    rep = {
        "schema": "mlaf-run-report/1",
        "package_version": __version__,
        "config": cfg.echo(),
        "run": {
            "dt": series.dt,
            "n_samples": len(series.records),
            "t_first": series.records[0].t if series.records else None,
            "t_final": series.records[-1].t if series.records else None,
            "spinup_used": spinup,
            "seed": series.seed,
            "ddt_source": series.ddt_source,
            "wall_time_s": wall_time,
        },
        "forcing": {
            "ell": series.ell,
            "k_f": (1.0 / series.ell) if series.ell else None,
            "Gr": series.gr,
        },
        "ladder": ladder,
        "bounds": bounds.to_dict(),
        "identities": identity_residuals(series),
    }
    if final_state is not None:
        from .model import helmholtz_filter

        rep["spectrum"] = {
            "t": final_state.t,
            "u": shell_spectrum(final_state.u),
            "ubar": shell_spectrum(
                helmholtz_filter(final_state.u, series.params.effective_alpha)
            ),
        }
    return rep


def load_series_csv(csv_path, cfg: RunConfig) -> RunSeries:
    """Rebuild a RunSeries from an existing diagnostics CSV.

    The exact RHS-derived moment derivatives are not part of the CSV schema,
    so they are reconstructed by centered finite differences here and the
    series is flagged ``ddt_source = finite_difference``; re-rendered ladder
    verdicts are correspondingly coarser than in-run ones.
    """
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = csv_header(cfg.n_max)
        if header != expected:
            raise ConfigurationError(
                f"{csv_path}: CSV header does not match the configured schema "
                f"(n_max = {cfg.n_max})"
            )
        rows = [[float(v) for v in row] for row in reader]
    if len(rows) < 2:
        raise ConfigurationError(f"{csv_path}: need at least two samples")
    nm = cfg.n_max
    arr = np.array(rows)
    t = arr[:, 0]
    H = arr[:, 1 : nm + 2]
    Hbar = arr[:, nm + 2 : 2 * nm + 3]
    Phi = arr[:, 2 * nm + 3 : 3 * nm + 4]
    tail = arr[:, 3 * nm + 4 :]

    dHbar = np.empty_like(Hbar)
    dHbar[1:-1] = (Hbar[2:] - Hbar[:-2]) / (t[2:] - t[:-2])[:, None]
    dHbar[0] = (Hbar[1] - Hbar[0]) / (t[1] - t[0])
    dHbar[-1] = (Hbar[-1] - Hbar[-2]) / (t[-1] - t[-2])

    params = ModelParams(nu=cfg.nu, alpha=cfg.alpha, kind=cfg.kind)
    alpha = params.effective_alpha
    ell = gr = None
    spec = None
    if cfg.forcing_enabled:
        spec = ForcingSpec(cfg.shell_m, cfg.amplitude, cfg.seed)
        ell = cfg.L / (2.0 * np.pi) / cfg.shell_m
        gr = ell**3 * cfg.amplitude / cfg.nu**2
    series = RunSeries(
        params=params,
        n=cfg.n,
        L=cfg.L,
        n_max=nm,
        dt=float(t[1] - t[0]),
        forcing=spec,
        ell=ell,
        gr=gr,
        seed=cfg.seed,
        ddt_source="finite_difference",
    )
    for i in range(len(rows)):
        series.records.append(
            DiagnosticsRecord(
                t=float(t[i]),
                H=H[i].copy(),
                Hbar=Hbar[i].copy(),
                Phi=Phi[i].copy(),
                sup_ubar=float(tail[i, 0]),
                sup_grad_ubar=float(tail[i, 1]),
                inj=float(tail[i, 2]),
                visc=float(tail[i, 3]),
                dE_dt_exact=float(tail[i, 4]),
                dHbar_dt=dHbar[i].copy(),
                _alpha_sq=alpha**2,
            )
        )
    return series


def rerender_report(cfg: RunConfig, csv_path, out_path) -> dict:
    """Re-render report JSON from an existing diagnostics CSV (FD derivatives)."""
    series = load_series_csv(csv_path, cfg)
    rep = render_report(cfg, series)
    with open(out_path, "w") as fh:
        json.dump(rep, fh, indent=2)
    return rep


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

def run_sweep(cfg: RunConfig, axis: str, values) -> Path:
    """One run per value on the chosen axis plus a summary CSV.

    For the alpha axis an alpha = 0 reference run (same data, same dt) is
    executed first and every run's endpoint distance to it is recorded, which
    is what the alpha -> 0 convergence test consumes.
    """
    values = list(values)
    if axis not in ("alpha", "amplitude"):
        raise ConfigurationError(f"sweep.axis: must be alpha | amplitude, got {axis!r}")
    if len(values) < 3:
        raise ConfigurationError(f"sweep: need at least 3 values, got {len(values)}")
    if len(set(values)) != len(values):
        raise ConfigurationError("sweep: duplicate values would overlap output directories")

    base = Path(cfg.outdir)
    base.mkdir(parents=True, exist_ok=True)

    ref_coeffs = None
    from dataclasses import replace as _replace

    if axis == "alpha":
        ref_cfg = _replace(cfg, alpha=0.0, outdir=base / "alpha-ref-0")
        if cfg.dt is None:
            # Pin dt so every sweep member integrates the same time grid.
            grid = make_grid(cfg.n, cfg.L, cfg.n_max)
            ell = (
                forcing_length(grid, ForcingSpec(cfg.shell_m, cfg.amplitude, cfg.seed))
                if cfg.forcing_enabled
                else None
            )
            ref_cfg = _replace(ref_cfg, dt=choose_dt(cfg, grid, initial_condition(grid, cfg), ell))
        ref = run_simulate(ref_cfg)
        ref_coeffs = load_checkpoint(ref.checkpoint_path).coeffs
        pinned_dt = ref_cfg.dt
    else:
        pinned_dt = cfg.dt

    rows = []
    for v in values:
        sub = base / f"{axis}={v:.6g}"
        if axis == "alpha":
            run_cfg = _replace(cfg, alpha=float(v), outdir=sub, dt=pinned_dt)
        else:
            run_cfg = _replace(cfg, amplitude=float(v), outdir=sub, dt=pinned_dt)
        result = run_simulate(run_cfg)
        b = result.report["bounds"]
        row = {
            "value": v,
            "Re": b["Re"],
            "Gr": b["Gr"] if b["Gr"] is not None else float("nan"),
            "eps": b["eps"],
            "ell_lambda_k_inv": b["ell_lambda_k_inv"]
            if b["ell_lambda_k_inv"] is not None
            else float("nan"),
        }
        for m in (1, 2, 3, 4):
            key = f"kappa2_{m}_0"
            if key in b["kappa2_avg"] and result.series.ell is not None:
                row[f"ell2_kappa2_{m}_0"] = result.series.ell**2 * b["kappa2_avg"][key]
            else:
                row[f"ell2_kappa2_{m}_0"] = float("nan")
        for lad in result.report["ladder"]:
            if 1 <= lad["N"] <= 3:
                row[f"c_hat_N{lad['N']}"] = lad["fitted_constant"]
        row["c_gr_vs_re"] = b["fitted"].get("c_gr_vs_re", float("nan"))
        row["c_agmon"] = b["fitted"].get("c_agmon", float("nan"))
        if ref_coeffs is not None:
            final = load_checkpoint(result.checkpoint_path).coeffs
            num = np.sqrt(np.sum(np.abs(final - ref_coeffs) ** 2))
            den = np.sqrt(np.sum(np.abs(ref_coeffs) ** 2))
            row["diff_rel_vs_alpha0"] = float(num / den) if den > 0 else float("nan")
        rows.append(row)

    summary = base / "summary.csv"
    cols = list(rows[0].keys())
    with open(summary, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.16e}" if isinstance(v, float) else v) for k, v in row.items()})
    return summary
