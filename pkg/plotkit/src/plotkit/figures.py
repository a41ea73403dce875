"""The four figure kinds: timeseries, ladder, spectrum, scaling.

Every builder takes parsed inputs and returns ``(figure, meta)`` where
``meta`` records the numbers worth asserting on (fitted slopes, reference
slopes, margins).  Figures are deterministic: fixed size, fixed fonts, no
timestamps, Agg backend.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError

plt.rcParams.update(
    {
        "figure.figsize": (8.0, 5.0),
        "figure.dpi": 110,
        "font.family": "DejaVu Sans",
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "plotkit",
    }
)

REFERENCE_SLOPES = {"ell_lambda_k_inv": 5.0 / 8.0}


def timeseries_figure(diag: dict) -> tuple:
    """Energy/moment traces plus the energy-balance terms."""
    t = diag["t"]
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8.0, 6.0))
    for m in range(0, 3):
        ax1.semilogy(t, diag["H"][:, m], label=f"H{m}")
        ax1.semilogy(t, diag["Hbar"][:, m], "--", label=f"Hbar{m}")
    ax1.set_ylabel("moments")
    ax1.legend(ncol=3, fontsize=8)
    ax2.plot(t, diag["inj"], label="injection")
    ax2.plot(t, diag["visc"], label="dissipation")
    ax2.plot(t, diag["dEdt"], label="dE/dt")
    ax2.set_xlabel("t")
    ax2.set_ylabel("energy budget")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return fig, {"kind": "timeseries", "n_samples": len(t)}


def ladder_figure(diag: dict, report: dict, orders=(1, 2, 3)) -> tuple:
    """Margin of the ladder inequality per rung, finite-difference d/dt.

    margin_N(t) = C_ref ||grad ubar||_inf (Hbar_N + a^2 Hbar_{N+1})
                  - [ 1/2 dY_N/dt + nu (Hbar_{N+1} + a^2 Hbar_{N+2})
                      - sqrt(Hbar_N Phi_N) ]

    positive margin means the rung holds at the reference constant.
    """
    cfgmap = report.get("config", {})
    try:
        nu = float(cfgmap["model.nu"])
        alpha = float(cfgmap["model.alpha"])
        pref = float(cfgmap.get("diagnostics.ladder_c_prefactor", 5.0))
    except KeyError as exc:
        raise SchemaError(f"report JSON: missing column '{exc.args[0]}'") from None
    if str(cfgmap.get("model.kind", "ml-alpha")) == "nse":
        alpha = 0.0
    a2 = alpha**2
    t = diag["t"]
    hbar, phi = diag["Hbar"], diag["Phi"]
    n_max = diag["n_max"]
    fig, ax = plt.subplots()
    meta = {"kind": "ladder", "orders": [], "min_margin_rel": {}}
    for order in orders:
        if order + 2 > n_max:
            continue
        y = hbar[:, order] + a2 * hbar[:, order + 1]
        dy = np.gradient(y, t)
        dissip = nu * (hbar[:, order + 1] + a2 * hbar[:, order + 2])
        force = np.sqrt(hbar[:, order] * phi[:, order])
        lhs = 0.5 * dy + dissip - force
        c_ref = pref * 2.0**order
        rhs = c_ref * diag["sup_grad_ubar"] * y
        margin = rhs - lhs
        scale = np.maximum(np.abs(rhs), np.abs(lhs)).max()
        ax.plot(t, margin / scale, label=f"N={order} (C_ref={c_ref:g})")
        meta["orders"].append(order)
        meta["min_margin_rel"][order] = float(margin.min() / scale)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("normalized ladder margin")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig, meta


def spectrum_figure(report: dict) -> tuple:
    """Shell-binned energy spectrum of the final state, u and ubar."""
    spec = report.get("spectrum")
    if not spec:
        raise SchemaError("report JSON: missing column 'spectrum'")
    fig, ax = plt.subplots()
    for key, style in (("u", "o-"), ("ubar", "s--")):
        shells = np.asarray(spec[key]["m"], dtype=float)
        energy = np.asarray(spec[key]["E"], dtype=float)
        keep = energy > 0
        ax.loglog(shells[keep], energy[keep], style, ms=3, label=key)
    ax.set_xlabel("shell |m|")
    ax.set_ylabel("shell energy")
    ax.set_title(f"t = {spec.get('t', 0):.3g}")
    ax.legend()
    fig.tight_layout()
    return fig, {"kind": "spectrum", "shells": int(keep.sum())}


def _ols_loglog(x: np.ndarray, y: np.ndarray) -> tuple:
    """Least-squares slope of log y against log x, with its standard error."""
    lx, ly = np.log(x), np.log(y)
    n = len(lx)
    a = np.vstack([lx, np.ones(n)]).T
    coef, residuals, *_ = np.linalg.lstsq(a, ly, rcond=None)
    slope, intercept = coef
    if n > 2:
        ss = float(residuals[0]) if len(residuals) else float(((a @ coef - ly) ** 2).sum())
        var = ss / (n - 2) / ((lx - lx.mean()) ** 2).sum()
        stderr = math.sqrt(var)
    else:
        stderr = float("nan")
    return float(slope), float(intercept), stderr


def scaling_figure(summary: dict, ycol: str = "ell_lambda_k_inv") -> tuple:
    """Log-log scaling of a sweep column against Re, with fitted slope and
    the tabulated reference slope as a dashed guide."""
    if ycol not in summary:
        raise SchemaError(f"sweep summary: missing column '{ycol}'")
    re = summary["Re"]
    y = summary[ycol]
    keep = np.isfinite(re) & np.isfinite(y) & (re > 0) & (y > 0)
    if keep.sum() < 3:
        raise SchemaError(f"sweep summary: fewer than three usable points for '{ycol}'")
    re, y = re[keep], y[keep]
    slope, intercept, stderr = _ols_loglog(re, y)
    fig, ax = plt.subplots()
    ax.loglog(re, y, "o", label=ycol)
    grid = np.geomspace(re.min(), re.max(), 50)
    ax.loglog(grid, np.exp(intercept) * grid**slope, "-", lw=1,
              label=f"fit: slope {slope:.3f} +- {stderr:.3f}")
    ref = REFERENCE_SLOPES.get(ycol)
    if ref is not None:
        anchor = y[len(y) // 2] / re[len(re) // 2] ** ref
        ax.loglog(grid, anchor * grid**ref, "k--", lw=1, label=f"reference slope {ref:g}")
    ax.set_xlabel("Re")
    ax.set_ylabel(ycol)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig, {
        "kind": "scaling",
        "ycol": ycol,
        "fitted_slope": slope,
        "fitted_stderr": stderr,
        "reference_slope": ref,
    }
