"""Reynolds-number bound suite: dissipation scales, kappa moments, exponent table.

Every bound whose constant the source material leaves open is reported as a
dimensionless ratio LHS/RHS with all prefactors set to one, never as a hard
pass/fail.  Exact inequalities (Cauchy-Schwarz, Holder chains, spectral
positivity) are hard checks.  The exponent table is stored as exact
rationals; rows whose dimensional prefactor involves alpha degenerate as
alpha -> 0 and are skipped with a notice for unfiltered runs.

Dimensionless normalizations of the moment rows follow the bound chain that
produces them:

    <Hbar_1> * alpha ell^3   / (nu^2 L^3)  vs  Re^(5/2)
    <Hbar_2> * alpha^2 ell^4 / (nu^2 L^3)  vs  Re^3
    <Hbar_3> * alpha^3 ell^5 / (nu^2 L^3)  vs  Re^7

(the Hbar_3 prefactor continues the alpha/ell pattern of the first two rows;
the source leaves its constant as an unspecified function of the
parameters).  Gradient sup norms are scaled by nu/ell^2, the natural inverse
time of the forcing scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diagnostics import (
    RunSeries,
    j_moment,
    kappa,
    reynolds,
    series_averages,
    tau,
)
from .errors import ConfigurationError

__all__ = [
    "BoundReport",
    "bound_suite",
    "TABLE1_EXPONENTS",
    "kappa_n0_exponent",
    "ml_alpha_exponents",
]


# Re-power and ln(Re)-power per (row, model) from the comparison table of
# upper bounds; None marks cells the source leaves blank.  The NS-alpha and
# Bardina columns are stored for reporting only (those models are never
# simulated here).
TABLE1_EXPONENTS: dict = {
    "ell_lambda_k_inv": {
        "nse": (Fraction(3, 4), Fraction(0)),
        "ns-alpha": (Fraction(5, 8), Fraction(0)),
        "bardina": (Fraction(5, 8), Fraction(0)),
        "leray-alpha": (Fraction(7, 12), Fraction(0)),
        "ml-alpha": (Fraction(5, 8), Fraction(0)),
    },
    "Hbar1": {
        "nse": (Fraction(3), Fraction(0)),
        "ns-alpha": (Fraction(5, 2), Fraction(0)),
        "bardina": (Fraction(5, 2), Fraction(0)),
        "leray-alpha": (Fraction(7, 3), Fraction(0)),
        "ml-alpha": (Fraction(5, 2), Fraction(0)),
    },
    "Hbar2": {
        "nse": None,
        "ns-alpha": (Fraction(3), Fraction(0)),
        "bardina": (Fraction(3), Fraction(0)),
        "leray-alpha": (Fraction(8, 3), Fraction(0)),
        "ml-alpha": (Fraction(3), Fraction(0)),
    },
    "Hbar3": {
        "nse": None,
        "ns-alpha": None,
        "bardina": None,
        "leray-alpha": (Fraction(3), Fraction(0)),
        "ml-alpha": (Fraction(7), Fraction(0)),
    },
    "d_F": {
        "nse": None,
        "ns-alpha": (Fraction(9, 4), Fraction(0)),
        "bardina": (Fraction(9, 5), Fraction(0)),
        "leray-alpha": (Fraction(9, 7), Fraction(0)),
        "ml-alpha": (Fraction(9, 4), Fraction(0)),
    },
    "ell2_kappa2_N_r": {
        "nse": None,
        "ns-alpha": (Fraction(11, 4), Fraction(0)),
        "bardina": (Fraction(11, 4), Fraction(0)),
        "leray-alpha": (Fraction(17, 4), Fraction(0)),
        "ml-alpha": (Fraction(5, 2), Fraction(0)),
    },
    "ell2_kappa2_1_0": {
        "nse": (Fraction(1), Fraction(1)),
        "ns-alpha": (Fraction(1), Fraction(1)),
        "bardina": (Fraction(1), Fraction(1)),
        "leray-alpha": (Fraction(1), Fraction(1)),
        "ml-alpha": (Fraction(1), Fraction(1)),
    },
    "sup_ubar_sq": {
        "nse": None,
        "ns-alpha": (Fraction(11, 4), Fraction(0)),
        "bardina": (Fraction(11, 4), Fraction(0)),
        "leray-alpha": (Fraction(5, 2), Fraction(0)),
        "ml-alpha": (Fraction(11, 4), Fraction(0)),
    },
    "sup_grad_ubar": {
        "nse": None,
        "ns-alpha": (Fraction(35, 16), Fraction(0)),
        "bardina": (Fraction(35, 16), Fraction(0)),
        "leray-alpha": (Fraction(17, 12), Fraction(0)),
        "ml-alpha": (Fraction(5, 2), Fraction(0)),
    },
}


def kappa_n0_exponent(model: str, order: int) -> tuple:
    """(Re power, ln Re power) of the ``ell^2 <kappa_{N,0}^2>`` row."""
    if order < 1:
        raise ConfigurationError("kappa_n0_exponent needs N >= 1")
    if order == 1:
        return (Fraction(1), Fraction(1))
    table = {
        "ns-alpha": Fraction(11, 4) - Fraction(7, 4 * order),
        "bardina": Fraction(11, 4) - Fraction(7, 4 * order),
        "leray-alpha": Fraction(17, 12) - Fraction(5, 12 * order),
        "ml-alpha": Fraction(5, 2) - Fraction(3, 2 * order),
    }
    if model not in table:
        raise ConfigurationError(f"no kappa_{{N,0}} exponent for model {model!r}")
    return (table[model], Fraction(1, order))


def ml_alpha_exponents(kappa_orders=(1, 2, 3, 4)) -> dict:
    """The ml-alpha column as exact rationals, including N-dependent rows."""
    out = {row: cells["ml-alpha"] for row, cells in TABLE1_EXPONENTS.items()}
    for n in kappa_orders:
        out[f"ell2_kappa2_{n}_0"] = kappa_n0_exponent("ml-alpha", n)
    return out


def _re_power(re: float, power: Fraction, ln_power: Fraction) -> float:
    val = re ** float(power)
    if ln_power != 0:
        if re <= 1.0:
            return float("nan")
        val *= math.log(re) ** float(ln_power)
    return val


@dataclass
class BoundReport:
    """Averages, dimensionless groups, ratio verdicts, and hard checks."""

    u_scale: float
    re: float
    gr: float | None
    eps: float
    lambda_k_inv: float
    ell_lambda_k_inv: float | None
    tau: float | None
    v_alpha: float | None
    d_f_bound: float | None
    f_avg: dict = field(default_factory=dict)       # <F_N>, ratio-of-averages route
    j_avg: dict = field(default_factory=dict)       # <J_N>
    kappa2_avg: dict = field(default_factory=dict)  # <kappa_{N,r}^2> per-sample route
    kappa_of_avg: dict = field(default_factory=dict)  # (J_N/J_r)^... on averaged J
    table_ratios: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    fitted: dict = field(default_factory=dict)
    hard_checks: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def frac(cell):
            if cell is None:
                return None
            return {"re_power": str(cell[0]), "ln_re_power": str(cell[1])}

        return {
            "U": self.u_scale,
            "Re": self.re,
            "Gr": self.gr,
            "eps": self.eps,
            "lambda_k_inv": self.lambda_k_inv,
            "ell_lambda_k_inv": self.ell_lambda_k_inv,
            "tau": self.tau,
            "V_alpha": self.v_alpha,
            "d_F_bound": self.d_f_bound,
            "F_avg": self.f_avg,
            "J_avg": self.j_avg,
            "kappa2_avg": self.kappa2_avg,
            "kappa_of_avg": self.kappa_of_avg,
            "table_ratios": self.table_ratios,
            "exponents": {
                row: {model: frac(cell) for model, cell in cells.items()}
                for row, cells in self.exponents.items()
            },
            "fitted": self.fitted,
            "hard_checks": self.hard_checks,
            "notices": self.notices,
        }


def bound_suite(series: RunSeries, spinup: float = 0.0) -> BoundReport:
    """Compute every scale estimate and bound verdict from a completed run.

    kappa moments are reported along both routes: per-sample squares averaged
    in time (the headline) and ratios of averaged J moments.
    """
    params = series.params
    nu = params.nu
    alpha = params.effective_alpha
    L = series.L
    k0 = series.k0
    n_max = series.n_max
    avgs = series_averages(series, spinup)
    notices: list = []

    eps = nu * float(avgs["H"][1]) / L**3
    lambda_k_inv = (eps / nu**3) ** 0.25

    ell = series.ell
    gr = series.gr
    forced = ell is not None and gr is not None

    if forced:
        u_scale, re = reynolds(float(avgs["H"][0]), ell, nu, L)
        ell_lki = ell * lambda_k_inv
    else:
        # No forcing scale: report Re on the box scale and skip ell-rows.
        u_scale = math.sqrt(float(avgs["H"][0]) / L**3)
        re = u_scale * L / nu
        ell_lki = None
        notices.append("unforced run: ell undefined, ell-scaled rows skipped")

    tau_val = None
    if forced:
        if gr > 1.0:
            tau_val = tau(gr, ell, nu)
        else:
            notices.append(f"Gr = {gr:.3g} <= 1: tau undefined, tau-dependent rows use tau = 0")

    v_alpha = None
    d_f = None
    if alpha > 0 and forced:
        v_alpha = (L / math.sqrt(ell * alpha)) ** 3
        lambda_1 = k0**2  # smallest Stokes eigenvalue on the torus
        d_f = (L**3 / ell**4 / (alpha**2 * lambda_1**1.5)) ** 0.75 * re ** (9.0 / 4.0)
    elif forced:
        notices.append("alpha = 0: V_alpha and d_F bound degenerate, skipped")

    # F, J and kappa moments (tau = 0 when undefined keeps the J's meaningful).
    t0 = tau_val if tau_val is not None else 0.0
    hbar_avg = avgs["Hbar"]
    phi = series.records[0].Phi if series.records else np.zeros(n_max + 1)
    f_avg = {f"F{m}": float(hbar_avg[m] + t0 * phi[m]) for m in range(n_max + 1)}
    j_avg = {
        f"J{m}": float(f_avg[f"F{m}"] + 2.0 * alpha**2 * f_avg[f"F{m + 1}"])
        for m in range(n_max)
    }

    kappa2_avg: dict = {}
    kappa_of_avg: dict = {}
    j_max = n_max - 1
    pairs = [(m, 0) for m in range(1, min(4, j_max) + 1)]
    pairs += [(m, 1) for m in range(2, min(4, j_max) + 1)]
    times = series.times()
    j_samples = np.array(
        [[j_moment(r, m, t0, alpha) for m in range(j_max + 1)] for r in series.records]
    )
    window = times >= spinup
    for m, r0 in pairs:
        k2_series = (j_samples[:, m] / j_samples[:, r0]) ** (1.0 / (m - r0))
        kappa2_avg[f"kappa2_{m}_{r0}"] = float(
            np.trapezoid(k2_series[window], times[window]) / (times[window][-1] - times[window][0])
            if window.sum() > 1
            else k2_series[window][-1]
        )
        kappa_of_avg[f"kappa_{m}_{r0}"] = kappa(
            [j_avg[f"J{i}"] for i in range(j_max + 1)], m, r0
        )

    # Hard exact checks.
    hard: dict = {}
    hb = series.stack("Hbar")
    convex_ok = True
    for m in range(1, n_max):
        convex_ok &= bool(np.all(hb[:, m] ** 2 <= hb[:, m - 1] * hb[:, m + 1] * (1 + 1e-12)))
    hard["hbar_log_convexity"] = convex_ok
    hard["avg_interpolation_H1"] = bool(
        hbar_avg[1] <= math.sqrt(hbar_avg[0] * hbar_avg[2]) * (1 + 1e-12)
    )
    chain_ok = True
    ident_ok = True
    for m in range(2, min(4, j_max) + 1):
        lhs = kappa2_avg[f"kappa2_{m}_0"]
        rhs = kappa2_avg[f"kappa2_{m}_1"] ** ((m - 1) / m) * kappa2_avg["kappa2_1_0"] ** (1 / m)
        chain_ok &= bool(lhs <= rhs * (1 + 1e-12))
        # Per-sample identity kappa_{N,0}^2 = kappa_{N,1}^{2(N-1)/N} kappa_{1,0}^{2/N},
        # i.e. (J_N/J_0)^{1/N} = (J_N/J_1)^{1/N} (J_1/J_0)^{1/N} sample by sample.
        lhs_s = (j_samples[:, m] / j_samples[:, 0]) ** (1.0 / m)
        rhs_s = (j_samples[:, m] / j_samples[:, 1]) ** (1.0 / m) * (
            j_samples[:, 1] / j_samples[:, 0]
        ) ** (1.0 / m)
        ident_ok &= bool(np.all(np.abs(lhs_s - rhs_s) <= 1e-12 * np.abs(rhs_s)))
    hard["kappa_chain_holder"] = chain_ok
    hard["kappa_chain_identity"] = ident_ok
    hard["kappa_at_least_k0"] = bool(
        all(v >= k0**2 * (1 - 1e-12) for v in kappa2_avg.values())
        and all(v >= k0 * (1 - 1e-12) for v in kappa_of_avg.values())
    )

    # Fitted constants (reported, never thresholded).
    fitted: dict = {}
    if forced:
        fitted["c_gr_vs_re"] = gr / (re**2 + re)
    sup_u = series.stack("sup_ubar")
    agmon_den = (hb[:, 1] * hb[:, 2]) ** 0.25
    nz = agmon_den > 0
    fitted["c_agmon"] = float(np.max(sup_u[nz] / agmon_den[nz])) if nz.any() else 0.0

    # Table ratio verdicts (prefactor 1).
    ratios: dict = {}
    if forced:
        ratios["ell_lambda_k_inv"] = ell_lki / _re_power(re, Fraction(5, 8), Fraction(0))
        if alpha > 0:
            ratios["Hbar1"] = (
                float(hbar_avg[1]) * alpha * ell**3 / (nu**2 * L**3)
            ) / _re_power(re, Fraction(5, 2), Fraction(0))
            ratios["Hbar2"] = (
                float(hbar_avg[2]) * alpha**2 * ell**4 / (nu**2 * L**3)
            ) / _re_power(re, Fraction(3), Fraction(0))
            if n_max >= 3:
                ratios["Hbar3"] = (
                    float(hbar_avg[3]) * alpha**3 * ell**5 / (nu**2 * L**3)
                ) / _re_power(re, Fraction(7), Fraction(0))
            if v_alpha is not None:
                ratios["sup_ubar_sq"] = float(avgs["sup_ubar_sq"]) / (
                    nu**2 / ell**2 * v_alpha * _re_power(re, Fraction(11, 4), Fraction(0))
                )
        ratios["sup_grad_ubar"] = (ell**2 / nu * float(avgs["sup_grad_ubar"])) / _re_power(
            re, Fraction(5, 2), Fraction(0)
        )
        if re > 1.0:
            ratios["ell2_kappa2_1_0"] = (ell**2 * kappa2_avg["kappa2_1_0"]) / _re_power(
                re, Fraction(1), Fraction(1)
            )
            for m in range(2, min(4, j_max) + 1):
                p, lp = kappa_n0_exponent("ml-alpha", m)
                ratios[f"ell2_kappa2_{m}_0"] = (ell**2 * kappa2_avg[f"kappa2_{m}_0"]) / _re_power(
                    re, p, lp
                )
                ratios[f"ell2_kappa2_{m}_1"] = (ell**2 * kappa2_avg[f"kappa2_{m}_1"]) / _re_power(
                    re, Fraction(5, 2), Fraction(0)
                )
        else:
            notices.append(f"Re = {re:.3g} <= 1: log-weighted kappa rows skipped")

    return BoundReport(
        u_scale=u_scale,
        re=re,
        gr=gr,
        eps=eps,
        lambda_k_inv=lambda_k_inv,
        ell_lambda_k_inv=ell_lki,
        tau=tau_val,
        v_alpha=v_alpha,
        d_f_bound=d_f,
        f_avg=f_avg,
        j_avg=j_avg,
        kappa2_avg=kappa2_avg,
        kappa_of_avg=kappa_of_avg,
        table_ratios=ratios,
        exponents=TABLE1_EXPONENTS,
        fitted=fitted,
        hard_checks=hard,
        notices=notices,
    )
