"""Per-sample functionals, long-time averages, and ladder-inequality verdicts.

A :class:`DiagnosticsRecord` captures one time sample of every tracked
functional: derivative moments of the velocity and its filtered companion,

    H_N    = integral |grad^N u|^2 dx      (spectrally: L^3 sum |k|^2N |u(k)|^2)
    Hbar_N = integral |grad^N ubar|^2 dx,
    Phi_N  = integral |grad^N f|^2 dx,

sup norms of ubar and grad ubar, the energy-balance terms, and the exact
time derivatives d(Hbar_N)/dt evaluated from the right-hand side (not by
finite differences):

    d(Hbar_N)/dt = 2 L^3 sum_k |k|^2N Re( conj(ubar(k)) gbar(k) ),

with gbar the filtered tendency.  The ladder check then tests, sample by
sample, whether

    1/2 dY_N/dt <= -nu (Hbar_{N+1} + a^2 Hbar_{N+2})
                   + C_N ||grad ubar||_inf (Hbar_N + a^2 Hbar_{N+1})
                   + Hbar_N^(1/2) Phi_N^(1/2),

with Y_N = Hbar_N + a^2 Hbar_{N+1}, reporting the pass fraction at a
reference constant and the fitted worst-case constant.  At N = 0 the bracket
reduces to the exact energy identity plus Cauchy-Schwarz, so it must pass
with zero constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .forcing import ForcingSpec
from .integrator import SimState
from .model import ModelParams, helmholtz_filter, rhs
from .spectral import SpectralVectorField, inner_product, sup_norms

__all__ = [
    "DiagnosticsRecord",
    "RunSeries",
    "AverageAccumulator",
    "LadderReport",
    "record",
    "moment_ladder",
    "tau",
    "j_moment",
    "kappa",
    "time_average",
    "reynolds",
    "ladder_check",
]


def moment_ladder(field_: SpectralVectorField, n_max: int) -> np.ndarray:
    """All Sobolev moments ``H_0 .. H_{n_max}`` of a field in one spectral pass."""
    g = field_.grid
    if n_max > g.n_max:
        raise ConfigurationError(f"moment order {n_max} exceeds configured n_max {g.n_max}")
    dens = g.hermitian_weight * (field_.coeffs.real**2 + field_.coeffs.imag**2).sum(axis=0)
    out = np.empty(n_max + 1)
    for order in range(n_max + 1):
        out[order] = g.L**3 * dens.sum()
        if order < n_max:
            dens = dens * g.k2
    return out


def _weighted_cross_moments(
    ubar: SpectralVectorField, gbar: SpectralVectorField, n_max: int
) -> np.ndarray:
    """``2 L^3 sum |k|^2N Re(conj(ubar) gbar)`` for N = 0..n_max (= d Hbar_N / dt)."""
    g = ubar.grid
    dens = g.hermitian_weight * (np.conj(ubar.coeffs) * gbar.coeffs).real.sum(axis=0)
    out = np.empty(n_max + 1)
    for order in range(n_max + 1):
        out[order] = 2.0 * g.L**3 * dens.sum()
        if order < n_max:
            dens = dens * g.k2
    return out


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of every tracked functional."""

    t: float
    H: np.ndarray          # moments of u, orders 0..n_max
    Hbar: np.ndarray       # moments of ubar
    Phi: np.ndarray        # moments of the forcing (constant in time)
    sup_ubar: float
    sup_grad_ubar: float
    inj: float             # <f, ubar>
    visc: float            # nu (Hbar_1 + a^2 Hbar_2)
    dE_dt_exact: float     # d/dt of E = (Hbar_0 + a^2 Hbar_1)/2, from the RHS
    dHbar_dt: np.ndarray   # d Hbar_N / dt from the RHS, orders 0..n_max

    @property
    def energy(self) -> float:
        """Filtered energy with the alpha weight baked into dE_dt_exact's Y_0."""
        return 0.5 * (self.Hbar[0] + self._alpha_sq * self.Hbar[1])

    # populated by record(); kept out of the constructor signature
    _alpha_sq: float = 0.0

    @property
    def skew_residual(self) -> float:
        """dE/dt - (inj - visc); zero up to roundoff by skew-symmetry."""
        return self.dE_dt_exact - (self.inj - self.visc)


def record(
    state: SimState, f: SpectralVectorField | None, params: ModelParams, n_max: int
) -> DiagnosticsRecord:
    """Populate every diagnostic functional for the current state.

    The time derivatives come from the right-hand side: with
    ``dubar/dt = filter(du/dt)``, each ``d(Hbar_N)/dt`` is a weighted real
    pairing of ubar with the filtered tendency, so the energy identity holds
    to roundoff rather than to O(dt).
    """
    u = state.u
    alpha = params.effective_alpha
    ubar = helmholtz_filter(u, alpha)
    H = moment_ladder(u, n_max)
    Hbar = moment_ladder(ubar, n_max)
    if f is not None:
        Phi = moment_ladder(f, n_max)
        inj = inner_product(f, ubar)
    else:
        Phi = np.zeros(n_max + 1)
        inj = 0.0
    g = rhs(u, params, f)
    gbar = helmholtz_filter(g, alpha)
    dHbar_dt = _weighted_cross_moments(ubar, gbar, n_max)
    visc = params.nu * (Hbar[1] + alpha**2 * Hbar[2])
    dE = 0.5 * (dHbar_dt[0] + alpha**2 * dHbar_dt[1])
    s_u, s_grad = sup_norms(ubar)
    return DiagnosticsRecord(
        t=state.t,
        H=H,
        Hbar=Hbar,
        Phi=Phi,
        sup_ubar=s_u,
        sup_grad_ubar=s_grad,
        inj=inj,
        visc=visc,
        dE_dt_exact=dE,
        dHbar_dt=dHbar_dt,
        _alpha_sq=alpha**2,
    )


@dataclass
class RunSeries:
    """An immutable-after-run sequence of records plus run context."""

    params: ModelParams
    n: int
    L: float
    n_max: int
    dt: float
    records: list = field(default_factory=list)
    forcing: ForcingSpec | None = None
    ell: float | None = None
    gr: float | None = None
    seed: int | None = None
    ddt_source: str = "rhs"

    @property
    def k0(self) -> float:
        return 2.0 * np.pi / self.L

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def stack(self, name: str) -> np.ndarray:
        """Stack a record field over time; vector fields give (n_samples, n_max+1)."""
        return np.array([getattr(r, name) for r in self.records])


# ---------------------------------------------------------------------------
# Scalar functionals
# ---------------------------------------------------------------------------

def tau(gr: float, ell: float, nu: float) -> float:
    """Forcing time scale ``ell^2 nu^-1 (Gr ln Gr)^(-1/2)``; needs Gr > 1."""
    if not (gr > 1.0):
        raise ConfigurationError(f"tau undefined: Gr <= 1 (Gr = {gr})")
    return ell**2 / nu / math.sqrt(gr * math.log(gr))


def j_moment(rec: DiagnosticsRecord, order: int, tau_val: float, alpha: float) -> float:
    """Forcing-augmented moment ``J_N = F_N + 2 a^2 F_{N+1}``, ``F_N = Hbar_N + tau Phi_N``."""
    if order + 1 >= len(rec.Hbar):
        raise ConfigurationError(
            f"j_moment order {order} needs Hbar_{order + 1}, beyond n_max {len(rec.Hbar) - 1}"
        )
    f_n = rec.Hbar[order] + tau_val * rec.Phi[order]
    f_n1 = rec.Hbar[order + 1] + tau_val * rec.Phi[order + 1]
    return f_n + 2.0 * alpha**2 * f_n1


def kappa(j_values, order: int, base: int) -> float:
    """Inverse length scale ``(J_N / J_r)^(1/(2(N-r)))`` for N > r >= 0."""
    if not (order > base >= 0):
        raise ConfigurationError(f"kappa needs N > r >= 0, got N = {order}, r = {base}")
    jr = j_values[base]
    if jr <= 0.0:
        raise ConfigurationError(f"kappa: J_{base} must be positive, got {jr}")
    return (j_values[order] / jr) ** (1.0 / (2.0 * (order - base)))


def reynolds(avg_h0_u: float, ell: float, nu: float, L: float) -> tuple:
    """Velocity scale ``U = sqrt(<||u||^2>/L^3)`` and ``Re = U ell / nu``."""
    U = math.sqrt(avg_h0_u / L**3)
    return U, U * ell / nu


# ---------------------------------------------------------------------------
# Long-time averaging
# ---------------------------------------------------------------------------

class AverageAccumulator:
    """Streaming trapezoidal mean over samples with ``t >= spinup``.

    The generalized long-time limit is approximated by a finite window,
    uniformly weighted in time.  Constants average to themselves and the
    mean is linear in its inputs.
    """

    def __init__(self, spinup: float = 0.0):
        self.spinup = spinup
        self._sums: dict = {}
        self._prev_t: float | None = None
        self._prev: dict | None = None
        self._t_first: float | None = None
        self._t_last: float | None = None
        self.sample_count = 0

    def add(self, t: float, values: dict):
        if t < self.spinup:
            return
        self.sample_count += 1
        if self._prev is not None:
            w = 0.5 * (t - self._prev_t)
            for name, v in values.items():
                self._sums[name] = self._sums.get(name, 0.0) + w * (
                    np.asarray(v, dtype=float) + np.asarray(self._prev[name], dtype=float)
                )
        else:
            self._t_first = t
        self._prev_t = t
        self._prev = dict(values)
        self._t_last = t

    def means(self) -> dict:
        if self.sample_count == 0:
            raise ConfigurationError("time_average: no samples after the spinup window")
        if self.sample_count == 1 or self._t_last == self._t_first:
            return {k: np.asarray(v, dtype=float) for k, v in self._prev.items()}
        span = self._t_last - self._t_first
        return {k: v / span for k, v in self._sums.items()}


def time_average(acc: AverageAccumulator) -> dict:
    """Finalize the accumulator into a dict of trapezoidal means."""
    return acc.means()


def series_averages(series: RunSeries, spinup: float) -> dict:
    """Trapezoidal means of all per-record functionals over the window."""
    acc = AverageAccumulator(spinup)
    for r in series.records:
        acc.add(
            r.t,
            {
                "H": r.H,
                "Hbar": r.Hbar,
                "sup_ubar": r.sup_ubar,
                "sup_ubar_sq": r.sup_ubar**2,
                "sup_grad_ubar": r.sup_grad_ubar,
                "inj": r.inj,
                "visc": r.visc,
            },
        )
    return time_average(acc)


# ---------------------------------------------------------------------------
# Ladder inequality check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderReport:
    """Verdict for one rung of the ladder inequality."""

    order: int
    c_ref: float
    pass_fraction: float
    fitted_constant: float
    n_samples: int
    fd_crosscheck_rel: float | None
    j_form: dict | None    # fitted constants of the depleted J-form, keyed by p
    ddt_source: str = "rhs"

    def to_dict(self) -> dict:
        return {
            "N": self.order,
            "c_ref": self.c_ref,
            "pass_fraction": self.pass_fraction,
            "fitted_constant": self.fitted_constant,
            "n_samples": self.n_samples,
            "fd_crosscheck_rel": self.fd_crosscheck_rel,
            "j_form": self.j_form,
            "ddt_source": self.ddt_source,
        }


def default_c_ref(order: int, prefactor: float = 5.0) -> float:
    """Reference ladder constant: 0 at N = 0, ``prefactor * 2^N`` above."""
    return 0.0 if order == 0 else prefactor * 2.0**order


def ladder_check(series: RunSeries, order: int, c_ref: float | None = None) -> LadderReport:
    """Evaluate the ladder inequality at every sample of a completed run.

    Uses the exact RHS-derived time derivatives stored in the records
    (cross-checked by centered finite differences on 10% of the interior
    samples).  The J-form with the depletion term
    ``-nu J_N^(1+1/p) / J_{N-p}^(1/p)`` is fitted for p in {1, N} when the
    run is forced with Gr > 1.
    """
    n_max = series.n_max
    if not (0 <= order <= n_max - 2):
        raise ConfigurationError(
            f"ladder order {order} needs Hbar_{order + 2}; configure n_max >= {order + 2}"
        )
    recs = series.records
    if len(recs) < 2:
        raise ConfigurationError("ladder_check: need at least two samples")
    if c_ref is None:
        c_ref = default_c_ref(order)
    alpha = series.params.effective_alpha
    nu = series.params.nu
    a2 = alpha**2

    n_pass = 0
    fitted = 0.0
    for r in recs:
        half_dy = 0.5 * (r.dHbar_dt[order] + a2 * r.dHbar_dt[order + 1])
        dissip = nu * (r.Hbar[order + 1] + a2 * r.Hbar[order + 2])
        force = math.sqrt(r.Hbar[order] * r.Phi[order])
        denom = r.sup_grad_ubar * (r.Hbar[order] + a2 * r.Hbar[order + 1])
        bracket = half_dy + dissip - force
        scale = max(abs(half_dy), dissip, force, c_ref * denom)
        if bracket <= c_ref * denom + 1e-10 * scale:
            n_pass += 1
        if denom > 0.0:
            fitted = max(fitted, bracket / denom)

    # Finite-difference cross-check of the RHS-derived derivative.
    fd_rel = None
    interior = range(1, len(recs) - 1)
    picked = [i for i in interior if i % 10 == 0] or list(interior)[:1]
    for i in picked:
        tm, tp = recs[i - 1].t, recs[i + 1].t
        ym = recs[i - 1].Hbar[order] + a2 * recs[i - 1].Hbar[order + 1]
        yp = recs[i + 1].Hbar[order] + a2 * recs[i + 1].Hbar[order + 1]
        fd = (yp - ym) / (tp - tm)
        exact = recs[i].dHbar_dt[order] + a2 * recs[i].dHbar_dt[order + 1]
        scale = max(abs(exact), abs(fd), 1e-300)
        err = abs(fd - exact) / scale
        fd_rel = err if fd_rel is None else max(fd_rel, err)

    j_form = None
    if series.gr is not None and series.gr > 1.0 and series.ell is not None and order >= 1:
        tau_val = tau(series.gr, series.ell, nu)
        avgs = series_averages(series, spinup=0.0)
        _, re = reynolds(float(avgs["H"][0]), series.ell, nu, series.L)
        j_form = {}
        for p in sorted({1, order}):
            c_fit = 0.0
            for i, r in enumerate(recs):
                j_here = [j_moment(r, m, tau_val, alpha) for m in range(order + 1)]
                dj = r.dHbar_dt[order] + 2.0 * a2 * r.dHbar_dt[order + 1]
                depletion = nu * j_here[order] ** (1.0 + 1.0 / p) / j_here[order - p] ** (1.0 / p)
                grow = (r.sup_grad_ubar + nu / series.ell**2 * re * math.log(re)) * j_here[order]
                if grow > 0.0:
                    c_fit = max(c_fit, (0.5 * dj + depletion) / grow)
            j_form[f"p={p}"] = c_fit

    return LadderReport(
        order=order,
        c_ref=c_ref,
        pass_fraction=n_pass / len(recs),
        fitted_constant=fitted,
        n_samples=len(recs),
        fd_crosscheck_rel=fd_rel,
        j_form=j_form,
        ddt_source=series.ddt_source,
    )
