"""
Scalar turbulence diagnostics: Grashof and Kraichnan numbers, the
intermittency dimension, and shell-threshold determining wavenumbers.

Long-time upper limits are approximated by the maximum of sliding-window
averages taken after a configurable transient: for a sampled signal F(t),

    <F>  ~  max over complete trailing windows [t - T, t] of  avg_window F,

with either integral or mean (1/T-normalized) window semantics.  All
window integrals use the trapezoid rule on the stored samples.

The determining wavenumbers scan dyadic shells for the smallest q at which
scale-local norms of the vorticity drop below a threshold c0 * nu; the
combined wavenumber is the minimum of the L^2-based and the sup-norm-based
variants, and its sliding average (with the mean convention) is the
quantity compared against shell labels in the synchronization experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Grid, SpectralField, _physical
from .shells import shell_basis
from .solver import FlowState, Forcing, _velocity_coeffs, palinstrophy


# ---------------------------------------------------------------------------
# windowed time averages


def window_averages(
    times: np.ndarray,
    values: np.ndarray,
    window: float,
    *,
    transient_fraction: float = 0.0,
    mode: str = "mean",
) -> np.ndarray:
    """Trailing-window averages of a sampled signal.

    One entry per sample time t_i for which the full window [t_i - T, t_i]
    lies after the transient cut.  `values` may be (T,) or (T, m); the
    window integral uses the trapezoid rule with linear interpolation of
    the cumulative integral at the window start.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if mode not in ("integral", "mean"):
        raise ValueError(f"mode must be 'integral' or 'mean', got {mode!r}")
    times = np.asarray(times, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    span = times[-1] - times[0]
    t_min = times[0] + transient_fraction * span
    starts = times - window
    eligible = np.nonzero(starts >= t_min - 1e-12 * max(1.0, abs(t_min)))[0]
    if eligible.size == 0:
        raise ValueError(
            f"no complete window of length {window} after the transient "
            f"(sampled span {span}, transient fraction {transient_fraction})"
        )
    ct = cumulative_trapezoid(vals, times, axis=0, initial=0.0)
    out = []
    for i in eligible:
        t0 = max(starts[i], times[0])
        j = int(np.searchsorted(times, t0, side="right")) - 1
        j = min(max(j, 0), times.size - 2)
        frac = (t0 - times[j]) / (times[j + 1] - times[j])
        c0 = ct[j] + frac * (ct[j + 1] - ct[j])
        out.append(ct[i] - c0)
    result = np.asarray(out)
    if mode == "mean":
        result = result / window
    return result


class TimeAverager:
    """Accumulates (t, value) samples and reports trailing-window averages."""

    def __init__(self, window: float, mode: str = "mean"):
        if window <= 0:
            raise ValueError(f"window must be positive, got {window}")
        if mode not in ("integral", "mean"):
            raise ValueError(f"mode must be 'integral' or 'mean', got {mode!r}")
        self.window = window
        self.mode = mode
        self._t: list[float] = []
        self._v: list[float] = []

    def add(self, t: float, value: float) -> None:
        if self._t and t <= self._t[-1]:
            raise ValueError("samples must arrive in increasing time order")
        self._t.append(float(t))
        self._v.append(float(value))

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._t)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self._v)

    def window_values(self, transient_fraction: float = 0.0) -> np.ndarray:
        return window_averages(
            self.times, self.values, self.window,
            transient_fraction=transient_fraction, mode=self.mode,
        )

    def average(self, transient_fraction: float = 0.0) -> float:
        """Max over complete trailing windows (finite-run upper-limit proxy)."""
        return float(np.max(self.window_values(transient_fraction)))


def default_window(nu: float, L: float) -> float:
    """The customary averaging span 1 / (nu kappa0^2)."""
    kappa0 = 2.0 * np.pi / L
    return 1.0 / (nu * kappa0**2)


# ---------------------------------------------------------------------------
# Grashof and Kraichnan numbers


def grashof_steady(forcing: Forcing, nu: float) -> float:
    """Adimensional force strength ||f||_2 / (nu^2 kappa0^2) for steady forcing."""
    if forcing.kind != "steady":
        raise ValueError("grashof_steady applies to steady forcing only; "
                         "use grashof_nonautonomous for time-dependent forces")
    if nu <= 0:
        raise ValueError("nu must be positive")
    kappa0 = forcing.grid.kappa0
    return forcing.velocity_force_l2() / (nu**2 * kappa0**2)


def nonautonomous_factor(frak_t: float) -> float:
    """(T' / (1 - e^{-T'}))^(1/2) for the adimensional window T'."""
    if frak_t <= 0:
        raise ValueError("adimensional window must be positive")
    return float(np.sqrt(frak_t / -np.expm1(-frak_t)))


def grashof_nonautonomous(
    forcing: Forcing,
    nu: float,
    T: float,
    *,
    horizon: float | None = None,
    samples_per_window: int = 64,
) -> float:
    """Grashof number for translationally bounded time-dependent forcing.

    Uses the sliding-window force norm
    ||f||_b^2 = sup_t (1/T) int_t^{t+T} ||f(tau)||_2^2 dtau
    scaled by the window factor (T'/(1-e^{-T'}))^(1/2), T' = nu kappa0^2 T.
    For steady forcing the sliding norm reduces to ||f||_2.
    """
    if T <= 0:
        raise ValueError("averaging window must be positive")
    if nu <= 0:
        raise ValueError("nu must be positive")
    kappa0 = forcing.grid.kappa0
    frak_t = nu * kappa0**2 * T
    if forcing.kind == "steady":
        f_b = forcing.velocity_force_l2()
    else:
        span = 4.0 * T if horizon is None else horizon
        ts = np.linspace(0.0, span, max(2, int(samples_per_window * span / T)))
        norms2 = np.array([forcing.velocity_force_l2(t) ** 2 for t in ts])
        means = window_averages(ts, norms2, T, mode="mean")
        f_b = float(np.sqrt(np.max(means)))
    return f_b / (nu**2 * kappa0**2) * nonautonomous_factor(frak_t)


def enstrophy_dissipation_rate(avg_palinstrophy: float, d: float, nu: float, L: float) -> float:
    """eta = L^{-d} nu <||Lap u||_2^2>: dissipation per unit active volume."""
    if not 0.0 <= d <= 2.0:
        raise ValueError(f"intermittency dimension must lie in [0, 2], got {d}")
    if avg_palinstrophy < 0:
        raise ValueError("average palinstrophy must be nonnegative")
    return L ** (-d) * nu * avg_palinstrophy


def kraichnan_number(avg_palinstrophy: float, d: float, nu: float, L: float) -> float:
    """kappa_eta = (eta / nu^3)^(1/(d+4)): end of the enstrophy cascade range."""
    eta = enstrophy_dissipation_rate(avg_palinstrophy, d, nu, L)
    return float((eta / nu**3) ** (1.0 / (d + 4.0)))


# ---------------------------------------------------------------------------
# intermittency dimension


def saturation_ratio(
    s: np.ndarray,
    avg_linf_sq: np.ndarray,
    avg_l2_sq: np.ndarray,
    c_b: float,
    L: float,
) -> np.ndarray:
    """B(s): shell sup-norm sums against the c_b-weighted dissipation sums.

    avg_linf_sq and avg_l2_sq are time-averaged ||u_q||_inf^2 and
    ||u_q||_2^2 per shell, entries q = -1 .. q_max.
    """
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    q = np.arange(avg_linf_sq.size) - 1
    lam = 2.0**q / L
    num = np.einsum("sq,q->s", lam[None, :] ** (2.0 + s[:, None]), avg_linf_sq)
    den_base = float(np.sum(lam**4 * avg_l2_sq))
    den = c_b ** (2.0 - s) * L ** (-s) * den_base
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / den, np.inf)


def intermittency_from_averages(
    avg_linf_sq: np.ndarray,
    avg_l2_sq: np.ndarray,
    c_b: float,
    L: float,
    s_resolution: float = 0.01,
) -> float:
    """Grid scan of sup{s in [0,2]: B(s) <= 1} with positive numerator.

    Returns 2 for an identically zero field; returns 0 when no grid point
    passes (saturation beyond the calibrated constant).
    """
    avg_linf_sq = np.asarray(avg_linf_sq, dtype=np.float64)
    avg_l2_sq = np.asarray(avg_l2_sq, dtype=np.float64)
    if np.all(avg_l2_sq == 0.0) and np.all(avg_linf_sq == 0.0):
        return 2.0
    if not np.any(avg_linf_sq > 0.0):
        return 0.0
    n_pts = int(round(2.0 / s_resolution)) + 1
    s_grid = np.linspace(0.0, 2.0, n_pts)
    ratios = saturation_ratio(s_grid, avg_linf_sq, avg_l2_sq, c_b, L)
    ok = ratios <= 1.0
    if not np.any(ok):
        return 0.0
    return float(s_grid[np.nonzero(ok)[0][-1]])


def intermittency_dimension(
    times: np.ndarray,
    shell_linf_sq: np.ndarray,
    shell_l2_sq: np.ndarray,
    c_b: float,
    L: float,
    *,
    window: float,
    transient_fraction: float = 0.5,
    s_resolution: float = 0.01,
) -> float:
    """Intermittency dimension from per-shell velocity norm time series.

    Both numerator and denominator sums are averaged with the
    max-over-trailing-windows upper-limit proxy before forming B(s).
    Inputs are (T, q_max+2) matrices of squared norms, shells q = -1..q_max.
    """
    shell_linf_sq = np.asarray(shell_linf_sq, dtype=np.float64)
    shell_l2_sq = np.asarray(shell_l2_sq, dtype=np.float64)
    if np.all(shell_l2_sq == 0.0) and np.all(shell_linf_sq == 0.0):
        return 2.0
    w_linf = window_averages(
        times, shell_linf_sq, window, transient_fraction=transient_fraction, mode="mean"
    )
    w_l2 = window_averages(
        times, shell_l2_sq, window, transient_fraction=transient_fraction, mode="mean"
    )
    q = np.arange(shell_linf_sq.shape[1]) - 1
    lam = 2.0**q / L
    n_pts = int(round(2.0 / s_resolution)) + 1
    s_grid = np.linspace(0.0, 2.0, n_pts)
    # max over windows of the s-weighted shell sums
    num = np.max(np.einsum("sq,wq->sw", lam[None, :] ** (2.0 + s_grid[:, None]), w_linf), axis=1)
    den_base = np.max(w_l2 @ lam**4)
    den = c_b ** (2.0 - s_grid) * L ** (-s_grid) * den_base
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0, num / den, np.inf)
    ok = (ratios <= 1.0) & (num > 0)
    if not np.any(ok):
        return 0.0
    return float(s_grid[np.nonzero(ok)[0][-1]])


# ---------------------------------------------------------------------------
# determining wavenumbers


@dataclass(frozen=True)
class WavenumberParams:
    """Threshold parameters of the shell-smallness conditions.

    c0 defaults to c_cal * (1 - 2^{-sigma})^2 and may not exceed that
    bound; c_cal is the calibration headroom constant.
    """

    sigma: float = 0.5
    delta: float = 0.5
    c_cal: float = 0.01
    c0: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.sigma < 2.0:
            raise ValueError(f"sigma must lie in (0,2), got {self.sigma}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")
        if self.c_cal <= 0:
            raise ValueError(f"c_cal must be positive, got {self.c_cal}")
        bound = self.c_cal * (1.0 - 2.0 ** (-self.sigma)) ** 2
        if self.c0 is None:
            object.__setattr__(self, "c0", bound)
        elif not 0.0 < self.c0 <= bound * (1.0 + 1e-12):
            raise ValueError(
                f"c0 must satisfy 0 < c0 <= c_cal*(1-2^-sigma)^2 = {bound:.6e}, got {self.c0}"
            )

    def as_dict(self) -> dict:
        return {"sigma": self.sigma, "delta": self.delta, "c_cal": self.c_cal, "c0": self.c0}


@dataclass(frozen=True)
class DeterminingWavenumber:
    value: float
    q: int
    unresolved: bool


def determining_wavenumber_l2(
    shell_l2: np.ndarray,
    grad_low_l2: np.ndarray,
    params: WavenumberParams,
    nu: float,
    L: float,
) -> DeterminingWavenumber:
    """Smallest shell at which the L^2-based scale-local norms fall below c0*nu.

    Conditions at candidate q (natural q, scanned from 0):
      2^{sigma (p-q)} * lambda_q^{-1} ||w_p||_2 < c0 nu for every p in (q, q_max],
      lambda_q^{-2} ||grad w_{<=q}||_2 < c0 nu.
    Inputs are arrays over shells q = -1 .. q_max (entry i is shell i-1).
    Saturation returns lambda_{q_max} flagged unresolved.
    """
    return _scan_conditions(shell_l2, grad_low_l2, params, nu, L, lam_power=1, grad_power=2)


def determining_wavenumber_linf(
    shell_linf: np.ndarray,
    grad_low_linf: np.ndarray,
    params: WavenumberParams,
    nu: float,
    L: float,
) -> DeterminingWavenumber:
    """Sup-norm variant: lambda_q^{-2} on the tail and lambda_q^{-3} on the gradient."""
    return _scan_conditions(shell_linf, grad_low_linf, params, nu, L, lam_power=2, grad_power=3)


def _scan_conditions(
    shell_norms: np.ndarray,
    grad_low: np.ndarray,
    params: WavenumberParams,
    nu: float,
    L: float,
    *,
    lam_power: int,
    grad_power: int,
) -> DeterminingWavenumber:
    shell_norms = np.asarray(shell_norms, dtype=np.float64)
    grad_low = np.asarray(grad_low, dtype=np.float64)
    if shell_norms.shape != grad_low.shape:
        raise ValueError("shell and gradient arrays must have matching shape")
    q_max = shell_norms.size - 2
    threshold = params.c0 * nu
    for q in range(0, q_max + 1):
        inv_lam = (L / 2.0**q) ** lam_power
        tail_ok = True
        for p in range(q + 1, q_max + 1):
            if 2.0 ** (params.sigma * (p - q)) * inv_lam * shell_norms[p + 1] >= threshold:
                tail_ok = False
                break
        if not tail_ok:
            continue
        if (L / 2.0**q) ** grad_power * grad_low[q + 1] < threshold:
            return DeterminingWavenumber(value=2.0**q / L, q=q, unresolved=False)
    return DeterminingWavenumber(value=2.0**q_max / L, q=q_max, unresolved=True)


def combined_wavenumber(
    lam1: DeterminingWavenumber, lam2: DeterminingWavenumber
) -> DeterminingWavenumber:
    """Pointwise combination: the smaller of the two variants."""
    return lam1 if lam1.value <= lam2.value else lam2


@dataclass(frozen=True)
class WavenumberInputs:
    """Shell and cumulative-gradient norms of a vorticity field."""

    omega_shell_l2: np.ndarray
    omega_shell_linf: np.ndarray
    grad_low_l2: np.ndarray
    grad_low_linf: np.ndarray


def wavenumber_inputs(omega: SpectralField) -> WavenumberInputs:
    g = omega.grid
    basis = shell_basis(g)
    w2 = np.abs(omega.coeffs) ** 2
    shell_l2 = g.L * np.sqrt(np.einsum("qij,ij->q", basis.bands**2, w2))
    grad_low_l2 = g.L * np.sqrt(np.einsum("qij,ij->q", basis.lowpass**2 * g.kappa2, w2))
    n_bands = basis.q_max + 2
    shell_linf = np.empty(n_bands)
    grad_low_linf = np.empty(n_bands)
    for i in range(n_bands):
        shell_linf[i] = np.max(np.abs(_physical(omega.coeffs * basis.bands[i])))
        low = omega.coeffs * basis.lowpass[i]
        gx = _physical(1j * g.kappa_x * low)
        gy = _physical(1j * g.kappa_y * low)
        grad_low_linf[i] = np.sqrt(np.max(gx * gx + gy * gy))
    return WavenumberInputs(
        omega_shell_l2=shell_l2,
        omega_shell_linf=shell_linf,
        grad_low_l2=grad_low_l2,
        grad_low_linf=grad_low_linf,
    )


def wavenumbers_of_state(
    omega: SpectralField, params: WavenumberParams, nu: float
) -> tuple[DeterminingWavenumber, DeterminingWavenumber, DeterminingWavenumber]:
    """(L^2 variant, sup variant, combined) for one vorticity snapshot."""
    inp = wavenumber_inputs(omega)
    L = omega.grid.L
    lam1 = determining_wavenumber_l2(inp.omega_shell_l2, inp.grad_low_l2, params, nu, L)
    lam2 = determining_wavenumber_linf(inp.omega_shell_linf, inp.grad_low_linf, params, nu, L)
    return lam1, lam2, combined_wavenumber(lam1, lam2)


def lambda_bar(
    times: np.ndarray,
    lambda_series: np.ndarray,
    window: float,
    transient_fraction: float = 0.0,
) -> float:
    """Sliding mean of the combined wavenumber: max over trailing windows of (1/T) int."""
    means = window_averages(
        times, lambda_series, window, transient_fraction=transient_fraction, mode="mean"
    )
    return float(np.max(means))


def shell_of_wavenumber(value: float, L: float) -> int:
    """Smallest q with 2^q / L >= value (natural q)."""
    return max(0, int(np.ceil(np.log2(max(value, 1e-300) * L) - 1e-12)))


# ---------------------------------------------------------------------------
# per-run collection


@dataclass
class DiagnosticsRecord:
    t: float
    enstrophy: float
    palinstrophy: float
    omega_shell_l2: np.ndarray
    omega_shell_linf: np.ndarray
    u_shell_l2: np.ndarray
    u_shell_linf: np.ndarray
    grad_low_l2: np.ndarray
    grad_low_linf: np.ndarray
    lambda1: DeterminingWavenumber
    lambda2: DeterminingWavenumber
    lambda_: DeterminingWavenumber


@dataclass(frozen=True)
class TurbulenceSummary:
    grashof: float
    avg_palinstrophy: float
    d: float
    eta: float
    kappa_eta: float
    lambda_bar: float
    q_bar: int
    unresolved_fraction: float
    stationary: bool
    window: float
    transient_fraction: float
    c_b: float
    kappa0: float

    def as_dict(self) -> dict:
        return {
            "grashof": self.grashof,
            "avg_palinstrophy": self.avg_palinstrophy,
            "d": self.d,
            "eta": self.eta,
            "kappa_eta": self.kappa_eta,
            "lambda_bar": self.lambda_bar,
            "q_bar": self.q_bar,
            "unresolved_fraction": self.unresolved_fraction,
            "stationary": self.stationary,
            "window": self.window,
            "transient_fraction": self.transient_fraction,
            "c_b": self.c_b,
            "kappa0": self.kappa0,
        }


class DiagnosticsCollector:
    """Per-sample recorder feeding the windowed turbulence summary."""

    def __init__(
        self,
        nu: float,
        params: WavenumberParams,
        c_b: float,
        *,
        window: float,
        transient_fraction: float = 0.5,
    ):
        self.nu = nu
        self.params = params
        self.c_b = c_b
        self.window = window
        self.transient_fraction = transient_fraction
        self.grid: Grid | None = None
        self.records: list[DiagnosticsRecord] = []

    def observe(self, state: FlowState) -> DiagnosticsRecord:
        omega = state.omega
        g = omega.grid
        if self.grid is None:
            self.grid = g
        elif self.grid != g:
            raise ValueError("collector fed states from different grids")
        basis = shell_basis(g)
        inp = wavenumber_inputs(omega)
        u1c, u2c = _velocity_coeffs(g, omega.coeffs)
        uw = np.abs(u1c) ** 2 + np.abs(u2c) ** 2
        u_shell_l2 = g.L * np.sqrt(np.einsum("qij,ij->q", basis.bands**2, uw))
        n_bands = basis.q_max + 2
        u_shell_linf = np.empty(n_bands)
        for i in range(n_bands):
            b1 = _physical(u1c * basis.bands[i])
            b2 = _physical(u2c * basis.bands[i])
            u_shell_linf[i] = np.sqrt(np.max(b1 * b1 + b2 * b2))
        lam1 = determining_wavenumber_l2(
            inp.omega_shell_l2, inp.grad_low_l2, self.params, self.nu, g.L
        )
        lam2 = determining_wavenumber_linf(
            inp.omega_shell_linf, inp.grad_low_linf, self.params, self.nu, g.L
        )
        rec = DiagnosticsRecord(
            t=state.t,
            enstrophy=float(g.L**2 * np.sum(np.abs(omega.coeffs) ** 2)),
            palinstrophy=palinstrophy(state),
            omega_shell_l2=inp.omega_shell_l2,
            omega_shell_linf=inp.omega_shell_linf,
            u_shell_l2=u_shell_l2,
            u_shell_linf=u_shell_linf,
            grad_low_l2=inp.grad_low_l2,
            grad_low_linf=inp.grad_low_linf,
            lambda1=lam1,
            lambda2=lam2,
            lambda_=combined_wavenumber(lam1, lam2),
        )
        self.records.append(rec)
        return rec

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def summary(self, forcing: Forcing | None = None) -> TurbulenceSummary:
        if len(self.records) < 2:
            raise ValueError("need at least two records for a summary")
        g = self.grid
        times = self.times
        palin = np.array([r.palinstrophy for r in self.records])
        avg_palin = float(
            np.max(window_averages(
                times, palin, self.window,
                transient_fraction=self.transient_fraction, mode="mean",
            ))
        )
        linf_sq = np.array([r.u_shell_linf**2 for r in self.records])
        l2_sq = np.array([r.u_shell_l2**2 for r in self.records])
        d = intermittency_dimension(
            times, linf_sq, l2_sq, self.c_b, g.L,
            window=self.window, transient_fraction=self.transient_fraction,
        )
        eta = enstrophy_dissipation_rate(avg_palin, d, self.nu, g.L)
        kap = kraichnan_number(avg_palin, d, self.nu, g.L)
        lam_series = np.array([r.lambda_.value for r in self.records])
        lam_bar = lambda_bar(times, lam_series, self.window, self.transient_fraction)
        unresolved = float(np.mean([r.lambda_.unresolved for r in self.records]))
        grash = grashof_steady(forcing, self.nu) if forcing is not None and forcing.kind == "steady" else 0.0
        stationary = _stationary(times, np.array([r.enstrophy for r in self.records]),
                                 self.transient_fraction)
        return TurbulenceSummary(
            grashof=grash,
            avg_palinstrophy=avg_palin,
            d=d,
            eta=eta,
            kappa_eta=kap,
            lambda_bar=lam_bar,
            q_bar=shell_of_wavenumber(lam_bar, g.L),
            unresolved_fraction=unresolved,
            stationary=stationary,
            window=self.window,
            transient_fraction=self.transient_fraction,
            c_b=self.c_b,
            kappa0=g.kappa0,
        )


def _stationary(times: np.ndarray, series: np.ndarray, transient_fraction: float,
                tolerance: float = 0.5) -> bool:
    """Crude stationarity check: post-transient half-means agree within tolerance."""
    span = times[-1] - times[0]
    mask = times >= times[0] + transient_fraction * span
    tail = series[mask]
    if tail.size < 4:
        return False
    half = tail.size // 2
    m1, m2 = float(np.mean(tail[:half])), float(np.mean(tail[half:]))
    scale = max(abs(m1), abs(m2), 1e-300)
    return abs(m1 - m2) <= tolerance * scale


def fit_scaling_exponent(g_values: Sequence[float], lambda_bars: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(lambda_bar) against log(G); returns (slope, intercept)."""
    g = np.asarray(g_values, dtype=np.float64)
    lb = np.asarray(lambda_bars, dtype=np.float64)
    keep = (g > 0) & (lb > 0)
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two positive (G, lambda_bar) pairs to fit")
    x = np.log(g[keep])
    y = np.log(lb[keep])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)
