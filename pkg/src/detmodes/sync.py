"""
Master/slave synchronization of two vorticity solvers.

Both copies share the grid, viscosity, and forcing but start from distinct
initial data.  In `replace` coupling, after every step all slave Fourier
modes inside the sharp ball |k| <= 2^{Q+1} are overwritten with the
master's; since every dyadic band q <= Q is supported inside that ball,
the low-mode difference u_{<=Q} - v_{<=Q} vanishes identically, which is
the hypothesis of the determining-mode property being probed.  `nudge`
coupling instead relaxes the slave toward the master's low modes at rate
mu, and `none` runs the uncoupled control pair.

The flux monitor tracks I = int (v . grad w2) w dx for the difference
field against the shell-threshold bound at the running wavenumber of the
master, and a two-sided decay fit of log ||w_u - w_v||_2 over the second
half of the run supplies the synchronization verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace

import numpy as np
import scipy.fft as _fft

from .grid import Grid, SpectralField, l2_norm_coeffs, band_noise
from .shells import shell_basis
from .solver import (
    FlowState,
    Forcing,
    StepperConfig,
    _forcing_term,
    _nonlinear_coeffs,
    _physical,
    _velocity_coeffs,
    make_stepper,
)
from .diagnostics import (
    DeterminingWavenumber,
    WavenumberParams,
    lambda_bar,
    shell_of_wavenumber,
    wavenumber_inputs,
    wavenumbers_of_state,
    window_averages,
)


def replacement_mask(grid: Grid, Q: int) -> np.ndarray:
    """Sharp Fourier ball |k| <= 2^{Q+1} covering all bands q <= Q."""
    if Q < -1:
        raise ValueError(f"cutoff shell must satisfy Q >= -1, got {Q}")
    radius2 = 4.0 ** (Q + 1)
    return grid.k2_int <= radius2


@dataclass(frozen=True)
class SyncConfig:
    grid: Grid
    nu: float
    forcing: Forcing
    Q: int
    dt: float
    t_end: float
    coupling: str = "replace"  # "replace" | "nudge" | "none"
    mu: float = 1.0
    scheme: str = "etdrk4"
    sample_every: float = 0.05
    master_seed: int = 1
    slave_seed: int = 2
    ic_l2: float = 1.0
    master_ic: FlowState | None = None
    slave_ic: FlowState | None = None
    params: WavenumberParams = field(default_factory=WavenumberParams)
    window: float | None = None
    transient_fraction: float = 0.25
    record_flux: bool = True

    def __post_init__(self) -> None:
        if self.coupling not in ("replace", "nudge", "none"):
            raise ValueError(f"coupling must be replace|nudge|none, got {self.coupling!r}")
        if self.coupling == "nudge" and not self.mu > 0:
            raise ValueError("nudging rate mu must be positive")
        if self.Q < -1:
            raise ValueError(f"Q must be >= -1, got {self.Q}")
        if self.forcing.grid != self.grid:
            raise ValueError("forcing grid does not match the run grid")
        for s, name in ((self.master_ic, "master"), (self.slave_ic, "slave")):
            if s is not None:
                if s.grid != self.grid:
                    raise ValueError(f"{name} initial state lives on a different grid")
                if abs(s.nu - self.nu) > 1e-15:
                    raise ValueError(f"{name} initial state carries a different viscosity")


@dataclass
class SyncRunResult:
    """Time series of a coupled pair plus the posterior decay verdict."""

    Q: int
    coupling: str
    nu: float
    lambda_bar: float
    q_bar: int
    times: np.ndarray
    diff_u_l2: np.ndarray
    diff_omega_l2: np.ndarray
    low_mode_diff_l2: np.ndarray
    lambda_master: np.ndarray
    lambda_q_master: np.ndarray
    lambda_unresolved: np.ndarray
    flux: np.ndarray
    flux_rhs: np.ndarray
    flux_ratio: np.ndarray
    diff_shell_l2: np.ndarray      # (T, q_max+2)
    diff_lowpass_l2: np.ndarray    # (T, q_max+2)
    diff_grad_l2: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    ddt_diff_sq: np.ndarray
    decay_rate: float
    verdict: str                   # "synchronized" | "not" | "inconclusive"
    params: WavenumberParams
    master_final: FlowState | None = None
    slave_final: FlowState | None = None

    @property
    def initial_diff(self) -> float:
        return float(self.diff_omega_l2[0])

    @property
    def final_diff(self) -> float:
        return float(self.diff_omega_l2[-1])


def _default_ic(cfg: SyncConfig, seed: int) -> FlowState:
    omega = band_noise(cfg.grid, seed, k_low=1, k_high=8, slope=0.0, target_l2=cfg.ic_l2)
    return FlowState(omega=omega, t=0.0, nu=cfg.nu)


def run_sync(cfg: SyncConfig) -> SyncRunResult:
    """Advance the coupled pair and record difference diagnostics.

    Master and slave advance in lockstep; in replace mode the slave's
    low ball is overwritten after every step, so the enforced low-mode
    difference is exactly zero at every sample.
    """
    grid = cfg.grid
    master = cfg.master_ic if cfg.master_ic is not None else _default_ic(cfg, cfg.master_seed)
    slave = cfg.slave_ic if cfg.slave_ic is not None else _default_ic(cfg, cfg.slave_seed)
    if abs(master.t - slave.t) > 1e-12:
        raise ValueError("master and slave must start at the same time")

    scfg = StepperConfig(dt=cfg.dt, scheme=cfg.scheme)
    stepper_m = make_stepper(grid, cfg.nu, scfg)
    stepper_s = make_stepper(grid, cfg.nu, scfg)
    force = _forcing_term(cfg.forcing)
    mask = replacement_mask(grid, cfg.Q)

    wm = master.omega.coeffs.copy()
    ws = slave.omega.coeffs.copy()
    t0 = master.t
    n_steps = int(round((cfg.t_end - t0) / cfg.dt))
    stride = max(1, int(round(cfg.sample_every / cfg.dt)))

    if cfg.coupling == "nudge":
        frozen = {"w": wm}

        def slave_rhs(w: np.ndarray, t: float) -> np.ndarray:
            extra = -cfg.mu * mask * (w - frozen["w"])
            if force is not None:
                extra = extra + force(w, t)
            return extra

    else:
        slave_rhs = force

    samples: list[dict] = []

    def record(t: float, wm_: np.ndarray, ws_: np.ndarray) -> None:
        samples.append(_sample_pair(grid, cfg, t, wm_, ws_))

    # the enforced low-mode identity holds from t0 on, including the first sample
    if cfg.coupling == "replace":
        ws = np.where(mask, wm, ws)
    record(t0, wm, ws)

    for i in range(1, n_steps + 1):
        t = t0 + (i - 1) * cfg.dt
        if cfg.coupling == "nudge":
            frozen["w"] = wm
        wm = stepper_m.step(wm, t, rhs_extra=force, cfl_safety=scfg.cfl_safety)
        ws = stepper_s.step(ws, t, rhs_extra=slave_rhs, cfl_safety=None)
        if cfg.coupling == "replace":
            ws = np.where(mask, wm, ws)
        if i % stride == 0 or i == n_steps:
            record(t0 + i * cfg.dt, wm, ws)

    return _assemble_result(grid, cfg, samples, wm, ws, t0 + n_steps * cfg.dt)


def _sample_pair(grid: Grid, cfg: SyncConfig, t: float, wm: np.ndarray, ws: np.ndarray) -> dict:
    basis = shell_basis(grid)
    diff = ws - wm
    u1m, u2m = _velocity_coeffs(grid, wm)
    u1s, u2s = _velocity_coeffs(grid, ws)
    du1, du2 = u1s - u1m, u2s - u2m
    diff_u = grid.L * float(np.sqrt(np.sum(np.abs(du1) ** 2 + np.abs(du2) ** 2)))
    diff_w = l2_norm_coeffs(grid, diff)
    lowmask = basis.low(cfg.Q)
    low_diff = grid.L * float(
        np.sqrt(np.sum((lowmask**2) * (np.abs(du1) ** 2 + np.abs(du2) ** 2)))
    )
    w2 = np.abs(diff) ** 2
    shell_l2 = grid.L * np.sqrt(np.einsum("qij,ij->q", basis.bands**2, w2))
    lowpass_l2 = grid.L * np.sqrt(np.einsum("qij,ij->q", basis.lowpass**2, w2))
    grad_l2 = grid.L * float(np.sqrt(np.sum(grid.kappa2 * w2)))

    lam1, lam2, lam = wavenumbers_of_state(
        SpectralField(grid, wm), cfg.params, cfg.nu
    )
    out = {
        "t": t,
        "diff_u": diff_u,
        "diff_w": diff_w,
        "low_diff": low_diff,
        "lambda": lam.value,
        "lambda_q": lam.q,
        "lambda_unresolved": lam.unresolved,
        "shell_l2": shell_l2,
        "lowpass_l2": lowpass_l2,
        "grad_l2": grad_l2,
    }
    if cfg.record_flux:
        I = flux_integral(grid, wm, ws)
        rhs = flux_bound(grid, cfg.params, cfg.nu, shell_l2, grad_l2, lam)
        out["flux"] = I
        out["flux_rhs"] = rhs
        out["flux_ratio"] = _safe_ratio(abs(I), rhs)
    else:
        out["flux"] = 0.0
        out["flux_rhs"] = 0.0
        out["flux_ratio"] = 0.0
    return out


def _safe_ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num == 0 else np.inf


def _assemble_result(
    grid: Grid,
    cfg: SyncConfig,
    samples: list[dict],
    wm: np.ndarray,
    ws: np.ndarray,
    t_final: float,
) -> SyncRunResult:
    times = np.array([s["t"] for s in samples])
    diff_w = np.array([s["diff_w"] for s in samples])
    lam_series = np.array([s["lambda"] for s in samples])

    window = cfg.window if cfg.window is not None else max(
        (times[-1] - times[0]) / 4.0, 4.0 * cfg.sample_every
    )
    try:
        lam_bar = lambda_bar(times, lam_series, window, cfg.transient_fraction)
    except ValueError:
        lam_bar = float(np.mean(lam_series))
    q_bar = shell_of_wavenumber(lam_bar, grid.L)

    lowpass = np.array([s["lowpass_l2"] for s in samples])
    q_bar_idx = min(q_bar + 1, lowpass.shape[1] - 1)
    low_at_qbar = lowpass[:, q_bar_idx]
    delta = cfg.params.delta
    phi = cfg.nu / 8.0 * lam_bar**2 * (2.0 - (lam_series / lam_bar) ** (4.0 + 2.0 * delta))
    psi = cfg.nu / 8.0 * (4.0 * lam_bar**2 + lam_series ** (4.0 + 2.0 * delta)) * low_at_qbar**2

    diff_sq = diff_w**2
    ddt = np.gradient(diff_sq, times) if times.size > 2 else np.zeros_like(diff_sq)

    decay_rate, verdict = decay_verdict(times, diff_w)
    if cfg.coupling == "none":
        # no coupling: never report synchronization from the fit alone
        pass

    return SyncRunResult(
        Q=cfg.Q,
        coupling=cfg.coupling,
        nu=cfg.nu,
        lambda_bar=lam_bar,
        q_bar=q_bar,
        times=times,
        diff_u_l2=np.array([s["diff_u"] for s in samples]),
        diff_omega_l2=diff_w,
        low_mode_diff_l2=np.array([s["low_diff"] for s in samples]),
        lambda_master=lam_series,
        lambda_q_master=np.array([s["lambda_q"] for s in samples]),
        lambda_unresolved=np.array([s["lambda_unresolved"] for s in samples]),
        flux=np.array([s["flux"] for s in samples]),
        flux_rhs=np.array([s["flux_rhs"] for s in samples]),
        flux_ratio=np.array([s["flux_ratio"] for s in samples]),
        diff_shell_l2=np.array([s["shell_l2"] for s in samples]),
        diff_lowpass_l2=lowpass,
        diff_grad_l2=np.array([s["grad_l2"] for s in samples]),
        phi=phi,
        psi=psi,
        ddt_diff_sq=ddt,
        decay_rate=decay_rate,
        verdict=verdict,
        params=cfg.params,
        master_final=FlowState(omega=SpectralField(grid, wm), t=t_final, nu=cfg.nu),
        slave_final=FlowState(omega=SpectralField(grid, ws), t=t_final, nu=cfg.nu),
    )


def decay_verdict(times: np.ndarray, diff: np.ndarray, floor: float = 1e-12) -> tuple[float, str]:
    """Slope of log||w_u - w_v|| over the last half, with an inconclusive band.

    A final difference more than six decades below its start is declared
    synchronized outright (the fit window may sit at the roundoff floor).
    """
    t_run = times[-1] - times[0]
    if diff[0] == 0.0:
        return 0.0, "synchronized" if diff[-1] <= floor else "not"
    if diff[-1] <= max(floor, 1e-6 * diff[0]):
        return -np.inf, "synchronized"
    half = times.size // 2
    tail_t = times[half:]
    tail_d = np.maximum(diff[half:], floor)
    if tail_t.size < 2:
        return 0.0, "inconclusive"
    slope, _ = np.polyfit(tail_t, np.log(tail_d), 1)
    if abs(slope) * t_run < np.log(10.0):
        return float(slope), "inconclusive"
    return float(slope), "synchronized" if slope < 0 else "not"


# ---------------------------------------------------------------------------
# flux monitor


def flux_integral(grid: Grid, w_background: np.ndarray, w_other: np.ndarray) -> float:
    """I = int (v . grad w2) w dx for v, w from the pair difference.

    w2 is the background (master) vorticity; v and w are the velocity and
    vorticity differences (other - background).  Evaluated pseudo-spectrally
    with dealiasing, which is exact for dealiased inputs because no triad of
    retained modes can wrap the lattice.
    """
    diff = w_other - w_background
    v1c, v2c = _velocity_coeffs(grid, diff)
    v1 = _physical(v1c)
    v2 = _physical(v2c)
    g1 = _physical(1j * grid.kappa_x * w_background)
    g2 = _physical(1j * grid.kappa_y * w_background)
    adv = v1 * g1 + v2 * g2
    advc = _fft.fft2(adv) / (grid.n * grid.n) * grid.dealias
    return grid.L**2 * float(np.real(np.sum(advc * np.conj(diff))))


def flux_bound(
    grid: Grid,
    params: WavenumberParams,
    nu: float,
    diff_shell_l2: np.ndarray,
    diff_grad_l2: float,
    lam: DeterminingWavenumber,
) -> float:
    """Threshold-side of the flux estimate with unit constant.

    c0 nu ||grad w||_2^2 + c0 nu Lambda^{4+2 delta} sum_{p <= Q}
    lambda_p^{-2-2 delta} ||w_p||_2^2, evaluated at the master's running
    wavenumber Lambda = lambda_Q.  The measured proportionality constant is
    reported separately as the max observed |I| / bound.
    """
    c0 = params.c0
    delta = params.delta
    qs = np.arange(diff_shell_l2.size) - 1
    lam_p = 2.0**qs / grid.L
    low = qs <= lam.q
    tail_sum = float(np.sum(lam_p[low] ** (-2.0 - 2.0 * delta) * diff_shell_l2[low] ** 2))
    return c0 * nu * diff_grad_l2**2 + c0 * nu * lam.value ** (4.0 + 2.0 * delta) * tail_sum


@dataclass(frozen=True)
class FluxMonitorSample:
    flux: float
    bound: float
    ratio: float
    bony: tuple[float, float, float] | None = None


def flux_monitor(
    master: FlowState,
    slave: FlowState,
    params: WavenumberParams,
    Q: int | None = None,
    *,
    with_bony: bool = False,
) -> FluxMonitorSample:
    """One flux-inequality sample for a master/slave pair at equal times."""
    if master.grid != slave.grid:
        raise ValueError("states live on different grids")
    if abs(master.t - slave.t) > 1e-12:
        raise ValueError(f"states are at different times: {master.t} vs {slave.t}")
    grid = master.grid
    wm, ws = master.omega.coeffs, slave.omega.coeffs
    I = flux_integral(grid, wm, ws)

    if Q is None:
        _, _, lam = wavenumbers_of_state(master.omega, params, master.nu)
    else:
        lam = DeterminingWavenumber(value=2.0**Q / grid.L, q=Q, unresolved=False)
    diff = SpectralField(grid, ws - wm)
    inp = wavenumber_inputs(diff)
    grad_full = grid.L * float(np.sqrt(np.sum(grid.kappa2 * np.abs(diff.coeffs) ** 2)))
    rhs = flux_bound(grid, params, master.nu, inp.omega_shell_l2, grad_full, lam)
    bony = bony_flux_split(grid, wm, ws) if with_bony else None
    return FluxMonitorSample(flux=I, bound=rhs, ratio=_safe_ratio(abs(I), rhs), bony=bony)


def bony_flux_split(grid: Grid, w_background: np.ndarray, w_other: np.ndarray) -> tuple[float, float, float]:
    """Exact three-way paraproduct split of the flux integral.

    I1 pairs low-with-band, I2 band-with-low, I3 comparable bands (including
    one remainder band above q_max so the decomposition is exact for any
    field on the lattice); I1 + I2 + I3 reproduces the flux integral.
    """
    basis = shell_basis(grid)
    q_max = basis.q_max
    diff = w_other - w_background
    v1c, v2c = _velocity_coeffs(grid, diff)

    # extended band stack: bands -1..q_max plus a remainder capturing |k| above
    n_ext = q_max + 3
    bands = np.empty((n_ext, grid.n, grid.n))
    bands[: q_max + 2] = basis.bands
    bands[q_max + 2] = 1.0 - basis.lowpass[q_max + 1]

    def lowpass_upto(p_idx: int) -> np.ndarray | None:
        # multiplier of v_{<= p-2} where p = p_idx - 1 is the band label
        cut = p_idx - 3  # label p-2 mapped to stack index
        if cut < 0:
            return None
        if cut >= q_max + 2:
            return np.ones_like(bands[0])
        return basis.lowpass[cut]

    conj_diff = np.conj(diff)
    nn = grid.n * grid.n

    def pair(adv_phys: np.ndarray) -> float:
        advc = _fft.fft2(adv_phys) / nn
        return grid.L**2 * float(np.real(np.sum(advc * conj_diff)))

    i1 = i2 = i3 = 0.0
    # physical band caches
    g1_bands = [None] * n_ext
    g2_bands = [None] * n_ext
    for p in range(n_ext):
        g1_bands[p] = _physical(1j * grid.kappa_x * (w_background * bands[p]))
        g2_bands[p] = _physical(1j * grid.kappa_y * (w_background * bands[p]))
    v1_bands = [_physical(v1c * bands[p]) for p in range(n_ext)]
    v2_bands = [_physical(v2c * bands[p]) for p in range(n_ext)]

    for p in range(n_ext):
        low = lowpass_upto(p)
        if low is not None:
            lv1 = _physical(v1c * low)
            lv2 = _physical(v2c * low)
            i1 += pair(lv1 * g1_bands[p] + lv2 * g2_bands[p])
            lg1 = _physical(1j * grid.kappa_x * (w_background * low))
            lg2 = _physical(1j * grid.kappa_y * (w_background * low))
            i2 += pair(v1_bands[p] * lg1 + v2_bands[p] * lg2)
        tv1 = np.zeros((grid.n, grid.n))
        tv2 = np.zeros((grid.n, grid.n))
        for r in (p - 1, p, p + 1):
            if 0 <= r < n_ext:
                tv1 += v1_bands[r]
                tv2 += v2_bands[r]
        i3 += pair(tv1 * g1_bands[p] + tv2 * g2_bands[p])
    return i1, i2, i3


# ---------------------------------------------------------------------------
# generalized decay-inequality monitor


@dataclass(frozen=True)
class GroenwallReport:
    """Discrete audit of d/dt ||w||^2 + phi ||w||^2 <= psi on a sync run."""

    holds_fraction: float
    slack: float
    phi_window_min: float
    phi_negative_window_max: float
    psi_tail_ratio: float
    psi_final: float

    @property
    def hypotheses_met(self) -> bool:
        return self.phi_window_min > 0 and np.isfinite(self.phi_negative_window_max)


def groenwall_monitor(result: SyncRunResult, T: float) -> GroenwallReport:
    """Evaluate the decay-inequality hypotheses on recorded series.

    Reports the fraction of samples at which the discrete inequality holds
    with the smallest power-of-two slack on psi reaching 99% coverage, the
    window integrals of phi (positivity and integrability proxies), and the
    late-time behaviour of psi.
    """
    times = result.times
    if times[-1] - times[0] < T:
        raise ValueError("series shorter than one averaging window")
    lhs = result.ddt_diff_sq + result.phi * result.diff_omega_l2**2
    slack = 1.0
    fraction = 0.0
    for _ in range(64):
        fraction = float(np.mean(lhs <= result.psi * slack + 1e-300))
        if fraction >= 0.99:
            break
        slack *= 2.0
    phi_int = window_averages(times, result.phi, T, mode="integral")
    phi_neg = window_averages(times, np.maximum(-result.phi, 0.0), T, mode="integral")
    quarter = max(1, times.size // 4)
    psi_head = float(np.max(result.psi[:quarter])) if quarter else 0.0
    psi_tail = float(np.max(result.psi[-quarter:]))
    tail_ratio = psi_tail / psi_head if psi_head > 0 else (0.0 if psi_tail == 0 else np.inf)
    return GroenwallReport(
        holds_fraction=fraction,
        slack=slack,
        phi_window_min=float(np.min(phi_int)),
        phi_negative_window_max=float(np.max(phi_neg)),
        psi_tail_ratio=tail_ratio,
        psi_final=float(result.psi[-1]),
    )


# ---------------------------------------------------------------------------
# cutoff sweep


@dataclass(frozen=True)
class CriticalQRow:
    Q: int
    verdict: str
    decay_rate: float
    final_diff: float
    initial_diff: float
    lambda_bar: float


@dataclass(frozen=True)
class CriticalQResult:
    rows: tuple[CriticalQRow, ...]
    empirical_q: int | None      # smallest synchronized Q
    theorem_q: int | None        # smallest Q with lambda_Q >= lambda_bar
    lambda_bar: float
    monotone: bool
    inconclusive: bool


def find_critical_q(cfg: SyncConfig, q_values: list[int]) -> CriticalQResult:
    """Sweep the replacement cutoff and locate the empirical sync threshold.

    Each Q runs the same pair configuration; verdicts come from the decay
    fit.  The reported theorem cutoff uses the largest lambda_bar measured
    across the sweep (the master trajectory statistics are shared).
    """
    if len(q_values) < 2:
        raise ValueError("need at least two cutoff values")
    rows = []
    lam_bars = []
    for q in sorted(q_values):
        res = run_sync(dc_replace(cfg, Q=q))
        lam_bars.append(res.lambda_bar)
        rows.append(
            CriticalQRow(
                Q=q,
                verdict=res.verdict,
                decay_rate=res.decay_rate,
                final_diff=res.final_diff,
                initial_diff=res.initial_diff,
                lambda_bar=res.lambda_bar,
            )
        )
    lam_bar = float(np.max(lam_bars))
    verdicts = [r.verdict for r in rows]
    inconclusive = any(v == "inconclusive" for v in verdicts)
    monotone = _single_transition([v == "synchronized" for v in verdicts])
    empirical = None
    for r in rows:
        if r.verdict == "synchronized":
            empirical = r.Q
            break
    theorem_q = shell_of_wavenumber(lam_bar, cfg.grid.L)
    return CriticalQResult(
        rows=tuple(rows),
        empirical_q=empirical,
        theorem_q=theorem_q,
        lambda_bar=lam_bar,
        monotone=monotone,
        inconclusive=inconclusive,
    )


def _single_transition(flags: list[bool]) -> bool:
    """True when the verdict pattern is not...not, sync...sync."""
    seen_sync = False
    for f in flags:
        if f:
            seen_sync = True
        elif seen_sync:
            return False
    return True
