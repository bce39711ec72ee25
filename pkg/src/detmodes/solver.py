"""
Pseudo-spectral time integration of the 2D vorticity equation

    w_t + u . grad w = nu * Laplacian(w) + g,     u = Biot-Savart(w),

on the periodic square, where g is the curl of a zero-mean body force.
The velocity is recovered through the streamfunction (u = perp-grad psi,
Laplacian(psi) = w), which keeps u divergence-free by construction and
eliminates pressure.  The advection term is evaluated pseudo-spectrally
with circular 2/3-rule dealiasing, which makes the discrete enstrophy
transfer exactly neutral (no triad |k1|,|k2|,|k3| <= n/3 can alias onto
the lattice).

Two steppers are provided: ETD-RK4 (Cox-Matthews coefficients via the
Kassam-Trefethen contour quadrature; the viscous factor is exact) and a
Crank-Nicolson / Adams-Bashforth-2 IMEX scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as _fft

from .grid import (
    Grid,
    SpectralField,
    hermitian_defect,
    l2_norm,
    l2_norm_coeffs,
)


class CflError(RuntimeError):
    """Step rejected: dt exceeds the advective CFL bound."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(
            f"time step {dt:.3e} exceeds CFL bound {dt_max:.3e}; "
            f"retry with dt <= {dt_max:.3e}"
        )
        self.suggested_dt = dt_max


@dataclass(frozen=True, eq=False)
class FlowState:
    """Immutable snapshot of the vorticity field at one time."""

    omega: SpectralField
    t: float
    nu: float

    def __post_init__(self) -> None:
        if abs(self.omega.mean) > 1e-13:
            raise ValueError(f"vorticity must have zero mean, got c(0) = {self.omega.mean}")
        if self.nu < 0:
            raise ValueError(f"viscosity must be nonnegative, got {self.nu}")

    @property
    def grid(self) -> Grid:
        return self.omega.grid


@dataclass(frozen=True)
class Forcing:
    """Curl of the body force: a steady spectral field or a time callback.

    `curl_f` holds the steady field; `callback(t)` returns coefficient
    arrays for time-dependent forcing.  `shell` records the dyadic band the
    force occupies when known.
    """

    grid: Grid
    kind: str = "steady"  # "steady" | "callback"
    curl_f: SpectralField | None = None
    callback: Callable[[float], np.ndarray] | None = None
    shell: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("steady", "callback"):
            raise ValueError(f"forcing kind must be 'steady' or 'callback', got {self.kind!r}")
        if self.kind == "steady":
            if self.curl_f is None:
                raise ValueError("steady forcing requires curl_f")
            if abs(self.curl_f.mean) > 1e-13:
                raise ValueError("forcing must have zero mean")
        elif self.callback is None:
            raise ValueError("callback forcing requires a callback")

    def curl_at(self, t: float) -> np.ndarray:
        if self.kind == "steady":
            return self.curl_f.coeffs
        return self.callback(t)

    def velocity_force_l2(self, t: float = 0.0) -> float:
        """||f||_2 of the divergence-free force recovered from its curl."""
        c = self.curl_at(t)
        g = self.grid
        amp2 = np.abs(c) ** 2 * g.inv_kappa2
        return g.L * float(np.sqrt(np.sum(amp2)))


def zero_forcing(grid: Grid) -> Forcing:
    from .grid import zero_field

    return Forcing(grid=grid, kind="steady", curl_f=zero_field(grid), shell=None)


def kolmogorov_forcing(grid: Grid, amplitude: float, k_f: int = 4) -> Forcing:
    """Steady single-mode forcing with curl f = amplitude * sin(k_f * kappa0 * y)."""
    c = np.zeros((grid.n, grid.n), dtype=np.complex128)
    c[0, k_f % grid.n] = -0.5j * amplitude
    c[0, (-k_f) % grid.n] = 0.5j * amplitude
    shell = max(0, int(np.floor(np.log2(k_f))))
    return Forcing(grid=grid, kind="steady", curl_f=SpectralField(grid, c), shell=shell)


def kolmogorov_amplitude_for_grashof(grid: Grid, nu: float, grashof: float, k_f: int = 4) -> float:
    """Amplitude making the Kolmogorov force reach a target Grashof number.

    For curl f = A sin(k_f kappa0 y): ||f||_2 = A L / (sqrt(2) kappa_f), and
    G = ||f||_2 / (nu^2 kappa0^2).
    """
    kappa_f = k_f * grid.kappa0
    return grashof * nu**2 * grid.kappa0**2 * np.sqrt(2.0) * kappa_f / grid.L


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "etdrk4"  # "etdrk4" | "cnab2"
    dealias: bool = True
    cfl_safety: float = 0.5

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in ("etdrk4", "cnab2"):
            raise ValueError(f"scheme must be 'etdrk4' or 'cnab2', got {self.scheme!r}")


def velocity_from_vorticity(omega: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Biot-Savart inversion on the torus: divergence-free u with curl u = omega."""
    if abs(omega.mean) > 1e-13:
        raise ValueError("Biot-Savart requires zero-mean vorticity")
    u1, u2 = _velocity_coeffs(omega.grid, omega.coeffs)
    return SpectralField(omega.grid, u1), SpectralField(omega.grid, u2)


def _velocity_coeffs(grid: Grid, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    psi = -w * grid.inv_kappa2
    u1 = -1j * grid.kappa_y * psi
    u2 = 1j * grid.kappa_x * psi
    return u1, u2


def _physical(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    return np.real(_fft.ifft2(c)) * (n * n)


def _nonlinear_coeffs(
    grid: Grid, w: np.ndarray, dealias: bool = True
) -> tuple[np.ndarray, float]:
    """Dealiased coefficients of -(u . grad w), plus max |u| for the CFL check."""
    u1c, u2c = _velocity_coeffs(grid, w)
    u1 = _physical(u1c)
    u2 = _physical(u2c)
    wx = _physical(1j * grid.kappa_x * w)
    wy = _physical(1j * grid.kappa_y * w)
    adv = u1 * wx + u2 * wy
    nl = -_fft.fft2(adv) / (grid.n * grid.n)
    if dealias:
        nl = nl * grid.dealias
    nl[0, 0] = 0.0
    umax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
    return nl, umax


def nonlinear_term(omega: SpectralField) -> SpectralField:
    """Dealiased spectral advection term -(u . grad w); zero-mean output."""
    if abs(omega.mean) > 1e-13:
        raise ValueError("advection term requires zero-mean vorticity")
    nl, _ = _nonlinear_coeffs(omega.grid, omega.coeffs)
    return SpectralField(omega.grid, nl)


class Etdrk4Stepper:
    """Exponential time differencing RK4 with exact viscous factor.

    Nonlinear-stage coefficients follow the contour-quadrature recipe:
    the phi functions are averaged over a unit circle around each h*L
    eigenvalue, which handles the removable singularity at k = 0.
    """

    scheme = "etdrk4"

    def __init__(self, grid: Grid, nu: float, dt: float, n_contour: int = 32):
        self.grid = grid
        self.nu = nu
        self.dt = dt
        lin = -nu * grid.kappa2
        h = dt
        self.exp_full = np.exp(h * lin)
        self.exp_half = np.exp(0.5 * h * lin)
        roots = np.exp(1j * np.pi * (np.arange(n_contour) + 0.5) / n_contour)
        lr = h * lin[..., None] + roots
        lr2 = lr * lr
        lr3 = lr2 * lr
        elr = np.exp(lr)
        self.f0 = h * np.real(np.mean((np.exp(lr / 2.0) - 1.0) / lr, axis=-1))
        self.f1 = h * np.real(np.mean((-4.0 - lr + elr * (4.0 - 3.0 * lr + lr2)) / lr3, axis=-1))
        self.f2 = h * np.real(np.mean((2.0 + lr + elr * (lr - 2.0)) / lr3, axis=-1))
        self.f3 = h * np.real(np.mean((-4.0 - 3.0 * lr - lr2 + elr * (4.0 - lr)) / lr3, axis=-1))

    def step(
        self,
        w: np.ndarray,
        t: float,
        rhs_extra: Callable[[np.ndarray, float], np.ndarray] | None = None,
        cfl_safety: float | None = 0.5,
    ) -> np.ndarray:
        grid = self.grid
        h = self.dt

        def nonlin(wc: np.ndarray, tc: float, check: bool) -> np.ndarray:
            nl, umax = _nonlinear_coeffs(grid, wc)
            if check and cfl_safety is not None and umax > 0:
                dt_max = cfl_safety * grid.dx / umax
                if h > dt_max:
                    raise CflError(h, dt_max)
            if rhs_extra is not None:
                nl = nl + rhs_extra(wc, tc)
            return nl

        n0 = nonlin(w, t, check=True)
        a = self.exp_half * w + self.f0 * n0
        na = nonlin(a, t + h / 2.0, check=False)
        b = self.exp_half * w + self.f0 * na
        nb = nonlin(b, t + h / 2.0, check=False)
        c = self.exp_half * a + self.f0 * (2.0 * nb - n0)
        nc = nonlin(c, t + h, check=False)
        return self.exp_full * w + self.f1 * n0 + 2.0 * self.f2 * (na + nb) + self.f3 * nc


class Cnab2Stepper:
    """Crank-Nicolson viscosity with Adams-Bashforth-2 advection.

    The first step falls back to an explicit-Euler treatment of the
    advection term; the stepper keeps the previous nonlinear evaluation
    as internal state, so one instance drives one trajectory.
    """

    scheme = "cnab2"

    def __init__(self, grid: Grid, nu: float, dt: float):
        self.grid = grid
        self.nu = nu
        self.dt = dt
        a = 0.5 * dt * nu * grid.kappa2
        self.num = 1.0 - a
        self.inv_den = 1.0 / (1.0 + a)
        self._prev_nl: np.ndarray | None = None

    def step(
        self,
        w: np.ndarray,
        t: float,
        rhs_extra: Callable[[np.ndarray, float], np.ndarray] | None = None,
        cfl_safety: float | None = 0.5,
    ) -> np.ndarray:
        nl, umax = _nonlinear_coeffs(self.grid, w)
        if cfl_safety is not None and umax > 0:
            dt_max = cfl_safety * self.grid.dx / umax
            if self.dt > dt_max:
                raise CflError(self.dt, dt_max)
        if rhs_extra is not None:
            nl = nl + rhs_extra(w, t)
        prev = nl if self._prev_nl is None else self._prev_nl
        explicit = self.dt * (1.5 * nl - 0.5 * prev)
        self._prev_nl = nl
        return (self.num * w + explicit) * self.inv_den


def make_stepper(grid: Grid, nu: float, cfg: StepperConfig):
    if cfg.scheme == "etdrk4":
        return Etdrk4Stepper(grid, nu, cfg.dt)
    return Cnab2Stepper(grid, nu, cfg.dt)


def step(state: FlowState, forcing: Forcing, cfg: StepperConfig) -> FlowState:
    """Advance one time step; preserves zero mean and Hermitian symmetry."""
    stepper = make_stepper(state.grid, state.nu, cfg)
    extra = _forcing_term(forcing)
    w = stepper.step(state.omega.coeffs, state.t, rhs_extra=extra, cfl_safety=cfg.cfl_safety)
    return FlowState(omega=SpectralField(state.grid, w), t=state.t + cfg.dt, nu=state.nu)


def _forcing_term(forcing: Forcing | None):
    if forcing is None:
        return None
    if forcing.kind == "steady":
        c = forcing.curl_f.coeffs

        def steady(_w: np.ndarray, _t: float) -> np.ndarray:
            return c

        return steady

    def timed(_w: np.ndarray, t: float) -> np.ndarray:
        return forcing.callback(t)

    return timed


def integrate(
    state: FlowState,
    forcing: Forcing | None,
    cfg: StepperConfig,
    t_end: float,
    *,
    sample_every: float | None = None,
    on_sample: Callable[[FlowState], None] | None = None,
    include_initial: bool = True,
) -> FlowState:
    """March to t_end, emitting snapshots every `sample_every` time units.

    t_end - t must be an integer number of steps (within 1e-9 relative);
    sampling cadence is rounded to the nearest step multiple.
    """
    span = t_end - state.t
    if span < 0:
        raise ValueError("t_end precedes the current state time")
    n_steps = int(round(span / cfg.dt))
    if abs(n_steps * cfg.dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(
            f"span {span} is not an integer number of steps of dt={cfg.dt}"
        )
    stride = 1
    if sample_every is not None:
        stride = max(1, int(round(sample_every / cfg.dt)))

    stepper = make_stepper(state.grid, state.nu, cfg)
    extra = _forcing_term(forcing)
    w = state.omega.coeffs
    t = state.t
    if include_initial and on_sample is not None:
        on_sample(state)
    for i in range(1, n_steps + 1):
        w = stepper.step(w, t, rhs_extra=extra, cfl_safety=cfg.cfl_safety)
        t = state.t + i * cfg.dt
        if on_sample is not None and (i % stride == 0 or i == n_steps):
            on_sample(FlowState(omega=SpectralField(state.grid, w), t=t, nu=state.nu))
    return FlowState(omega=SpectralField(state.grid, w), t=t, nu=state.nu)


def taylor_green_state(grid: Grid, nu: float, amplitude: float = 2.0, t: float = 0.0) -> FlowState:
    """Vorticity amplitude * sin(kappa0 x) sin(kappa0 y): steady Euler pattern."""
    c = np.zeros((grid.n, grid.n), dtype=np.complex128)
    # amplitude * sin X sin Y = -a/4 e^{i(X+Y)} + a/4 e^{i(X-Y)} + c.c.
    a = amplitude / 4.0
    c[1, 1] = -a
    c[1, grid.n - 1] = a
    c[grid.n - 1, 1] = a
    c[grid.n - 1, grid.n - 1] = -a
    return FlowState(omega=SpectralField(grid, c), t=t, nu=nu)


def taylor_green_exact(grid: Grid, nu: float, t: float, amplitude: float = 2.0) -> SpectralField:
    decay = np.exp(-2.0 * nu * grid.kappa0**2 * t)
    return taylor_green_state(grid, nu, amplitude * decay).omega


def energy(state: FlowState) -> float:
    """Kinetic energy norm ||u||_2^2 recovered from the vorticity."""
    g = state.grid
    return g.L ** 2 * float(np.sum(np.abs(state.omega.coeffs) ** 2 * g.inv_kappa2))


def enstrophy(state: FlowState) -> float:
    """||w||_2^2."""
    return l2_norm(state.omega) ** 2


def palinstrophy(state: FlowState) -> float:
    """||grad w||_2^2, equal to ||Laplacian u||_2^2 for divergence-free u."""
    g = state.grid
    return g.L ** 2 * float(np.sum(g.kappa2 * np.abs(state.omega.coeffs) ** 2))


def forcing_enstrophy_input(state: FlowState, forcing: Forcing) -> float:
    """Enstrophy production rate (curl f, w)."""
    g = state.grid
    c = forcing.curl_at(state.t)
    return g.L ** 2 * float(np.real(np.sum(c * np.conj(state.omega.coeffs))))


def enstrophy_balance_residual(history: Sequence[FlowState], forcing: Forcing | None) -> float:
    """Normalized defect of the enstrophy budget over a stored trajectory.

    Integrates the dissipation and production terms by the trapezoid rule
    over the sampled history and compares with the change of (1/2)||w||_2^2.
    """
    if len(history) < 2:
        raise ValueError("need at least two states to audit the enstrophy balance")
    g = history[0].grid
    nu = history[0].nu
    for s in history[1:]:
        if s.grid != g:
            raise ValueError("history mixes grids")
    times = np.array([s.t for s in history])
    palin = np.array([palinstrophy(s) for s in history])
    if forcing is None:
        work = np.zeros_like(times)
    else:
        work = np.array([forcing_enstrophy_input(s, forcing) for s in history])
    dissipated = float(np.trapezoid(palin, times))
    injected = float(np.trapezoid(work, times))
    e0 = 0.5 * enstrophy(history[0])
    e1 = 0.5 * enstrophy(history[-1])
    return abs(e1 - e0 + nu * dissipated - injected) / max(1.0, e0)


def hermitian_drift(state: FlowState) -> float:
    """Symmetry defect of the current coefficients (diagnostic)."""
    return hermitian_defect(state.omega.coeffs)


def enstrophy_neutrality(state: FlowState) -> float:
    """Normalized advective enstrophy transfer |(u.grad w, w)| (should vanish)."""
    g = state.grid
    nl, _ = _nonlinear_coeffs(g, state.omega.coeffs)
    transfer = g.L ** 2 * float(np.real(np.sum(nl * np.conj(state.omega.coeffs))))
    gradw = np.sqrt(palinstrophy(state))
    u1c, u2c = _velocity_coeffs(g, state.omega.coeffs)
    u_l2 = g.L * float(np.sqrt(np.sum(np.abs(u1c) ** 2 + np.abs(u2c) ** 2)))
    winf = float(np.max(np.abs(_physical(state.omega.coeffs))))
    return abs(transfer) / (u_l2 * gradw * winf + 1e-300)
