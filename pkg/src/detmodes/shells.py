"""
Dyadic frequency shells on the integer wavevector lattice.

The shell multipliers derive from a smooth radial cutoff chi with plateau
chi(xi) = 1 for |xi| <= 3/4 and chi(xi) = 0 for |xi| >= 1, realized through
the standard C-infinity step h(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) on
the ramp 3/4 <= |xi| <= 1.  Band profiles are

    phi_q(k) = chi(|k| / 2^{q+1}) - chi(|k| / 2^q)   (q >= 0),
    phi_{-1}(k) = chi(|k|),

applied directly to the integer lattice index k, so band q covers integer
radii (3/4) 2^q < |k| < 2^{q+1} and carries the physical label
lambda_q = 2^q / L.  Because the band stack is built by differencing one
cached chi stack, the partition of unity

    sum_{q=-1}^{q_max} phi_q(k) = chi(|k| / 2^{q_max+1})

telescopes exactly in floating point and equals 1 on every dealiased mode
(|k| <= n/3 < (3/4) 2^{q_max+1}).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, SpectralField, _physical, l2_norm_coeffs


def smooth_step(t: np.ndarray | float) -> np.ndarray:
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    ramp = (t > 0.0) & (t < 1.0)
    tr = t[ramp]
    with np.errstate(over="ignore"):
        a = np.exp(-1.0 / tr)
        b = np.exp(-1.0 / (1.0 - tr))
    out[ramp] = a / (a + b)
    return out


def chi_profile(xi: np.ndarray | float) -> np.ndarray:
    """Radial cutoff: 1 on |xi| <= 3/4, 0 on |xi| >= 1, smooth monotone ramp between."""
    xi = np.abs(np.asarray(xi, dtype=np.float64))
    return 1.0 - smooth_step(4.0 * xi - 3.0)


def band_profile(xi: np.ndarray | float) -> np.ndarray:
    """Annular bump phi(xi) = chi(xi/2) - chi(xi)."""
    xi = np.asarray(xi, dtype=np.float64)
    return chi_profile(xi / 2.0) - chi_profile(xi)


@dataclass(frozen=True)
class ShellBasis:
    """Cached shell multipliers for one grid.

    bands[i] is the multiplier of shell q = i - 1 for q = -1 .. q_max;
    lowpass[i] is the multiplier of the cumulative projection onto shells
    <= q = i - 1, i.e. chi(|k| / 2^q+1), exact telescoped sum of the bands.
    """

    grid: Grid
    bands: np.ndarray      # (q_max + 2, n, n)
    lowpass: np.ndarray    # (q_max + 2, n, n)

    @property
    def q_max(self) -> int:
        return self.grid.q_max

    def band(self, q: int) -> np.ndarray:
        if not -1 <= q <= self.q_max:
            raise IndexError(f"shell index must satisfy -1 <= q <= {self.q_max}, got {q}")
        return self.bands[q + 1]

    def low(self, Q: int) -> np.ndarray:
        """Multiplier of the projection onto shells <= Q (any Q >= -1)."""
        if Q < -1:
            raise IndexError(f"cutoff must satisfy Q >= -1, got {Q}")
        if Q >= self.q_max:
            # chi plateau covers the whole lattice once 2^{Q+1} * 3/4 >= n/sqrt(2)
            scale = 2.0 ** (Q + 1)
            return chi_profile(np.sqrt(self.grid.k2_int.astype(np.float64)) / scale)
        return self.lowpass[Q + 1]


@lru_cache(maxsize=8)
def shell_basis(grid: Grid) -> ShellBasis:
    r = np.sqrt(grid.k2_int.astype(np.float64))
    q_max = grid.q_max
    # chi stack: chi(|k| / 2^m) for m = 0 .. q_max + 1
    stack = np.empty((q_max + 2, grid.n, grid.n))
    for m in range(q_max + 2):
        stack[m] = chi_profile(r / 2.0**m)
    bands = np.empty_like(stack)
    bands[0] = stack[0]
    for q in range(q_max + 1):
        bands[q + 1] = stack[q + 1] - stack[q]
    lowpass = stack  # lowpass through shell q is chi(|k| / 2^{q+1})
    bands.flags.writeable = False
    lowpass.flags.writeable = False
    return ShellBasis(grid=grid, bands=bands, lowpass=lowpass)


def project_shell(f: SpectralField, q: int) -> SpectralField:
    """Shell component u_q: coefficients multiplied by phi_q."""
    basis = shell_basis(f.grid)
    return SpectralField(f.grid, f.coeffs * basis.band(q))


def project_low(f: SpectralField, Q: int) -> SpectralField:
    """Cumulative low projection u_{<=Q} = sum_{q <= Q} u_q."""
    basis = shell_basis(f.grid)
    return SpectralField(f.grid, f.coeffs * basis.low(Q))


@dataclass(frozen=True)
class ShellDecomposition:
    """All shell components of a field, q = -1 .. q_max."""

    field: SpectralField
    bands: tuple[SpectralField, ...]

    @property
    def q_max(self) -> int:
        return len(self.bands) - 2

    def band(self, q: int) -> SpectralField:
        return self.bands[q + 1]

    def reconstruct(self) -> SpectralField:
        total = np.zeros_like(self.field.coeffs)
        for b in self.bands:
            total = total + b.coeffs
        return SpectralField(self.field.grid, total)


def decompose(f: SpectralField) -> ShellDecomposition:
    basis = shell_basis(f.grid)
    bands = tuple(
        SpectralField(f.grid, f.coeffs * basis.bands[i]) for i in range(basis.q_max + 2)
    )
    return ShellDecomposition(field=f, bands=bands)


def shell_norms(f: SpectralField, p: float) -> np.ndarray:
    """Per-shell norms ||u_q||_p for q = -1 .. q_max (entry i is shell i-1).

    p = 2 uses Parseval on the band coefficients; p = inf takes the max of
    the band's physical samples on the collocation grid.
    """
    basis = shell_basis(f.grid)
    if p == 2:
        w = np.abs(f.coeffs) ** 2
        return f.grid.L * np.sqrt(np.einsum("qij,ij->q", basis.bands**2, w))
    if p == np.inf:
        out = np.empty(basis.q_max + 2)
        for i in range(basis.q_max + 2):
            out[i] = np.max(np.abs(_physical(f.coeffs * basis.bands[i])))
        return out
    raise ValueError(f"unsupported Lebesgue exponent {p}; use 2 or inf")


def lowpass_l2_norms(f: SpectralField) -> np.ndarray:
    """||u_{<=q}||_2 for q = -1 .. q_max (entry i is cutoff q = i-1)."""
    basis = shell_basis(f.grid)
    w = np.abs(f.coeffs) ** 2
    return f.grid.L * np.sqrt(np.einsum("qij,ij->q", basis.lowpass**2, w))


def bernstein_ratio(f: SpectralField, q: int, r: float, s: float) -> float:
    """Observed constant in the shell interpolation bound.

    Returns ||u_q||_r / (lambda_q^{2(1/s - 1/r)} ||u_q||_s) in dimension two;
    the supremum of this ratio over band-limited fields estimates the
    constant relating L^s and L^r norms on one shell.
    """
    if not (1 <= s <= r):
        raise ValueError(f"exponents must satisfy 1 <= s <= r, got s={s}, r={r}")
    band = project_shell(f, q)
    norm_r = _band_norm(band, r)
    norm_s = _band_norm(band, s)
    if norm_s == 0.0:
        raise ZeroDivisionError(f"shell {q} carries no energy; ratio undefined")
    lam = f.grid.shell_wavenumber(q)
    exponent = 2.0 * (1.0 / s - (0.0 if r == np.inf else 1.0 / r))
    return norm_r / (lam**exponent * norm_s)


def _band_norm(band: SpectralField, p: float) -> float:
    if p == 2:
        return l2_norm_coeffs(band.grid, band.coeffs)
    if p == np.inf:
        return float(np.max(np.abs(_physical(band.coeffs))))
    raise ValueError(f"unsupported Lebesgue exponent {p}; use 2 or inf")


@dataclass(frozen=True)
class BernsteinCalibration:
    """Result of the empirical sweep for the shell sup-norm constant.

    c_b is the constant in ||u_q||_inf^2 <= c_b lambda_q^2 ||u_q||_2^2,
    i.e. the square of the largest observed ratio.
    """

    c_b: float
    max_ratio: float
    per_shell_max: dict[int, float]
    n_samples: int


def phase_aligned_band(grid: Grid, q: int) -> SpectralField:
    """All band modes at equal positive amplitude: near-extremal sup norm."""
    basis = shell_basis(grid)
    return SpectralField(grid, basis.band(q).astype(np.complex128))


def calibrate_bernstein(
    grid: Grid,
    seed: int = 0,
    n_samples: int = 100,
    shells: tuple[int, ...] | None = None,
) -> BernsteinCalibration:
    """Monte-Carlo sweep of random band fields, plus the aligned extremizer.

    The returned constant is grid-cached by callers; it depends only on the
    cutoff profile, not on resolution, up to collocation sampling error.
    """
    from .grid import random_hermitian_field

    if shells is None:
        shells = tuple(q for q in range(2, 7) if q <= grid.q_max)
    if not shells:
        shells = (grid.q_max,)
    rng = np.random.default_rng(seed)
    per_shell: dict[int, float] = {}
    for q in shells:
        best = bernstein_ratio(phase_aligned_band(grid, q), q, np.inf, 2)
        for _ in range(n_samples):
            f = random_hermitian_field(grid, rng)
            best = max(best, bernstein_ratio(f, q, np.inf, 2))
        per_shell[q] = best
    max_ratio = max(per_shell.values())
    return BernsteinCalibration(
        c_b=max_ratio**2,
        max_ratio=max_ratio,
        per_shell_max=per_shell,
        n_samples=n_samples,
    )
