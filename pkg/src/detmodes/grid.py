"""
Spectral fields on a square periodic domain.

A real scalar field on [0, L]^2 is represented by its complex Fourier
coefficients c(k) on the integer wavevector lattice k in {-n/2, ..., n/2-1}^2,
stored in the standard FFT layout:

    f(x) = sum_k c(k) exp(i (2*pi/L) k . x)

Physical wavenumbers are kappa = (2*pi/L) k.  Norms follow the torus-integral
convention, so Parseval reads

    ||f||_2^2 = integral |f|^2 dx = L^2 sum_k |c(k)|^2,

which matches the quadrature (L/n)^2 sum over grid values.  Real fields
require Hermitian symmetry c(-k) = conj(c(k)); vorticity and forcing fields
additionally require zero mean, c(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft


class SymmetryError(ValueError):
    """Raised when coefficients are not Hermitian-symmetric (field not real)."""


@dataclass(frozen=True)
class Grid:
    """Square periodic grid: n points per side (power of two) on [0, L]^2."""

    n: int
    L: float

    def __post_init__(self) -> None:
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two with n >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        kx, ky = np.meshgrid(k1, k1, indexing="ij")
        k2_int = kx * kx + ky * ky
        scale = 2.0 * np.pi / self.L
        kappa_x = scale * kx
        kappa_y = scale * ky
        kappa2 = (scale * scale) * k2_int
        inv_kappa2 = np.zeros_like(kappa2)
        nz = k2_int > 0
        inv_kappa2[nz] = 1.0 / kappa2[nz]
        # circular 2/3 rule: keep |k| <= n/3 (exact in integer arithmetic)
        dealias = 9 * k2_int <= self.n * self.n

        for name, arr in (
            ("kx", kx),
            ("ky", ky),
            ("k2_int", k2_int),
            ("kappa_x", kappa_x),
            ("kappa_y", kappa_y),
            ("kappa2", kappa2),
            ("inv_kappa2", inv_kappa2),
            ("dealias", dealias),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def kappa0(self) -> float:
        """Smallest physical wavenumber 2*pi/L."""
        return 2.0 * np.pi / self.L

    @property
    def q_max(self) -> int:
        """Largest dyadic shell whose support meets the dealiased ball.

        Equals floor(log2(n/3)); for n = 2^j this is j - 2.
        """
        return self.n.bit_length() - 3

    def shell_wavenumber(self, q: int) -> float:
        """Dyadic shell label lambda_q = 2^q / L."""
        return 2.0**q / self.L

    @property
    def dx(self) -> float:
        return self.L / self.n

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical mesh (x, y), each shaped (n, n), x varying on axis 0."""
        x1 = np.arange(self.n) * self.dx
        return np.meshgrid(x1, x1, indexing="ij")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients of a real scalar field on a Grid.

    The coefficient array is copied and frozen at construction; fields are
    immutable snapshots, safe to share between threads.  Compared by
    identity (value comparison of coefficient arrays is up to the caller).
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"coefficient array must be {(self.grid.n, self.grid.n)}, got {c.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[0, 0])


def _conjugate_flip(coeffs: np.ndarray) -> np.ndarray:
    """conj(c(-k)) in the same FFT layout."""
    n = coeffs.shape[0]
    idx = (-np.arange(n)) % n
    return np.conj(coeffs[np.ix_(idx, idx)])


def hermitian_defect(coeffs: np.ndarray) -> float:
    """Max-norm deviation from c(-k) = conj(c(k))."""
    return float(np.max(np.abs(coeffs - _conjugate_flip(coeffs))))


def require_hermitian(field: SpectralField, tol: float = 1e-12) -> None:
    """Raise SymmetryError unless the field is Hermitian within tol (relative)."""
    scale = max(1.0, float(np.max(np.abs(field.coeffs))))
    defect = hermitian_defect(field.coeffs)
    if defect > tol * scale:
        raise SymmetryError(
            f"coefficients violate Hermitian symmetry: defect {defect:.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )


def hermitize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian subspace: (c(k) + conj(c(-k))) / 2.

    The result satisfies c(-k) = conj(c(k)) exactly in floating point.
    """
    return 0.5 * (coeffs + _conjugate_flip(coeffs))


def _physical(coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform without symmetry validation (internal fast path)."""
    n = coeffs.shape[0]
    return np.real(_fft.ifft2(coeffs)) * (n * n)


def to_physical(field: SpectralField, tol: float = 1e-12) -> np.ndarray:
    """Real grid samples of the field; raises SymmetryError on non-real input."""
    require_hermitian(field, tol)
    return _physical(field.coeffs)


def to_spectral(grid: Grid, values: np.ndarray) -> SpectralField:
    """Fourier coefficients of real grid samples (inverse of to_physical)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.n, grid.n):
        raise ValueError(f"expected shape {(grid.n, grid.n)}, got {values.shape}")
    return SpectralField(grid, _fft.fft2(values) / (grid.n * grid.n))


def l2_norm(field: SpectralField) -> float:
    """Torus L^2 norm via Parseval."""
    return field.grid.L * float(np.linalg.norm(field.coeffs))


def l2_norm_coeffs(grid: Grid, coeffs: np.ndarray) -> float:
    return grid.L * float(np.linalg.norm(coeffs))


def linf_norm(field: SpectralField) -> float:
    """Max over the collocation grid of |f|; no super-resolution."""
    return float(np.max(np.abs(_physical(field.coeffs))))


def gradient_l2_norm(field: SpectralField) -> float:
    """||grad f||_2 computed spectrally."""
    g = field.grid
    return g.L * float(np.sqrt(np.sum(g.kappa2 * np.abs(field.coeffs) ** 2)))


def inner_product(a: SpectralField, b: SpectralField) -> float:
    """Torus L^2 inner product of two real fields."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return a.grid.L ** 2 * float(np.real(np.sum(a.coeffs * np.conj(b.coeffs))))


def zero_field(grid: Grid) -> SpectralField:
    return SpectralField(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))


def single_mode(grid: Grid, k: tuple[int, int], amplitude: complex) -> SpectralField:
    """Field with coefficient `amplitude` at k and the conjugate at -k."""
    c = np.zeros((grid.n, grid.n), dtype=np.complex128)
    i, j = k[0] % grid.n, k[1] % grid.n
    c[i, j] = amplitude
    ni, nj = (-k[0]) % grid.n, (-k[1]) % grid.n
    if (ni, nj) != (i, j):
        c[ni, nj] = np.conj(amplitude)
    else:
        c[i, j] = np.real(amplitude)
    return SpectralField(grid, c)


def random_hermitian_field(
    grid: Grid,
    rng: np.random.Generator,
    *,
    dealiased: bool = True,
    zero_mean: bool = True,
) -> SpectralField:
    """Gaussian random field, Hermitian by construction."""
    z = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    c = hermitize(z)
    if dealiased:
        c = c * grid.dealias
    if zero_mean:
        c[0, 0] = 0.0
    return SpectralField(grid, c)


def band_noise(
    grid: Grid,
    seed: int,
    *,
    k_low: int = 1,
    k_high: int = 8,
    slope: float = 0.0,
    target_l2: float = 1.0,
) -> SpectralField:
    """Seeded band-limited noise with |c(k)| ~ |k|^(slope/2) on k_low <= |k| <= k_high.

    Used for reproducible distinct initial vorticity fields.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    c = hermitize(z)
    r2 = grid.k2_int.astype(np.float64)
    mask = (r2 >= k_low * k_low) & (r2 <= k_high * k_high)
    envelope = np.zeros_like(r2)
    envelope[mask] = r2[mask] ** (slope / 4.0)  # |k|^(slope/2) on amplitudes
    c = c * envelope * grid.dealias
    c[0, 0] = 0.0
    norm = l2_norm_coeffs(grid, c)
    if norm > 0 and target_l2 > 0:
        c = c * (target_l2 / norm)
    return SpectralField(grid, c)
