"""Periodic 2D spectral field algebra.

All fields live on the uniform [0, L) x [0, L) torus; x is axis 0, y is
axis 1.  Every differential operator is a Fourier multiplier, so round
trips and composition identities hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import InvalidExponent, NonzeroMeanVorticity

__all__ = [
    "Grid2D",
    "ScalarField2D",
    "VectorField2D",
    "spectral_gradient",
    "spectral_divergence",
    "curl",
    "biot_savart",
    "leray_project",
    "lp_norm",
    "sobolev_norm",
    "dealias",
    "dealiased_product",
    "exact_product",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid with cached wavenumber tables."""

    n_x: int
    n_y: int
    length: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        for n in (self.n_x, self.n_y):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"grid size {n} must be even and >= 8")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def h(self) -> tuple[float, float]:
        return self.length / self.n_x, self.length / self.n_y

    @property
    def cell_area(self) -> float:
        hx, hy = self.h
        return hx * hy

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x) * (self.length / self.n_x)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.n_y) * (self.length / self.n_y)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def kx(self) -> np.ndarray:
        k = 2.0 * np.pi * sfft.fftfreq(self.n_x, d=self.length / self.n_x)
        return k[:, None]

    @property
    def ky(self) -> np.ndarray:
        k = 2.0 * np.pi * sfft.fftfreq(self.n_y, d=self.length / self.n_y)
        return k[None, :]

    @property
    def k_squared(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @property
    def k_magnitude(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @property
    def k_max(self) -> float:
        """Largest wavenumber magnitude present on the grid."""
        return float(np.sqrt(np.abs(self.kx).max() ** 2 + np.abs(self.ky).max() ** 2))

    @property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3-rule (per-axis) truncation."""
        cut_x = self.dealias_fraction * np.pi * self.n_x / self.length
        cut_y = self.dealias_fraction * np.pi * self.n_y / self.length
        return (np.abs(self.kx) < cut_x) & (np.abs(self.ky) < cut_y)


@dataclass
class ScalarField2D:
    """Real scalar field with physical and spectral views."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_x, self.grid.n_y):
            raise ValueError("field shape does not match grid")

    @classmethod
    def from_spectral(cls, grid: Grid2D, hat: np.ndarray) -> "ScalarField2D":
        return cls(grid, sfft.ifft2(hat).real)

    @property
    def hat(self) -> np.ndarray:
        return sfft.fft2(self.values)

    def mean(self) -> float:
        return float(self.values.mean())

    def copy(self) -> "ScalarField2D":
        return ScalarField2D(self.grid, self.values.copy())


@dataclass
class VectorField2D:
    """Pair of scalar components on a shared grid."""

    u1: ScalarField2D
    u2: ScalarField2D

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("components live on different grids")

    @property
    def grid(self) -> Grid2D:
        return self.u1.grid

    @classmethod
    def from_arrays(cls, grid: Grid2D, a1: np.ndarray, a2: np.ndarray) -> "VectorField2D":
        return cls(ScalarField2D(grid, a1), ScalarField2D(grid, a2))

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u1.values, self.u2.values)

    def copy(self) -> "VectorField2D":
        return VectorField2D(self.u1.copy(), self.u2.copy())


def spectral_gradient(f: ScalarField2D) -> VectorField2D:
    """Exact gradient of the trigonometric interpolant."""
    hat = f.hat
    g = f.grid
    fx = sfft.ifft2(1j * g.kx * hat).real
    fy = sfft.ifft2(1j * g.ky * hat).real
    return VectorField2D.from_arrays(g, fx, fy)


def spectral_divergence(v: VectorField2D) -> ScalarField2D:
    g = v.grid
    hat = 1j * g.kx * v.u1.hat + 1j * g.ky * v.u2.hat
    return ScalarField2D.from_spectral(g, hat)


def curl(v: VectorField2D) -> ScalarField2D:
    """Scalar vorticity d1 u2 - d2 u1."""
    g = v.grid
    hat = 1j * g.kx * v.u2.hat - 1j * g.ky * v.u1.hat
    return ScalarField2D.from_spectral(g, hat)


def biot_savart(omega: ScalarField2D) -> VectorField2D:
    """Mean-zero divergence-free velocity with curl equal to omega.

    Raises NonzeroMeanVorticity when omega has a mean: the inversion has
    no solution on the torus in that case.
    """
    g = omega.grid
    norm = lp_norm(omega, 2)
    if abs(omega.mean()) > 1e-12 * max(norm, 1e-300):
        raise NonzeroMeanVorticity(
            f"mean vorticity {omega.mean():.3e} exceeds tolerance"
        )
    hat = omega.hat
    k2 = g.k_squared.copy()
    k2[0, 0] = 1.0  # zero mode handled separately (set to zero below)
    psi_hat = -hat / k2
    psi_hat[0, 0] = 0.0
    u1 = sfft.ifft2(-1j * g.ky * psi_hat).real
    u2 = sfft.ifft2(1j * g.kx * psi_hat).real
    return VectorField2D.from_arrays(g, u1, u2)


def leray_project(v: VectorField2D) -> VectorField2D:
    """Remove the gradient part; output is spectrally divergence-free."""
    g = v.grid
    h1, h2 = v.u1.hat, v.u2.hat
    k2 = g.k_squared.copy()
    k2[0, 0] = 1.0
    div_hat = (g.kx * h1 + g.ky * h2) / k2
    p1 = h1 - g.kx * div_hat
    p2 = h2 - g.ky * div_hat
    return VectorField2D.from_arrays(g, sfft.ifft2(p1).real, sfft.ifft2(p2).real)


def _pointwise_modulus(f: ScalarField2D | VectorField2D) -> tuple[np.ndarray, Grid2D]:
    if isinstance(f, VectorField2D):
        return f.magnitude(), f.grid
    return np.abs(f.values), f.grid


def lp_norm(f: ScalarField2D | VectorField2D, r: float) -> float:
    """Quadrature L^r norm over the torus; r = inf gives the grid max."""
    if r < 1:
        raise InvalidExponent(f"exponent r = {r} < 1")
    mod, g = _pointwise_modulus(f)
    if np.isinf(r):
        return float(mod.max(initial=0.0))
    return float((np.sum(mod**r) * g.cell_area) ** (1.0 / r))


def sobolev_norm(f: ScalarField2D | VectorField2D, s: float) -> float:
    """Inhomogeneous H^s norm via the (1 + |k|^2)^s multiplier."""
    if isinstance(f, VectorField2D):
        comps = [f.u1, f.u2]
    else:
        comps = [f]
    g = comps[0].grid
    w = (1.0 + g.k_squared) ** s
    total = 0.0
    scale = g.cell_area / (g.n_x * g.n_y)  # Parseval factor for the DFT
    for c in comps:
        total += np.sum(w * np.abs(c.hat) ** 2) * scale
    return float(np.sqrt(total))


def dealias(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Truncate a physical-space array to the retained spectral band."""
    return sfft.ifft2(grid.dealias_mask * sfft.fft2(values)).real


def dealiased_product(a: np.ndarray, b: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Pointwise product followed by 2/3-rule truncation."""
    return dealias(a * b, grid)


def exact_product(a: ScalarField2D, b: ScalarField2D) -> ScalarField2D:
    """Alias-free product computed on a zero-padded (doubled) grid."""
    g = a.grid
    nx, ny = g.n_x, g.n_y
    pa = _pad_spectrum(a.hat, nx, ny)
    pb = _pad_spectrum(b.hat, nx, ny)
    prod = sfft.ifft2(pa).real * sfft.ifft2(pb).real
    prod_hat = sfft.fft2(prod)
    out = _crop_spectrum(prod_hat, nx, ny) * 4.0  # (2x)^2 normalization
    return ScalarField2D.from_spectral(g, out)


def _pad_spectrum(hat: np.ndarray, nx: int, ny: int) -> np.ndarray:
    out = np.zeros((2 * nx, 2 * ny), dtype=complex)
    hx, hy = nx // 2, ny // 2
    out[:hx, :hy] = hat[:hx, :hy]
    out[:hx, -hy:] = hat[:hx, -hy:]
    out[-hx:, :hy] = hat[-hx:, :hy]
    out[-hx:, -hy:] = hat[-hx:, -hy:]
    return out


def _crop_spectrum(hat: np.ndarray, nx: int, ny: int) -> np.ndarray:
    out = np.zeros((nx, ny), dtype=complex)
    hx, hy = nx // 2, ny // 2
    out[:hx, :hy] = hat[:hx, :hy]
    out[:hx, -hy:] = hat[:hx, -hy:]
    out[-hx:, :hy] = hat[-hx:, :hy]
    out[-hx:, -hy:] = hat[-hx:, -hy:]
    return out
