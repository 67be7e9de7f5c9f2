"""Particle density on the unit circle and its Fokker-Planck evolution.

The microscopic manifold is the circle of rod orientations; the smoothing
operator R, the angular Laplacian and the diffusion semigroup are all
Fourier multipliers in the angle, hence exact.  The x-advection and the
angular transport are pseudospectral with 2/3 dealiasing; the stiff
angular diffusion is integrated exactly (integrating factor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import CflViolation, NonFiniteField
from .grid import Grid2D, ScalarField2D, VectorField2D

__all__ = [
    "MicroManifold",
    "ParticleDensity",
    "ModelParams",
    "maier_saupe_kernel",
    "rod_drift_coefficients",
    "apply_R",
    "mean_field_potential",
    "micro_drift",
    "drift_field",
    "fokker_planck_step",
    "compute_N",
]


@dataclass(frozen=True)
class MicroManifold:
    """Unit circle of orientations with the R-multiplier table."""

    n_m: int
    s: float = 2.0

    def __post_init__(self):
        if self.n_m < 16 or self.n_m % 2 != 0:
            raise ValueError("n_m must be even and >= 16")
        if self.s <= 1.5:
            raise ValueError("smoothing order s must exceed d/2 + 1 = 1.5")

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_m) * (2.0 * np.pi / self.n_m)

    @property
    def d_theta(self) -> float:
        return 2.0 * np.pi / self.n_m

    @property
    def wavenumbers(self) -> np.ndarray:
        return sfft.fftfreq(self.n_m, d=1.0 / self.n_m)

    @property
    def r_multiplier(self) -> np.ndarray:
        k = self.wavenumbers
        return (1.0 + k**2) ** (-self.s / 2.0)

    @property
    def dealias_mask(self) -> np.ndarray:
        k = self.wavenumbers
        return np.abs(k) < self.n_m / 3.0


def maier_saupe_kernel(manifold: MicroManifold) -> np.ndarray:
    """Default interaction kernel K(t, t') = -cos 2(t - t')."""
    th = manifold.theta
    return -np.cos(2.0 * (th[:, None] - th[None, :]))


def rod_drift_coefficients(manifold: MicroManifold) -> np.ndarray:
    """Jeffery rod kinematics: c^{ij}(theta) = mperp_i m_j, shape (n_m, 2, 2)."""
    th = manifold.theta
    m = np.stack([np.cos(th), np.sin(th)], axis=1)
    mperp = np.stack([-np.sin(th), np.cos(th)], axis=1)
    return np.einsum("ti,tj->tij", mperp, m)


@dataclass
class ModelParams:
    """Physical parameters and constitutive tables of the particle model."""

    delta: float = 1.0
    b: float = 0.0
    tau: float = 1.0
    nu: float = 1.0
    kernel: np.ndarray | None = None
    drift_coeffs: np.ndarray | None = None
    cfl_safety: float = 0.5

    def __post_init__(self):
        if self.delta <= 0 or self.tau <= 0 or self.nu <= 0:
            raise ValueError("delta, tau, nu must be positive")
        if self.b < 0:
            raise ValueError("interaction intensity b must be nonnegative")
        if self.kernel is not None:
            self.kernel = np.asarray(self.kernel, dtype=np.float64)
            if not np.array_equal(self.kernel, self.kernel.T):
                raise ValueError("interaction kernel must be symmetric")

    def kernel_for(self, manifold: MicroManifold) -> np.ndarray:
        if self.kernel is None:
            return maier_saupe_kernel(manifold)
        if self.kernel.shape != (manifold.n_m, manifold.n_m):
            raise ValueError("kernel sampled at the wrong resolution")
        return self.kernel

    def coeffs_for(self, manifold: MicroManifold) -> np.ndarray:
        if self.drift_coeffs is None:
            return rod_drift_coefficients(manifold)
        c = np.asarray(self.drift_coeffs, dtype=np.float64)
        if c.shape != (manifold.n_m, 2, 2):
            raise ValueError("drift coefficients sampled at the wrong resolution")
        return c


@dataclass
class ParticleDensity:
    """f(x, theta) sampled on the (n_x, n_y, n_m) tensor grid."""

    grid: Grid2D
    manifold: MicroManifold
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = (self.grid.n_x, self.grid.n_y, self.manifold.n_m)
        if self.values.shape != expected:
            raise ValueError(f"density shape {self.values.shape} != {expected}")

    @classmethod
    def uniform(cls, grid: Grid2D, manifold: MicroManifold, rho: float = 1.0):
        vals = np.full((grid.n_x, grid.n_y, manifold.n_m), rho / (2.0 * np.pi))
        return cls(grid, manifold, vals)

    def rho(self) -> ScalarField2D:
        """Macroscopic density: integral of f over the circle."""
        return ScalarField2D(
            self.grid, self.values.sum(axis=2) * self.manifold.d_theta
        )

    def mass(self) -> float:
        return float(
            self.values.sum() * self.grid.cell_area * self.manifold.d_theta
        )

    def copy(self) -> "ParticleDensity":
        return ParticleDensity(self.grid, self.manifold, self.values.copy())


def apply_R(h: np.ndarray, manifold: MicroManifold) -> np.ndarray:
    """Smoothing multiplier (1 + k^2)^(-s/2) in the angular variable."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != manifold.n_m:
        raise ValueError("last axis must be the angular grid")
    hat = sfft.rfft(h, axis=-1)
    mult = manifold.r_multiplier[: manifold.n_m // 2 + 1]
    return sfft.irfft(hat * mult, n=manifold.n_m, axis=-1)


def apply_theta_derivative(h: np.ndarray, manifold: MicroManifold) -> np.ndarray:
    hat = sfft.rfft(h, axis=-1)
    k = manifold.wavenumbers[: manifold.n_m // 2 + 1].copy()
    k[-1] = 0.0  # drop the (real) Nyquist mode of the derivative
    return sfft.irfft(hat * (1j * k), n=manifold.n_m, axis=-1)


def dealias_theta(h: np.ndarray, manifold: MicroManifold) -> np.ndarray:
    hat = sfft.rfft(h, axis=-1)
    mask = manifold.dealias_mask[: manifold.n_m // 2 + 1]
    return sfft.irfft(hat * mask, n=manifold.n_m, axis=-1)


def mean_field_potential(f: ParticleDensity, params: ModelParams) -> np.ndarray:
    """U(x, theta) = (b/delta) * integral of K(theta, .) f(x, .)."""
    if params.b == 0.0:
        return np.zeros_like(f.values)
    kernel = params.kernel_for(f.manifold)
    u = f.values @ kernel.T
    u *= params.b / params.delta * f.manifold.d_theta
    return u


def micro_drift(
    grad_u_bar: np.ndarray, theta: float | np.ndarray, params: ModelParams,
    manifold: MicroManifold | None = None,
) -> np.ndarray:
    """Angular drift W(theta) = sum_ij c^{ij}(theta) d(ubar_i)/dx_j at a point."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if params.drift_coeffs is not None and manifold is not None:
        c = params.coeffs_for(manifold)
    else:
        m = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        mperp = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        c = np.einsum("ti,tj->tij", mperp, m)
    w = np.einsum("tij,ij->t", c, np.asarray(grad_u_bar, dtype=np.float64))
    return w if w.size > 1 else float(w[0])


def velocity_gradient(u: VectorField2D) -> np.ndarray:
    """grad u as an (2, 2, n_x, n_y) array: [i, j] = d u_i / d x_j."""
    g = u.grid
    out = np.empty((2, 2, g.n_x, g.n_y))
    for i, comp in enumerate((u.u1, u.u2)):
        hat = comp.hat
        out[i, 0] = sfft.ifft2(1j * g.kx * hat).real
        out[i, 1] = sfft.ifft2(1j * g.ky * hat).real
    return out


def drift_field(
    u_bar: VectorField2D, f: ParticleDensity, params: ModelParams
) -> np.ndarray:
    """Total angular drift G = d_theta U + W on the (x, theta) grid."""
    gu = velocity_gradient(u_bar)  # (2, 2, n_x, n_y)
    c = params.coeffs_for(f.manifold)  # (n_m, 2, 2)
    w = np.einsum("tij,ijxy->xyt", c, gu)
    if params.b != 0.0:
        u_pot = mean_field_potential(f, params)
        w = w + apply_theta_derivative(u_pot, f.manifold)
    return w


def check_cfl(dt: float, u_inf: float, g_inf: float, f: ParticleDensity,
              safety: float) -> None:
    hx, hy = f.grid.h
    limit = np.inf
    if u_inf > 0:
        limit = min(limit, safety * min(hx, hy) / u_inf)
    if g_inf > 0:
        limit = min(limit, safety * f.manifold.d_theta / g_inf)
    if dt > limit:
        raise CflViolation(
            f"dt = {dt:.3e} exceeds CFL limit {limit:.3e} "
            f"(|u| = {u_inf:.3e}, |G| = {g_inf:.3e})"
        )


def _transport_rhs(
    vals: np.ndarray,
    u1: np.ndarray,
    u2: np.ndarray,
    g_drift: np.ndarray,
    f: ParticleDensity,
) -> np.ndarray:
    """-(ubar . grad_x f + d_theta(G f)), dealiased in x and theta."""
    grid, manifold = f.grid, f.manifold
    hat = sfft.fft2(vals, axes=(0, 1))
    fx = sfft.ifft2(1j * grid.kx[..., None] * hat, axes=(0, 1)).real
    fy = sfft.ifft2(1j * grid.ky[..., None] * hat, axes=(0, 1)).real
    adv = u1[..., None] * fx + u2[..., None] * fy
    adv_hat = sfft.fft2(adv, axes=(0, 1))
    adv = sfft.ifft2(grid.dealias_mask[..., None] * adv_hat, axes=(0, 1)).real
    flux = dealias_theta(g_drift * vals, manifold)
    return -(adv + apply_theta_derivative(flux, manifold))


def fokker_planck_step(
    f: ParticleDensity,
    u_bar: VectorField2D,
    dt: float,
    params: ModelParams,
) -> ParticleDensity:
    """One Strang-ordered IMEX step of the kinetic equation.

    Exact angular diffusion over dt/2, a two-stage explicit (Heun)
    transport step, exact diffusion over dt/2.  Conserves total mass to
    roundoff; raises CflViolation / NonFiniteField on bad steps.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    manifold = f.manifold
    u1, u2 = u_bar.u1.values, u_bar.u2.values
    g_drift = drift_field(u_bar, f, params)
    u_inf = float(np.hypot(u1, u2).max())
    check_cfl(dt, u_inf, float(np.abs(g_drift).max()), f, params.cfl_safety)

    k = manifold.wavenumbers[: manifold.n_m // 2 + 1]
    half_heat = np.exp(-(k**2) * dt / (2.0 * params.delta))

    def diffuse_half(vals):
        hat = sfft.rfft(vals, axis=-1)
        return sfft.irfft(hat * half_heat, n=manifold.n_m, axis=-1)

    vals = diffuse_half(f.values)
    mid = ParticleDensity(f.grid, manifold, vals)
    if params.b != 0.0:
        g_drift = drift_field(u_bar, mid, params)
    k1 = _transport_rhs(vals, u1, u2, g_drift, f)
    k2 = _transport_rhs(vals + dt * k1, u1, u2, g_drift, f)
    vals = vals + 0.5 * dt * (k1 + k2)
    vals = diffuse_half(vals)

    if not np.all(np.isfinite(vals)):
        raise NonFiniteField("particle density became non-finite")
    return ParticleDensity(f.grid, manifold, vals)


def compute_N(f: ParticleDensity, method: str = "parseval") -> ScalarField2D:
    """N(x) = L2(M) norm of R grad_x f; Parseval or direct quadrature."""
    grid, manifold = f.grid, f.manifold
    hat = sfft.fft2(f.values, axes=(0, 1))
    fx = sfft.ifft2(1j * grid.kx[..., None] * hat, axes=(0, 1)).real
    fy = sfft.ifft2(1j * grid.ky[..., None] * hat, axes=(0, 1)).real
    if method == "direct":
        gx = apply_R(fx, manifold)
        gy = apply_R(fy, manifold)
        n_sq = (gx**2 + gy**2).sum(axis=-1) * manifold.d_theta
    elif method == "parseval":
        mult = manifold.r_multiplier
        hx = sfft.fft(fx, axis=-1) * mult
        hy = sfft.fft(fy, axis=-1) * mult
        n_sq = (np.abs(hx) ** 2 + np.abs(hy) ** 2).sum(axis=-1)
        n_sq *= manifold.d_theta / manifold.n_m
    else:
        raise ValueError(f"unknown method {method!r}")
    return ScalarField2D(grid, np.sqrt(np.maximum(n_sq, 0.0)))
