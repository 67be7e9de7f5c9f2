"""Added-stress tensor: orientation averages of the particle density.

The expansion is truncated at second order.  Default coefficients are the
traceless rod stress gamma1(theta) = m m^T - I/2 with no pair term; both
tables are configurable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .grid import Grid2D, ScalarField2D, spectral_gradient
from .micro import MicroManifold, ModelParams, ParticleDensity

__all__ = [
    "StressField",
    "StressCoefficients",
    "BoundReport",
    "rod_gamma1",
    "stress_order1",
    "stress_order2",
    "total_sigma",
    "check_stress_bounds",
]


@dataclass
class StressField:
    """Symmetric 2x2 tensor field; t21 is stored as t12."""

    grid: Grid2D
    t11: np.ndarray
    t12: np.ndarray
    t22: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n_x, self.grid.n_y)
        for c in (self.t11, self.t12, self.t22):
            if c.shape != shape:
                raise ValueError("stress component shape does not match grid")

    @classmethod
    def zeros(cls, grid: Grid2D) -> "StressField":
        shape = (grid.n_x, grid.n_y)
        return cls(grid, np.zeros(shape), np.zeros(shape), np.zeros(shape))

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.t11, self.t12, self.t22

    def frobenius(self) -> np.ndarray:
        """Pointwise Frobenius norm (off-diagonal counted twice)."""
        return np.sqrt(self.t11**2 + 2.0 * self.t12**2 + self.t22**2)

    def scaled(self, factor: float) -> "StressField":
        return StressField(
            self.grid, factor * self.t11, factor * self.t12, factor * self.t22
        )

    def __add__(self, other: "StressField") -> "StressField":
        return StressField(
            self.grid,
            self.t11 + other.t11,
            self.t12 + other.t12,
            self.t22 + other.t22,
        )


def rod_gamma1(manifold: MicroManifold) -> np.ndarray:
    """Traceless rod stress coefficients, shape (n_m, 2, 2)."""
    th = manifold.theta
    m = np.stack([np.cos(th), np.sin(th)], axis=1)
    g = np.einsum("ti,tj->tij", m, m)
    g[:, 0, 0] -= 0.5
    g[:, 1, 1] -= 0.5
    return g


def _frobenius_table(g: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing 2x2 axes, off-diagonals doubled."""
    return np.sqrt(
        g[..., 0, 0] ** 2 + 2.0 * g[..., 0, 1] ** 2 + g[..., 1, 1] ** 2
    )


@dataclass
class StressCoefficients:
    """Constitutive tables for the first two expansion orders.

    gamma2 may be None, a full (n_m, n_m, 2, 2) table, or a separable
    pair (a, b) with a of shape (n_m, 2, 2) and b of shape (n_m,)
    meaning gamma2_ij(t1, t2) = a_ij(t1) b(t2).
    """

    gamma1: np.ndarray
    gamma2: np.ndarray | tuple[np.ndarray, np.ndarray] | None = None
    k_max: int = 2

    def __post_init__(self):
        self.gamma1 = np.asarray(self.gamma1, dtype=np.float64)
        if self.gamma1.ndim != 3 or self.gamma1.shape[1:] != (2, 2):
            raise ValueError("gamma1 must have shape (n_m, 2, 2)")
        if self.k_max not in (1, 2):
            raise ValueError("truncation order k_max must be 1 or 2")

    @classmethod
    def rod_default(cls, manifold: MicroManifold) -> "StressCoefficients":
        return cls(rod_gamma1(manifold), None, 2)

    def gamma1_sup(self) -> float:
        return float(_frobenius_table(self.gamma1).max())

    def gamma2_sup(self) -> float:
        if self.gamma2 is None:
            return 0.0
        if isinstance(self.gamma2, tuple):
            a, b = self.gamma2
            return float(_frobenius_table(np.asarray(a)).max() * np.abs(b).max())
        return float(_frobenius_table(np.asarray(self.gamma2)).max())

    def spectral_decay_ok(self, tol: float = 1e-10) -> bool:
        """Smoothness proxy: angular modes beyond n_m/4 are below tol."""
        n_m = self.gamma1.shape[0]
        cut = n_m // 4
        k = np.abs(sfft.fftfreq(n_m, d=1.0 / n_m))
        for comp in (self.gamma1[:, 0, 0], self.gamma1[:, 0, 1], self.gamma1[:, 1, 1]):
            hat = np.abs(sfft.fft(comp)) / n_m
            if hat[k >= cut].size and hat[k >= cut].max() > tol:
                return False
        return True


def stress_order1(f: ParticleDensity, gamma1: np.ndarray) -> StressField:
    """First-order stress: orientation average of gamma1 against f."""
    tau = np.einsum("xyt,tij->ijxy", f.values, gamma1) * f.manifold.d_theta
    return StressField(f.grid, tau[0, 0], tau[0, 1], tau[1, 1])


def stress_order2(
    f: ParticleDensity,
    gamma2: np.ndarray | tuple[np.ndarray, np.ndarray] | None,
) -> StressField:
    """Second-order (pair) stress; separable tables use single integrals."""
    if gamma2 is None:
        return StressField.zeros(f.grid)
    dth = f.manifold.d_theta
    if isinstance(gamma2, tuple):
        a, b = gamma2
        first = np.einsum("xyt,tij->ijxy", f.values, np.asarray(a)) * dth
        second = f.values @ np.asarray(b) * dth
        return StressField(
            f.grid, first[0, 0] * second, first[0, 1] * second, first[1, 1] * second
        )
    gamma2 = np.asarray(gamma2)
    out = np.empty((3, f.grid.n_x, f.grid.n_y))
    for idx, (i, j) in enumerate(((0, 0), (0, 1), (1, 1))):
        inner = f.values @ gamma2[:, :, i, j]  # integrate second slot
        out[idx] = (inner * f.values).sum(axis=-1) * dth * dth
    return StressField(f.grid, out[0], out[1], out[2])


def total_sigma(
    f: ParticleDensity, coeffs: StressCoefficients, params: ModelParams
) -> StressField:
    """Rescaled forcing sigma = (tau / (delta nu)) * sum of stress orders."""
    tau_p = stress_order1(f, coeffs.gamma1)
    if coeffs.k_max >= 2:
        tau_p = tau_p + stress_order2(f, coeffs.gamma2)
    return tau_p.scaled(params.tau / (params.delta * params.nu))


def stress_gradient_magnitude(sigma: StressField) -> np.ndarray:
    """Pointwise Frobenius norm of grad tau_p (off-diagonals doubled)."""
    total = np.zeros((sigma.grid.n_x, sigma.grid.n_y))
    for comp, weight in zip(sigma.components(), (1.0, 2.0, 1.0)):
        grad = spectral_gradient(ScalarField2D(sigma.grid, comp))
        total += weight * (grad.u1.values**2 + grad.u2.values**2)
    return np.sqrt(total)


@dataclass
class BoundReport:
    """Pointwise stress-bound ratios for constant fitting."""

    c_gamma: float
    max_ratio_rho: float
    max_ratio_n: float
    exceeded: bool


def check_stress_bounds(
    tau_p: StressField,
    rho: ScalarField2D,
    n_field: ScalarField2D,
    coeffs: StressCoefficients,
    floor: float = 1e-8,
) -> BoundReport:
    """Measure |tau_p|/rho against c_gamma and |grad tau_p|/N (report only)."""
    c1 = coeffs.gamma1_sup()
    c2 = coeffs.gamma2_sup()
    mag = tau_p.frobenius()
    rho_v = rho.values
    mask = rho_v > floor
    ratio_rho = 0.0
    exceeded = False
    if mask.any():
        ratio_rho = float((mag[mask] / rho_v[mask]).max())
        bound = c1 + c2 * rho_v[mask]
        exceeded = bool(
            (mag[mask] > bound * rho_v[mask] * (1.0 + 1e-6)).any()
        )
    grad_mag = stress_gradient_magnitude(tau_p)
    n_v = n_field.values
    n_mask = n_v > floor
    ratio_n = float((grad_mag[n_mask] / n_v[n_mask]).max()) if n_mask.any() else 0.0
    return BoundReport(c1 + c2, ratio_rho, ratio_n, exceeded)
