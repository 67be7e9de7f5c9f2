"""Array-level norm helpers shared by the solver loop and diagnostics.

Symmetric 2x2 tensors are measured in the Frobenius sense with the
off-diagonal counted twice (t21 is stored as t12).
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .errors import InvalidExponent
from .grid import Grid2D

__all__ = [
    "magnitude_lr",
    "scalar_lr",
    "vector_lr",
    "tensor_frobenius",
    "tensor_lr",
    "tensor_h1",
    "spectral_h_norm",
    "divergence_of_tensor",
    "tensor_gradient_lr",
    "hessian_lr",
]


def magnitude_lr(grid: Grid2D, mag: np.ndarray, r: float) -> float:
    if r < 1:
        raise InvalidExponent(f"exponent r = {r} < 1")
    if np.isinf(r):
        return float(mag.max(initial=0.0))
    return float((np.sum(mag**r) * grid.cell_area) ** (1.0 / r))


def scalar_lr(grid: Grid2D, arr: np.ndarray, r: float) -> float:
    return magnitude_lr(grid, np.abs(arr), r)


def vector_lr(grid: Grid2D, a1: np.ndarray, a2: np.ndarray, r: float) -> float:
    return magnitude_lr(grid, np.hypot(a1, a2), r)


def tensor_frobenius(t11: np.ndarray, t12: np.ndarray, t22: np.ndarray) -> np.ndarray:
    return np.sqrt(t11**2 + 2.0 * t12**2 + t22**2)


def tensor_lr(grid: Grid2D, comps, r: float) -> float:
    return magnitude_lr(grid, tensor_frobenius(*comps), r)


def spectral_h_norm(grid: Grid2D, arrays_and_weights, s: float) -> float:
    """Weighted inhomogeneous H^s norm of a list of (array, weight) pairs."""
    w = (1.0 + grid.k_squared) ** s
    scale = grid.cell_area / (grid.n_x * grid.n_y)
    total = 0.0
    for arr, weight in arrays_and_weights:
        total += weight * np.sum(w * np.abs(sfft.fft2(arr)) ** 2) * scale
    return float(np.sqrt(total))


def tensor_h1(grid: Grid2D, comps) -> float:
    t11, t12, t22 = comps
    return spectral_h_norm(grid, [(t11, 1.0), (t12, 2.0), (t22, 1.0)], 1.0)


def divergence_of_tensor(grid: Grid2D, comps) -> tuple[np.ndarray, np.ndarray]:
    """(div sigma)_i = d_j sigma_ij for a symmetric tensor."""
    t11, t12, t22 = comps
    h11, h12, h22 = (sfft.fft2(c) for c in comps)
    d1 = sfft.ifft2(1j * grid.kx * h11 + 1j * grid.ky * h12).real
    d2 = sfft.ifft2(1j * grid.kx * h12 + 1j * grid.ky * h22).real
    return d1, d2


def tensor_gradient_lr(grid: Grid2D, comps, r: float) -> float:
    """L^r norm of the full spatial gradient of a symmetric tensor."""
    total = np.zeros((grid.n_x, grid.n_y))
    for comp, weight in zip(comps, (1.0, 2.0, 1.0)):
        hat = sfft.fft2(comp)
        gx = sfft.ifft2(1j * grid.kx * hat).real
        gy = sfft.ifft2(1j * grid.ky * hat).real
        total += weight * (gx**2 + gy**2)
    return magnitude_lr(grid, np.sqrt(total), r)


def hessian_lr(grid: Grid2D, u1: np.ndarray, u2: np.ndarray, r: float) -> float:
    """L^r norm of the second-gradient tensor of a velocity field."""
    total = np.zeros((grid.n_x, grid.n_y))
    for arr in (u1, u2):
        hat = sfft.fft2(arr)
        for mult in (-grid.kx * grid.kx, -grid.kx * grid.ky,
                     -grid.ky * grid.kx, -grid.ky * grid.ky):
            total += sfft.ifft2(mult * hat).real ** 2
    return magnitude_lr(grid, np.sqrt(total), r)
