"""Random field corpora shared by the unit and acceptance tests."""

import numpy as np
import scipy.fft as sfft

from mmfluid.grid import Grid2D, ScalarField2D, biot_savart


def band_limited_field(grid, rng, k_cut=6.0, zero_mean=True):
    """Gaussian random field restricted to |xi| <= k_cut."""
    hat = sfft.fft2(rng.standard_normal((grid.n_x, grid.n_y)))
    mask = grid.k_magnitude <= k_cut
    if zero_mean:
        mask = mask & (grid.k_squared > 0)
    return ScalarField2D(grid, sfft.ifft2(hat * mask).real)


def multiscale_field(grid, rng, slope=1.0, zero_mean=True):
    """Gaussian field with a |xi|^-slope spectrum over all resolved modes."""
    hat = sfft.fft2(rng.standard_normal((grid.n_x, grid.n_y)))
    k = np.maximum(grid.k_magnitude, 1.0)
    hat = hat * k ** (-slope)
    if zero_mean:
        hat[0, 0] = 0.0
    return ScalarField2D(grid, sfft.ifft2(hat).real)


def bump_field(grid, rng, n_bumps=4):
    """Superposition of periodized Gaussian bumps with random centers,
    widths and signs; saturates localized inequalities at every scale."""
    xx, yy = grid.meshgrid()
    vals = np.zeros((grid.n_x, grid.n_y))
    for _ in range(n_bumps):
        cx, cy = rng.uniform(0.0, grid.length, size=2)
        width = np.exp(rng.uniform(np.log(0.15), np.log(1.0)))
        amp = rng.standard_normal()
        dx = np.angle(np.exp(1j * (xx - cx)))
        dy = np.angle(np.exp(1j * (yy - cy)))
        vals += amp * np.exp(-(dx**2 + dy**2) / (2.0 * width**2))
    return ScalarField2D(grid, vals)


def random_velocity(grid, rng, k_cut=6.0):
    """Divergence-free velocity from a random mean-zero vorticity."""
    return biot_savart(band_limited_field(grid, rng, k_cut))


def refine_field(f: ScalarField2D, factor: int) -> ScalarField2D:
    """Same trigonometric interpolant sampled on a factor-times-finer grid."""
    g = f.grid
    fine = Grid2D(g.n_x * factor, g.n_y * factor, g.length)
    hat = f.hat
    out = np.zeros((fine.n_x, fine.n_y), dtype=complex)
    hx, hy = g.n_x // 2, g.n_y // 2
    out[:hx, :hy] = hat[:hx, :hy]
    out[:hx, -hy:] = hat[:hx, -hy:]
    out[-hx:, :hy] = hat[-hx:, :hy]
    out[-hx:, -hy:] = hat[-hx:, -hy:]
    return ScalarField2D(fine, sfft.ifft2(out).real * factor**2)
