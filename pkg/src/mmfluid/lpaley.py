"""Dyadic frequency decomposition and logarithmic/Besov estimates.

The radial cutoffs are built from the classic exp(-1/t) bump, so the
partition of unity and the shell-disjointness relations hold pointwise
on the grid to machine precision.  Constant-bearing inequalities return
(lhs, rhs-without-constant) pairs; the harness fits the constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import (
    EmptyShell,
    GridTooCoarse,
    InvalidExponent,
    NegativeArgument,
    ShellOutOfRange,
)
from .grid import Grid2D, ScalarField2D, VectorField2D, lp_norm, spectral_gradient

__all__ = [
    "DyadicPartition",
    "ShellSet",
    "build_partition",
    "shell_project",
    "low_pass",
    "bernstein_ratio",
    "heat_shell_decay",
    "log_star",
    "log_velocity_bound",
    "besov_grad_norm",
    "low_mode_sup_bound",
]

# chi == 1 for |xi| <= _R0 and == 0 for |xi| >= _R1; then
# phi(xi) = chi(xi/2) - chi(xi) is supported in [_R0, 2*_R1], strictly
# inside the (1/2, 2) annulus, and shells two apart are disjoint.
_R0 = 5.0 / 8.0
_R1 = 7.0 / 8.0


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity transition: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=np.float64)
    a = _bump(s)
    b = _bump(1.0 - s)
    return a / (a + b)


def _chi_profile(rho: np.ndarray) -> np.ndarray:
    return 1.0 - _smooth_step((np.asarray(rho, dtype=np.float64) - _R0) / (_R1 - _R0))


def _phi_profile(rho: np.ndarray) -> np.ndarray:
    return _chi_profile(rho / 2.0) - _chi_profile(rho)


@dataclass(frozen=True)
class DyadicPartition:
    """Sampled radial multipliers for S_j and Delta_j on one grid."""

    grid: Grid2D
    j_max: int
    chi0: np.ndarray          # chi(|xi|), the S_0 block
    phi: tuple[np.ndarray, ...]   # phi(2^-j |xi|), j = 0..j_max
    chi: tuple[np.ndarray, ...]   # chi(2^-j |xi|), j = 0..j_max

    def partition_residual(self) -> float:
        total = self.chi0 + sum(self.phi)
        return float(np.max(np.abs(total - 1.0)))


def build_partition(grid: Grid2D) -> DyadicPartition:
    """Sample the dyadic cutoffs out to the grid's Nyquist ball."""
    kmag = grid.k_magnitude
    # smallest J with chi(2^-(J+1) |xi|) == 1 on the whole grid
    j_max = math.ceil(math.log2(grid.k_max / _R0)) - 1
    if j_max < 3:
        raise GridTooCoarse("fewer than 3 dyadic shells fit below Nyquist")
    chi0 = _chi_profile(kmag)
    phi = tuple(_phi_profile(kmag / 2.0**j) for j in range(j_max + 1))
    chi = tuple(_chi_profile(kmag / 2.0**j) for j in range(j_max + 1))
    part = DyadicPartition(grid, j_max, chi0, phi, chi)
    if part.partition_residual() > 1e-12:
        raise GridTooCoarse("partition of unity does not cover the Nyquist ball")
    return part


@dataclass
class ShellSet:
    """Low-pass block plus all dyadic shells of one field."""

    partition: DyadicPartition
    block0: ScalarField2D | VectorField2D
    shells: list

    @classmethod
    def decompose(cls, f, partition: DyadicPartition) -> "ShellSet":
        block0 = low_pass(f, 0, partition)
        shells = [shell_project(f, j, partition) for j in range(partition.j_max + 1)]
        return cls(partition, block0, shells)

    def reconstruct(self):
        if isinstance(self.block0, VectorField2D):
            a1 = self.block0.u1.values + sum(s.u1.values for s in self.shells)
            a2 = self.block0.u2.values + sum(s.u2.values for s in self.shells)
            return VectorField2D.from_arrays(self.partition.grid, a1, a2)
        vals = self.block0.values + sum(s.values for s in self.shells)
        return ScalarField2D(self.partition.grid, vals)


def _apply_multiplier(f, mult: np.ndarray):
    if isinstance(f, VectorField2D):
        g = f.grid
        return VectorField2D.from_arrays(
            g,
            sfft.ifft2(mult * f.u1.hat).real,
            sfft.ifft2(mult * f.u2.hat).real,
        )
    return ScalarField2D.from_spectral(f.grid, mult * f.hat)


def _check_shell(j: int, partition: DyadicPartition):
    if not 0 <= j <= partition.j_max:
        raise ShellOutOfRange(f"shell {j} outside [0, {partition.j_max}]")


def shell_project(f, j: int, partition: DyadicPartition):
    """Delta_j f via the phi(2^-j xi) multiplier."""
    _check_shell(j, partition)
    return _apply_multiplier(f, partition.phi[j])


def low_pass(f, j: int, partition: DyadicPartition):
    """S_j f via the chi(2^-j xi) multiplier."""
    _check_shell(j, partition)
    return _apply_multiplier(f, partition.chi[j])


def bernstein_ratio(
    f,
    j: int,
    a: float,
    b: float,
    alpha: tuple[int, int],
    partition: DyadicPartition,
) -> float:
    """Measured constant in the localized-derivative inequality.

    Returns ||Delta_j d^alpha f||_La / (2^(j|alpha| + 2j(1/b - 1/a))
    ||Delta_j f||_Lb); bounded uniformly in j for smooth cutoffs.
    """
    if not (1 <= b <= a):
        raise InvalidExponent("need 1 <= b <= a")
    dj = shell_project(f, j, partition)
    denom = lp_norm(dj, b)
    if denom == 0.0:
        raise EmptyShell(f"Delta_{j} f vanishes")
    g = partition.grid
    mult = (1j * g.kx) ** alpha[0] * (1j * g.ky) ** alpha[1]
    deriv = _apply_multiplier(dj, mult)
    inv_a = 0.0 if np.isinf(a) else 1.0 / a
    inv_b = 0.0 if np.isinf(b) else 1.0 / b
    scale = 2.0 ** (j * (alpha[0] + alpha[1]) + 2 * j * (inv_b - inv_a))
    return lp_norm(deriv, a) / (scale * denom)


def heat_shell_decay(f, j: int, t: float, partition: DyadicPartition) -> float:
    """L2 decay ratio of Delta_j f under the exact heat semigroup."""
    if t < 0:
        raise NegativeArgument("time must be nonnegative")
    dj = shell_project(f, j, partition)
    denom = lp_norm(dj, 2)
    if denom == 0.0:
        raise EmptyShell(f"Delta_{j} f vanishes")
    heated = _apply_multiplier(dj, np.exp(-t * partition.grid.k_squared))
    return lp_norm(heated, 2) / denom


def log_star(x: float) -> float:
    """Shifted logarithm log(2 + x); positive at zero, subadditive."""
    if x < 0:
        raise NegativeArgument(f"log_star argument {x} < 0")
    return math.log(2.0 + x)


def log_velocity_bound(
    omega: ScalarField2D,
    u: VectorField2D,
    r: float,
    c_r: float = 1.0,
) -> tuple[float, float]:
    """Sup-norm of u against the logarithmic vorticity bound.

    lhs = ||u||_inf; rhs = c_r ||w||_2 (1 + sqrt(log_*((||w||_r/||w||_2)^
    (r/(r-2)) ||u||_2/||w||_2))).  Returns (lhs, rhs) for constant fitting.
    """
    if r <= 2:
        raise InvalidExponent("need r > 2")
    lhs = lp_norm(u, np.inf)
    w2 = lp_norm(omega, 2)
    if w2 == 0.0:
        return lhs, 0.0
    wr = lp_norm(omega, r)
    u2 = lp_norm(u, 2)
    arg = (wr / w2) ** (r / (r - 2.0)) * (u2 / w2)
    rhs = c_r * w2 * (1.0 + math.sqrt(log_star(arg)))
    return lhs, rhs


def besov_grad_norm(u: VectorField2D, partition: DyadicPartition | None = None) -> float:
    """B^0_{inf,1} accounting of grad u; dominates ||grad u||_inf."""
    if partition is None:
        partition = build_partition(u.grid)
    g = u.grid
    hats = [u.u1.hat, u.u2.hat]
    grad_hats = []
    for h in hats:
        grad_hats.append(1j * g.kx * h)
        grad_hats.append(1j * g.ky * h)

    def block_linf(mult):
        sq = np.zeros((g.n_x, g.n_y))
        for gh in grad_hats:
            sq += sfft.ifft2(mult * gh).real ** 2
        return float(np.sqrt(sq).max())

    total = block_linf(partition.chi0)
    for j in range(partition.j_max + 1):
        total += block_linf(partition.phi[j])
    return total


def low_mode_sup_bound(
    f: ScalarField2D, j: int, partition: DyadicPartition
) -> tuple[float, float]:
    """(||S_j f||_inf, ||f||_2 + sqrt(j) ||grad f||_2) for constant fitting."""
    if j < 1:
        raise InvalidExponent("need j >= 1")
    _check_shell(j, partition)
    lhs = lp_norm(low_pass(f, j, partition), np.inf)
    rhs = lp_norm(f, 2) + math.sqrt(j) * lp_norm(spectral_gradient(f), 2)
    return lhs, rhs
