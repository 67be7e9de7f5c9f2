"""Vorticity-form 2D Navier-Stokes with stress forcing, plus the
sliding-window time average that advects the particles.

The solver is the post-rescaling system with unit viscosity: exact
viscous integrating factor, two-stage explicit (Heun) dealiased
advection, spectral forcing curl(div sigma).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import (
    CflViolation,
    InvalidExponent,
    NonFiniteField,
    NonMonotoneTime,
)
from .grid import Grid2D, ScalarField2D, VectorField2D, biot_savart
from .history import RunHistory
from .stress import StressField

__all__ = [
    "FlowState",
    "VelocityRingBuffer",
    "make_flow_state",
    "curl_div",
    "nse_step",
    "update_time_average",
    "energy_balance",
    "vorticity_lr_check",
]


@dataclass
class FlowState:
    """Mean-zero vorticity with its cached Biot-Savart velocity."""

    omega: ScalarField2D
    t: float
    u: VectorField2D


def make_flow_state(omega: ScalarField2D, t: float = 0.0) -> FlowState:
    vals = omega.values - omega.values.mean()
    omega = ScalarField2D(omega.grid, vals)
    return FlowState(omega, t, biot_savart(omega))


def curl_div(sigma: StressField) -> np.ndarray:
    """Vorticity forcing curl(div sigma) as a physical-space array."""
    g = sigma.grid
    h11, h12, h22 = (sfft.fft2(c) for c in sigma.components())
    # d1 d1 s12 + d1 d2 (s22 - s11) - d2 d2 s12
    hat = (
        -g.kx * g.kx * h12
        - g.kx * g.ky * (h22 - h11)
        + g.ky * g.ky * h12
    )
    return sfft.ifft2(hat).real


def _velocity_hat(grid: Grid2D, w_hat: np.ndarray):
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0
    psi_hat = -w_hat / k2
    psi_hat[0, 0] = 0.0
    return -1j * grid.ky * psi_hat, 1j * grid.kx * psi_hat


def nse_step(
    state: FlowState,
    sigma: StressField | None,
    dt: float,
    source=None,
    cfl_safety: float = 0.5,
) -> FlowState:
    """One integrating-factor Heun step of the vorticity equation.

    ``source``, if given, is a callable t -> array added to curl(div
    sigma); it lets tests feed manufactured right-hand sides.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = state.omega.grid
    hx, hy = grid.h
    u_inf = float(state.u.magnitude().max(initial=0.0))
    if u_inf > 0 and dt > cfl_safety * min(hx, hy) / u_inf:
        raise CflViolation(
            f"dt = {dt:.3e} exceeds {cfl_safety * min(hx, hy) / u_inf:.3e} "
            f"(|u| = {u_inf:.3e})"
        )

    force = curl_div(sigma) if sigma is not None else None
    mask = grid.dealias_mask

    def rhs_hat(w_hat: np.ndarray, t: float) -> np.ndarray:
        u1h, u2h = _velocity_hat(grid, w_hat)
        u1 = sfft.ifft2(u1h).real
        u2 = sfft.ifft2(u2h).real
        wx = sfft.ifft2(1j * grid.kx * w_hat).real
        wy = sfft.ifft2(1j * grid.ky * w_hat).real
        out = -(mask * sfft.fft2(u1 * wx + u2 * wy))
        f = force
        if source is not None:
            f = source(t) if f is None else f + source(t)
        if f is not None:
            out = out + sfft.fft2(f)
        return out

    w_hat = state.omega.hat
    decay = np.exp(-grid.k_squared * dt)
    k1 = rhs_hat(w_hat, state.t)
    predictor = decay * (w_hat + dt * k1)
    k2 = rhs_hat(predictor, state.t + dt)
    w_new = decay * w_hat + 0.5 * dt * (decay * k1 + k2)
    w_new[0, 0] = 0.0

    vals = sfft.ifft2(w_new).real
    if not np.all(np.isfinite(vals)):
        raise NonFiniteField("vorticity became non-finite")
    omega = ScalarField2D(grid, vals)
    return FlowState(omega, state.t + dt, biot_savart(omega))


class VelocityRingBuffer:
    """Velocity snapshots spanning the sliding window of length delta.

    One sample older than the window edge is retained so the trapezoid
    rule can interpolate the integrand at t - delta.
    """

    def __init__(self, delta: float):
        if delta <= 0:
            raise ValueError("window length delta must be positive")
        self.delta = delta
        self.samples: deque = deque()  # (t, u1, u2)

    @property
    def last_time(self) -> float | None:
        return self.samples[-1][0] if self.samples else None


def update_time_average(
    buffer: VelocityRingBuffer, u: VectorField2D, t: float
) -> VectorField2D:
    """Append (u, t) and return (1/delta) * integral of u over the window.

    The divisor is delta even for t < delta, matching the model's
    definition of the averaged velocity.
    """
    last = buffer.last_time
    if last is not None and t <= last:
        raise NonMonotoneTime(f"t = {t} not after previous sample at {last}")
    buffer.samples.append((float(t), u.u1.values.copy(), u.u2.values.copy()))

    edge = t - buffer.delta
    # evict everything strictly older than the sample just before the edge
    while len(buffer.samples) >= 2 and buffer.samples[1][0] <= edge + 1e-14:
        buffer.samples.popleft()

    samples = list(buffer.samples)
    if len(samples) == 1:
        a1, a2 = samples[0][1], samples[0][2]
        return VectorField2D.from_arrays(u.grid, a1.copy(), a2.copy())

    if samples[0][0] < edge:
        # interpolate the integrand at the window edge
        (t0, a1, a2), (t1, b1, b2) = samples[0], samples[1]
        lam = (edge - t0) / (t1 - t0)
        samples[0] = (edge, (1 - lam) * a1 + lam * b1, (1 - lam) * a2 + lam * b2)

    acc1 = np.zeros_like(u.u1.values)
    acc2 = np.zeros_like(u.u2.values)
    for (ta, a1, a2), (tb, b1, b2) in zip(samples[:-1], samples[1:]):
        w = 0.5 * (tb - ta)
        acc1 += w * (a1 + b1)
        acc2 += w * (a2 + b2)
    acc1 /= buffer.delta
    acc2 /= buffer.delta
    return VectorField2D.from_arrays(u.grid, acc1, acc2)


_np_trapz = getattr(np, "trapezoid", np.trapz)


def _trapz(y: np.ndarray, t: np.ndarray) -> float:
    return float(_np_trapz(y, t))


def energy_balance(history: RunHistory) -> tuple[float, float, float]:
    """Kinetic-energy budget: returns (lhs, rhs, margin = rhs - lhs).

    lhs = sup_t [ |u(t)|_2^2 + int_0^t |grad u|_2^2 ],
    rhs = int_0^T |sigma|_2^2 + |u(0)|_2^2.
    """
    history.require_nonempty()
    t = history.t()
    u2 = history.get("u_l2") ** 2
    gu2 = history.get("grad_u_l2") ** 2
    diss = np.zeros_like(gu2)
    diss[1:] = np.cumsum(0.5 * (gu2[1:] + gu2[:-1]) * np.diff(t))
    lhs = float(np.max(u2 + diss))
    rhs = _trapz(history.get("sigma_l2") ** 2, t) + float(u2[0])
    return lhs, rhs, rhs - lhs


def vorticity_lr_check(history: RunHistory, r: float) -> dict:
    """Vorticity L^r budget and the r = 2 dissipation pair.

    Returns constant-free (lhs, rhs) pairs; the fitted constant is
    lhs/rhs, to be tracked for stability rather than asserted.
    """
    if r < 2:
        raise InvalidExponent("need r >= 2")
    history.require_nonempty()
    key = f"omega_r{r:g}"
    if key not in history.series:
        raise KeyError(f"history does not carry omega L^{r} series")
    t = history.t()
    om = history.get(key)
    lhs = float(np.max(om**2))
    rhs = _trapz(history.get(f"div_sigma_r{r:g}") ** 2, t) + float(om[0] ** 2)
    lap_lhs = _trapz(history.get("lap_u_l2") ** 2, t)
    lap_rhs = _trapz(history.get("grad_sigma_l2") ** 2, t) + float(
        history.get("omega_r2")[0] ** 2
    )
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else 0.0,
        "lap_lhs": lap_lhs,
        "lap_rhs": lap_rhs,
    }
