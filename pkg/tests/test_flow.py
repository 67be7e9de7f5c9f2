import numpy as np
import pytest

from fieldgen import band_limited_field
from mmfluid.errors import CflViolation, NonMonotoneTime
from mmfluid.flow import (
    VelocityRingBuffer,
    curl_div,
    energy_balance,
    make_flow_state,
    nse_step,
    update_time_average,
    vorticity_lr_check,
)
from mmfluid.grid import ScalarField2D, VectorField2D
from mmfluid.history import HistoryRecorder
from mmfluid.stress import StressField


def taylor_green_state(grid, amp=2.0):
    xx, yy = grid.meshgrid()
    return make_flow_state(ScalarField2D(grid, -amp * np.sin(xx) * np.sin(yy)))


def constant_velocity(grid, c1, c2):
    return VectorField2D.from_arrays(
        grid,
        np.full((grid.n_x, grid.n_y), c1),
        np.full((grid.n_x, grid.n_y), c2),
    )


def test_taylor_green_decay(grid64):
    state = taylor_green_state(grid64)
    w0 = state.omega.values.copy()
    dt = 1e-3
    for _ in range(100):
        state = nse_step(state, None, dt)
    expected = np.exp(-2 * state.t) * w0
    assert np.abs(state.omega.values - expected).max() <= 1e-10


def test_zero_stays_zero(grid64):
    state = make_flow_state(ScalarField2D(grid64, np.zeros((64, 64))))
    state = nse_step(state, StressField.zeros(grid64), 1e-2)
    assert np.abs(state.omega.values).max() == 0.0


def test_manufactured_temporal_order(grid64):
    # omega*(t) = e^{-t} sin x cos y; advection vanishes for this mode,
    # residual source is omega* itself
    xx, yy = grid64.meshgrid()
    shape = np.sin(xx) * np.cos(yy)

    def source(t):
        return np.exp(-t) * shape

    errors = []
    for dt in (4e-3, 2e-3, 1e-3):
        state = make_flow_state(ScalarField2D(grid64, shape))
        n = int(round(0.2 / dt))
        for _ in range(n):
            state = nse_step(state, None, dt, source=source)
        exact = np.exp(-state.t) * shape
        errors.append(np.abs(state.omega.values - exact).max())
    order = np.log2(errors[0] / errors[1]), np.log2(errors[1] / errors[2])
    assert min(order) >= 1.9


def test_curl_div_oracle(grid64):
    xx, _ = grid64.meshgrid()
    sigma = StressField(
        grid64, np.zeros((64, 64)), np.sin(xx), np.zeros((64, 64))
    )
    # d1^2 s12 - d2^2 s12 = -sin x
    assert np.allclose(curl_div(sigma), -np.sin(xx), atol=1e-12)


def test_cfl_guard(grid64):
    state = taylor_green_state(grid64)
    with pytest.raises(CflViolation):
        nse_step(state, None, 1.0)


def test_time_average_constant(grid64):
    delta = 0.1
    buf = VelocityRingBuffer(delta)
    u = constant_velocity(grid64, 2.0, -1.0)
    t = 0.0
    for _ in range(30):
        u_bar = update_time_average(buf, u, t)
        t += 0.01
    assert np.abs(u_bar.u1.values - 2.0).max() <= 1e-12
    assert np.abs(u_bar.u2.values + 1.0).max() <= 1e-12


def test_time_average_half_window(grid64):
    delta = 0.2
    buf = VelocityRingBuffer(delta)
    u = constant_velocity(grid64, 3.0, 0.0)
    t = 0.0
    for _ in range(11):  # reaches t = delta/2
        u_bar = update_time_average(buf, u, t)
        t += 0.01
    assert np.abs(u_bar.u1.values - 1.5).max() <= 1e-12


def test_time_average_oscillation_cancels(grid64):
    delta = 0.2
    buf = VelocityRingBuffer(delta)
    dt = 1e-3
    t = 0.0
    for _ in range(int(2 * delta / dt) + 1):
        u = constant_velocity(grid64, np.cos(2 * np.pi * t / delta), 0.0)
        u_bar = update_time_average(buf, u, t)
        t += dt
    assert np.abs(u_bar.u1.values).max() <= 1e-4  # O(dt^2) quadrature


def test_time_average_tiny_window(grid64):
    buf = VelocityRingBuffer(1e-6)  # delta smaller than the step
    u = constant_velocity(grid64, 1.2, 0.4)
    update_time_average(buf, u, 0.0)
    u_bar = update_time_average(buf, u, 0.01)
    assert np.abs(u_bar.u1.values - 1.2).max() <= 1e-12


def test_time_average_monotone_guard(grid64):
    buf = VelocityRingBuffer(0.1)
    u = constant_velocity(grid64, 1.0, 0.0)
    update_time_average(buf, u, 0.0)
    with pytest.raises(NonMonotoneTime):
        update_time_average(buf, u, 0.0)


def _record_unforced_run(grid, n_steps=100, dt=1e-3):
    state = taylor_green_state(grid)
    recorder = HistoryRecorder(grid, r_values=(2.0, 4.0), snapshot_stride=20)
    zero_sigma = StressField.zeros(grid)

    def rec():
        recorder.record(state.t, state.u, state.omega, zero_sigma.components())

    rec()
    for _ in range(n_steps):
        state = nse_step(state, None, dt)
        rec()
    return recorder.history


def test_energy_balance_taylor_green(grid64):
    history = _record_unforced_run(grid64)
    lhs, rhs, margin = energy_balance(history)
    assert lhs == pytest.approx(2 * np.pi**2, rel=1e-6)
    assert margin >= -1e-6


def test_energy_balance_zero(grid64):
    state = make_flow_state(ScalarField2D(grid64, np.zeros((64, 64))))
    recorder = HistoryRecorder(grid64, snapshot_stride=10)
    z = StressField.zeros(grid64)
    recorder.record(0.0, state.u, state.omega, z.components())
    recorder.record(1e-3, state.u, state.omega, z.components())
    lhs, rhs, _ = energy_balance(recorder.history)
    assert (lhs, rhs) == (0.0, 0.0)


def test_vorticity_budget_unforced(grid64):
    history = _record_unforced_run(grid64)
    rep = vorticity_lr_check(history, 4.0)
    assert rep["ratio"] == pytest.approx(1.0, rel=1e-10)
    assert rep["lap_lhs"] <= rep["lap_rhs"]


def test_vorticity_budget_forced_random(grid64, rng):
    state = taylor_green_state(grid64, amp=1.0)
    sigma = StressField(
        grid64,
        0.1 * band_limited_field(grid64, rng).values,
        0.1 * band_limited_field(grid64, rng).values,
        0.1 * band_limited_field(grid64, rng).values,
    )
    recorder = HistoryRecorder(grid64, r_values=(2.0, 4.0), snapshot_stride=20)
    recorder.record(0.0, state.u, state.omega, sigma.components())
    for _ in range(50):
        state = nse_step(state, sigma, 1e-3)
        recorder.record(state.t, state.u, state.omega, sigma.components())
    rep = vorticity_lr_check(recorder.history, 4.0)
    assert np.isfinite(rep["ratio"]) and rep["ratio"] > 0
