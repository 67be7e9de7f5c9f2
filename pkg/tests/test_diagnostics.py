import numpy as np
import pytest

from fieldgen import band_limited_field
from mmfluid.diagnostics import (
    amplification_report,
    compute_budgets,
    comparison_ode_oracle,
    gronwall_tracker,
    integrate_comparison_ode,
    micro_budget_residual,
    log_bounds_report,
    nonlinear_identity_residual,
    shell_decay_slope,
    stress_duhamel_gradient,
)
from mmfluid.errors import InvalidEpsilon, InvalidExponent
from mmfluid.flow import make_flow_state, nse_step
from mmfluid.grid import Grid2D, ScalarField2D, biot_savart
from mmfluid.history import HistoryRecorder
from mmfluid.micro import ModelParams, ParticleDensity
from mmfluid.stress import StressField


def unforced_history(grid, n_steps=100, dt=1e-3, stride=20):
    xx, yy = grid.meshgrid()
    state = make_flow_state(ScalarField2D(grid, -2 * np.sin(xx) * np.sin(yy)))
    recorder = HistoryRecorder(grid, r_values=(2.0, 4.0), snapshot_stride=stride)
    z = StressField.zeros(grid)
    recorder.record(state.t, state.u, state.omega, z.components())
    for _ in range(n_steps):
        state = nse_step(state, None, dt)
        recorder.record(state.t, state.u, state.omega, z.components())
    return recorder.history


def constant_sigma_history(grid, sigma, n_records=21, dt=5e-3):
    zero = ScalarField2D(grid, np.zeros((grid.n_x, grid.n_y)))
    state = make_flow_state(zero)
    recorder = HistoryRecorder(grid, r_values=(2.0, 4.0), snapshot_stride=1)
    for i in range(n_records):
        recorder.record(i * dt, state.u, state.omega, sigma.components())
    return recorder.history


@pytest.fixture(scope="module")
def tg_history(grid64):
    return unforced_history(grid64)


def test_budget_oracles_taylor_green(tg_history):
    b = compute_budgets(tg_history, 4.0)
    assert b.K0 == pytest.approx(2 * np.pi**2, rel=1e-8)
    T = b.T
    e1_exact = 6 * np.pi**2 * (1 - np.exp(-4 * T)) / 4
    assert b.E1 == pytest.approx(e1_exact, rel=1e-5)
    assert b.all_finite()


def test_budget_B_monotone_and_consistent(small_coupled_run):
    b = compute_budgets(small_coupled_run.history, 4.0)
    assert np.all(np.diff(b.B_t) >= -1e-15)
    # n = dB/dt to quadrature order
    t = b.times
    db = np.gradient(b.B_t, t)
    interior = slice(1, -1)
    assert np.allclose(db[interior], b.n_t[interior],
                       rtol=1e-2, atol=1e-8 * max(b.n_t.max(), 1.0))


def test_budgets_reject_bad_exponent(tg_history):
    with pytest.raises(InvalidExponent):
        compute_budgets(tg_history, 2.0)


def test_identity_residual_random(grid64, rng):
    omega = band_limited_field(grid64, rng, k_cut=10.0)
    u = biot_savart(omega)
    assert nonlinear_identity_residual(u, omega) <= 1e-10


def test_log_bounds_pairs_finite(tg_history):
    rep = log_bounds_report(tg_history, 4.0)
    for name, (lhs, rhs) in rep["pairs"].items():
        assert np.isfinite(lhs) and np.isfinite(rhs), name
        assert lhs >= 0 and rhs >= 0
    assert rep["identity_residual_max"] <= 1e-10


def test_duhamel_zero_for_unforced(tg_history, grid64):
    f_terms = stress_duhamel_gradient(tg_history)
    for fhat in f_terms:
        assert np.abs(fhat).max() == 0.0
    rep = amplification_report(tg_history, 4.0, 1.0)
    assert np.all(rep["shell_integrals"] == 0.0)
    assert rep["block0_integral"] == 0.0


def test_amplification_epsilon_guard(tg_history):
    with pytest.raises(InvalidEpsilon):
        amplification_report(tg_history, 4.0, 0.0)


def test_monochromatic_sigma_shell_concentration(grid64):
    q0 = 3
    xx, _ = grid64.meshgrid()
    mode = np.sin(2.0**q0 * xx)
    # put the mode in t12: its divergence is divergence-free and
    # survives the Leray projection (a t11-only x-mode would not)
    sigma = StressField(grid64, np.zeros_like(mode), mode, np.zeros_like(mode))
    history = constant_sigma_history(grid64, sigma)
    rep = amplification_report(history, 4.0, 1.0)
    ints = rep["shell_integrals"]
    inside = ints[q0 - 1 : q0 + 2].sum()
    outside = ints.sum() - inside
    assert outside <= 1e-10 * max(inside, 1e-300)
    # high shells beyond the populated one: slope at least as steep as -(1 - 2/r)
    slope = shell_decay_slope(ints, q0 + 2)
    assert slope <= -(1 - 2 / 4.0)


def test_broadband_sigma_high_shell_bound(grid64, rng):
    sigma = StressField(
        grid64,
        band_limited_field(grid64, rng, k_cut=20.0).values,
        band_limited_field(grid64, rng, k_cut=20.0).values,
        band_limited_field(grid64, rng, k_cut=20.0).values,
    )
    history = constant_sigma_history(grid64, sigma)
    rep = amplification_report(history, 4.0, 1.0)
    assert np.all(np.isfinite(rep["shell_integrals"]))
    # high shells must sit under the 2^{-q(1-2/r)} envelope up to a constant
    active = rep["shell_integrals"] > 0
    ratios = rep["shell_integrals"][active] / rep["high_bound"][active]
    assert np.isfinite(ratios).all()
    assert np.isfinite(rep["ratio"])


def test_amplification_on_coupled_run(small_coupled_run):
    rep = amplification_report(small_coupled_run.history, 4.0, 1.0)
    assert rep["lhs"] <= rep["rhs"] * max(rep["ratio"], 1.0) + 1e-12
    assert rep["decomposition_residual_max"] < 0.05
    assert 0 < rep["epsilon_optimal"] < np.inf
    assert rep["rhs_at_optimal"] <= rep["rhs"] + 1e-12


def test_micro_budget_x_independent(manifold):
    grid = Grid2D(16, 16)
    th = manifold.theta
    vals = np.broadcast_to(
        ((1 + 0.5 * np.cos(2 * th)) / (2 * np.pi))[None, None, :],
        (16, 16, manifold.n_m),
    ).copy()
    f = ParticleDensity(grid, manifold, vals)
    u0 = biot_savart(ScalarField2D(grid, np.zeros((16, 16))))
    rep = micro_budget_residual(f, u0, ModelParams(delta=0.5, b=0.0))
    assert np.abs(rep["N"]).max() <= 1e-12
    for term in ("I", "II", "III", "IV"):
        assert np.abs(rep[term]).max() <= 1e-12


def test_micro_budget_pure_dissipation(manifold):
    grid = Grid2D(32, 32)
    xx, _ = grid.meshgrid()
    th = manifold.theta
    vals = (1 + 0.4 * np.cos(xx)[..., None] * np.cos(2 * th)[None, None, :]) / (2 * np.pi)
    f = ParticleDensity(grid, manifold, vals)
    u0 = biot_savart(ScalarField2D(grid, np.zeros((32, 32))))
    rep = micro_budget_residual(f, u0, ModelParams(delta=0.5, b=0.0))
    for term in ("I", "II", "III", "IV"):
        assert np.abs(rep[term]).max() <= 1e-12
    assert np.all(rep["D"] >= -1e-14)
    assert rep["material_dN_dt"].max() <= 1e-8


def test_micro_budget_coupled_terms_finite(small_coupled_run):
    rep = micro_budget_residual(
        small_coupled_run.f, small_coupled_run.u_bar, small_coupled_run.params
    )
    for term in ("N", "D", "I", "II", "III", "IV", "material_dN_dt"):
        assert np.all(np.isfinite(rep[term])), term
    assert np.isfinite(rep["fitted_c"])


def test_comparison_ode_selftest():
    rk4 = integrate_comparison_ode(1.0, 1.0, np.linspace(0.0, 1.0, 101))[-1]
    oracle = comparison_ode_oracle(1.0, 1.0, 1.0)
    assert abs(rk4 - oracle) / oracle <= 1e-8


def test_gronwall_zero_run(grid64):
    history = constant_sigma_history(grid64, StressField.zeros(grid64), n_records=5)
    rep = gronwall_tracker(compute_budgets(history, 4.0))
    assert np.all(rep["B_t"] == 0.0)
    assert rep["dominated"]


def test_gronwall_coupled_run(small_coupled_run):
    rep = gronwall_tracker(compute_budgets(small_coupled_run.history, 4.0))
    assert rep["dominated"]
    assert np.isfinite(rep["fitted_c1"]) and np.isfinite(rep["fitted_c2"])
    assert rep["ode_selftest_rel_err"] <= 1e-8
