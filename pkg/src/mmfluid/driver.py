"""Coupled-run driver: initial-data presets, the simulation loop, report
generation and plain-text export."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .diagnostics import (
    amplification_report,
    compute_budgets,
    gronwall_tracker,
    micro_budget_residual,
    log_bounds_report,
)
from .errors import ConfigInvalid, NonFiniteField
from .flow import (
    FlowState,
    VelocityRingBuffer,
    energy_balance,
    make_flow_state,
    nse_step,
    update_time_average,
    vorticity_lr_check,
)
from .grid import Grid2D, ScalarField2D, VectorField2D
from .history import HistoryRecorder, RunHistory
from .micro import (
    MicroManifold,
    ModelParams,
    ParticleDensity,
    compute_N,
    fokker_planck_step,
)
from .snapshot import load_snapshot
from .stress import StressCoefficients, StressField, total_sigma

__all__ = [
    "RunResult",
    "build_initial_data",
    "run_simulation",
    "generate_reports",
    "export_diagnostics",
]


@dataclass
class RunResult:
    """Final state of a coupled run plus its recorded history."""

    history: RunHistory
    state: FlowState
    f: ParticleDensity
    u_bar: VectorField2D
    sigma: StressField
    params: ModelParams
    coeffs: StressCoefficients
    config: ScenarioConfig
    aborted: str | None = None
    reports: dict = field(default_factory=dict)


def _taylor_green_vorticity(grid: Grid2D, amplitude: float) -> np.ndarray:
    xx, yy = grid.meshgrid()
    return 2.0 * amplitude * np.cos(xx) * np.cos(yy)


def _random_vorticity(grid: Grid2D, rng, amplitude: float) -> np.ndarray:
    import scipy.fft as sfft

    noise = rng.standard_normal((grid.n_x, grid.n_y))
    hat = sfft.fft2(noise)
    mask = (grid.k_magnitude <= 4.0) & (grid.k_squared > 0.0)
    vals = sfft.ifft2(hat * mask).real
    peak = np.abs(vals).max()
    if peak > 0:
        vals *= amplitude / peak
    return vals


def _aligned_density(
    grid: Grid2D,
    manifold: MicroManifold,
    rho0: np.ndarray,
    theta0: np.ndarray,
    a: float,
) -> ParticleDensity:
    """f = (rho0 / 2 pi) (1 + a cos 2(theta - theta0)); nonnegative for a < 1."""
    th = manifold.theta[None, None, :]
    vals = (rho0[..., None] / (2.0 * np.pi)) * (
        1.0 + a * np.cos(2.0 * (th - theta0[..., None]))
    )
    return ParticleDensity(grid, manifold, vals)


def build_initial_data(
    config: ScenarioConfig, grid: Grid2D, manifold: MicroManifold, rng
):
    preset = config.preset
    amp = config.amplitude
    if preset == "file":
        snap = load_snapshot(config.path)
        if (snap.grid.n_x, snap.grid.n_y) != (grid.n_x, grid.n_y):
            raise ConfigInvalid("snapshot grid does not match config grid")
        if snap.manifold.n_m != manifold.n_m:
            raise ConfigInvalid("snapshot manifold does not match config")
        return snap.omega, ParticleDensity(grid, manifold, snap.f.values)

    xx, yy = grid.meshgrid()
    if preset in ("taylor-green", "uniform-f"):
        omega = _taylor_green_vorticity(grid, amp)
        f = ParticleDensity.uniform(grid, manifold, config.rho0)
    elif preset == "aligned-f":
        omega = _taylor_green_vorticity(grid, amp)
        rho0 = 0.4 + 0.3 * np.cos(xx) * np.cos(yy)
        theta0 = 0.5 * np.sin(xx) + 0.5 * np.cos(yy)
        f = _aligned_density(grid, manifold, rho0, theta0, config.alignment)
    elif preset == "random-seeded":
        omega = _random_vorticity(grid, rng, amp)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=5)
        rho0 = config.rho0 * (
            1.0 + 0.4 * np.cos(xx + phases[0]) * np.cos(yy + phases[1])
        )
        theta0 = phases[2] + 0.5 * np.sin(xx + phases[3]) + 0.5 * np.cos(yy + phases[4])
        f = _aligned_density(grid, manifold, rho0, theta0, config.alignment)
    else:
        raise ConfigInvalid(f"unknown preset {preset!r}")

    rho = f.rho().values
    if rho.min() < -1e-12 or rho.max() > 1.0 + 1e-12:
        raise ConfigInvalid("initial macroscopic density must lie in [0, 1]")
    return ScalarField2D(grid, omega), f


def run_simulation(config: ScenarioConfig) -> RunResult:
    """Integrate the coupled system for T and record the full history.

    A NonFiniteField abort is caught and recorded in the result so
    partial diagnostics can still be flushed.
    """
    grid = Grid2D(config.n_x, config.n_y, config.length)
    manifold = MicroManifold(config.n_m, config.s)
    params = ModelParams(
        delta=config.delta,
        b=config.b,
        tau=config.tau,
        nu=config.nu,
        cfl_safety=config.cfl_safety,
    )
    coeffs = StressCoefficients.rod_default(manifold)
    coeffs.k_max = config.k_max
    rng = np.random.default_rng(config.seed)
    omega0, f = build_initial_data(config, grid, manifold, rng)

    state = make_flow_state(omega0)
    buffer = VelocityRingBuffer(params.delta)
    u_bar = update_time_average(buffer, state.u, 0.0)
    recorder = HistoryRecorder(
        grid,
        r_values=config.r_list,
        snapshot_stride=config.snapshot_stride,
    )
    sigma = total_sigma(f, coeffs, params)

    def record():
        recorder.record(
            state.t,
            state.u,
            state.omega,
            sigma.components(),
            u_bar=u_bar,
            rho_max=float(f.rho().values.max()),
            n_max=float(compute_N(f).values.max()),
            mass=f.mass(),
        )

    record()
    n_steps = int(round(config.T / config.dt))
    aborted = None
    try:
        for _ in range(n_steps):
            state = nse_step(state, sigma, config.dt, cfl_safety=config.cfl_safety)
            u_bar = update_time_average(buffer, state.u, state.t)
            f = fokker_planck_step(f, u_bar, config.dt, params)
            sigma = total_sigma(f, coeffs, params)
            record()
    except NonFiniteField as exc:
        aborted = str(exc)
    recorder.history.meta["aborted"] = aborted or ""
    recorder.history.meta["preset"] = config.preset
    return RunResult(
        recorder.history, state, f, u_bar, sigma, params, coeffs, config, aborted
    )


# ---------------------------------------------------------------------------
# report generation and export


def generate_reports(
    history: RunHistory,
    r: float = 4.0,
    epsilon: float = 1.0,
    which=("energy", "vorticity", "log", "amplification", "gronwall"),
    result: RunResult | None = None,
) -> dict:
    reports = {}
    if "energy" in which:
        lhs, rhs, margin = energy_balance(history)
        reports["energy"] = {"lhs": lhs, "rhs": rhs, "margin": margin}
    if "vorticity" in which:
        reports["vorticity"] = vorticity_lr_check(history, r)
    if "log" in which:
        reports["log"] = log_bounds_report(history, r)
    if "amplification" in which:
        reports["amplification"] = amplification_report(history, r, epsilon)
    if "gronwall" in which:
        reports["gronwall"] = gronwall_tracker(compute_budgets(history, r))
    if "microbudget" in which and result is not None:
        reports["microbudget"] = micro_budget_residual(result.f, result.u_bar, result.params)
    return reports


def _inequality_rows(reports: dict):
    rows = []

    def add(report, name, lhs, rhs):
        ratio = lhs / rhs if rhs > 0 else 0.0
        rows.append((report, name, float(lhs), float(rhs), float(ratio)))

    if "energy" in reports:
        e = reports["energy"]
        add("energy", "kinetic_budget", e["lhs"], e["rhs"])
    if "vorticity" in reports:
        v = reports["vorticity"]
        add("vorticity", "lr_budget", v["lhs"], v["rhs"])
        add("vorticity", "dissipation_budget", v["lap_lhs"], v["lap_rhs"])
    if "log" in reports:
        for name, (lhs, rhs) in reports["log"]["pairs"].items():
            add("log", name, lhs, rhs)
    if "amplification" in reports:
        a = reports["amplification"]
        add("amplification", "besov_budget", a["lhs"], a["rhs"])
    return rows


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def export_diagnostics(
    history: RunHistory, reports: dict, out_dir, config: ScenarioConfig | None = None
) -> list[str]:
    """Write series.csv, inequalities.csv and manifest.txt; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    series_path = os.path.join(out_dir, "series.csv")
    keys = sorted(history.series)
    with open(series_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["t"] + keys) + "\n")
        for i, t in enumerate(history.times):
            row = [_fmt(t)] + [_fmt(history.series[k][i]) for k in keys]
            fh.write(",".join(row) + "\n")
    written.append(series_path)

    ineq_path = os.path.join(out_dir, "inequalities.csv")
    with open(ineq_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("report,name,lhs,rhs,ratio\n")
        for report, name, lhs, rhs, ratio in _inequality_rows(reports):
            fh.write(f"{report},{name},{_fmt(lhs)},{_fmt(rhs)},{_fmt(ratio)}\n")
    written.append(ineq_path)

    manifest_path = os.path.join(out_dir, "manifest.txt")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        if config is not None:
            for key, value in config.as_items():
                fh.write(f"config.{key} = {value}\n")
        for key, value in sorted(history.meta.items()):
            fh.write(f"meta.{key} = {value}\n")
        if "gronwall" in reports:
            g = reports["gronwall"]
            fh.write(f"fitted.c1 = {_fmt(g['fitted_c1'])}\n")
            fh.write(f"fitted.C2 = {_fmt(g['fitted_c2'])}\n")
            fh.write(f"fitted.dominated = {g['dominated']}\n")
        if "amplification" in reports:
            a = reports["amplification"]
            fh.write(f"fitted.besov_ratio = {_fmt(a['ratio'])}\n")
            fh.write(f"fitted.epsilon_optimal = {_fmt(a['epsilon_optimal'])}\n")
        if "microbudget" in reports:
            fh.write(f"fitted.microbudget_c = {_fmt(reports['microbudget']['fitted_c'])}\n")
    written.append(manifest_path)
    return written
