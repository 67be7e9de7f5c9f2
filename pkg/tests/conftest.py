import numpy as np
import pytest

from mmfluid.config import parse_config
from mmfluid.driver import run_simulation
from mmfluid.grid import Grid2D
from mmfluid.micro import MicroManifold


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(64, 64)


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(32, 32)


@pytest.fixture(scope="session")
def manifold():
    return MicroManifold(64)


def make_config(**overrides):
    """Small coupled scenario with per-test overrides."""
    base = {
        "n_x": 32, "n_y": 32, "n_m": 32,
        "delta": 0.5, "b": 1.0,
        "preset": "aligned-f",
        "T": 0.05, "dt": 1e-3,
        "snapshot_stride": 10,
        "r_values": "2,4",
    }
    base.update(overrides)
    sections = {
        "grid": ("n_x", "n_y", "length"),
        "manifold": ("n_m", "s"),
        "params": ("delta", "b", "tau", "nu", "k_max"),
        "initial": ("preset", "rho0", "alignment", "amplitude", "path"),
        "run": ("T", "dt", "cfl_safety", "snapshot_stride", "seed"),
        "diagnostics": ("reports", "r_values", "epsilon"),
    }
    lines = []
    for section, keys in sections.items():
        lines.append(f"[{section}]")
        for key in keys:
            if key in base:
                lines.append(f"{key} = {base[key]}")
    return parse_config("\n".join(lines))


@pytest.fixture(scope="session")
def small_coupled_run():
    return run_simulation(make_config())


@pytest.fixture(scope="session")
def corpus_runs():
    """Constant-fitting corpus: 8 seeded random runs plus 2 analytic ones,
    at desk scale and dt = 1e-3."""
    runs = []
    common = dict(n_x=64, n_y=64, n_m=64, T=0.1, dt=1e-3, delta=0.5)
    for seed in range(8):
        runs.append(run_simulation(make_config(
            preset="random-seeded", seed=seed, b=float(seed % 2), **common)))
    runs.append(run_simulation(make_config(preset="taylor-green", b=0.0, **common)))
    runs.append(run_simulation(make_config(preset="aligned-f", b=1.0, **common)))
    for run in runs:
        assert run.aborted is None
    return runs


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
