"""mmfluid: pseudospectral 2D fluid coupled to an orientation-space
Fokker-Planck density, with a numerical harness for the a priori
estimates that close the model."""

from .config import ScenarioConfig, load_config, parse_config, rescale_parameters
from .diagnostics import (
    BudgetReport,
    amplification_report,
    compute_budgets,
    gronwall_tracker,
    micro_budget_residual,
    log_bounds_report,
)
from .driver import (
    RunResult,
    export_diagnostics,
    generate_reports,
    run_simulation,
)
from .errors import MMFluidError
from .flow import (
    FlowState,
    VelocityRingBuffer,
    energy_balance,
    make_flow_state,
    nse_step,
    update_time_average,
    vorticity_lr_check,
)
from .grid import (
    Grid2D,
    ScalarField2D,
    VectorField2D,
    biot_savart,
    curl,
    leray_project,
    lp_norm,
    sobolev_norm,
    spectral_divergence,
    spectral_gradient,
)
from .history import HistoryRecorder, RunHistory
from .lpaley import (
    DyadicPartition,
    besov_grad_norm,
    build_partition,
    log_star,
    log_velocity_bound,
    low_pass,
    shell_project,
)
from .micro import (
    MicroManifold,
    ModelParams,
    ParticleDensity,
    compute_N,
    fokker_planck_step,
)
from .snapshot import SnapshotState, load_snapshot, save_snapshot
from .stress import StressCoefficients, StressField, check_stress_bounds, total_sigma

__version__ = "0.1.0"
