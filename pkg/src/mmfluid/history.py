"""Per-run time series and field snapshots consumed by the diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import EmptyHistory
from .grid import Grid2D, ScalarField2D, VectorField2D, biot_savart
from .lpaley import DyadicPartition, besov_grad_norm, build_partition
from .norms import (
    divergence_of_tensor,
    hessian_lr,
    scalar_lr,
    spectral_h_norm,
    tensor_gradient_lr,
    tensor_h1,
    tensor_lr,
    vector_lr,
)

__all__ = ["RunHistory", "HistoryRecorder"]


@dataclass
class RunHistory:
    """Scalar series at every step plus strided field snapshots."""

    grid: Grid2D
    r_values: tuple[float, ...]
    times: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    snap_times: list = field(default_factory=list)
    omega_snaps: list = field(default_factory=list)
    sigma_snaps: list = field(default_factory=list)
    f_snaps: list = field(default_factory=list)
    snapshot_stride: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def require_nonempty(self):
        if len(self.times) < 2:
            raise EmptyHistory("history needs at least two recorded steps")

    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    def get(self, key: str) -> np.ndarray:
        return np.asarray(self.series[key])

    def n_series(self, r: float) -> np.ndarray:
        """n(t) = |grad sigma|_Lr^2 + |sigma|_H1^2."""
        return self.get(f"grad_sigma_r{r:g}") ** 2 + self.get("sigma_h1") ** 2

    def B_series(self, r: float) -> np.ndarray:
        """Cumulative trapezoid of n(t); nondecreasing by construction."""
        n = self.n_series(r)
        t = self.t()
        out = np.zeros_like(n)
        out[1:] = np.cumsum(0.5 * (n[1:] + n[:-1]) * np.diff(t))
        return out

    def gamma_series(self) -> np.ndarray:
        """Running maximum of g(t) = |grad ubar|_inf."""
        return np.maximum.accumulate(self.get("g_t"))

    def G_series(self, r: float) -> np.ndarray:
        return self.get(f"hess_ubar_r{r:g}") ** 2 + self.get("ubar_h2") ** 2

    def velocity_snapshot(self, i: int) -> VectorField2D:
        omega = ScalarField2D(self.grid, self.omega_snaps[i])
        return biot_savart(omega)

    def save_npz(self, path):
        payload = {
            "times": np.asarray(self.times),
            "snap_times": np.asarray(self.snap_times),
            "r_values": np.asarray(self.r_values),
            "grid": np.asarray(
                [self.grid.n_x, self.grid.n_y, self.grid.length,
                 self.grid.dealias_fraction]
            ),
            "snapshot_stride": np.asarray(self.snapshot_stride),
        }
        for k, v in self.series.items():
            payload[f"series:{k}"] = np.asarray(v)
        if self.omega_snaps:
            payload["omega_snaps"] = np.stack(self.omega_snaps)
            payload["sigma_snaps"] = np.stack(
                [np.stack(s) for s in self.sigma_snaps]
            )
        if self.f_snaps:
            payload["f_snaps"] = np.stack(self.f_snaps)
        np.savez_compressed(path, **payload)

    @classmethod
    def load_npz(cls, path) -> "RunHistory":
        data = np.load(path)
        g = data["grid"]
        grid = Grid2D(int(g[0]), int(g[1]), float(g[2]), float(g[3]))
        hist = cls(grid, tuple(float(r) for r in data["r_values"]))
        hist.times = list(data["times"])
        hist.snap_times = list(data["snap_times"])
        hist.snapshot_stride = int(data["snapshot_stride"])
        for k in data.files:
            if k.startswith("series:"):
                hist.series[k[len("series:"):]] = list(data[k])
        if "omega_snaps" in data.files:
            hist.omega_snaps = list(data["omega_snaps"])
            hist.sigma_snaps = [tuple(s) for s in data["sigma_snaps"]]
        if "f_snaps" in data.files:
            hist.f_snaps = list(data["f_snaps"])
        return hist


class HistoryRecorder:
    """Computes and appends the per-step scalar series."""

    def __init__(self, grid: Grid2D, r_values=(2.0, 4.0), snapshot_stride=1,
                 store_f=False, partition: DyadicPartition | None = None):
        r_values = tuple(float(r) for r in r_values)
        if 2.0 not in r_values:
            r_values = (2.0,) + r_values
        self.history = RunHistory(grid, r_values, snapshot_stride=snapshot_stride)
        self.partition = partition if partition is not None else build_partition(grid)
        self.store_f = store_f
        self._step = 0

    def record(self, t, u: VectorField2D, omega: ScalarField2D, sigma_comps,
               u_bar: VectorField2D | None = None, f_values=None,
               rho_max=0.0, n_max=0.0, mass=0.0):
        """Append one step; sigma_comps is a (t11, t12, t22) tuple of arrays."""
        h = self.history
        grid = h.grid
        s = h.series
        u1, u2 = u.u1.values, u.u2.values
        omega_vals = omega.values
        if u_bar is None:
            u_bar = u

        def put(key, val):
            s.setdefault(key, []).append(float(val))

        h.times.append(float(t))
        put("u_l2", vector_lr(grid, u1, u2, 2))
        put("u_linf", vector_lr(grid, u1, u2, np.inf))
        put("grad_u_l2", scalar_lr(grid, omega_vals, 2))
        put("u_h1", spectral_h_norm(grid, [(u1, 1.0), (u2, 1.0)], 1.0))
        put("u_h2", spectral_h_norm(grid, [(u1, 1.0), (u2, 1.0)], 2.0))
        lap1 = sfft.ifft2(-grid.k_squared * u.u1.hat).real
        lap2 = sfft.ifft2(-grid.k_squared * u.u2.hat).real
        put("lap_u_l2", vector_lr(grid, lap1, lap2, 2))
        put("besov_grad_u", besov_grad_norm(u, self.partition))

        gb1, gb2 = u_bar.u1.hat, u_bar.u2.hat
        gxx = sfft.ifft2(1j * grid.kx * gb1).real
        gxy = sfft.ifft2(1j * grid.ky * gb1).real
        gyx = sfft.ifft2(1j * grid.kx * gb2).real
        gyy = sfft.ifft2(1j * grid.ky * gb2).real
        put("g_t", np.sqrt(gxx**2 + gxy**2 + gyx**2 + gyy**2).max(initial=0.0))
        put("ubar_h2", spectral_h_norm(
            grid, [(u_bar.u1.values, 1.0), (u_bar.u2.values, 1.0)], 2.0))

        d1, d2 = divergence_of_tensor(grid, sigma_comps)
        put("sigma_l2", tensor_lr(grid, sigma_comps, 2))
        put("sigma_linf", tensor_lr(grid, sigma_comps, np.inf))
        put("sigma_h1", tensor_h1(grid, sigma_comps))
        put("div_sigma_l2", vector_lr(grid, d1, d2, 2))
        put("grad_sigma_l2", tensor_gradient_lr(grid, sigma_comps, 2))
        for r in h.r_values:
            put(f"omega_r{r:g}", scalar_lr(grid, omega_vals, r))
            put(f"sigma_r{r:g}", tensor_lr(grid, sigma_comps, r))
            put(f"div_sigma_r{r:g}", vector_lr(grid, d1, d2, r))
            put(f"grad_sigma_r{r:g}", tensor_gradient_lr(grid, sigma_comps, r))
            put(f"hess_u_r{r:g}", hessian_lr(grid, u1, u2, r))
            put(f"hess_ubar_r{r:g}", hessian_lr(
                grid, u_bar.u1.values, u_bar.u2.values, r))
        put("max_rho", rho_max)
        put("max_n", n_max)
        put("mass", mass)

        if self._step % h.snapshot_stride == 0:
            h.snap_times.append(float(t))
            h.omega_snaps.append(omega_vals.copy())
            h.sigma_snaps.append(tuple(c.copy() for c in sigma_comps))
            if self.store_f and f_values is not None:
                h.f_snaps.append(f_values.copy())
        self._step += 1
