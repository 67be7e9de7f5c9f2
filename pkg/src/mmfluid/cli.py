"""Command-line entry point: simulate, verify, inspect, convert.

Exit codes: 0 success, 2 configuration error, 3 numerical abort
(non-finite field), 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import scipy.fft as sfft

from .config import ConfigInvalid, load_config, rescale_parameters
from .driver import export_diagnostics, generate_reports, run_simulation
from .errors import CorruptSnapshot, MMFluidError, VersionMismatch
from .grid import lp_norm
from .history import RunHistory
from .snapshot import SnapshotState, load_snapshot, save_snapshot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfluid",
        description="Coupled fluid/particle simulator and estimate checker.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and export diagnostics")
    sim.add_argument("config", help="scenario config file")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--snapshot-stride", type=int, default=None)
    sim.add_argument("--report", default=None, help="comma-separated report list")
    sim.add_argument("--r", default=None, help="comma-separated exponents")
    sim.add_argument("--epsilon", type=float, default=None)

    ver = sub.add_parser("verify", help="re-run diagnostics on a saved history")
    ver.add_argument("history_dir", help="directory containing history.npz")
    ver.add_argument("--report", default="energy,vorticity,log,amplification,gronwall")
    ver.add_argument("--r", type=float, default=4.0)
    ver.add_argument("--epsilon", type=float, default=1.0)

    ins = sub.add_parser("inspect", help="print snapshot header and norms")
    ins.add_argument("snapshot", help="snapshot file")

    conv = sub.add_parser("convert", help="physical to rescaled parameter map")
    conv.add_argument("--nu", type=float, required=True)
    conv.add_argument("--tau", type=float, required=True)
    conv.add_argument("--delta", type=float, required=True)
    return parser


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.values["seed"] = args.seed
    if args.snapshot_stride is not None:
        config.values["snapshot_stride"] = args.snapshot_stride
    if args.report is not None:
        config.values["reports"] = args.report
    if args.r is not None:
        config.values["r_values"] = args.r
    if args.epsilon is not None:
        config.values["epsilon"] = args.epsilon

    with sfft.set_workers(max(1, args.threads)):
        result = run_simulation(config)
        r = max(config.r_list) if config.r_list else 4.0
        which = tuple(config.report_list)
        reports = generate_reports(
            result.history, r=r, epsilon=config.epsilon, which=which, result=result
        )
    os.makedirs(args.out, exist_ok=True)
    result.history.save_npz(os.path.join(args.out, "history.npz"))
    export_diagnostics(result.history, reports, args.out, config)
    final = SnapshotState(
        result.history.grid,
        result.f.manifold,
        result.state.t,
        result.state.omega,
        result.f,
        result.sigma,
        result.params,
    )
    save_snapshot(final, os.path.join(args.out, "final.mmf"))
    if result.aborted:
        print(f"aborted: {result.aborted}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"completed {len(result.history)} steps; output in {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    path = os.path.join(args.history_dir, "history.npz")
    history = RunHistory.load_npz(path)
    which = tuple(s.strip() for s in args.report.split(",") if s.strip())
    reports = generate_reports(history, r=args.r, epsilon=args.epsilon, which=which)
    export_diagnostics(history, reports, args.history_dir)
    for name, rep in reports.items():
        if name == "gronwall":
            status = "pass" if rep["dominated"] else "FAIL"
            print(f"{name}: {status} (C2 = {rep['fitted_c2']:.6g})")
        elif name == "energy":
            status = "pass" if rep["margin"] >= -1e-4 else "FAIL"
            print(f"{name}: {status} (margin = {rep['margin']:.6g})")
        else:
            print(f"{name}: computed")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    snap = load_snapshot(args.snapshot)
    p = snap.params
    print(f"grid = {snap.grid.n_x} x {snap.grid.n_y}, n_m = {snap.manifold.n_m}")
    print(f"t = {snap.t!r}")
    print(
        f"delta = {p.delta!r}, b = {p.b!r}, tau = {p.tau!r}, "
        f"nu = {p.nu!r}, s = {snap.manifold.s!r}"
    )
    print(f"|omega|_2 = {lp_norm(snap.omega, 2)!r}")
    print(f"mass = {snap.f.mass()!r}")
    print(f"max |sigma| = {float(snap.sigma.frobenius().max())!r}")
    return EXIT_OK


def _cmd_convert(args) -> int:
    mapping = rescale_parameters(args.nu, args.tau, args.delta)
    for key, value in mapping.items():
        print(f"{key} = {value!r}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "inspect":
            return _cmd_inspect(args)
        return _cmd_convert(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorruptSnapshot, VersionMismatch, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MMFluidError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
