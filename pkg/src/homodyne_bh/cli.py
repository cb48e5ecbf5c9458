"""Command-line entry point: ``homodyne-bh {sweep,trajectory,verify}``.

Configuration comes from a TOML file (``--config``) with sections
``[model] [measurement] [sim] [micro] [sweep] [analysis] [run]``; any key
can be overridden through ``HOMODYNE_BH_<SECTION>__<KEY>=<toml value>``.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import detect_jumps, ensemble_statistics, welch_psd
from .config import ConfigError, RunConfig, config_to_dict, dumps, load_config
from .fock import enumerate_basis
from .groundstate import ConvergenceError, SweepResult, ground_state, order_parameter_sweep
from .operators import build_bose_hubbard, build_measurement_operator
from .sse import NumericalBlowupError, prepare_hamiltonian, run_ensemble
from .verify import SUITES, run_suite, suite_passed, write_report

BLOCK = 32


def _echo(cfg: RunConfig, out: Path) -> None:
    (out / "config.echo").write_text(dumps(config_to_dict(cfg)), encoding="utf-8")


def _export(out: Path, **ops) -> None:
    for name, op in ops.items():
        op.write_table(out / f"{name}.txt")


def cmd_sweep(cfg: RunConfig, out: Path, threads: int = 1, export: bool = False) -> int:
    grid = cfg.sweep.values()
    basis = enumerate_basis(cfg.model.L, cfg.model.N)
    if export:
        _export(out, hamiltonian=build_bose_hubbard(cfg.model, basis),
                measurement=build_measurement_operator(cfg.measurement, basis, cfg.model.boundary))
    spec = cfg.measurement
    try:
        if threads > 1 and len(grid) > 1:
            chunks = [list(c) for c in np.array_split(grid, min(threads, len(grid))) if len(c)]
            with ProcessPoolExecutor(threads) as pool:
                parts = list(pool.map(order_parameter_sweep, [cfg.model] * len(chunks), chunks,
                                      [spec] * len(chunks)))
            rows = [r for part in parts for r in part.rows]
            result = SweepResult(rows)
        else:
            result = order_parameter_sweep(cfg.model, grid, spec, basis)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result.write_csv(out / "sweep.csv")
    return 0


def _initial_state(cfg: RunConfig, basis, H) -> np.ndarray:
    init = cfg.initial_state
    if init == "ground_state":
        return ground_state(H).state
    if init == "mott":
        if cfg.model.N % cfg.model.L:
            raise ConfigError("run.initial_state = 'mott' needs N divisible by L")
        return basis.vector([cfg.model.N // cfg.model.L] * cfg.model.L)
    if isinstance(init, list):
        return basis.vector(init)
    raise ConfigError(f"run.initial_state: unknown value {init!r}")


def _run_block(args):
    psi0, H, M, sim, indices = args
    return run_ensemble(psi0, H, M, sim, indices)


def cmd_trajectory(cfg: RunConfig, out: Path, threads: int = 1, export: bool = False) -> int:
    basis = enumerate_basis(cfg.model.L, cfg.model.N)
    H_atm = build_bose_hubbard(cfg.model, basis)
    M = build_measurement_operator(cfg.measurement, basis, cfg.model.boundary)
    H = prepare_hamiltonian(H_atm, M, cfg.sim, cfg.micro)
    if export:
        _export(out, hamiltonian=H, measurement=M)
    psi0 = _initial_state(cfg, basis, H_atm)
    n = cfg.n_trajectories
    # fixed block layout keeps results independent of the worker count
    blocks = [np.arange(s, min(s + BLOCK, n)) for s in range(0, n, BLOCK)]
    jobs = [(psi0, H, M, cfg.sim, b) for b in blocks]
    try:
        if threads > 1 and len(blocks) > 1:
            with ProcessPoolExecutor(threads) as pool:
                results = list(pool.map(_run_block, jobs))
        else:
            results = [_run_block(j) for j in jobs]
    except NumericalBlowupError as exc:
        print(f"error: numerical blowup in trajectory {exc.index} at t={exc.time:.6g}: {exc}", file=sys.stderr)
        return 1
    eig = np.linalg.eigvalsh(M.to_dense()) if M.dim <= 4096 else None
    records = [res.record(i) for res in results for i in range(len(res.indices))]
    for rec in records:
        rec.write_csv(out / f"traj_{rec.index}.csv")
        kept = rec.after(cfg.sim.burn_in)
        if eig is not None and kept.times.size:
            rep = detect_jumps(kept.expectation, eig, cfg.analysis.dwell_min, cfg.analysis.hysteresis,
                               times=kept.times)
            rep.write_csv(out / f"jumps_{rec.index}.csv")
        seg = cfg.analysis.segment_length
        if kept.times.size >= 2 * seg:
            welch_psd(kept.signal, rec.dt, seg).write_csv(out / f"psd_{rec.index}.csv")
    ensemble_statistics(records).write_csv(out / "ensemble_stats.csv")
    meta = config_to_dict(cfg)
    meta["meta"] = {
        "code_version": __version__,
        "seed": cfg.sim.seed,
        "dt": results[0].dt,
        "gamma": cfg.sim.gamma,
        "n_steps": int(results[0].times.size),
        "dim": basis.dim,
    }
    (out / "ensemble.meta").write_text(dumps(meta), encoding="utf-8")
    return 0


def cmd_verify(cfg: RunConfig, out: Path, suite: str) -> int:
    kw = {"n_traj": max(cfg.n_trajectories, 1), "seed": cfg.sim.seed} if suite == "ensemble" else {}
    if suite == "ensemble" and cfg.n_trajectories == 1:
        kw["n_traj"] = 2000
    rows = run_suite(suite, cfg.micro, **kw)
    write_report(rows, out / f"report_{suite}.csv")
    failed = [r for r in rows if r.passed is False]
    for r in failed:
        print(f"tolerance violated: {r.check} at {r.parameter_point}: error {r.error:.3e} > {r.tolerance:.3e}",
              file=sys.stderr)
    return 0 if suite_passed(rows) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory (default: run.output_dir)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--export-operators", action="store_true",
                        help="write dense operator tables (row col real imag)")
    parser = argparse.ArgumentParser(prog="homodyne-bh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="ground-state coherence versus U/J")
    sub.add_parser("trajectory", parents=[common], help="SSE trajectory ensemble")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.sim.seed = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        out = args.out or Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _echo(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.threads, args.export_operators)
        if args.command == "trajectory":
            return cmd_trajectory(cfg, out, args.threads, args.export_operators)
        return cmd_verify(cfg, out, args.suite)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
