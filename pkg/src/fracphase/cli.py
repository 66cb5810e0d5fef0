"""Command-line entry point.

Subcommands: weights, run, example1..example4, rates.  The output directory
resolves, in order: --out-dir flag, FRACPHASE_OUT environment variable,
config [output] dir, current directory.

Exit codes: 0 success with all monitors clean; 2 config error; 3 solver
error (NON_CONVERGED / NEGATIVE_SHIFT); 4 maximum-principle violation;
5 energy-decay violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import CliConfig, ConfigError, parse_config
from .energy import decay_slack, max_principle_check, write_energy_csv
from .grid import field_from_function, read_snapshot, write_snapshot
from .stepper import MeshKind, Scheme, StepError, run
from .weights import (
    WeightKind,
    fbdf2_weights,
    sftr_weights,
    theta_weights,
    validate,
    vartheta_weights,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MAXPRINCIPLE = 4
EXIT_DECAY = 5

_WEIGHT_FNS = {
    "sftr": sftr_weights,
    "theta": theta_weights,
    "vartheta": vartheta_weights,
    "fbdf2": fbdf2_weights,
}

log = logging.getLogger("fracphase")


def _out_dir(args, fallback=".") -> Path:
    if getattr(args, "out_dir", None):
        path = Path(args.out_dir)
    elif os.environ.get("FRACPHASE_OUT"):
        path = Path(os.environ["FRACPHASE_OUT"])
    else:
        path = Path(fallback)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_weights(args) -> int:
    if args.count < 1:
        print(f"config error: --count must be at least 1, got {args.count}", file=sys.stderr)
        return EXIT_CONFIG
    seq = _WEIGHT_FNS[args.kind](args.alpha, args.count - 1)
    report = validate(seq)
    if not report.ok:
        log.warning("weight validation: %s", "; ".join(report.violations[:5]))
    if report.underflow_count:
        log.warning("%d weights below the underflow floor", report.underflow_count)
    body = "\n".join(f"{w:.17g}" for w in seq.values) + "\n"
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


def _initial_field(cfg: CliConfig):
    grid = cfg.run.grid
    if cfg.ic == "random":
        return experiments.random_initial(grid, cfg.run.seed)
    if cfg.ic == "sine":
        return experiments.sine_initial(grid)
    path = cfg.ic.split(":", 1)[1]
    u, _ = read_snapshot(path)
    if u.grid != grid:
        raise ConfigError("BAD_VALUE", f"snapshot grid {u.grid} does not match config grid {grid}")
    return u


def _cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
        if args.ic:
            cfg.ic = args.ic
        u0 = _initial_field(cfg)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _out_dir(args, cfg.out_dir)
    try:
        traj = run(cfg.run, u0)
    except StepError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    header = experiments.config_header(cfg.run, {"ic": cfg.ic})
    header.update(
        {f"{sec}.{k}": v for sec, kv in cfg.raw.items() for k, v in kv.items()}
    )
    write_energy_csv(out / "energy.csv", traj.monitor, header)
    mesh = cfg.run.mesh
    # final state always written; extra requested times snap to mesh nodes
    for n in {mesh.N, *(int(np.argmin(np.abs(mesh.nodes - t))) for t in cfg.snapshot_times)}:
        write_snapshot(
            out / f"snap_alpha{cfg.run.alpha:g}_t{mesh.nodes[n]:g}.dat",
            traj.field(n),
            float(mesh.nodes[n]),
            header,
        )

    mp = max_principle_check(traj)
    if mp.applicable and not mp.ok:
        print(
            f"maximum principle violated at step {mp.first_violation} "
            f"(worst |U| = {mp.worst_linf:.6g})",
            file=sys.stderr,
        )
        return EXIT_MAXPRINCIPLE
    if mesh.kind is MeshKind.UNIFORM and mesh.N >= 1:
        slack = decay_slack(cfg.run.fp_tol, mesh.tau, cfg.run.alpha)
        bad = traj.monitor.decay_violations(slack)
        if bad:
            print(f"energy decay violated at steps {bad[:5]}", file=sys.stderr)
            return EXIT_DECAY
    return EXIT_OK


def _alphas(args, default) -> list[float]:
    return [args.alpha] if args.alpha is not None else list(default)


def _cmd_example1(args) -> int:
    out = _out_dir(args)
    code = EXIT_OK
    for alpha in _alphas(args, (0.3, 0.6, 0.9)):
        res = experiments.run_example1(alpha, seed=args.seed, fast=args.fast, out_dir=out)
        print(f"example1 alpha={alpha:g}: wrote {len(res.snapshot_paths)} snapshots, {res.energy_csv}")
        linf = res.monitor.column("linf")
        if not np.all(linf <= 1.0 + 1e-12):
            print(f"maximum principle violated at alpha={alpha:g}", file=sys.stderr)
            code = max(code, EXIT_MAXPRINCIPLE)
        slack = decay_slack(1e-6, 0.05, alpha)
        if res.monitor.decay_violations(slack):
            print(f"energy decay violated at alpha={alpha:g}", file=sys.stderr)
            code = max(code, EXIT_DECAY)
    return code


def _table_cmd(args, runner, default_alphas, name) -> int:
    out = _out_dir(args)
    for alpha in _alphas(args, default_alphas):
        if name == "example4":
            res = runner(alpha, M=args.M)
            table = res.table
            sweep = res.sweeps[max(res.sweeps)]
            sweep_path = out / f"gamma_sweep_alpha{alpha:g}.csv"
            experiments.write_gamma_sweep_csv(sweep_path, sweep)
            print(f"{name} alpha={alpha:g}: wrote {sweep_path}")
        else:
            table = runner(alpha, M=args.M)
        path = out / f"convergence_{name}_alpha{alpha:g}.csv"
        experiments.write_convergence_csv(path, table)
        print(f"{name} alpha={alpha:g}: wrote {path}")
        for row in table.rows:
            rate = "" if np.isnan(row.rate) else f"{row.rate:.2f}"
            print(
                f"  {row.scheme:>18} N={row.N:<4} {row.tau_or_gamma:<10.6g} "
                f"error={row.error:.4e} rate={rate}"
            )
    return EXIT_OK


def _cmd_rates(args) -> int:
    rates = experiments.compute_rates(args.errors)
    for r in rates:
        print(f"{r:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracphase",
        description="Time-fractional Allen-Cahn solver and experiment harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="emit one weight per line")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kind", choices=sorted(_WEIGHT_FNS), required=True)
    p.add_argument("--count", type=int, required=True, help="number of weights to emit")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(fn=_cmd_weights)

    p = sub.add_parser("run", help="single solve from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--ic", help="override initial condition: random|sine|file:PATH")
    p.add_argument("--out-dir")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("example1", help="random-IC coarsening with monitors")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fast", action="store_true", help="M=100, T=5 desk scale")
    p.add_argument("--out-dir")
    p.set_defaults(fn=_cmd_example1)

    for name, runner, alphas in (
        ("example2", experiments.run_example2, (0.3, 0.6, 0.9)),
        ("example3", experiments.run_example3, (0.3, 0.6, 0.9)),
        ("example4", experiments.run_example4, (0.2, 0.4, 0.6, 0.8)),
    ):
        p = sub.add_parser(name, help=f"reproduce {name} tables")
        p.add_argument("--alpha", type=float)
        p.add_argument("--M", type=int, default=200, help="spatial points per dimension")
        p.add_argument("--out-dir")
        p.set_defaults(fn=_table_cmd, runner=runner, default_alphas=alphas, table_name=name)

    p = sub.add_parser("rates", help="log2 rates from an ordered error list")
    p.add_argument("errors", type=float, nargs="+")
    p.set_defaults(fn=_cmd_rates)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.fn is _table_cmd:
            return _table_cmd(args, args.runner, args.default_alphas, args.table_name)
        return args.fn(args)
    except StepError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
