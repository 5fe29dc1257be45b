"""Command-line front end.

    shuttlesim run <config> [--out DIR] [--seed N] [--workers N] [--kind KIND]
    shuttlesim feasibility [--diameter NM] [--voltage V]
    shuttlesim validate <config>

`run` executes the experiment described by a config file and writes CSVs
plus a manifest; `validate` parses a config and reports every problem;
`feasibility` prints the electron-count estimate for a pillar geometry.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import KINDS, ConfigError, load_config, documented_keys
from .experiments import feasibility_estimate, run_experiment
from .trajectory import SimulationFault


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shuttlesim",
        description="Simulate and analyze the single-electron shuttle engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", type=Path, help="config file (key = value [unit])")
    run.add_argument("--out", type=Path, default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override master seed")
    run.add_argument("--workers", type=int, default=None,
                     help="bound on trajectory worker threads")
    run.add_argument("--kind", choices=KINDS, default=None,
                     help="override the config's experiment kind")

    feas = sub.add_parser("feasibility", help="electron-count estimate")
    feas.add_argument("--diameter", type=float, default=5.0, metavar="NM",
                      help="pillar diameter in nm (default 5)")
    feas.add_argument("--voltage", type=float, default=25.0, metavar="V",
                      help="bias voltage in V (default 25)")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("config", type=Path)
    val.add_argument("--keys", action="store_true",
                     help="also list the accepted keys and units")
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    if args.kind is not None:
        cfg = replace(cfg, kind=args.kind)
    try:
        result = run_experiment(
            cfg, out_dir=args.out, seed=args.seed, workers=args.workers
        )
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return 2
    print(f"run kind: {cfg.kind}")
    print(f"output:   {result.out_dir}")
    for path in result.csv_paths:
        print(f"  wrote {path.relative_to(result.out_dir)}")
    print(f"  wrote {result.manifest_path.relative_to(result.out_dir)}")
    return 0


def _cmd_feasibility(args) -> int:
    try:
        est = feasibility_estimate(args.diameter, args.voltage)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"diameter                 {est.diameter_nm:g} nm")
    print(f"voltage                  {est.voltage_v:g} V")
    print(f"capacitance              {est.capacitance_f:.4e} F")
    print(f"electrons N              {est.n_electrons:.3f} (rounds to {est.n_rounded})")
    print(f"N^2 / d                  {est.n_sq_per_meter:.4e} 1/m")
    print(f"single-electron diameter {est.single_electron_diameter_pm:.3f} pm")
    return 0


def _cmd_validate(args) -> int:
    if args.keys:
        print(documented_keys())
        print()
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        for line in exc.errors:
            print(line)
        return 1
    p = cfg.params
    print(f"ok: kind={cfg.kind} n_traj={p.n_traj} t_final={p.t_final} ns "
          f"dt={p.dt} ns seed={p.master_seed}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "feasibility": _cmd_feasibility,
        "validate": _cmd_validate,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
