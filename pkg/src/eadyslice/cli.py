"""Command-line driver.

Subcommands:
  run       full protocol: init -> breed -> reset clock -> integrate
  init      produce only the bred initial state (checkpoint + snapshot)
  diagnose  recompute diagnostics from a directory of snapshots
  compare   advective vs vector-invariant twin runs, noise-metric report

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import driver, initial, runio, timestep
from .domain import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eadyslice",
        description="Compressible vertical-slice frontogenesis testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", default=None,
                       help="key = value config file (defaults: control run)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides config out_dir)")
        p.add_argument("--seed-free", action="store_true",
                       help="reserved; the simulator has no random numbers")

    p_run = sub.add_parser("run", help="run the full experiment protocol")
    common(p_run)
    p_run.add_argument("--dry-run", action="store_true",
                       help="validate and echo the config, do not integrate")
    p_run.add_argument("--resume", metavar="PATH", default=None,
                       help="continue from a checkpoint")

    p_init = sub.add_parser("init", help="write the bred initial state only")
    common(p_init)

    p_diag = sub.add_parser("diagnose",
                            help="recompute diagnostics from snapshots")
    p_diag.add_argument("--in", dest="in_dir", metavar="DIR", required=True)
    p_diag.add_argument("--out", metavar="FILE", default=None)

    p_cmp = sub.add_parser("compare",
                           help="advective vs vector-invariant twin runs")
    common(p_cmp)
    p_cmp.add_argument("--day", type=float, default=6.0,
                       help="comparison day (default 6)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "diagnose":
            driver.diagnose_protocol(args.in_dir, args.out)
            return EXIT_OK

        cfg = runio.parse_config(args.config)
        if args.out is not None:
            cfg.out_dir = args.out

        if args.command == "run":
            if args.dry_run:
                sys.stdout.write(runio.config_to_text(cfg))
                return EXIT_OK
            summary = driver.run_protocol(cfg, resume=args.resume)
            print(f"done: {summary['out_dir']}")
            return EXIT_OK
        if args.command == "init":
            summary = driver.run_protocol(cfg, stop_after_init=True)
            print(f"bred state at {summary['checkpoint']} "
                  f"(t_breed = {summary['t_breed'] / 3600.0:.2f} h)")
            return EXIT_OK
        if args.command == "compare":
            report = driver.compare_protocol(cfg, args.day)
            print(f"noise metric ratio (vector-invariant / advective): "
                  f"{report['ratio']:.2f}")
            return EXIT_OK
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (timestep.NewtonError, timestep.CFLError,
            timestep.PreconditionerError, initial.BreedingError,
            initial.HydrostaticSolveError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (runio.SnapshotError, runio.CheckpointError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
