"""Command line interface: simulate, verify, sweep, report.

Exit codes: 0 success, 1 failed verification / aborted run, 2 bad
configuration (message names the offending field).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_config
from .errors import CflViolation, CheckpointError, ConfigurationError
from .runner import RunAborted, rerender_report, run_simulate, run_sweep
from .verify import run_verify


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig().validate()
    if args.outdir:
        cfg = replace(cfg, outdir=Path(args.outdir))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg.validate()


def _add_common(p):
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--outdir", type=Path, help="override paths.outdir")
    p.add_argument("--seed", type=int, help="override forcing.seed")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlaf",
        description="Pseudo-spectral alpha-model solver and diagnostics harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a simulation, write CSV/checkpoint/report")
    _add_common(p_sim)
    p_sim.add_argument("--resume", type=Path, help="checkpoint to resume from")

    p_ver = sub.add_parser("verify", help="run the property suite, exit 0 iff all pass")
    _add_common(p_ver)

    p_swp = sub.add_parser("sweep", help="run a parameter sweep with a summary CSV")
    _add_common(p_swp)
    p_swp.add_argument("--axis", choices=("alpha", "amplitude"), required=True)
    p_swp.add_argument("--values", type=float, nargs="+", required=True)

    p_rep = sub.add_parser("report", help="re-render report JSON from an existing CSV")
    _add_common(p_rep)
    p_rep.add_argument("--csv", type=Path, required=True, help="diagnostics CSV to read")
    p_rep.add_argument("--out", type=Path, required=True, help="where to write the JSON")

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = _load(args)
            result = run_simulate(cfg, resume_from=args.resume)
            print(f"run complete: {result.csv_path} ({len(result.series.records)} samples)")
            return 0
        if args.command == "verify":
            return 0 if run_verify() else 1
        if args.command == "sweep":
            cfg = _load(args)
            summary = run_sweep(cfg, args.axis, args.values)
            print(f"sweep complete: {summary}")
            return 0
        if args.command == "report":
            cfg = _load(args)
            rerender_report(cfg, args.csv, args.out)
            print(f"report written: {args.out}")
            return 0
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (RunAborted, CflViolation, CheckpointError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
