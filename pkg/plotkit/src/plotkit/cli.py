"""plotkit CLI: ``plot --kind K --in PATHS --out PATH``.

Input paths per kind:

    timeseries   diagnostics.csv
    ladder       diagnostics.csv report.json
    spectrum     report.json
    scaling      sweep summary.csv

Exit codes: 0 on success, 2 on schema mismatch (message names the missing
column), 1 on other errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import ladder_figure, scaling_figure, spectrum_figure, timeseries_figure
from .schema import SchemaError, load_diagnostics, load_report, load_sweep_summary


def build_figure(kind: str, inputs: list, ycol: str = "ell_lambda_k_inv"):
    if kind == "timeseries":
        return timeseries_figure(load_diagnostics(inputs[0]))
    if kind == "ladder":
        if len(inputs) < 2:
            raise SchemaError("ladder figures need diagnostics.csv and report.json")
        return ladder_figure(load_diagnostics(inputs[0]), load_report(inputs[1]))
    if kind == "spectrum":
        return spectrum_figure(load_report(inputs[0]))
    if kind == "scaling":
        return scaling_figure(load_sweep_summary(inputs[0]), ycol=ycol)
    raise SchemaError(f"unknown figure kind {kind!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one figure from run artifacts")
    p.add_argument("--kind", required=True,
                   choices=("timeseries", "ladder", "spectrum", "scaling"))
    p.add_argument("--in", dest="inputs", nargs="+", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--ycol", default="ell_lambda_k_inv",
                   help="sweep column for scaling figures")
    args = parser.parse_args(argv)

    try:
        for path in args.inputs:
            if not path.exists():
                print(f"plotkit: input not found: {path}", file=sys.stderr)
                return 1
        fig, meta = build_figure(args.kind, args.inputs, ycol=args.ycol)
    except SchemaError as exc:
        print(f"plotkit: schema error: {exc}", file=sys.stderr)
        return 2
    args.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(args.out)
    extra = ""
    if meta.get("fitted_slope") is not None:
        extra = f" (fitted slope {meta['fitted_slope']:.3f})"
    print(f"wrote {args.out}{extra}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
