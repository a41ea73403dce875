"""Input validation for run artifacts.

The diagnostics CSV header is structural:

    t,H0..Hk,Hbar0..Hbark,Phi0..Phik,sup_ubar,sup_grad_ubar,inj,visc,dEdt

for some moment order k >= 2.  Sweep summaries are keyed by required column
names.  Anything that does not match is refused with the missing column
named, so a truncated or foreign CSV fails loudly instead of plotting
garbage.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

TAIL_COLUMNS = ["sup_ubar", "sup_grad_ubar", "inj", "visc", "dEdt"]
SWEEP_REQUIRED = ["value", "Re", "Gr", "eps", "ell_lambda_k_inv"]


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def expected_header(n_max: int) -> list:
    cols = ["t"]
    for block in ("H", "Hbar", "Phi"):
        cols += [f"{block}{m}" for m in range(n_max + 1)]
    return cols + TAIL_COLUMNS


def infer_n_max(header: list) -> int:
    """Moment order k implied by the header, validated exactly."""
    if not header or header[0] != "t":
        raise SchemaError("diagnostics CSV: missing column 't'")
    k = 0
    while f"H{k + 1}" in header:
        k += 1
    if k < 2:
        raise SchemaError("diagnostics CSV: missing column 'H2' (need moments to order 2)")
    want = expected_header(k)
    if header != want:
        missing = [c for c in want if c not in header]
        if missing:
            raise SchemaError(f"diagnostics CSV: missing column '{missing[0]}'")
        raise SchemaError("diagnostics CSV: columns out of order or extra columns present")
    return k


def load_diagnostics(path) -> dict:
    """Parse a diagnostics CSV into named float arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        n_max = infer_n_max(header)
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise SchemaError(f"{path}: truncated row with {len(row)} fields")
            rows.append([float(v) for v in row])
    if len(rows) < 2:
        raise SchemaError(f"{path}: need at least two samples")
    arr = np.array(rows)
    out = {"n_max": n_max, "t": arr[:, 0]}
    idx = 1
    for block in ("H", "Hbar", "Phi"):
        out[block] = arr[:, idx : idx + n_max + 1]
        idx += n_max + 1
    for name in TAIL_COLUMNS:
        out[name] = arr[:, idx]
        idx += 1
    return out


def load_report(path) -> dict:
    try:
        rep = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if rep.get("schema") != "mlaf-run-report/1":
        raise SchemaError(f"{path}: missing column 'schema' (not an mlaf run report)")
    return rep


def load_sweep_summary(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        for col in SWEEP_REQUIRED:
            if col not in reader.fieldnames:
                raise SchemaError(f"sweep summary: missing column '{col}'")
        rows = list(reader)
    if len(rows) < 3:
        raise SchemaError(f"{path}: need at least three sweep points")
    out = {}
    for col in reader.fieldnames:
        try:
            out[col] = np.array([float(r[col]) for r in rows])
        except ValueError:
            continue  # non-numeric columns are skipped
    return out
