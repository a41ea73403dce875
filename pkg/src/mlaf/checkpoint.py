"""Binary checkpoints: fixed header plus raw Hermitian-packed coefficients.

Layout (all little-endian):

    magic   4 bytes  b"MLAF"
    version u32      1
    n       u32
    kind    u32      0 = ml-alpha, 1 = leray-alpha, 2 = nse
    L       f64
    nu      f64
    alpha   f64
    t       f64
    seed    i64
    data    3 arrays of complex128, shape (n, n, n//2 + 1), C order

Round trips are bit-identical, which is what makes deterministic resume
possible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .model import ModelKind, ModelParams
from .spectral import SpectralVectorField, TorusGrid

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint"]

MAGIC = b"MLAF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddddq")
_KIND_CODE = {ModelKind.ML_ALPHA: 0, ModelKind.LERAY_ALPHA: 1, ModelKind.NSE: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


@dataclass(frozen=True)
class Checkpoint:
    n: int
    L: float
    nu: float
    alpha: float
    kind: ModelKind
    t: float
    seed: int
    coeffs: np.ndarray


def save_checkpoint(
    path, u: SpectralVectorField, params: ModelParams, t: float, seed: int
):
    g = u.grid
    header = _HEADER.pack(
        MAGIC, VERSION, g.n, _KIND_CODE[params.kind], g.L, params.nu, params.alpha, t, seed
    )
    data = np.ascontiguousarray(u.coeffs, dtype="<c16")
    Path(path).write_bytes(header + data.tobytes())


def load_checkpoint(path) -> Checkpoint:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, n, kind_code, L, nu, alpha, t, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    if kind_code not in _CODE_KIND:
        raise CheckpointError(f"{path}: unknown model kind code {kind_code}")
    shape = (3, n, n, n // 2 + 1)
    expected = _HEADER.size + int(np.prod(shape)) * 16
    if len(blob) != expected:
        raise CheckpointError(
            f"{path}: payload size {len(blob)} does not match header (expected {expected})"
        )
    coeffs = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size).reshape(shape).copy()
    return Checkpoint(
        n=n, L=L, nu=nu, alpha=alpha, kind=_CODE_KIND[kind_code], t=t, seed=seed, coeffs=coeffs
    )


def state_from_checkpoint(ck: Checkpoint, grid: TorusGrid) -> SpectralVectorField:
    if grid.n != ck.n or grid.L != ck.L:
        raise CheckpointError(
            f"checkpoint grid ({ck.n}, L = {ck.L}) does not match run grid "
            f"({grid.n}, L = {grid.L})"
        )
    return SpectralVectorField(grid, ck.coeffs, solenoidal=True)
