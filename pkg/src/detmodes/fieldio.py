"""
On-disk formats: field snapshots, checkpoints, and CSV exports.

Snapshot container (documented byte layout, see also README):

    bytes 0..7    magic b"SPECFLD1"
    bytes 8..11   uint32 little-endian header length H
    next H bytes  UTF-8 JSON header:
                  {"n", "L", "quantity", "time", "dtype": "complex128",
                   "layout": "fft2", "order": "C"}
    next 16*n*n   the coefficient array, C-order complex128 in the standard
                  FFT index layout (row-major over the integer lattice)
    last 32 bytes SHA-256 of the payload bytes

A checkpoint is one snapshot file plus a JSON sidecar carrying
{t, nu, dt, forcing, seed}.  CSV series are written with repr-exact
floats ("%.17g") so reruns of identical configurations are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .grid import Grid, SpectralField
from .solver import FlowState

MAGIC = b"SPECFLD1"
FLOAT_FMT = "%.17g"


class ChecksumError(IOError):
    """Snapshot payload does not match its recorded digest."""


def fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_field_snapshot(
    path: str | Path, field: SpectralField, quantity: str, time: float
) -> None:
    header = {
        "n": field.grid.n,
        "L": field.grid.L,
        "quantity": quantity,
        "time": time,
        "dtype": "complex128",
        "layout": "fft2",
        "order": "C",
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(field.coeffs, dtype=np.complex128).tobytes()
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(len(head)).tobytes())
        fh.write(head)
        fh.write(payload)
        fh.write(digest)


def read_field_snapshot(path: str | Path) -> tuple[SpectralField, dict]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise IOError(f"{path}: not a field snapshot (bad magic)")
    off = len(MAGIC)
    head_len = int(np.frombuffer(raw[off : off + 4], dtype=np.uint32)[0])
    off += 4
    header = json.loads(raw[off : off + head_len].decode("utf-8"))
    off += head_len
    n = int(header["n"])
    nbytes = 16 * n * n
    payload = raw[off : off + nbytes]
    digest = raw[off + nbytes : off + nbytes + 32]
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    coeffs = np.frombuffer(payload, dtype=np.complex128).reshape(n, n)
    grid = Grid(n=n, L=float(header["L"]))
    return SpectralField(grid, coeffs), header


def write_checkpoint(
    directory: str | Path,
    name: str,
    state: FlowState,
    *,
    dt: float,
    forcing_spec: dict | None = None,
    seed: int | None = None,
) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    field_path = directory / f"{name}.field"
    meta_path = directory / f"{name}.json"
    write_field_snapshot(field_path, state.omega, "vorticity", state.t)
    sidecar = {
        "t": state.t,
        "nu": state.nu,
        "dt": dt,
        "forcing": forcing_spec or {},
        "seed": seed,
    }
    meta_path.write_text(json.dumps(sidecar, sort_keys=True, indent=1) + "\n")
    return field_path, meta_path


def read_checkpoint(directory: str | Path, name: str) -> tuple[FlowState, dict]:
    directory = Path(directory)
    field, header = read_field_snapshot(directory / f"{name}.field")
    meta = json.loads((directory / f"{name}.json").read_text())
    state = FlowState(omega=field, t=float(meta["t"]), nu=float(meta["nu"]))
    return state, meta


def write_csv(
    path: str | Path,
    columns: list[str],
    rows: list[list],
    header_params: dict | None = None,
) -> None:
    """Deterministic CSV: '#' comment lines for parameters, %.17g floats."""
    lines = []
    if header_params:
        for k in sorted(header_params):
            lines.append(f"# {k} = {header_params[k]}")
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_shell_norm_csv(
    path: str | Path,
    grid: Grid,
    l2_norms: np.ndarray,
    linf_norms: np.ndarray,
    header_params: dict | None = None,
) -> None:
    """Per-shell norm export: q, lambda_q, l2_norm, linf_norm."""
    rows = []
    for i in range(l2_norms.size):
        q = i - 1
        rows.append([q, grid.shell_wavenumber(q), float(l2_norms[i]), float(linf_norms[i])])
    write_csv(path, ["q", "lambda_q", "l2_norm", "linf_norm"], rows, header_params)


def write_spectra_csv(
    path: str | Path,
    grid: Grid,
    u_l2: np.ndarray,
    omega_l2: np.ndarray,
    omega_linf: np.ndarray,
    header_params: dict | None = None,
) -> None:
    """Plot-ready export: q, lambda_q, u_l2, omega_l2, omega_linf."""
    rows = []
    for i in range(omega_l2.size):
        q = i - 1
        rows.append([
            q,
            grid.shell_wavenumber(q),
            float(u_l2[i]),
            float(omega_l2[i]),
            float(omega_linf[i]),
        ])
    write_csv(path, ["q", "lambda_q", "u_l2", "omega_l2", "omega_linf"], rows, header_params)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
