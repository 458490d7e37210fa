"""File writers for diagnostics and grid snapshots."""

import csv
import re
from pathlib import Path

import numpy as np

ENERGY_HEADER = ["t", "hamiltonian", "px", "py", "mass", "fp_iters", "cg_iters"]


def _fmt(x):
    return f"{float(x):.17g}"


def write_energy_csv(records, path):
    if not records:
        raise ValueError("no diagnostics records to write")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ENERGY_HEADER)
            for r in records:
                w.writerow([_fmt(r.time), _fmt(r.hamiltonian), _fmt(r.total_momentum[0]),
                            _fmt(r.total_momentum[1]), _fmt(r.total_mass),
                            r.fp_iterations, r.cg_iterations])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_energy_csv(path):
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in ENERGY_HEADER}


def write_snapshot_text(field, grid, t, path, name="speed"):
    """Plain-text grid file: header ``# nx ny t name``, then one row per y."""
    values = np.asarray(field, dtype=float).reshape(grid.ny, grid.nx)
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write(f"# {grid.nx} {grid.ny} {_fmt(t)} {name}\n")
            for row in values:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_snapshot_text(path):
    """Return ``(values (ny, nx), t, name)``."""
    with Path(path).open() as fh:
        header = fh.readline().split()
        nx, ny, t = int(header[1]), int(header[2]), float(header[3])
        name = header[4] if len(header) > 4 else ""
        values = np.loadtxt(fh, ndmin=2)
    if values.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny}x{nx} values, got {values.shape}")
    return values, t, name


def write_snapshot_pgm(field, grid, path):
    """8-bit binary graymap of ``field`` scaled linearly from 0 to its max.

    Rows are written top to bottom with increasing ``y`` upwards.
    """
    values = np.asarray(field, dtype=float).reshape(grid.ny, grid.nx)
    vmax = values.max()
    if vmax > 0:
        img = np.clip(np.round(255.0 * values / vmax), 0, 255).astype(np.uint8)
    else:
        img = np.zeros(values.shape, dtype=np.uint8)
    path = Path(path)
    try:
        with path.open("wb") as fh:
            fh.write(f"P5\n{grid.nx} {grid.ny}\n255\n".encode("ascii"))
            fh.write(img[::-1].tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_pgm(path):
    data = Path(path).read_bytes()
    # magic, width, height, maxval, then exactly one whitespace byte
    m = re.match(rb"(P5)\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(m.group(2)), int(m.group(3)), int(m.group(4))
    img = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=m.end()).reshape(h, w)
    return img, maxval


def write_particles_csv(P, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "x", "y", "mx", "my", "D"])
        for b in range(P.n):
            w.writerow([b, _fmt(P.X[b, 0]), _fmt(P.X[b, 1]), _fmt(P.mbar[b, 0]),
                        _fmt(P.mbar[b, 1]), _fmt(P.Dbar[b])])
