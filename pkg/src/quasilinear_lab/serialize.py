"""Binary and CSV storage of fields, trajectory checkpoints and content hashes.

Binary layout (all little-endian)::

    magic   4 bytes  b"QLFD"
    version uint32
    dim     uint32
    role    uint32   (0 velocity, 1 pressure, 2 scalar)
    n_cells dim x uint32
    lengths dim x float64
    bc      2*dim x uint8  (0 periodic, 1 no_slip, 2 pure_slip)
    p       float64
    payload float64 samples, component after component, C order
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidFieldError, TrajectoryError
from .grid import BC_TAGS, ROLES, VELOCITY, Field, GridSpec
from .spaces import Trajectory

MAGIC = b"QLFD"
VERSION = 1


def field_to_bytes(u: Field) -> bytes:
    g = u.grid
    head = [MAGIC, struct.pack("<III", VERSION, g.dim, ROLES.index(u.role)),
            struct.pack(f"<{g.dim}I", *g.n_cells), struct.pack(f"<{g.dim}d", *g.lengths),
            bytes(BC_TAGS.index(tag) for pair in g.bc for tag in pair), struct.pack("<d", g.p)]
    payload = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in u.values)
    return b"".join(head) + payload


def field_from_bytes(data: bytes) -> Field:
    if data[:4] != MAGIC:
        raise InvalidFieldError("not a field file (bad magic)")
    version, dim, role = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise InvalidFieldError(f"unsupported field format version {version}")
    off = 16
    n_cells = struct.unpack_from(f"<{dim}I", data, off)
    off += 4 * dim
    lengths = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    codes = data[off:off + 2 * dim]
    off += 2 * dim
    (p,) = struct.unpack_from("<d", data, off)
    off += 8
    bc = tuple((BC_TAGS[codes[2 * a]], BC_TAGS[codes[2 * a + 1]]) for a in range(dim))
    grid = GridSpec(dim, n_cells, lengths, bc, p)
    flat = np.frombuffer(data, dtype="<f8", offset=off).astype(float)
    return Field.from_vector(grid, flat, ROLES[role])


def write_field(path, u: Field) -> None:
    Path(path).write_bytes(field_to_bytes(u))


def read_field(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(path, u: Field) -> None:
    """One row per sample: component, indices, coordinates, value."""
    g = u.grid
    axes = "xyz"[:g.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component"] + [f"i{a}" for a in axes] + list(axes) + ["value"])
        for c, vals in enumerate(u.values):
            coords = g.component_coords(c if u.role == VELOCITY else None)
            for idx in np.ndindex(vals.shape):
                w.writerow([c, *idx, *(repr(float(coords[a][k])) for a, k in enumerate(idx)),
                            repr(float(vals[idx]))])


def git_blob_sha1(data: bytes) -> str:
    """Content hash in the format ``git hash-object`` produces."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_checkpoints(traj: Trajectory, directory) -> Path:
    """Stream the states to ``state_XXXXX.bin`` plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for k, s in enumerate(traj.states):
        write_field(d / f"state_{k:05d}.bin", s)
    status = traj.status if not traj.blew_up else f"blowup({traj.blowup_time!r})"
    manifest = {"t0": traj.t0, "dt": traj.dt, "count": len(traj), "status": status}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return d


def read_checkpoints(directory) -> Trajectory:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
    except FileNotFoundError as exc:
        raise TrajectoryError(f"no manifest in {d}") from exc
    states = [read_field(d / f"state_{k:05d}.bin") for k in range(manifest["count"])]
    status = manifest["status"]
    if status.startswith("blowup("):
        return Trajectory(manifest["t0"], manifest["dt"], states, "blowup", float(status[7:-1]))
    return Trajectory(manifest["t0"], manifest["dt"], states, status)
