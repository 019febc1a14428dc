"""Self-describing binary archive for solver field trajectories.

Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON
header (format version, grid parameters, ordered array directory), then
the raw little-endian float64 component arrays in directory order.  The
format round-trips bit-exactly and needs no external dependencies.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import GridMismatchError
from .fields import EDGE, FACE, FieldTrajectory, GridSpec
from .solver import SolveOutput

MAGIC = b"MXBSNAP1"
FORMAT_VERSION = 1

_COMPONENTS = ("x", "y", "z")
_FIELDS = (("Etilde", EDGE), ("Htilde", FACE), ("Etilde_t", EDGE), ("Htilde_t", FACE))


def _grid_dict(grid):
    return {
        "nx": grid.nx, "ny": grid.ny, "nz": grid.nz,
        "lx": grid.lx, "ly": grid.ly, "lz": grid.lz,
        "nt": grid.nt, "T": grid.T,
    }


def save_snapshot(path, grid, output):
    """Write the solver output trajectories for the given grid to path."""
    directory = []
    blobs = []
    for name, kind in _FIELDS:
        traj = getattr(output, name)
        if traj is None:
            continue
        for comp in _COMPONENTS:
            arr = np.ascontiguousarray(getattr(traj, comp), dtype="<f8")
            directory.append({"field": name, "component": comp, "kind": kind,
                              "shape": list(arr.shape)})
            blobs.append(arr)
    header = {
        "magic": MAGIC.decode("ascii"),
        "version": FORMAT_VERSION,
        "grid": _grid_dict(grid),
        "arrays": directory,
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for blob in blobs:
            fh.write(blob.tobytes())


def load_snapshot(path, grid=None):
    """Read an archive; returns (GridSpec, SolveOutput).

    When a grid is supplied it must match the archived one exactly.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise GridMismatchError(f"{path}: not a field snapshot archive")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise GridMismatchError(
                f"{path}: unsupported snapshot version {header.get('version')}"
            )
        gd = header["grid"]
        stored = GridSpec(gd["nx"], gd["ny"], gd["nz"], gd["lx"], gd["ly"], gd["lz"],
                          gd["nt"], gd["T"])
        if grid is not None and _grid_dict(grid) != _grid_dict(stored):
            raise GridMismatchError(
                f"snapshot grid {_grid_dict(stored)} does not match configured "
                f"grid {_grid_dict(grid)}"
            )
        fields = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            fields.setdefault(entry["field"], {})[entry["component"]] = data.copy()

    trajs = {}
    for name, kind in _FIELDS:
        comps = fields.get(name)
        if comps is None:
            trajs[name] = None
            continue
        want_nt = stored.nt
        for comp in _COMPONENTS:
            expect = (want_nt,) + stored.shape(kind, comp)
            if comps[comp].shape != expect:
                raise GridMismatchError(
                    f"{name}.{comp} has shape {comps[comp].shape}, expected {expect}"
                )
        trajs[name] = FieldTrajectory(kind, stored, comps["x"], comps["y"], comps["z"])
    if trajs["Etilde"] is None or trajs["Htilde"] is None or trajs["Etilde_t"] is None:
        raise GridMismatchError(f"{path}: archive is missing required field trajectories")
    return stored, SolveOutput(trajs["Etilde"], trajs["Htilde"], trajs["Etilde_t"],
                               trajs["Htilde_t"])
