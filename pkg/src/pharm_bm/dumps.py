"""On-disk formats for fields, support tables and bodies.

Field text dump: ``#`` header lines then one record per node ``i j x y u``,
with i the angular index and j the radial index (j = 0 on the inner boundary).
Field binary dump: ``.npz`` with the same five columns as separate arrays plus
the mesh shape. Table dump: ``#`` header, a ``theta`` line, then one row per
level ``t h(theta_0) ... h(theta_{M-1})``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ring import ScalarField
from .supportcoords import SupportCoordTable


def _columns(field: ScalarField):
    m = field.mesh
    j, i = np.divmod(np.arange(m.n_nodes), m.M_ang)
    return i, j, m.nodes[:, 0], m.nodes[:, 1], field.u


def write_field_text(field: ScalarField, path) -> Path:
    path = Path(path)
    m = field.mesh
    i, j, x, y, u = _columns(field)
    header = f"mesh {m.M_ang} {m.M_rad}\np {field.p}\ncolumns i j x y u"
    data = np.column_stack([i, j, x, y, u])
    np.savetxt(path, data, fmt=["%d", "%d", "%.17g", "%.17g", "%.17g"], header=header)
    return path


def write_field_binary(field: ScalarField, path) -> Path:
    path = Path(path)
    m = field.mesh
    i, j, x, y, u = _columns(field)
    np.savez(path, i=i.astype(np.int32), j=j.astype(np.int32), x=x, y=y, u=u,
             shape=np.array([m.M_ang, m.M_rad]), p=np.array(field.p))
    return path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")


def read_field(path) -> dict:
    """Columns of a text or binary field dump as a dict of arrays."""
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            return {k: z[k] for k in ("i", "j", "x", "y", "u")} | {"shape": tuple(int(v) for v in z["shape"])}
    shape = None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            parts = line[1:].split()
            if parts and parts[0] == "mesh":
                shape = (int(parts[1]), int(parts[2]))
    data = np.loadtxt(path, ndmin=2)
    out = {"i": data[:, 0].astype(int), "j": data[:, 1].astype(int), "x": data[:, 2], "y": data[:, 3], "u": data[:, 4]}
    out["shape"] = shape
    return out


def write_table(table: SupportCoordTable, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# support table: {table.t.size} levels x {table.theta.size} angles\n")
        fh.write(f"# eps0 {table.eps0!r}\n")
        fh.write("theta " + " ".join(f"{v:.17g}" for v in table.theta) + "\n")
        for tk, row in zip(table.t, table.h):
            fh.write(f"{tk:.17g} " + " ".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_table(path):
    """(t, theta, h) from a table dump."""
    rows = []
    theta = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            parts = line.split()
            if parts[0] == "theta":
                theta = np.array(parts[1:], dtype=float)
            else:
                rows.append(np.array(parts, dtype=float))
    if theta is None:
        raise ValueError(f"{path}: missing theta line")
    R = np.array(rows)
    return R[:, 0], theta, R[:, 1:]
