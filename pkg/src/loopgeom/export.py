"""Deterministic mesh and point-cloud writers."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)

POLE_TOL = 1e-6


def fmt(v: float) -> str:
    """17 significant digits; round-trips float64 exactly."""
    return "%.17g" % (float(v) + 0.0)


def stereographic(points: np.ndarray) -> np.ndarray:
    """Project from ``(0, ..., 0, -1)`` onto the plane of the first coordinates."""
    return points[..., :-1] / (1.0 + points[..., -1:])


def _check_unit(points, tol=1e-8):
    r = np.abs(np.linalg.norm(points, axis=-1) - 1).max()
    if r > tol:
        raise InvalidInputError(f"points are not on the unit sphere (|norm-1| = {r:.2e})")


def obj_text(points: np.ndarray, lam=None) -> str:
    """OBJ text for a ``(nx, ny, d)`` unit point field, d = 3 or 4.

    Vertices in grid order (j fastest), quads for every cell, a polyline when
    ``ny == 1``. Points within ``POLE_TOL`` of the projection pole are dropped
    together with their faces.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 3 or points.shape[-1] not in (3, 4):
        raise InvalidInputError("expected an (nx, ny, 3|4) point field")
    _check_unit(points)
    nx, ny, d = points.shape
    flat = points.reshape(-1, d)
    near_pole = np.linalg.norm(flat - np.eye(d)[-1] * -1, axis=-1) < POLE_TOL
    index = np.zeros(len(flat), dtype=int)
    lines = ["# loopgeom stereographic mesh"]
    if lam is not None:
        lines.append(f"# lambda {lam}")
    k = 0
    for idx, p in enumerate(flat):
        if near_pole[idx]:
            log.warning("dropping node %s: within %g of the projection pole",
                        divmod(idx, ny), POLE_TOL)
            continue
        k += 1
        index[idx] = k
        q = stereographic(p)
        if d == 3:
            q = np.append(q, 0.0)
        lines.append("v " + " ".join(fmt(c) for c in q))
    ids = index.reshape(nx, ny)
    if ny == 1:
        chain = [str(v) for v in ids[:, 0] if v]
        if len(chain) > 1:
            lines.append("l " + " ".join(chain))
    else:
        for i in range(nx - 1):
            for j in range(ny - 1):
                quad = (ids[i, j], ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1])
                if all(quad):
                    lines.append("f " + " ".join(str(v) for v in quad))
    return "\n".join(lines) + "\n"


def csv_text(points: np.ndarray) -> str:
    """One row per node: ``i,j,x1,...,xd``."""
    points = np.asarray(points, dtype=float)
    nx, ny, d = points.shape
    rows = []
    for i in range(nx):
        for j in range(ny):
            rows.append(",".join([str(i), str(j)] + [fmt(c) for c in points[i, j]]))
    return "\n".join(rows) + "\n"


def read_csv_points(path) -> np.ndarray:
    rows = [r.split(",") for r in Path(path).read_text().splitlines() if r]
    nx = max(int(r[0]) for r in rows) + 1
    ny = max(int(r[1]) for r in rows) + 1
    out = np.zeros((nx, ny, len(rows[0]) - 2))
    for r in rows:
        out[int(r[0]), int(r[1])] = [float(v) for v in r[2:]]
    return out


def export_mesh(points, path, fmt_tag: str = "obj-stereographic", lam=None) -> Path:
    path = Path(path)
    if fmt_tag == "obj-stereographic":
        text = obj_text(points, lam)
    elif fmt_tag in ("csv-4d", "csv"):
        _check_unit(np.asarray(points, dtype=float))
        text = csv_text(points)
    else:
        raise InvalidInputError(f"unknown mesh format {fmt_tag!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
