"""Plain-text file formats: OBJ sheets, legacy VTK fields, CSV tables, MANIFEST.

Floats are written with ``repr`` (shortest round-trip form), so a file read
back reproduces the array bit for bit and identical inputs give identical
bytes.
"""
from __future__ import annotations

import csv
import hashlib
import os
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ParseError
from .field import Grid, PhaseField
from .sheet import HomotopySheet, triangulate

PathLike = Union[str, os.PathLike]


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# OBJ


def write_obj(path: PathLike, sheet: HomotopySheet) -> None:
    """Vertices in row-major order, 1-based triangle faces, header with M, K, lambda."""
    lines = ["# plateau homotopy sheet", f"# M {sheet.M}", f"# K {sheet.K}",
             f"# lambda {_num(sheet.lambda_cap)}"]
    lines += [f"v {_num(x)} {_num(y)} {_num(z)}" for x, y, z in sheet.points]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in triangulate(sheet)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_obj(path: PathLike) -> HomotopySheet:
    header: dict[str, str] = {}
    verts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) == 3 and parts[1] in ("M", "K", "lambda"):
                    header[parts[1]] = parts[2]
                continue
            if parts[0] == "v":
                if len(parts) != 4:
                    raise ParseError(lineno, "vertex line needs three coordinates")
                try:
                    verts.append([float(t) for t in parts[1:]])
                except ValueError:
                    raise ParseError(lineno, "bad vertex coordinate") from None
            elif parts[0] != "f":
                raise ParseError(lineno, f"unsupported OBJ record {parts[0]!r}")
    try:
        M, K = int(header["M"]), int(header["K"])
        lam = float(header.get("lambda", "inf"))
    except (KeyError, ValueError):
        raise ParseError(1, "OBJ header must record M and K") from None
    if len(verts) != (M + 1) * K:
        raise ParseError(1, f"expected {(M + 1) * K} vertices for M={M}, K={K}, found {len(verts)}")
    return HomotopySheet(np.array(verts).reshape(M + 1, K, 3), lam)


# ---------------------------------------------------------------------------
# legacy VTK


def write_vtk(path: PathLike, u: PhaseField) -> None:
    """STRUCTURED_POINTS with ``SCALARS u double``; x varies fastest."""
    g = u.grid
    nx, ny, nz = g.shape
    head = [
        "# vtk DataFile Version 3.0",
        "plateau phase field u",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN " + " ".join(_num(o) for o in g.origin),
        f"SPACING {_num(g.h)} {_num(g.h)} {_num(g.h)}",
        f"POINT_DATA {nx * ny * nz}",
        "SCALARS u double 1",
        "LOOKUP_TABLE default",
    ]
    body = "\n".join(map(repr, u.values.ravel(order="F").tolist()))
    Path(path).write_text("\n".join(head) + "\n" + body + "\n", encoding="utf-8")


def read_vtk(path: PathLike) -> PhaseField:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    meta: dict[str, list[str]] = {}
    k = 0
    while k < len(lines) and not lines[k].startswith("LOOKUP_TABLE"):
        parts = lines[k].split()
        if parts:
            meta[parts[0]] = parts[1:]
        k += 1
    if k == len(lines) or "DIMENSIONS" not in meta:
        raise ParseError(k, "not a STRUCTURED_POINTS file with a scalar lookup table")
    try:
        dims = tuple(int(t) for t in meta["DIMENSIONS"])
        origin = np.array([float(t) for t in meta["ORIGIN"]])
        spacing = [float(t) for t in meta["SPACING"]]
    except (KeyError, ValueError):
        raise ParseError(k, "malformed VTK header") from None
    if len(set(spacing)) != 1:
        raise ParseError(k, "only isotropic spacing is supported")
    n = int(np.prod(dims))
    try:
        vals = np.array([float(t) for t in " ".join(lines[k + 1:]).split()])
    except ValueError:
        raise ParseError(k + 1, "bad scalar value") from None
    if vals.size != n:
        raise ParseError(k + 1, f"expected {n} values, found {vals.size}")
    grid = Grid(origin, spacing[0], tuple(d - 1 for d in dims))
    return PhaseField(grid, vals.reshape(dims, order="F"))


# ---------------------------------------------------------------------------
# CSV and MANIFEST


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_num(x) for x in row])


def read_csv(path: PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(1, "empty CSV file")
    return rows[0], rows[1:]


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """Completed stages and emitted files of one run, rewritten after every change.

    Each file line reads ``<name> <size> sha256:<hex>``.
    """

    NAME = "MANIFEST"

    def __init__(self, out_dir: PathLike, header: Sequence[str] = ()):
        self.out_dir = Path(out_dir)
        self.header = list(header)
        self.stages: list[str] = []
        self.files: list[str] = []

    def add(self, name: str) -> None:
        if name not in self.files:
            self.files.append(name)
        self.write()

    def complete(self, stage: str) -> None:
        self.stages.append(stage)
        self.write()

    def write(self) -> None:
        lines = ["# plateau MANIFEST"] + [f"# {h}" for h in self.header]
        lines += [f"stage {s}" for s in self.stages]
        for name in self.files:
            p = self.out_dir / name
            lines.append(f"{name} {p.stat().st_size} sha256:{sha256_file(p)}")
        (self.out_dir / self.NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
