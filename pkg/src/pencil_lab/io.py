"""Deterministic artifact writers: CSV grids, OBJ meshes, JSON reports.

Every file embeds the digest of the canonicalized configuration that
produced it, and identical configurations yield byte-identical files:
numbers are printed with 17 significant digits, line endings are LF, and
JSON keys are sorted.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

__all__ = ["canonical_digest", "write_csv_grid", "write_obj",
           "write_json_report", "fmt"]


def canonical_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def write_csv_grid(path, chart, columns: dict, digest: str) -> None:
    """Grid CSV: coordinate columns first, then named value columns.

    Rows run in row-major order over the grid; values use 17 significant
    digits so a re-read reproduces the doubles exactly.
    """
    mesh = chart.mesh()
    names = list(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config={digest}\n")
        coord_names = [f"R{d + 1}" for d in range(chart.n)]
        fh.write(",".join(coord_names + names) + "\n")
        flat_coords = [m.reshape(-1) for m in mesh]
        flat_vals = [np.asarray(columns[k]).reshape(-1) for k in names]
        for row in range(flat_coords[0].size):
            cells = [fmt(c[row]) for c in flat_coords]
            cells += [fmt(v[row]) for v in flat_vals]
            fh.write(",".join(cells) + "\n")


def write_obj(path, vertices, normals, digest: str) -> None:
    """Structured-grid quad mesh as OBJ, each quad split into two triangles.

    vertices and normals have shape (m1, m2, 3); vertex numbering is
    row-major and 1-based as OBJ requires.
    """
    m1, m2, _ = vertices.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config={digest}\n")
        for a in range(m1):
            for b in range(m2):
                v = vertices[a, b]
                fh.write(f"v {fmt(v[0])} {fmt(v[1])} {fmt(v[2])}\n")
        for a in range(m1):
            for b in range(m2):
                vn = normals[a, b]
                fh.write(f"vn {fmt(vn[0])} {fmt(vn[1])} {fmt(vn[2])}\n")

        def vid(a, b):
            return a * m2 + b + 1

        for a in range(m1 - 1):
            for b in range(m2 - 1):
                p = vid(a, b)
                q = vid(a + 1, b)
                r = vid(a + 1, b + 1)
                s = vid(a, b + 1)
                fh.write(f"f {p}//{p} {q}//{q} {r}//{r}\n")
                fh.write(f"f {p}//{p} {r}//{r} {s}//{s}\n")


def write_json_report(path, report: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
