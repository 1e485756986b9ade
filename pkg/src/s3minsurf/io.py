"""Mesh import/export: 4-coordinate PLY, stereographic 3D PLY, and CSV.

Formats
-------
* ``ply4``: PLY with four double properties x1..x4 per vertex (lossless).
* ``ply3-stereo``: PLY with x,y,z doubles after stereographic projection of
  S^3 from a pole; the pole is recorded in a header comment.
* ``csv4``: text, header ``x1,x2,x3,x4``, one row per vertex, then a
  ``faces`` line followed by one ``i,j,k`` row per triangle.

All writers are deterministic; floats round-trip exactly (%.17g).
"""

from __future__ import annotations

import numpy as np

from .errors import ExportError
from .s3geom import EPS_GEO, geodesic_distance, normalize, plane_rotation

# generic default pole: the fourth axis nudged by a small fixed rotation so it
# does not graze the surfaces built from the standard configuration
DEFAULT_POLE = normalize(
    plane_rotation(1, 4, 0.0173) @ plane_rotation(2, 4, 0.0117)
    @ plane_rotation(3, 4, 0.0071) @ np.array([0.0, 0.0, 0.0, 1.0])
)


def stereographic_basis(pole: np.ndarray) -> np.ndarray:
    """Orthonormal basis with the pole last, by Gram-Schmidt over e1..e4."""
    pole = normalize(np.asarray(pole, float))
    basis = []
    for k in range(4):
        w = np.zeros(4)
        w[k] = 1.0
        w -= (w @ pole) * pole
        for b in basis:
            w -= (w @ b) * b
        n = np.linalg.norm(w)
        if n > 0.3:
            basis.append(w / n)
        if len(basis) == 3:
            break
    return np.stack(basis + [pole], axis=1)


def stereographic(V: np.ndarray, pole: np.ndarray | None = None,
                  min_pole_distance: float = EPS_GEO) -> np.ndarray:
    """Stereographic projection of S^3 points to R^3 from ``pole``.

    A great circle in the pole's equatorial sphere maps to a planar unit
    circle.  Raises ExportError when a vertex is within ``min_pole_distance``
    of the pole (choose another pole).
    """
    pole = DEFAULT_POLE if pole is None else normalize(np.asarray(pole, float))
    V = np.asarray(V, float)
    d = geodesic_distance(V, pole)
    if float(np.min(d)) <= min_pole_distance:
        raise ExportError(
            f"projection pole within {float(np.min(d)):.2e} of the surface; "
            "choose another pole"
        )
    B = stereographic_basis(pole)
    Y = V @ B
    return Y[:, :3] / (1.0 - Y[:, 3])[:, None]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_mesh(V: np.ndarray, F: np.ndarray, path: str, fmt: str = "ply4",
                pole: np.ndarray | None = None, binary: bool = False) -> str:
    """Write a mesh in one of the supported formats; returns the path."""
    V = np.asarray(V, float)
    F = np.asarray(F, dtype=np.int64)
    if fmt == "csv4":
        lines = ["x1,x2,x3,x4"]
        lines += [",".join(_fmt(c) for c in v) for v in V]
        lines.append("faces")
        lines += [",".join(str(int(i)) for i in tri) for tri in F]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return path
    if fmt == "ply4":
        props = ["x1", "x2", "x3", "x4"]
        data = V
        comments = []
    elif fmt == "ply3-stereo":
        used_pole = DEFAULT_POLE if pole is None else normalize(np.asarray(pole, float))
        data = stereographic(V, used_pole)
        props = ["x", "y", "z"]
        comments = ["stereographic pole " + " ".join(_fmt(c) for c in used_pole)]
    else:
        raise ExportError(f"unknown export format {fmt!r}")

    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    header += [f"comment {c}" for c in comments]
    header.append(f"element vertex {V.shape[0]}")
    header += [f"property double {p}" for p in props]
    header.append(f"element face {F.shape[0]}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")

    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
            counts = np.full((F.shape[0], 1), 3, dtype=np.uint8)
            faces = np.ascontiguousarray(F, dtype="<i4")
            rec = b"".join(
                counts[i].tobytes() + faces[i].tobytes() for i in range(F.shape[0])
            )
            fh.write(rec)
    else:
        lines = header[:]
        lines += [" ".join(_fmt(c) for c in row) for row in data]
        lines += ["3 " + " ".join(str(int(i)) for i in tri) for tri in F]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return path


def import_mesh(path: str):
    """Read a csv4 or ply4 mesh back as (V, F)."""
    with open(path, "rb") as fh:
        head = fh.read(3)
    if head == b"ply":
        return _read_ply(path)
    return _read_csv4(path)


def _read_csv4(path: str):
    verts, faces = [], []
    in_faces = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == "x1,x2,x3,x4":
                continue
            if line == "faces":
                in_faces = True
                continue
            parts = line.split(",")
            if in_faces:
                faces.append([int(p) for p in parts])
            else:
                verts.append([float(p) for p in parts])
    return np.array(verts), np.array(faces, dtype=np.int32)


def _read_ply(path: str):
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.index(b"end_header")
    header = raw[:end].decode("ascii").splitlines()
    body = raw[raw.index(b"\n", end) + 1:]
    n_vert = n_face = 0
    n_props = 0
    binary = False
    reading_vertex_props = False
    for line in header:
        if line.startswith("format binary_little_endian"):
            binary = True
        if line.startswith("element vertex"):
            n_vert = int(line.split()[-1])
            reading_vertex_props = True
        elif line.startswith("element face"):
            n_face = int(line.split()[-1])
            reading_vertex_props = False
        elif line.startswith("property double") and reading_vertex_props:
            n_props += 1
    if binary:
        vbytes = n_vert * n_props * 8
        V = np.frombuffer(body[:vbytes], dtype="<f8").reshape(n_vert, n_props).copy()
        F = np.empty((n_face, 3), dtype=np.int32)
        off = vbytes
        for i in range(n_face):
            cnt = body[off]
            off += 1
            F[i] = np.frombuffer(body[off:off + 4 * cnt], dtype="<i4")[:3]
            off += 4 * cnt
        return V, F
    lines = body.decode("ascii").splitlines()
    V = np.array([[float(x) for x in ln.split()] for ln in lines[:n_vert]])
    F = np.array(
        [[int(x) for x in ln.split()[1:4]] for ln in lines[n_vert:n_vert + n_face]],
        dtype=np.int32,
    )
    return V, F
