"""Symmetry groups, orbit placement, welding and surface topology.

The closed surfaces are assembled from one solved fundamental disk: an
explicit list of isometries places congruent copies into the pentahedral
cells (a checkerboard in each hemisphere-domain), boundary vertices of
adjacent copies coincide to machine precision because every shared edge lies
on the fixed-point circle of the half turn relating the copies, and welding
identifies them into a single closed mesh.

Copy transforms are built as coherent products of a fixed translation family,
so global screw symmetries map copy meshes onto each other exactly (up to
float roundoff), which keeps symmetry residuals at machine scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import AssemblyError, GroupClosureError, TopologyError, WeldError
from .plateau import TriMesh, triangle_areas
from .s3geom import half_turn, normalize
from .tessellation import Configuration

EPS_GRP = 1e-9


@dataclass(eq=False)
class IsometryGroup:
    """Finite set of isometries closed under composition and inverse."""

    elements: np.ndarray          # (n, 4, 4)
    generators: np.ndarray        # (g, 4, 4)
    closed: bool = True

    def __len__(self):
        return self.elements.shape[0]


def generate_group(generators, cap: int = 10000, tol: float = EPS_GRP) -> IsometryGroup:
    """Breadth-first closure of a generator list, deduplicated by matrix distance.

    Raises GroupClosureError when the element count exceeds ``cap`` before
    closing (a wrong generator set or tolerance).
    """
    gens = [np.asarray(g, float) for g in generators]
    gens = gens + [g.T for g in gens]
    elements = [np.eye(4)]

    def find(M):
        for E in elements:
            if float(np.max(np.abs(E - M))) < tol:
                return True
        return False

    frontier = [np.eye(4)]
    while frontier:
        new = []
        for E in frontier:
            for g in gens:
                M = g @ E
                if not find(M):
                    elements.append(M)
                    new.append(M)
                    if len(elements) > cap:
                        raise GroupClosureError(
                            f"group not closed at cap {cap} (tolerance {tol:g})"
                        )
        frontier = new
    return IsometryGroup(np.stack(elements), np.stack(gens[: len(generators)]))


# ---- copy enumeration --------------------------------------------------------


def _checkerboard_transforms(cfg: Configuration):
    """Transforms placing the fundamental cell (1,1) copy into every inner cell
    of matching checkerboard parity, as coherent translation products."""
    m, k = cfg.m, cfg.k
    sigma0 = cfg.grid_half_turn(cfg.beta[1], cfg.beta[1] + cfg.band[1])
    out = []
    for i in range(1, 2 * m + 1):
        for j in range(1, 2 * k + 1):
            if (i + j) % 2 != 0:
                continue
            if i % 2 == 1:
                g = cfg.translation((j - 1) * np.pi / k, (j - 1) * np.pi / k + (i - 1) * np.pi / m)
            else:
                g = cfg.translation((j - 2) * np.pi / k, (j - 2) * np.pi / k + (i - 2) * np.pi / m) @ sigma0
            out.append((g, (i, j)))
    return out


def odd_copy_transforms(cfg: Configuration):
    """4mk transforms for the odd surface: the inner checkerboard orbit plus its
    reflection across the second-row ruling circle into the outer domain."""
    inner = _checkerboard_transforms(cfg)
    flip = half_turn(cfg.row2_circle)
    transforms = [g for g, _ in inner] + [flip @ g for g, _ in inner]
    labels = [("inner",) + c for _, c in inner] + [("outer",) + c for _, c in inner]
    return transforms, labels


def even_copy_transforms(cfg: Configuration):
    """4mk transforms for the even surface: the checkerboard orbit of the free
    fundamental disk plus the same orbit pushed through the pairing screw."""
    inner = _checkerboard_transforms(cfg)
    phi = cfg.even_screw
    transforms = [g for g, _ in inner] + [g @ phi for g, _ in inner]
    labels = [("inner",) + c for _, c in inner] + [("outer",) + c for _, c in inner]
    return transforms, labels


@dataclass(eq=False)
class PlacedCopy:
    V: np.ndarray
    F: np.ndarray
    transform: np.ndarray
    label: tuple


def orbit_fundamental(mesh: TriMesh, transforms, cfg: Configuration | None = None,
                      labels=None) -> list:
    """Place one copy of the fundamental mesh per transform.

    Copies are checked for duplicates by a sorted sample-vertex fingerprint;
    a duplicate indicates a wrong transform set and raises AssemblyError.
    """
    labels = labels if labels is not None else [("copy", i) for i in range(len(transforms))]
    copies = []
    seen = {}
    sample_ids = np.linspace(0, mesh.V.shape[0] - 1, 8).astype(int)
    for g, lab in zip(transforms, labels):
        V = mesh.V @ np.asarray(g, float).T
        # set-invariant fingerprint: copy centroid plus sorted sample distances
        centroid = V.mean(axis=0)
        dists = np.sort(np.linalg.norm(V[sample_ids] - centroid, axis=1))
        key = tuple(np.round(centroid, 6)) + tuple(np.round(dists, 6))
        if key in seen:
            raise AssemblyError(f"duplicate copy: {lab} coincides with {seen[key]}")
        seen[key] = lab
        copies.append(PlacedCopy(V, mesh.F, np.asarray(g, float), lab))
    return copies


# ---- welding -----------------------------------------------------------------


@dataclass(eq=False)
class ClosedSurfaceMesh:
    """Welded closed mesh with provenance (copy id, source vertex id) per vertex."""

    V: np.ndarray
    F: np.ndarray
    provenance: np.ndarray  # (n, 2) int32

    @property
    def n_vertices(self):
        return self.V.shape[0]

    def unique_edges(self) -> np.ndarray:
        e = np.concatenate([self.F[:, [0, 1]], self.F[:, [1, 2]], self.F[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def area(self) -> float:
        return float(np.sum(triangle_areas(self.V, self.F)))


def weld(copies, eps_weld: float = 1e-8) -> ClosedSurfaceMesh:
    """Identify coincident boundary vertices across copies into a closed mesh.

    Vertices within eps_weld are merged (union-find over KD-tree pairs).  The
    result must be closed: any edge on fewer than two triangles names a
    boundary vertex in the raised WeldError (a solver or transform bug).
    """
    if not copies:
        raise WeldError("nothing to weld")
    Vs = [c.V for c in copies]
    offsets = np.cumsum([0] + [v.shape[0] for v in Vs])
    V = np.concatenate(Vs)
    F = np.concatenate([c.F + offsets[i] for i, c in enumerate(copies)]).astype(np.int64)
    prov = np.concatenate(
        [np.stack([np.full(v.shape[0], i), np.arange(v.shape[0])], axis=1) for i, v in enumerate(Vs)]
    ).astype(np.int32)

    pairs = cKDTree(V).query_pairs(eps_weld, output_type="ndarray")
    parent = np.arange(V.shape[0])

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(int(i)) for i in range(V.shape[0])])
    uniq, inverse = np.unique(roots, return_inverse=True)
    V2 = V[uniq]
    F2 = inverse[F].astype(np.int32)
    prov2 = prov[uniq]
    if np.any(F2[:, 0] == F2[:, 1]) or np.any(F2[:, 1] == F2[:, 2]) or np.any(F2[:, 0] == F2[:, 2]):
        raise WeldError("weld produced degenerate triangles (epsilon too large?)")

    mesh = ClosedSurfaceMesh(V2, F2, prov2)
    _require_closed(mesh)
    return mesh


def _require_closed(mesh: ClosedSurfaceMesh) -> None:
    e = np.concatenate([mesh.F[:, [0, 1]], mesh.F[:, [1, 2]], mesh.F[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    bad = uniq[counts != 2]
    if bad.size:
        v = int(bad[0][0])
        raise WeldError(
            f"mesh not closed: {bad.shape[0]} edges without exactly 2 faces "
            f"(first unmatched vertex {v} at {mesh.V[v]})"
        )


def weld_mesh(mesh: ClosedSurfaceMesh, eps_weld: float = 1e-8) -> ClosedSurfaceMesh:
    """Re-weld an already welded mesh (idempotence helper)."""
    return weld([PlacedCopy(mesh.V, mesh.F, np.eye(4), ("reweld",))], eps_weld)


# ---- topology ----------------------------------------------------------------


def orient_faces(F: np.ndarray):
    """Propagate a consistent orientation over face adjacency.

    Returns (flips, orientable): flips is a boolean per face (whether the face
    must be reversed), orientable is False when propagation hits a conflict.
    """
    nf = F.shape[0]
    edge_faces: dict[tuple, list] = {}
    for fi, tri in enumerate(F):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            k = (int(a), int(b)) if a < b else (int(b), int(a))
            edge_faces.setdefault(k, []).append((fi, int(a), int(b)))
    flips = np.zeros(nf, dtype=bool)
    seen = np.zeros(nf, dtype=bool)
    orientable = True
    for seed in range(nf):
        if seen[seed]:
            continue
        stack = [seed]
        seen[seed] = True
        while stack:
            fi = stack.pop()
            tri = F[fi]
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                k = (int(a), int(b)) if a < b else (int(b), int(a))
                for fj, aj, bj in edge_faces[k]:
                    if fj == fi:
                        continue
                    # same directed edge in both faces means opposite orientation
                    same_dir = (aj, bj) == ((int(a), int(b)) if not flips[fi] else (int(b), int(a)))
                    want_flip = same_dir
                    if not seen[fj]:
                        seen[fj] = True
                        flips[fj] = want_flip
                        stack.append(fj)
                    elif flips[fj] != want_flip:
                        orientable = False
    return flips, orientable


def connected_components(F: np.ndarray, n_vertices: int) -> int:
    parent = np.arange(n_vertices)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for tri in F:
        a = find(int(tri[0]))
        for v in tri[1:]:
            b = find(int(v))
            if a != b:
                parent[max(a, b)] = min(a, b)
                a = min(a, b)
    used = np.unique(F)
    return len({find(int(v)) for v in used})


def euler_genus(mesh) -> tuple:
    """(chi, genus, orientable) of a closed mesh; raises TopologyError when the
    mesh is non-orientable or chi is odd."""
    if isinstance(mesh, ClosedSurfaceMesh):
        V, F = mesh.V, mesh.F
    else:
        V, F = mesh
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    if np.any(counts != 2):
        raise TopologyError("euler_genus requires a closed mesh (every edge on 2 faces)")
    nv = len(np.unique(F))
    chi = nv - uniq.shape[0] + F.shape[0]
    _, orientable = orient_faces(F)
    if not orientable:
        raise TopologyError("mesh is non-orientable")
    if chi % 2 != 0:
        raise TopologyError(f"closed orientable mesh cannot have odd chi = {chi}")
    genus = (2 - chi) // 2
    return chi, genus, orientable


def angle_defect_total(mesh) -> float:
    """Sum over vertices of (2 pi - incident geodesic angle sum).

    Angles are measured between the initial directions of the S^3 geodesics
    toward the triangle's other two vertices.  For a closed mesh this equals
    2 pi chi minus the ambient curvature term (the total area, since S^3 has
    sectional curvature 1), up to O(h^2).
    """
    if isinstance(mesh, ClosedSurfaceMesh):
        V, F = mesh.V, mesh.F
    else:
        V, F = mesh
    total = 2 * np.pi * len(np.unique(F))
    for corner in range(3):
        x = V[F[:, corner]]
        pa = V[F[:, (corner + 1) % 3]]
        pb = V[F[:, (corner + 2) % 3]]
        da = pa - np.einsum("ij,ij->i", pa, x)[:, None] * x
        db = pb - np.einsum("ij,ij->i", pb, x)[:, None] * x
        da = normalize(da)
        db = normalize(db)
        ang = np.arccos(np.clip(np.einsum("ij,ij->i", da, db), -1.0, 1.0))
        total -= float(np.sum(ang))
    return total
