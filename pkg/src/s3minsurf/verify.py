"""Verification of the assembled surfaces: embeddedness at mesh resolution,
symmetry residuals, area bounds, containment, and the aggregated report.

Embeddedness is certified at mesh resolution only: the minimum distance
between non-adjacent triangle pairs is positive.  Symmetry is measured as the
maximum distance from transformed vertices to the mesh.  The reflection check
runs over a finite candidate family of great spheres; no global nonexistence
claim is made.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import proximity
from .assembly import ClosedSurfaceMesh, connected_components, euler_genus
from .errors import ParameterError
from .plateau import Tag, TriMesh, triangle_areas
from .s3geom import normalize, reflection_through_sphere, transform_points
from .tessellation import OUTSIDE, Configuration, fundamental_polygon_odd, region_membership

REPORT_SCHEMA_VERSION = 1


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("S3MINSURF_THREADS", "1")))
    except ValueError:
        return 1


def _mesh_arrays(mesh):
    if isinstance(mesh, ClosedSurfaceMesh):
        return mesh.V, mesh.F
    if isinstance(mesh, TriMesh):
        return mesh.V, mesh.F
    return mesh


def min_separation(mesh, exclude_adjacent: bool = True) -> float:
    """Minimum distance between triangle pairs sharing no vertex.

    Two-pass spatial hash: pairs within the current search radius are
    guaranteed to share a hash cell, so a minimum found below the radius is
    the global minimum; otherwise the radius doubles.
    """
    V, F = _mesh_arrays(mesh)
    edge = V[F[:, 1]] - V[F[:, 0]]
    h = float(np.median(np.linalg.norm(edge, axis=1)))
    delta = h
    threads = _thread_count()
    for _ in range(12):
        pairs = proximity.candidate_pairs(V, F, delta)
        if pairs.shape[0]:
            if exclude_adjacent:
                fa = F[pairs[:, 0]]
                fb = F[pairs[:, 1]]
                shared = np.zeros(pairs.shape[0], dtype=bool)
                for i in range(3):
                    for j in range(3):
                        shared |= fa[:, i] == fb[:, j]
                pairs = pairs[~shared]
            if pairs.shape[0]:
                d = _pair_distances(V, F, pairs, threads)
                dmin = float(np.min(d))
                if dmin <= delta:
                    return dmin
        delta *= 2.0
    return float("inf")


def _pair_distances(V, F, pairs, threads, chunk: int = 200_000):
    tri = V[F]

    def run(block):
        return proximity.triangle_triangle_distance(tri[block[:, 0]], tri[block[:, 1]])

    blocks = [pairs[i: i + chunk] for i in range(0, pairs.shape[0], chunk)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts)


def intersects(mesh, tol: float = 1e-8) -> bool:
    """True when some non-adjacent triangle pair touches within tol."""
    return min_separation(mesh) < tol


def symmetry_residual(mesh, g: np.ndarray) -> float:
    """Max over vertices of the distance from g(vertex) to the mesh."""
    V, F = _mesh_arrays(mesh)
    P = transform_points(g, V)
    tree = cKDTree(V)
    # vertex -> incident faces adjacency
    nf = F.shape[0]
    vf_faces = np.repeat(np.arange(nf), 3)
    vf_verts = F.ravel()
    order = np.argsort(vf_verts, kind="stable")
    vf_faces = vf_faces[order]
    vf_verts = vf_verts[order]
    starts = np.searchsorted(vf_verts, np.arange(V.shape[0]))
    ends = np.searchsorted(vf_verts, np.arange(V.shape[0]) + 1)

    edge = V[F[:, 1]] - V[F[:, 0]]
    h = float(np.median(np.linalg.norm(edge, axis=1)))
    radius = 2.0 * h
    remaining = np.arange(P.shape[0])
    best = np.full(P.shape[0], np.inf)
    for _ in range(16):
        if remaining.size == 0:
            break
        hits = tree.query_ball_point(P[remaining], r=radius)
        unresolved = []
        for row, vids in zip(remaining, hits):
            if not vids:
                unresolved.append(row)
                continue
            faces = np.unique(np.concatenate([vf_faces[starts[v]: ends[v]] for v in vids]))
            tri = V[F[faces]]
            d = proximity.point_triangle_distance(
                np.broadcast_to(P[row], (faces.size, 4)), tri[:, 0], tri[:, 1], tri[:, 2]
            )
            dmin = float(np.min(d))
            if dmin > radius:
                # a closer face could hide just outside the query ball
                unresolved.append(row)
            else:
                best[row] = dmin
        remaining = np.array(unresolved, dtype=int)
        radius *= 4.0
    return float(np.max(best))


def area_checks(m: int, area_odd: float, area_even: float | None = None,
                level_odd: int | None = None, level_even: int | None = None,
                area_tol: float = 0.0) -> dict:
    """Area bound checks; raises ParameterError when the odd/even comparison is
    attempted at mismatched refinement."""
    if area_odd <= 0 or (area_even is not None and area_even <= 0):
        raise ValueError("areas must be positive (empty mesh?)")
    bound = 2 * m * np.pi ** 2
    out = {
        "area_bound": bound,
        "below_bound": bool(area_odd < bound),
    }
    if area_even is not None:
        if level_odd is not None and level_even is not None and level_odd != level_even:
            raise ParameterError(
                f"odd/even area comparison requires equal refinement, got {level_odd} vs {level_even}"
            )
        out["even_below_odd"] = bool(area_even < area_odd - area_tol)
        out["even_margin"] = float(area_odd - area_even)
    return out


def containment_check(mesh, cfg: Configuration, label=("inner", 1, 1),
                      tol: float = 1e-3) -> bool:
    """Every vertex inside-or-boundary of the given pentahedron.

    The tolerance admits the O(h^2) overshoot of flat triangles against the
    curved cell walls; it is a mesh-resolution check, not an exact one.
    """
    V, _ = _mesh_arrays(mesh)
    cls = region_membership(cfg, label, V, band_tol=tol)
    return bool(np.all(cls != OUTSIDE))


def free_arc_curvature_residual(mesh: TriMesh) -> tuple:
    """(mean, max) of |kappa(alpha) + kappa(coupled twin)| over the sliding arc.

    kappa is the discrete turning rate of the boundary inside the surface:
    (pi - interior angle sum) over the mean adjacent boundary edge length.
    """
    V, F, tag, ref = mesh.V, mesh.F, mesh.tag, mesh.ref
    nbrs: dict[int, list] = {}
    for a, b in mesh.boundary_edges():
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))

    def kappa(vid: int) -> float:
        x = V[vid]
        faces = np.nonzero((F == vid).any(axis=1))[0]
        total = 0.0
        for f in faces:
            tri = V[F[f]]
            i0 = int(np.nonzero(F[f] == vid)[0][0])
            a = tri[(i0 + 1) % 3]
            b = tri[(i0 + 2) % 3]
            da = a - (a @ x) * x
            db = b - (b @ x) * x
            da /= np.linalg.norm(da)
            db /= np.linalg.norm(db)
            total += float(np.arccos(np.clip(da @ db, -1.0, 1.0)))
        ds = np.mean([np.linalg.norm(V[n] - x) for n in nbrs[vid]])
        return (np.pi - total) / float(ds)

    sliding = np.nonzero(tag == Tag.ON_TORUS)[0]
    twin = {int(ref[c]): int(c) for c in np.nonzero(tag == Tag.COUPLED)[0]}
    residuals = []
    for v in sliding:
        c = twin.get(int(v))
        if c is None:
            continue
        residuals.append(abs(kappa(int(v)) + kappa(c)))
    if not residuals:
        raise ValueError("mesh has no coupled sliding arc")
    return float(np.mean(residuals)), float(np.max(residuals))


def reflection_candidates(cfg: Configuration) -> list:
    """Great-sphere normals worth testing for reflection symmetry: coordinate
    spheres, the configuration's marked spheres, and perpendicular bisectors
    of the fundamental hexagon's vertex pairs."""
    normals = [np.eye(4)[i] for i in range(4)]
    normals += [n for n in cfg.sphere1_normals]
    normals += [n for n in cfg.sphere2_normals]
    hexagon = fundamental_polygon_odd(cfg).vertices
    for i in range(len(hexagon)):
        for j in range(i + 1, len(hexagon)):
            d = hexagon[i] - hexagon[j]
            nd = np.linalg.norm(d)
            if nd > 1e-9:
                normals.append(d / nd)
    # deduplicate up to sign
    uniq = []
    for n in normals:
        n = normalize(n)
        if not any(min(np.linalg.norm(n - u), np.linalg.norm(n + u)) < 1e-9 for u in uniq):
            uniq.append(n)
    return uniq


@dataclass
class SurfaceReport:
    """Aggregated machine-checkable claims for one assembled surface."""

    variant: str
    m: int
    ell: int
    k: int
    refinement: int
    chi: int
    genus: int
    genus_expected: int
    orientable: bool
    connected: bool
    copy_count: int
    copy_count_expected: int
    area: float
    area_bound: float
    area_below_bound: bool
    min_separation: float
    embedded_at_resolution: bool
    separation_threshold: float
    symmetry_residuals: dict
    symmetry_threshold: float
    symmetric: bool
    reflection_residuals: dict
    reflection_min: float
    reflection_candidate_family_only: bool
    containment_ok: bool
    solver_converged: bool
    solver_iterations: int
    fundamental_area: float
    warnings: list = field(default_factory=list)

    def passes(self) -> bool:
        return bool(
            self.genus == self.genus_expected
            and self.orientable
            and self.connected
            and self.copy_count == self.copy_count_expected
            and self.area_below_bound
            and self.embedded_at_resolution
            and self.symmetric
            and self.containment_ok
            and self.solver_converged
        )

    def to_json_dict(self) -> dict:
        d = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "variant": self.variant,
            "parameters": {"m": self.m, "ell": self.ell, "k": self.k,
                           "refinement": self.refinement},
            "topology": {
                "chi": self.chi,
                "genus": self.genus,
                "genus_expected": self.genus_expected,
                "orientable": self.orientable,
                "connected": self.connected,
            },
            "copies": {"count": self.copy_count, "expected": self.copy_count_expected},
            "area": {
                "total": self.area,
                "bound": self.area_bound,
                "below_bound": self.area_below_bound,
                "fundamental": self.fundamental_area,
            },
            "embeddedness": {
                "min_separation": self.min_separation,
                "threshold": self.separation_threshold,
                "embedded_at_resolution": self.embedded_at_resolution,
            },
            "symmetry": {
                "residuals": self.symmetry_residuals,
                "threshold": self.symmetry_threshold,
                "symmetric": self.symmetric,
            },
            "reflection": {
                "residuals": self.reflection_residuals,
                "min_residual": self.reflection_min,
                "candidate_family_only": self.reflection_candidate_family_only,
            },
            "containment_ok": self.containment_ok,
            "solver": {
                "converged": self.solver_converged,
                "iterations": self.solver_iterations,
            },
            "warnings": list(self.warnings),
            "passes": self.passes(),
        }
        return d


def build_surface_report(cfg: Configuration, variant: str, welded: ClosedSurfaceMesh,
                         copies, fund_mesh: TriMesh, record, refinement: int,
                         eps_weld: float = 1e-8,
                         reflection_sample: int | None = None) -> SurfaceReport:
    """Run every verification on an assembled surface and aggregate the result."""
    chi, genus, orientable = euler_genus(welded)
    connected = connected_components(welded.F, welded.V.shape[0]) == 1
    genus_expected = 1 + 2 * cfg.k * (cfg.m - 1)
    area = welded.area()
    bound = 2 * cfg.m * np.pi ** 2

    sep = min_separation(welded)
    sep_threshold = eps_weld
    embedded = sep > sep_threshold

    from .s3geom import screw_motion  # local import to avoid cycle at module load

    sym: dict[str, float] = {}
    sym["screw_2pi_over_k"] = symmetry_residual(
        welded, screw_motion(1, 2, 3, 4, 2 * np.pi / cfg.k)
    )
    if variant == "even":
        sym["pairing_screw"] = symmetry_residual(welded, cfg.even_screw)
    sym_threshold = 10 * eps_weld
    symmetric = all(v < sym_threshold for v in sym.values())

    candidates = reflection_candidates(cfg)
    if reflection_sample is not None:
        candidates = candidates[:reflection_sample]
    refl = {}
    for idx, n in enumerate(candidates):
        refl[f"sphere_{idx}"] = symmetry_residual(welded, reflection_through_sphere(n))
    refl_min = min(refl.values()) if refl else float("nan")

    containment = containment_check(fund_mesh, cfg)

    return SurfaceReport(
        variant=variant,
        m=cfg.m,
        ell=cfg.ell,
        k=cfg.k,
        refinement=refinement,
        chi=int(chi),
        genus=int(genus),
        genus_expected=int(genus_expected),
        orientable=bool(orientable),
        connected=bool(connected),
        copy_count=len(copies),
        copy_count_expected=4 * cfg.m * cfg.k,
        area=float(area),
        area_bound=float(bound),
        area_below_bound=bool(area < bound),
        min_separation=float(sep),
        embedded_at_resolution=bool(embedded),
        separation_threshold=float(sep_threshold),
        symmetry_residuals={k2: float(v) for k2, v in sym.items()},
        symmetry_threshold=float(sym_threshold),
        symmetric=bool(symmetric),
        reflection_residuals={k2: float(v) for k2, v in refl.items()},
        reflection_min=float(refl_min),
        reflection_candidate_family_only=True,
        containment_ok=bool(containment),
        solver_converged=bool(record.converged),
        solver_iterations=int(record.iterations),
        fundamental_area=float(record.final_area),
        warnings=list(record.warnings),
    )
