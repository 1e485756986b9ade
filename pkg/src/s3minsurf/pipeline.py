"""End-to-end surface construction pipelines.

``solve_fundamental_odd`` produces the minimal hexagonal disk of the inner
cell (1,1); ``solve_fundamental_even`` frees its two base-torus edges into a
sliding arc and its screw-motion twin and re-minimizes.  ``build_surface``
orbits the fundamental piece with the explicit copy transforms and welds the
result into a closed mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assembly, plateau
from .plateau import SolveOptions, Tag, TriMesh
from .s3geom import transform_points
from .tessellation import Configuration, fiber_coords, fundamental_polygon_odd

EPS_WELD = 1e-8  # 10x the solver's boundary tolerance


@dataclass
class FundamentalResult:
    mesh: TriMesh
    record: plateau.ConvergenceRecord
    level: int


def solve_fundamental_odd(cfg: Configuration, n: int, opts: SolveOptions | None = None,
                          coarse: int = 2) -> FundamentalResult:
    """Multilevel solve of the fixed-boundary hexagonal disk up to level n."""
    opts = opts or SolveOptions()
    hexagon = fundamental_polygon_odd(cfg)
    level = min(coarse, n)
    mesh = plateau.init_disk_mesh(hexagon, level)
    mesh, record = plateau.minimize_area(mesh, opts)
    while level < n:
        mesh = plateau.refine(mesh)
        level += 1
        mesh, rec = plateau.minimize_area(mesh, opts)
        record.history.extend(rec.history)
        record.iterations += rec.iterations
        record.warnings.extend(rec.warnings)
        record.converged = rec.converged
        record.final_area = rec.final_area
        record.final_grad_norm = rec.final_grad_norm
    return FundamentalResult(mesh, record, n)


def free_boundary_tags(cfg: Configuration, mesh: TriMesh) -> TriMesh:
    """Retag a hexagonal disk for the free-boundary problem.

    The second-row edge (hexagon edge 4, reversed: from the first corner of
    the second row to the second) becomes the sliding arc on the base torus;
    the first-row edge (hexagon edge 1) becomes its coupled image under the
    pairing screw motion.
    """
    if mesh.edge_vertex_ids is None:
        raise ValueError("mesh lost its edge bookkeeping; retag before refining")
    out = mesh.copy()
    out.tori = [cfg.base_torus]
    out.couplings = [cfg.even_screw]
    row2_ids = out.edge_vertex_ids[4][::-1]   # ordered from row2 corner j=1 to j=2
    row1_ids = out.edge_vertex_ids[1]         # ordered from row1 corner j=1 to j=2
    if len(row2_ids) != len(row1_ids):
        raise ValueError("edge subdivisions do not match")
    # sliding arc: interior nodes move in the base torus; endpoints stay fixed
    for vid in row2_ids[1:-1]:
        out.tag[vid] = Tag.ON_TORUS
        out.ref[vid] = 0
    # coupled arc: every node (corners included) mirrors its row-2 partner
    for vid_c, vid_s in zip(row1_ids, row2_ids):
        out.tag[vid_c] = Tag.COUPLED
        out.ref[vid_c] = vid_s
        out.couple_iso[vid_c] = 0
        out.V[vid_c] = cfg.even_screw @ out.V[vid_s]
    return out


def free_strip_predicate(cfg: Configuration):
    """Membership test for the base-torus strip between the mid ruling and the
    second-row ruling (where the sliding arc is expected to stay)."""
    lo = np.pi / (2 * cfg.m)
    hi = np.pi / cfg.m
    tol = 1e-6

    def inside(pts):
        pts = np.atleast_2d(pts)
        _, b, g = fiber_coords(pts)
        w = np.mod(g - b, 2 * np.pi)
        return (w > lo - tol) & (w < hi + tol)

    return inside


def solve_fundamental_even(cfg: Configuration, n: int, opts: SolveOptions | None = None,
                           coarse: int = 2) -> FundamentalResult:
    """Multilevel solve of the free-boundary disk up to level n."""
    opts = opts or SolveOptions()
    hexagon = fundamental_polygon_odd(cfg)
    level = min(coarse, n)
    mesh = free_boundary_tags(cfg, plateau.init_disk_mesh(hexagon, level))
    region = free_strip_predicate(cfg)
    mesh, record = plateau.minimize_area_free(mesh, cfg.even_screw, opts, free_region=region)
    while level < n:
        mesh = plateau.refine(mesh)
        level += 1
        mesh, rec = plateau.minimize_area_free(mesh, cfg.even_screw, opts, free_region=region)
        record.history.extend(rec.history)
        record.iterations += rec.iterations
        record.warnings.extend(rec.warnings)
        record.converged = rec.converged
        record.final_area = rec.final_area
        record.final_grad_norm = rec.final_grad_norm
    return FundamentalResult(mesh, record, n)


def build_surface(cfg: Configuration, fundamental: TriMesh, variant: str,
                  eps_weld: float = EPS_WELD):
    """Orbit the fundamental piece and weld the copies into a closed mesh."""
    if variant == "odd":
        transforms, labels = assembly.odd_copy_transforms(cfg)
    elif variant == "even":
        transforms, labels = assembly.even_copy_transforms(cfg)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    copies = assembly.orbit_fundamental(fundamental, transforms, cfg, labels)
    welded = assembly.weld(copies, eps_weld)
    return copies, welded


def copy_count(cfg: Configuration) -> int:
    return 4 * cfg.m * cfg.k
