"""Discrete Plateau solver on S^3.

Surfaces are triangle meshes with vertices constrained to the unit sphere of
R^4.  The objective is the sum of flat (chordal) triangle areas; it converges
to the spherical area under refinement and has simple exact gradients.  A
projected Barzilai-Borwein descent with Armijo backtracking moves each vertex
inside its constraint set:

* INTERIOR vertices move along the estimated surface normal inside the
  tangent space of S^3;
* ON_ARC vertices stay on their fixed great circle; their single tangential
  dof is pure boundary reparametrization, which the discrete objective abuses
  (bunching vertices cuts the corner between chord and arc and lowers the
  chordal area by an amount that does not vanish under refinement), so it is
  projected out, which pins them;
* ON_TORUS vertices slide inside a Clifford torus; the component along the
  current free-boundary curve is the same reparametrization gauge and is
  projected out, leaving motion along the curve's in-torus normal;
* FIXED vertices never move;
* COUPLED vertices are bound to a source vertex through an isometry: their
  positions are recomputed from the source every step and their area-gradient
  contributions are pulled back onto the source.

Restricting motion to shape-changing (normal) directions is what makes the
chordal objective well posed: tangential vertex motion is remeshing gauge, and
unconstrained descent exploits it by locally coarsening the mesh (collapsing
rings of vertices), which lowers chordal area by secant shortcuts without
approaching the minimal surface.

A small spring-energy regularization (weight driven to zero over a
continuation schedule) keeps triangles from degenerating; the final polish
stage always runs with weight zero.  Iteration order is fixed and gradient
reduction is serial, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import PolygonError, SolverError
from .s3geom import (
    EPS_GEO,
    CliffordTorus,
    GeodesicArc,
    GreatCircle,
    normalize,
    slerp,
)
from .tessellation import GeodesicPolygon


class Tag(IntEnum):
    INTERIOR = 0
    FIXED = 1
    ON_ARC = 2
    ON_TORUS = 3
    COUPLED = 4


@dataclass(eq=False)
class TriMesh:
    """Triangulated surface in S^3 with per-vertex constraint tags.

    ``ref`` holds the arc id (ON_ARC), torus id (ON_TORUS) or source vertex id
    (COUPLED); -1 otherwise.  ``couple_iso`` indexes into ``couplings`` for
    COUPLED vertices.
    """

    V: np.ndarray
    F: np.ndarray
    tag: np.ndarray
    ref: np.ndarray
    arcs: list = field(default_factory=list)
    tori: list = field(default_factory=list)
    couplings: list = field(default_factory=list)
    couple_iso: np.ndarray | None = None
    edge_vertex_ids: list | None = None

    def __post_init__(self):
        self.V = np.ascontiguousarray(self.V, dtype=float)
        self.F = np.ascontiguousarray(self.F, dtype=np.int32)
        self.tag = np.ascontiguousarray(self.tag, dtype=np.int8)
        self.ref = np.ascontiguousarray(self.ref, dtype=np.int32)
        if self.couple_iso is None:
            self.couple_iso = np.full(self.V.shape[0], -1, dtype=np.int8)
        f = self.F
        if f.size and (
            np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) or np.any(f[:, 0] == f[:, 2])
        ):
            raise ValueError("mesh has degenerate (repeated-index) triangles")

    # ---- topology helpers -------------------------------------------------

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.V.copy(), self.F.copy(), self.tag.copy(), self.ref.copy(),
            list(self.arcs), list(self.tori), list(self.couplings),
            self.couple_iso.copy(),
            None if self.edge_vertex_ids is None else [np.array(e) for e in self.edge_vertex_ids],
        )

    def transformed(self, R: np.ndarray) -> "TriMesh":
        """The mesh carried by an ambient isometry (constraints carried along)."""
        R = np.asarray(R, float)
        return TriMesh(
            self.V @ R.T, self.F.copy(), self.tag.copy(), self.ref.copy(),
            [GreatCircle(R @ c.u, R @ c.v) for c in self.arcs],
            [CliffordTorus(R @ T.Q) for T in self.tori],
            [R @ iso @ R.T for iso in self.couplings],
            self.couple_iso.copy(),
        )

    def unique_edges(self) -> np.ndarray:
        e = np.concatenate([self.F[:, [0, 1]], self.F[:, [1, 2]], self.F[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def boundary_edges(self) -> np.ndarray:
        e = np.concatenate([self.F[:, [0, 1]], self.F[:, [1, 2]], self.F[:, [2, 0]]])
        e.sort(axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def euler_characteristic(self) -> int:
        return self.V.shape[0] - self.unique_edges().shape[0] + self.F.shape[0]

    def validate(self, tol: float = EPS_GEO) -> None:
        """Check tag invariants; raises ValueError on violation."""
        V, tag, ref = self.V, self.tag, self.ref
        err = np.abs(np.sum(V * V, axis=1) - 1.0)
        if float(np.max(err)) > 1e-10:
            raise ValueError(f"vertex left S^3 (norm error {np.max(err):.2e})")
        for aid, circle in enumerate(self.arcs):
            sel = (tag == Tag.ON_ARC) & (ref == aid)
            if np.any(sel) and float(np.max(circle.residual(V[sel]))) > tol:
                raise ValueError(f"ON_ARC vertices left circle {aid}")
        for tid, torus in enumerate(self.tori):
            sel = (tag == Tag.ON_TORUS) & (ref == tid)
            if np.any(sel) and float(np.max(torus.membership_residual(V[sel]))) > tol:
                raise ValueError(f"ON_TORUS vertices left torus {tid}")
        sel = np.nonzero(tag == Tag.COUPLED)[0]
        for c in sel:
            iso = self.couplings[self.couple_iso[c]]
            if float(np.linalg.norm(V[c] - iso @ V[ref[c]])) > tol:
                raise ValueError(f"COUPLED vertex {c} detached from its source")


@dataclass
class SolveOptions:
    """Parameters of the projected-gradient area minimization."""

    max_iterations: int = 4000
    grad_tol: float = 1e-7        # infinity norm of projected gradient per unit area
    reg_weight: float = 1e-4      # initial spring regularization weight
    reg_schedule: tuple = (1.0, 0.1, 0.0)
    armijo: float = 1e-4
    step_init: float = 1.0
    step_min: float = 1e-16
    step_max: float = 1e3
    quality_floor: float = 1e-7
    record_every: int = 25
    deterministic: bool = True

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("gradient tolerance must be positive")
        if self.reg_weight < 0 or any(w < 0 for w in self.reg_schedule):
            raise ValueError("regularization weights must be nonnegative")


@dataclass
class ConvergenceRecord:
    converged: bool = False
    iterations: int = 0
    final_area: float = np.nan
    final_grad_norm: float = np.nan
    history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "final_area": float(self.final_area),
            "final_grad_norm": float(self.final_grad_norm),
            "warnings": list(self.warnings),
            "history": [
                {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                 for k, v in h.items()}
                for h in self.history
            ],
        }


# ---- area, quality and gradients ------------------------------------------


def triangle_areas(V: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Flat (chordal) triangle areas in R^4."""
    u = V[F[:, 1]] - V[F[:, 0]]
    v = V[F[:, 2]] - V[F[:, 0]]
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    g2 = np.maximum(uu * vv - uv * uv, 0.0)
    return 0.5 * np.sqrt(g2)


def mesh_area(mesh) -> float:
    """Total chordal area; accepts a TriMesh or a (V, F) pair."""
    if isinstance(mesh, TriMesh):
        V, F = mesh.V, mesh.F
    else:
        V, F = mesh
    return float(np.sum(triangle_areas(np.asarray(V, float), np.asarray(F))))


def triangle_quality(V: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Normalized quality 4*sqrt(3)*A / sum of squared edge lengths (1 = equilateral)."""
    a = V[F[:, 1]] - V[F[:, 0]]
    b = V[F[:, 2]] - V[F[:, 1]]
    c = V[F[:, 0]] - V[F[:, 2]]
    l2 = (
        np.einsum("ij,ij->i", a, a)
        + np.einsum("ij,ij->i", b, b)
        + np.einsum("ij,ij->i", c, c)
    )
    A = triangle_areas(V, F)
    return 4.0 * np.sqrt(3.0) * A / np.maximum(l2, 1e-300)


def area_gradient(V: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Gradient of the total chordal area with respect to vertex positions."""
    u = V[F[:, 1]] - V[F[:, 0]]
    v = V[F[:, 2]] - V[F[:, 0]]
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    g2 = np.maximum(uu * vv - uv * uv, 0.0)
    A = 0.5 * np.sqrt(g2)
    inv = np.where(A > 1e-300, 1.0 / (4.0 * np.maximum(A, 1e-300)), 0.0)[:, None]
    gB = (vv[:, None] * u - uv[:, None] * v) * inv
    gC = (uu[:, None] * v - uv[:, None] * u) * inv
    G = np.zeros_like(V)
    np.add.at(G, F[:, 1], gB)
    np.add.at(G, F[:, 2], gC)
    np.add.at(G, F[:, 0], -gB - gC)
    return G


def _spring_energy_gradient(V, edges, w):
    d = V[edges[:, 0]] - V[edges[:, 1]]
    E = w * float(np.sum(d * d))
    G = np.zeros_like(V)
    np.add.at(G, edges[:, 0], 2.0 * w * d)
    np.add.at(G, edges[:, 1], -2.0 * w * d)
    return E, G


# ---- constraint handling ----------------------------------------------------


def _retract(mesh: TriMesh, Vnew: np.ndarray) -> np.ndarray:
    """Project moved vertices back onto their constraint sets."""
    V = Vnew.copy()
    tag, ref = mesh.tag, mesh.ref
    fixed = tag == Tag.FIXED
    V[fixed] = mesh.V[fixed]
    interior = tag == Tag.INTERIOR
    if np.any(interior):
        V[interior] = normalize(V[interior])
    for aid, circle in enumerate(mesh.arcs):
        sel = (tag == Tag.ON_ARC) & (ref == aid)
        if np.any(sel):
            V[sel] = circle.project(V[sel])
    for tid, torus in enumerate(mesh.tori):
        sel = (tag == Tag.ON_TORUS) & (ref == tid)
        if np.any(sel):
            V[sel] = torus.project(V[sel])
    coupled = np.nonzero(tag == Tag.COUPLED)[0]
    for iso_id, iso in enumerate(mesh.couplings):
        sel = coupled[mesh.couple_iso[coupled] == iso_id]
        if sel.size:
            V[sel] = V[ref[sel]] @ iso.T
    return V


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Per-vertex surface normal within T_x S^3.

    The normal is the direction minimizing the squared projections of the
    incident edge directions: the smallest eigenvector of the accumulated
    edge-direction scatter matrix, with the radial direction penalized out.
    """
    V, F = mesh.V, mesh.F
    M = np.zeros((V.shape[0], 4, 4))
    for c0, c1 in ((0, 1), (1, 2), (2, 0)):
        d = V[F[:, c1]] - V[F[:, c0]]
        n2 = np.einsum("ij,ij->i", d, d)
        outer = d[:, :, None] * d[:, None, :] / np.maximum(n2, 1e-300)[:, None, None]
        np.add.at(M, F[:, c0], outer)
        np.add.at(M, F[:, c1], outer)
    big = np.trace(M, axis1=1, axis2=2) + 1.0
    M += big[:, None, None] * (V[:, :, None] * V[:, None, :])
    _, vecs = np.linalg.eigh(M)
    n = vecs[:, :, 0]
    # keep the normal exactly tangent to S^3
    n -= np.einsum("ij,ij->i", n, V)[:, None] * V
    nn = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.maximum(nn, 1e-300)


def _free_arc_neighbors(mesh: TriMesh) -> dict:
    """Boundary neighbors of each sliding (ON_TORUS) vertex, for the gauge
    projection along the free arc."""
    sliding = np.nonzero(mesh.tag == Tag.ON_TORUS)[0]
    if sliding.size == 0:
        return {}
    nbrs: dict[int, list] = {int(v): [] for v in sliding}
    for a, b in mesh.boundary_edges():
        a, b = int(a), int(b)
        if a in nbrs:
            nbrs[a].append(b)
        if b in nbrs:
            nbrs[b].append(a)
    return {v: ns for v, ns in nbrs.items() if len(ns) == 2}


def _project_gradient(mesh: TriMesh, G: np.ndarray, arc_nbrs: dict | None = None) -> np.ndarray:
    """Pull coupled contributions back to their sources, then project to the
    shape-changing directions of each vertex's constraint set.

    Tangential boundary sliding is reparametrization gauge and is removed:
    ON_ARC vertices end up pinned, ON_TORUS vertices keep only the in-torus
    normal of the free-boundary curve.
    """
    G = G.copy()
    V, tag, ref = mesh.V, mesh.tag, mesh.ref
    coupled = np.nonzero(tag == Tag.COUPLED)[0]
    for iso_id, iso in enumerate(mesh.couplings):
        sel = coupled[mesh.couple_iso[coupled] == iso_id]
        if sel.size:
            np.add.at(G, ref[sel], G[sel] @ iso)
    G[coupled] = 0.0
    G[tag == Tag.FIXED] = 0.0
    G[tag == Tag.ON_ARC] = 0.0
    interior = tag == Tag.INTERIOR
    if np.any(interior):
        n = vertex_normals(mesh)[interior]
        G[interior] = np.einsum("ij,ij->i", G[interior], n)[:, None] * n
    for tid, torus in enumerate(mesh.tori):
        sel = (tag == Tag.ON_TORUS) & (ref == tid)
        if np.any(sel):
            x = V[sel]
            Gt = G[sel] - np.einsum("ij,ij->i", G[sel], x)[:, None] * x
            n = torus.normal(x)
            Gt -= np.einsum("ij,ij->i", Gt, n)[:, None] * n
            if arc_nbrs:
                idx = np.nonzero(sel)[0]
                for row, v in enumerate(idx):
                    ns = arc_nbrs.get(int(v))
                    if ns is None:
                        continue
                    t = V[ns[1]] - V[ns[0]]
                    t = t - (t @ x[row]) * x[row]
                    t = t - (t @ n[row]) * n[row]
                    tn = np.linalg.norm(t)
                    if tn > 1e-14:
                        t /= tn
                        Gt[row] -= (Gt[row] @ t) * t
            G[sel] = Gt
    return G


# ---- solver -----------------------------------------------------------------


def _energy(V, F, edges, w):
    E = float(np.sum(triangle_areas(V, F)))
    if w > 0:
        d = V[edges[:, 0]] - V[edges[:, 1]]
        E += w * float(np.sum(d * d))
    return E


def _descend(mesh: TriMesh, weight: float, opts: SolveOptions, record: ConvergenceRecord,
             stage: int) -> bool:
    """Monotone projected descent at a fixed regularization weight."""
    F = mesh.F
    edges = mesh.unique_edges()
    arc_nbrs = _free_arc_neighbors(mesh)
    V_prev = None
    G_prev = None
    converged = False
    for it in range(opts.max_iterations):
        A = float(np.sum(triangle_areas(mesh.V, F)))
        E = A if weight == 0 else _energy(mesh.V, F, edges, weight)
        G = area_gradient(mesh.V, F)
        if weight > 0:
            _, Gs = _spring_energy_gradient(mesh.V, edges, weight)
            G = G + Gs
        G = _project_gradient(mesh, G, arc_nbrs)
        gnorm_inf = float(np.max(np.abs(G))) if G.size else 0.0
        gnorm2 = float(np.sum(G * G))
        record.iterations += 1
        if it % opts.record_every == 0:
            record.history.append(
                {
                    "stage": stage,
                    "iteration": record.iterations,
                    "area": A,
                    "energy": E,
                    "grad_norm": gnorm_inf,
                    "min_quality": float(np.min(triangle_quality(mesh.V, F))),
                }
            )
        if gnorm_inf / max(A, 1e-300) < opts.grad_tol:
            converged = True
            record.final_area = A
            record.final_grad_norm = gnorm_inf
            break
        # Barzilai-Borwein step with Armijo safeguard (monotone)
        tau = opts.step_init
        if V_prev is not None:
            s = (mesh.V - V_prev).ravel()
            y = (G - G_prev).ravel()
            sy = float(s @ y)
            if sy > 1e-300:
                tau = float(np.clip((s @ s) / sy, 1e-12, opts.step_max))
        V_prev = mesh.V.copy()
        G_prev = G
        accepted = False
        for _ in range(60):
            Vnew = _retract(mesh, mesh.V - tau * G)
            Enew = _energy(Vnew, F, edges, weight)
            if Enew <= E - opts.armijo * tau * gnorm2:
                accepted = True
                break
            tau *= 0.5
            if tau < opts.step_min:
                break
        if not accepted:
            record.warnings.append(
                f"stage {stage}: line search stalled at iteration {record.iterations}"
            )
            record.final_area = A
            record.final_grad_norm = gnorm_inf
            break
        mesh.V = Vnew
        q = triangle_quality(mesh.V, F)
        qmin = float(np.min(q))
        if qmin < opts.quality_floor:
            worst = int(np.argmin(q))
            raise SolverError(
                f"triangle {worst} collapsed (quality {qmin:.2e} < floor {opts.quality_floor:.2e})"
            )
    else:
        A = float(np.sum(triangle_areas(mesh.V, F)))
        record.final_area = A
        record.final_grad_norm = gnorm_inf
    return converged


def minimize_area(mesh: TriMesh, opts: SolveOptions | None = None):
    """Minimize chordal area under the mesh's constraint tags.

    Returns (minimized mesh, convergence record).  Non-convergence within the
    iteration budget is flagged on the record, not raised.
    """
    opts = opts or SolveOptions()
    out = mesh.copy()
    record = ConvergenceRecord()
    converged = False
    weights = [opts.reg_weight * mult for mult in opts.reg_schedule]
    if not weights or weights[-1] != 0.0:
        weights.append(0.0)
    seen = set()
    stages = [w for w in weights if not (w in seen or seen.add(w))]
    for stage, w in enumerate(stages):
        converged = _descend(out, w, opts, record, stage)
    record.converged = converged
    if not converged:
        record.warnings.append("final stage did not reach the gradient tolerance")
    out.validate(tol=1e-7)
    return out, record


def minimize_area_free(mesh: TriMesh, phi: np.ndarray, opts: SolveOptions | None = None,
                       free_region=None):
    """Free-boundary variant: ON_TORUS vertices slide in their torus while the
    COUPLED twin arc follows through the isometry phi.

    ``free_region``, when given, is a predicate over vertex positions; sliding
    vertices outside it only produce a warning in the record.
    """
    if not mesh.couplings:
        raise ValueError("free solve requires a coupled arc")
    if float(np.max(np.abs(mesh.couplings[0] - np.asarray(phi, float)))) > 1e-12:
        raise ValueError("phi does not match the mesh coupling")
    out, record = minimize_area(mesh, opts)
    if free_region is not None:
        sliding = out.V[out.tag == Tag.ON_TORUS]
        ok = np.asarray(free_region(sliding), bool)
        if not np.all(ok):
            record.warnings.append(
                f"{int(np.sum(~ok))} free-arc vertices left the expected base-torus strip"
            )
    return out, record


# ---- mesh construction -------------------------------------------------------


def _polygon_is_simple(polygon: GeodesicPolygon, samples: int = 64) -> bool:
    edges = polygon.edges()
    n = len(edges)
    pts = [e.samples(samples) for e in edges]
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                continue
            d2 = np.sum((pts[i][:, None, :] - pts[j][None, :, :]) ** 2, axis=-1)
            if float(np.min(d2)) < 1e-12:
                return False
    return True


class _CoonsDegenerate(Exception):
    pass


class _Builder:
    """Incremental vertex store with shared-node deduplication by key."""

    def __init__(self):
        self.V = []
        self.tag = []
        self.ref = []
        self.ids = {}
        self.F = []

    def node(self, key, pos, tag=Tag.INTERIOR, ref=-1):
        if key in self.ids:
            return self.ids[key]
        vid = len(self.V)
        self.ids[key] = vid
        self.V.append(np.asarray(pos, float))
        self.tag.append(int(tag))
        self.ref.append(int(ref))
        return vid

    def face(self, a, b, c):
        self.F.append((a, b, c))


def _edge_polyline(edge, per):
    return edge.point(np.linspace(0.0, 1.0, per + 1))


def _boundary_key(e_idx, t_idx, per, n_edges):
    """Canonical key of the t_idx-th node on polygon edge e_idx (corners shared)."""
    if t_idx == 0:
        return ("corner", e_idx)
    if t_idx == per:
        return ("corner", (e_idx + 1) % n_edges)
    return ("edge", e_idx, t_idx)


def _side_spec(e_idx, positions, per, n_edges):
    """Node descriptors for a polygon edge: (key, position, tag, ref) each."""
    out = []
    for t in range(per + 1):
        key = _boundary_key(e_idx, t, per, n_edges)
        tag = Tag.FIXED if key[0] == "corner" else Tag.ON_ARC
        ref = -1 if key[0] == "corner" else e_idx
        out.append((key, positions[t], tag, ref))
    return out


def _chord_spec(name, positions, per, corner_a, corner_b):
    out = []
    for t in range(per + 1):
        if t == 0:
            key = ("corner", corner_a)
        elif t == per:
            key = ("corner", corner_b)
        else:
            key = (name, t)
        # chord interior nodes are plain interior vertices of the disk
        out.append((key, positions[t], Tag.INTERIOR, -1))
    return out


def _rings_mesh(polygon, n, builder_unused=None):
    edges = polygon.edges()
    per = 2 ** n
    n_edges = len(edges)
    N = n_edges * per

    boundary = np.empty((N, 4))
    tags_b = np.empty(N, dtype=np.int8)
    refs_b = np.full(N, -1, dtype=np.int32)
    for e_idx, e in enumerate(edges):
        ts = np.arange(per) / per
        boundary[e_idx * per:(e_idx + 1) * per] = e.point(ts)
        tags_b[e_idx * per:(e_idx + 1) * per] = Tag.ON_ARC
        refs_b[e_idx * per:(e_idx + 1) * per] = e_idx
        tags_b[e_idx * per] = Tag.FIXED
        refs_b[e_idx * per] = -1

    apex = polygon.vertices.sum(axis=0)
    if np.linalg.norm(apex) > 0.3:
        apex = apex / np.linalg.norm(apex)
    else:
        # boundary close to one great circle: use a pole orthogonal to its plane
        _, _, vt = np.linalg.svd(boundary - boundary.mean(axis=0), full_matrices=True)
        apex = vt[-1] / np.linalg.norm(vt[-1])

    rings = per
    verts = [apex[None, :]]
    for r in range(1, rings + 1):
        t = r / rings
        verts.append(np.stack([slerp(apex, boundary[i], t) for i in range(N)]))
    V = np.concatenate(verts)
    V[1 + (rings - 1) * N:] = boundary

    def vid(r, i):
        return 0 if r == 0 else 1 + (r - 1) * N + (i % N)

    faces = []
    for i in range(N):
        faces.append((0, vid(1, i), vid(1, i + 1)))
    for r in range(1, rings):
        for i in range(N):
            faces.append((vid(r, i), vid(r + 1, i), vid(r + 1, i + 1)))
            faces.append((vid(r, i), vid(r + 1, i + 1), vid(r, i + 1)))
    F = np.array(faces, dtype=np.int32)

    tag = np.zeros(V.shape[0], dtype=np.int8)
    ref = np.full(V.shape[0], -1, dtype=np.int32)
    start = 1 + (rings - 1) * N
    tag[start:] = tags_b
    ref[start:] = refs_b

    edge_vertex_ids = []
    for e_idx in range(n_edges):
        ids = [start + e_idx * per + t for t in range(per)]
        ids.append(start + ((e_idx + 1) % n_edges) * per % N)
        edge_vertex_ids.append(np.array(ids, dtype=np.int32))
    return V, F, tag, ref, edge_vertex_ids


def init_disk_mesh(polygon: GeodesicPolygon, n: int) -> TriMesh:
    """Disk mesh spanning a geodesic polygon, 2^n segments per edge.

    Quadrilaterals get a structured grid by geodesic transfinite (Coons)
    interpolation; hexagons are split into two such grids along the chord
    between vertices 0 and 3.  When the interpolation degenerates (boundary
    close to a single great circle) the mesh falls back to concentric rings
    around an apex.  Boundary vertices are tagged ON_ARC with their polygon
    edge; corners are FIXED.
    """
    if n < 1:
        raise ValueError("subdivision level must be >= 1")
    if not _polygon_is_simple(polygon):
        raise PolygonError("polygon edges intersect away from shared corners")
    edges = polygon.edges()
    per = 2 ** n
    n_edges = len(edges)
    polylines = [_edge_polyline(e, per) for e in edges]

    built = None
    if n_edges in (4, 6):
        builder = _Builder()
        try:
            if n_edges == 4:
                sides = [_side_spec(e, polylines[e], per, 4) for e in range(4)]
                _quad_grid_spec(builder, per, sides)
            else:
                # split along the diagonal between vertices 1 and 4; for the
                # fundamental hexagon it bisects both right-angle row corners,
                # so each sharp axis corner stays inside one structured grid
                chord = GeodesicArc(polygon.vertices[1], polygon.vertices[4])
                chord_pos = _edge_polyline(chord, per)
                chord_nodes = _chord_spec("chord", chord_pos, per, 1, 4)
                sides_a = [
                    _side_spec(1, polylines[1], per, 6),
                    _side_spec(2, polylines[2], per, 6),
                    _side_spec(3, polylines[3], per, 6),
                    chord_nodes[::-1],  # from vertex 4 back to vertex 1
                ]
                _quad_grid_spec(builder, per, sides_a)
                sides_b = [
                    _side_spec(4, polylines[4], per, 6),
                    _side_spec(5, polylines[5], per, 6),
                    _side_spec(0, polylines[0], per, 6),
                    chord_nodes,
                ]
                _quad_grid_spec(builder, per, sides_b)
            V = np.array(builder.V)
            F = np.array(builder.F, dtype=np.int32)
            tag = np.array(builder.tag, dtype=np.int8)
            ref = np.array(builder.ref, dtype=np.int32)
            edge_vertex_ids = []
            for e_idx in range(n_edges):
                ids = [builder.ids[_boundary_key(e_idx, t, per, n_edges)] for t in range(per + 1)]
                edge_vertex_ids.append(np.array(ids, dtype=np.int32))
            built = (V, F, tag, ref, edge_vertex_ids)
        except _CoonsDegenerate:
            built = None
    if built is None:
        built = _rings_mesh(polygon, n)

    V, F, tag, ref, edge_vertex_ids = built
    arcs = [e.circle() for e in edges]
    mesh = TriMesh(V, F, tag, ref, arcs=arcs, edge_vertex_ids=edge_vertex_ids)
    if mesh.euler_characteristic() != 1:
        raise RuntimeError("disk construction produced wrong topology")
    return mesh


def _quad_grid_spec(builder: _Builder, per: int, sides):
    """Coons grid where each side is a list of (key, position, tag, ref)."""
    bot = np.stack([p for _, p, _, _ in sides[0]])
    right = np.stack([p for _, p, _, _ in sides[1]])
    top = np.stack([p for _, p, _, _ in sides[2]])[::-1]
    left = np.stack([p for _, p, _, _ in sides[3]])[::-1]
    corners = [bot[0], bot[-1], top[-1], left[-1]]
    ss = np.linspace(0.0, 1.0, per + 1)
    S, T = np.meshgrid(ss, ss, indexing="ij")
    blend = (
        (1 - T)[..., None] * bot[:, None, :]
        + T[..., None] * top[:, None, :]
        + (1 - S)[..., None] * left[None, :, :]
        + S[..., None] * right[None, :, :]
        - ((1 - S) * (1 - T))[..., None] * corners[0]
        - (S * (1 - T))[..., None] * corners[1]
        - (S * T)[..., None] * corners[2]
        - ((1 - S) * T)[..., None] * corners[3]
    )
    norms = np.linalg.norm(blend, axis=-1)
    if float(np.min(norms)) < 0.3:
        raise _CoonsDegenerate
    grid_pos = blend / norms[..., None]

    patch = len(builder.F)  # unique namespace per patch
    gid = np.empty((per + 1, per + 1), dtype=np.int64)
    for i in range(per + 1):
        for j in range(per + 1):
            if j == 0:
                key, pos, tg, rf = sides[0][i]
            elif i == per:
                key, pos, tg, rf = sides[1][j]
            elif j == per:
                key, pos, tg, rf = sides[2][per - i]
            elif i == 0:
                key, pos, tg, rf = sides[3][per - j]
            else:
                key, pos, tg, rf = ("patch", patch, i, j), grid_pos[i, j], Tag.INTERIOR, -1
            gid[i, j] = builder.node(key, pos, tag=tg, ref=rf)
    for i in range(per):
        for j in range(per):
            builder.face(gid[i, j], gid[i + 1, j], gid[i + 1, j + 1])
            builder.face(gid[i, j], gid[i + 1, j + 1], gid[i, j + 1])


def refine(mesh: TriMesh) -> TriMesh:
    """4-to-1 subdivision; midpoints by geodesic interpolation projected onto
    the parent edge's constraint set."""
    V, F, tag, ref = mesh.V, mesh.F, mesh.tag, mesh.ref
    boundary = {tuple(e) for e in mesh.boundary_edges()}
    edge_mid: dict[tuple, int] = {}
    newV, newtag, newref, newiso = [], [], [], []

    def key(a, b):
        return (a, b) if a < b else (b, a)

    coupled_edges = []
    for tri in F:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            k = key(int(a), int(b))
            if k in edge_mid:
                continue
            ta, tb = Tag(tag[k[0]]), Tag(tag[k[1]])
            if k in boundary and ta == Tag.COUPLED and tb == Tag.COUPLED:
                edge_mid[k] = -1  # second pass, after source midpoints exist
                coupled_edges.append(k)
                continue
            mid = normalize(V[k[0]] + V[k[1]])
            mtag, mref, miso = Tag.INTERIOR, -1, -1
            if k in boundary:
                kinds = {ta, tb}
                if Tag.ON_TORUS in kinds:
                    tid = int(ref[k[0]] if ta == Tag.ON_TORUS else ref[k[1]])
                    mid = mesh.tori[tid].project(mid)
                    mtag, mref = Tag.ON_TORUS, tid
                elif Tag.ON_ARC in kinds:
                    # the other endpoint may be a FIXED or COUPLED corner
                    aids = {int(ref[v]) for v in k if tag[v] == Tag.ON_ARC}
                    if len(aids) != 1:
                        raise ValueError(f"boundary edge {k} spans two different arcs")
                    aid = aids.pop()
                    mid = mesh.arcs[aid].project(mid)
                    mtag, mref = Tag.ON_ARC, aid
                elif kinds == {Tag.FIXED}:
                    raise ValueError(
                        f"cannot tag midpoint of boundary edge {k} between two FIXED vertices"
                    )
            edge_mid[k] = V.shape[0] + len(newV)
            newV.append(mid)
            newtag.append(mtag)
            newref.append(mref)
            newiso.append(miso)

    # coupled midpoints mirror the midpoint of their source edge
    for k in coupled_edges:
        src = key(int(ref[k[0]]), int(ref[k[1]]))
        if src not in edge_mid or edge_mid[src] < 0:
            raise ValueError(f"coupled edge {k} has no source edge {src} in the mesh")
        iso_id = int(max(mesh.couple_iso[k[0]], mesh.couple_iso[k[1]]))
        iso = mesh.couplings[iso_id]
        src_mid = edge_mid[src]
        all_new = np.array(newV) if newV else np.empty((0, 4))
        pos = (np.concatenate([V, all_new])[src_mid]) @ iso.T
        edge_mid[k] = V.shape[0] + len(newV)
        newV.append(pos)
        newtag.append(Tag.COUPLED)
        newref.append(src_mid)
        newiso.append(iso_id)

    V2 = np.concatenate([V, np.array(newV)]) if newV else V.copy()
    tag2 = np.concatenate([tag, np.array(newtag, dtype=np.int8)]) if newV else tag.copy()
    ref2 = np.concatenate([ref, np.array(newref, dtype=np.int32)]) if newV else ref.copy()
    iso2 = np.concatenate([mesh.couple_iso, np.array(newiso, dtype=np.int8)]) if newV \
        else mesh.couple_iso.copy()

    F2 = np.empty((4 * F.shape[0], 3), dtype=np.int32)
    for idx, tri in enumerate(F):
        a, b, c = (int(t) for t in tri)
        mab = edge_mid[key(a, b)]
        mbc = edge_mid[key(b, c)]
        mca = edge_mid[key(c, a)]
        F2[4 * idx + 0] = (a, mab, mca)
        F2[4 * idx + 1] = (b, mbc, mab)
        F2[4 * idx + 2] = (c, mca, mbc)
        F2[4 * idx + 3] = (mab, mbc, mca)

    return TriMesh(V2, F2, tag2, ref2, list(mesh.arcs), list(mesh.tori),
                   list(mesh.couplings), iso2)


def boundary_loop(mesh: TriMesh) -> np.ndarray:
    """Ordered vertex indices of the (single) boundary loop of a disk mesh."""
    be = mesh.boundary_edges()
    if be.size == 0:
        raise ValueError("mesh has no boundary")
    # orient boundary edges as they appear in their unique incident face
    nxt = {}
    bset = {tuple(e) for e in be}
    for tri in mesh.F:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            k = (int(a), int(b)) if a < b else (int(b), int(a))
            if k in bset:
                nxt[int(a)] = int(b)
    start = min(nxt)
    loop = [start]
    cur = nxt[start]
    while cur != start:
        loop.append(cur)
        cur = nxt[cur]
        if len(loop) > len(nxt) + 1:
            raise ValueError("boundary is not a single loop")
    return np.array(loop, dtype=np.int32)
