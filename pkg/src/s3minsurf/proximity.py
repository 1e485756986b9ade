"""Distance queries between triangles in R^4.

All routines are batched and dimension-agnostic (they only use dot products
and Gram determinants).  Triangle-triangle distance combines the 15 boundary
feature pairs (9 edge-edge, 6 vertex-face) with a transversal crossing test:
two affine 2-planes in R^4 generically meet in a single point, so interior
crossings are detected by solving the 4x4 intersection system, a case the
boundary features alone would miss.
"""

from __future__ import annotations

import numpy as np


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def point_triangle_distance(P: np.ndarray, A: np.ndarray, B: np.ndarray, C: np.ndarray):
    """Distance from point(s) P to triangle(s) ABC (batched, any dimension)."""
    ab = B - A
    ac = C - A
    ap = P - A
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = P - B
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = P - C
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)

    closest = np.empty_like(np.broadcast_arrays(P, A)[0])
    done = np.zeros(closest.shape[:-1], dtype=bool)

    def assign(mask, value):
        m = mask & ~done
        if np.any(m):
            closest[m] = value[m] if value.shape == closest.shape else value
            done[m] = True

    assign((d1 <= 0) & (d2 <= 0), np.broadcast_to(A, closest.shape))
    assign((d3 >= 0) & (d4 <= d3), np.broadcast_to(B, closest.shape))
    assign((d6 >= 0) & (d5 <= d6), np.broadcast_to(C, closest.shape))

    vc = d1 * d4 - d3 * d2
    m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    t = d1 / np.where(np.abs(d1 - d3) > 1e-300, d1 - d3, 1.0)
    assign(m, A + t[..., None] * ab)

    vb = d5 * d2 - d1 * d6
    m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    t = d2 / np.where(np.abs(d2 - d6) > 1e-300, d2 - d6, 1.0)
    assign(m, A + t[..., None] * ac)

    va = d3 * d6 - d5 * d4
    m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    denom = (d4 - d3) + (d5 - d6)
    t = (d4 - d3) / np.where(np.abs(denom) > 1e-300, denom, 1.0)
    assign(m, B + t[..., None] * (C - B))

    denom = va + vb + vc
    denom = np.where(np.abs(denom) > 1e-300, denom, 1.0)
    v = vb / denom
    w = vc / denom
    assign(np.ones_like(done), A + v[..., None] * ab + w[..., None] * ac)
    return np.linalg.norm(P - closest, axis=-1)


def segment_segment_distance(P1, Q1, P2, Q2):
    """Distance between segments [P1,Q1] and [P2,Q2] (batched, any dimension)."""
    d1 = Q1 - P1
    d2 = Q2 - P2
    r = P1 - P2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b
    s = np.where(np.abs(denom) > 1e-300, (b * f - c * e) / np.where(denom == 0, 1, denom), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > 1e-300, (b * s + f) / np.where(e == 0, 1, e), 0.0)
    t_clamped = np.clip(t, 0.0, 1.0)
    # re-project s when t was clamped
    s = np.where(
        t != t_clamped,
        np.clip((t_clamped * b - c) / np.where(a == 0, 1, a), 0.0, 1.0),
        s,
    )
    t = t_clamped
    c1 = P1 + s[..., None] * d1
    c2 = P2 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1)


def _crossing_mask(T1: np.ndarray, T2: np.ndarray) -> np.ndarray:
    """True where two triangles cross transversally (planes meet inside both)."""
    A = T1[:, 0]
    e1 = T1[:, 1] - A
    e2 = T1[:, 2] - A
    B = T2[:, 0]
    f1 = T2[:, 1] - B
    f2 = T2[:, 2] - B
    M = np.stack([e1, e2, -f1, -f2], axis=-1)  # (n, 4, 4)
    rhs = B - A
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    out = np.zeros(T1.shape[0], dtype=bool)
    if np.any(ok):
        sol = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        u1, u2, v1, v2 = sol[:, 0], sol[:, 1], sol[:, 2], sol[:, 3]
        inside = (
            (u1 >= 0) & (u2 >= 0) & (u1 + u2 <= 1)
            & (v1 >= 0) & (v2 >= 0) & (v1 + v2 <= 1)
        )
        out[np.nonzero(ok)[0][inside]] = True
    return out


def triangle_triangle_distance(T1: np.ndarray, T2: np.ndarray) -> np.ndarray:
    """Distance between triangle pairs, (n,3,4) each; 0 where they intersect."""
    n = T1.shape[0]
    best = np.full(n, np.inf)
    # 9 edge pairs
    for i in range(3):
        p1, q1 = T1[:, i], T1[:, (i + 1) % 3]
        for j in range(3):
            p2, q2 = T2[:, j], T2[:, (j + 1) % 3]
            best = np.minimum(best, segment_segment_distance(p1, q1, p2, q2))
    # 6 vertex-face pairs
    for i in range(3):
        best = np.minimum(
            best, point_triangle_distance(T1[:, i], T2[:, 0], T2[:, 1], T2[:, 2])
        )
        best = np.minimum(
            best, point_triangle_distance(T2[:, i], T1[:, 0], T1[:, 1], T1[:, 2])
        )
    best[_crossing_mask(T1, T2)] = 0.0
    return best


def triangle_aabb(V: np.ndarray, F: np.ndarray):
    tri = V[F]
    return tri.min(axis=1), tri.max(axis=1)


def candidate_pairs(V: np.ndarray, F: np.ndarray, delta: float) -> np.ndarray:
    """Triangle index pairs that may be within delta of each other.

    Broad phase on centroids with a coverage radius of delta plus twice the
    largest circumradius (so every pair at distance <= delta is included),
    narrowed by an axis-aligned bounding-box gap filter.
    """
    from scipy.spatial import cKDTree

    tri = V[F]
    centroid = tri.mean(axis=1)
    rad = np.max(np.linalg.norm(tri - centroid[:, None, :], axis=2), axis=1)
    r = delta + 2.0 * float(rad.max())
    pairs = cKDTree(centroid).query_pairs(r, output_type="ndarray")
    if pairs.shape[0] == 0:
        return pairs.astype(np.int64)
    lo, hi = triangle_aabb(V, F)
    gap = np.maximum(lo[pairs[:, 0]] - hi[pairs[:, 1]], lo[pairs[:, 1]] - hi[pairs[:, 0]])
    gap = np.maximum(gap, 0.0)
    keep = np.einsum("ij,ij->i", gap, gap) <= delta * delta
    return pairs[keep].astype(np.int64)
