"""Pentahedral tessellation of S^3 adapted to a family of Clifford tori.

For integers m >= 2 and ell >= 1 (k = 2 m ell) this module builds every named
piece of geometry the construction needs: the two linked axis circles along
which m Clifford tori meet at angle pi/m, the base torus equidistant from
both axes, marked points, great spheres, the lattice of perpendicular great
circles, and the combinatorics of the 8mk pentahedral cells.

Coordinate conventions (fixed once, validated by the invariant tests):

* Fiber coordinates: x = (cos a cos b, cos a sin b, sin a cos g, sin a sin g)
  with a in [0, pi/2].  The first axis circle is {a = 0}, the second {a =
  pi/2}, the base torus {a = pi/4}.  The "inner" domain (a < pi/4) surrounds
  axis 1, the "outer" domain surrounds axis 2.
* Sheet tori through both axes are unions of two branches {g - b = c} and
  {g - b = c + pi}; branch offsets are c_i = (i-1) pi/m for i = 1..2m.
* Marked angles are b_j = (j-1) pi/k for j = 1..2k.  Axis points sit at
  those angles on both axes; the two vertex rows on the base torus sit at
  (a=pi/4, b=b_j, g=b_j) and (a=pi/4, b=b_j, g=b_j + pi/m).
* Pentahedron labels are (region, i, j) with region in {"inner", "outer"},
  i in 1..2m (branch band), j in 1..2k (slice between consecutive great
  spheres).  Inner cells are slabs in b, outer cells are slabs in g.

Configuration objects are immutable; all queries are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, ParameterError
from .s3geom import (
    EPS_GEO,
    CliffordTorus,
    GeodesicArc,
    GreatCircle,
    geodesic_distance,
    half_turn,
    normalize,
    plane_rotation,
    screw_motion,
    transform_points,
)

INSIDE, BOUNDARY, OUTSIDE = 1, 0, -1


def fiber_point(a, b, g) -> np.ndarray:
    """Point of S^3 with fiber coordinates (a, b, g)."""
    a, b, g = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(g, float))
    return np.stack(
        [np.cos(a) * np.cos(b), np.cos(a) * np.sin(b), np.sin(a) * np.cos(g), np.sin(a) * np.sin(g)],
        axis=-1,
    )


def fiber_coords(x: np.ndarray):
    """Inverse of ``fiber_point``: returns (a, b, g) arrays."""
    x = np.asarray(x, float)
    r12 = np.hypot(x[..., 0], x[..., 1])
    r34 = np.hypot(x[..., 2], x[..., 3])
    a = np.arctan2(r34, r12)
    b = np.arctan2(x[..., 1], x[..., 0])
    g = np.arctan2(x[..., 3], x[..., 2])
    return a, b, g


def vertical_circle(b: float, g: float) -> GreatCircle:
    """Great circle through the fiber directions at angles (b, g).

    These are exactly the lattice circles: they pass through an axis-1 point,
    an axis-2 point, and two base-torus grid vertices, meeting the base torus
    perpendicularly.
    """
    u = np.array([np.cos(b), np.sin(b), 0.0, 0.0])
    v = np.array([0.0, 0.0, np.cos(g), np.sin(g)])
    return GreatCircle(u, v)


def ruling_circle(c: float) -> GreatCircle:
    """Diagonal ruling {g - b = c} of the base torus, parametrized by b."""
    s = 1.0 / np.sqrt(2.0)
    u = np.array([s, 0.0, s * np.cos(c), s * np.sin(c)])
    v = np.array([0.0, s, -s * np.sin(c), s * np.cos(c)])
    return GreatCircle(u, v)


def sheet_torus(c: float) -> CliffordTorus:
    """Clifford torus through both axis circles with branch offsets {c, c+pi}."""
    cc, sc = np.cos(c), np.sin(c)
    M = 0.5 * np.array(
        [
            [0.0, 0.0, -sc, cc],
            [0.0, 0.0, -cc, -sc],
            [-sc, -cc, 0.0, 0.0],
            [cc, -sc, 0.0, 0.0],
        ]
    )
    return CliffordTorus.from_quadric(M)


def _wrap(x):
    return np.mod(x, 2 * np.pi)


def _interval_margin(u, width):
    """Signed margin of circle-angle u relative to the interval (0, width).

    Positive inside (distance to the nearer endpoint), negative outside.
    """
    u = _wrap(u)
    inside = (u > 0) & (u < width)
    m_in = np.minimum(u, width - u)
    d0 = np.minimum(u, 2 * np.pi - u)
    dw = np.minimum(np.abs(u - width), 2 * np.pi - np.abs(u - width))
    m_out = -np.minimum(d0, dw)
    return np.where(inside, m_in, m_out)


@dataclass(frozen=True, eq=False)
class GeodesicPolygon:
    """Closed piecewise-geodesic curve given by its cyclic vertex list."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, float)
        if V.ndim != 2 or V.shape[1] != 4 or V.shape[0] < 3:
            raise ValueError("polygon needs at least 3 points in R^4")
        d = geodesic_distance(V, np.roll(V, -1, axis=0))
        if np.any(d <= EPS_GEO) or np.any(d >= np.pi - EPS_GEO):
            raise ValueError("consecutive polygon vertices must be at distance in (0, pi)")
        object.__setattr__(self, "vertices", V)

    def __len__(self):
        return self.vertices.shape[0]

    def edges(self) -> list[GeodesicArc]:
        V = self.vertices
        return [GeodesicArc(V[i], V[(i + 1) % len(V)]) for i in range(len(V))]


@dataclass(frozen=True, eq=False)
class Configuration:
    """All named geometry of the tessellation for parameters (m, ell)."""

    m: int
    ell: int
    k: int
    beta: np.ndarray           # (2k,) marked angles b_j
    band: np.ndarray           # (2m,) branch offsets c_i
    axis1: GreatCircle         # tori intersection circle {a = 0}
    axis2: GreatCircle         # its polar circle {a = pi/2}
    row1_circle: GreatCircle   # base-torus ruling through the first vertex row
    row2_circle: GreatCircle   # ruling through the second vertex row
    mid_circle: GreatCircle    # ruling through the row midpoints
    mid_polar: GreatCircle     # polar circle of mid_circle (also a ruling)
    base_torus: CliffordTorus
    sheet_tori: tuple          # m Clifford tori through both axes
    sphere1_normals: np.ndarray  # (2k, 4) great spheres perpendicular to axis 1
    sphere2_normals: np.ndarray  # (2k, 4) perpendicular to axis 2
    axis1_points: np.ndarray   # (2k, 4) p-row on axis 1
    axis2_points: np.ndarray   # (2k, 4) q-row on axis 2
    row1_points: np.ndarray    # (2k, 4) first vertex row on the base torus
    row2_points: np.ndarray    # (2k, 4) second vertex row
    q0_point: np.ndarray       # axis-2 point opposite the second row at j=2
    grid_points: np.ndarray        # (4mk, 4) cell corners seen from the inner side
    grid_points_outer: np.ndarray  # (4mk, 4) cell corners seen from the outer side
    mid_feet: dict             # feet of the vertex rows on mid_circle
    even_screw: np.ndarray     # screw motion pairing the two free arcs (even family)

    # ---- derived helpers -------------------------------------------------

    @property
    def slice_width(self) -> float:
        return np.pi / self.k

    @property
    def band_width(self) -> float:
        return np.pi / self.m

    def translation(self, db: float, dg: float) -> np.ndarray:
        """Screw motion b += db, g += dg (rotations in the two axis planes)."""
        return plane_rotation(1, 2, db) @ plane_rotation(3, 4, dg)

    def grid_half_turn(self, b: float, g: float) -> np.ndarray:
        """Half turn about the lattice circle through fiber angles (b, g)."""
        return half_turn(vertical_circle(b, g))

    def pentahedron_labels(self):
        for region in ("inner", "outer"):
            for i in range(1, 2 * self.m + 1):
                for j in range(1, 2 * self.k + 1):
                    yield (region, i, j)

    def bounding_surfaces(self, label):
        """The five bounding surfaces of a pentahedron, as descriptors."""
        region, i, j = self._check_label(label)
        sphere = "sphere1" if region == "inner" else "sphere2"
        j2 = j % (2 * self.k) + 1
        i2 = i % (2 * self.m) + 1
        return (
            (sphere, j),
            (sphere, j2),
            ("torus_branch", i),
            ("torus_branch", i2),
            ("base_torus",),
        )

    def _check_label(self, label):
        region, i, j = label
        if region not in ("inner", "outer"):
            raise ValueError(f"unknown region {region!r}")
        if not (1 <= i <= 2 * self.m and 1 <= j <= 2 * self.k):
            raise ValueError(f"label indices out of range: {label}")
        return region, i, j

    def to_json_dict(self) -> dict:
        def arr(x):
            return np.asarray(x).tolist()

        circles = {
            name: {"u": arr(c.u), "v": arr(c.v)}
            for name, c in [
                ("axis1", self.axis1),
                ("axis2", self.axis2),
                ("row1_circle", self.row1_circle),
                ("row2_circle", self.row2_circle),
                ("mid_circle", self.mid_circle),
                ("mid_polar", self.mid_polar),
            ]
        }
        return {
            "parameters": {"m": self.m, "ell": self.ell, "k": self.k},
            "marked_angles": arr(self.beta),
            "branch_offsets": arr(self.band),
            "circles": circles,
            "sphere1_normals": arr(self.sphere1_normals),
            "sphere2_normals": arr(self.sphere2_normals),
            "points": {
                "axis1": arr(self.axis1_points),
                "axis2": arr(self.axis2_points),
                "row1": arr(self.row1_points),
                "row2": arr(self.row2_points),
                "q0": arr(self.q0_point),
                "grid": arr(self.grid_points),
                "mid_feet": {k: arr(v) for k, v in self.mid_feet.items()},
            },
            "tori": {
                "base": arr(self.base_torus.Q),
                "sheets": [arr(T.Q) for T in self.sheet_tori],
            },
            "even_screw": arr(self.even_screw),
        }


def build_configuration(m: int, ell: int) -> Configuration:
    """Construct the full named configuration for parameters (m, ell)."""
    if not (isinstance(m, (int, np.integer)) and isinstance(ell, (int, np.integer))):
        raise ParameterError("m and ell must be integers")
    if m < 2 or ell < 1:
        raise ParameterError(f"need m >= 2 and ell >= 1, got m={m}, ell={ell}")
    m, ell = int(m), int(ell)
    k = 2 * m * ell
    beta = np.arange(2 * k) * (np.pi / k)
    band = np.arange(2 * m) * (np.pi / m)

    axis1 = GreatCircle(np.array([1.0, 0, 0, 0]), np.array([0.0, 1, 0, 0]))
    axis2 = GreatCircle(np.array([0.0, 0, 1, 0]), np.array([0.0, 0, 0, 1]))
    c2 = band[1]  # pi/m
    c5 = np.pi / (2 * m)
    row1_circle = ruling_circle(0.0)
    row2_circle = ruling_circle(c2)
    mid_circle = ruling_circle(c5)
    mid_polar = ruling_circle(c5 + np.pi)

    base_torus = CliffordTorus.standard()
    sheets = tuple(sheet_torus(band[i]) for i in range(m))

    sphere1_normals = np.stack([-np.sin(beta), np.cos(beta), 0 * beta, 0 * beta], axis=-1)
    sphere2_normals = np.stack([0 * beta, 0 * beta, -np.sin(beta), np.cos(beta)], axis=-1)

    axis1_points = fiber_point(0.0, beta, 0.0 * beta)
    axis2_points = fiber_point(np.pi / 2, 0.0 * beta, beta)
    row1_points = fiber_point(np.pi / 4, beta, beta)
    row2_points = fiber_point(np.pi / 4, beta, beta + c2)
    q0_point = fiber_point(np.pi / 2, 0.0, beta[1] + c2)

    # cell corners on the base torus: (b_j, b_j + c_i) over all j, i
    B, C = np.meshgrid(beta, band, indexing="ij")
    grid_points = fiber_point(np.pi / 4, B.ravel(), (B + C).ravel())
    # the same corner set derived from the outer cells: (g_j - c_i, g_j)
    G, C2 = np.meshgrid(beta, band, indexing="ij")
    grid_points_outer = fiber_point(np.pi / 4, (G - C2).ravel(), G.ravel())

    # feet of the row points on the mid ruling circle (mid_circle(theta) has
    # fiber coordinates (pi/4, theta, theta + c5))
    th = {"row1_j1": beta[0] - c5 / 2, "row1_j2": beta[1] - c5 / 2,
          "mid_j2": beta[1], "row2_j1": beta[0] + c5 / 2, "row2_j2": beta[1] + c5 / 2}
    mid_feet = {name: fiber_point(np.pi / 4, t, t + c5) for name, t in th.items()}

    # screw motion pairing the free arcs: translate both axis planes by
    # -pi/(2m) and compose with the half turn about the mid ruling circle.
    even_screw = screw_motion(1, 2, 3, 4, -c5) @ half_turn(mid_circle)

    cfg = Configuration(
        m=m, ell=ell, k=k, beta=beta, band=band,
        axis1=axis1, axis2=axis2,
        row1_circle=row1_circle, row2_circle=row2_circle,
        mid_circle=mid_circle, mid_polar=mid_polar,
        base_torus=base_torus, sheet_tori=sheets,
        sphere1_normals=sphere1_normals, sphere2_normals=sphere2_normals,
        axis1_points=axis1_points, axis2_points=axis2_points,
        row1_points=row1_points, row2_points=row2_points,
        q0_point=q0_point, grid_points=grid_points,
        grid_points_outer=grid_points_outer, mid_feet=mid_feet,
        even_screw=even_screw,
    )
    _validate_configuration(cfg)
    return cfg


def _validate_configuration(cfg: Configuration) -> None:
    """Cheap anchor checks; failure indicates a convention bug, not bad input."""
    tol = 1e-9
    # rows lie on their ruling circles
    if float(np.max(cfg.row1_circle.residual(cfg.row1_points))) > tol:
        raise ConstructionError("first vertex row left its ruling circle")
    if float(np.max(cfg.row2_circle.residual(cfg.row2_points))) > tol:
        raise ConstructionError("second vertex row left its ruling circle")
    # row points are midpoints between the two axis rows
    d1 = geodesic_distance(cfg.axis1_points, cfg.row1_points)
    d2 = geodesic_distance(cfg.row1_points, cfg.axis2_points)
    if np.max(np.abs(d1 - np.pi / 4)) > tol or np.max(np.abs(d2 - np.pi / 4)) > tol:
        raise ConstructionError("row points are not midpoints of their axis segments")
    # q0 coincides with the axis-2 point shifted by k/m index steps
    # (coincidence checks use chordal norms: arccos loses half the digits near 0)
    j0 = (1 + cfg.k // cfg.m) % (2 * cfg.k)
    if float(np.linalg.norm(cfg.q0_point - cfg.axis2_points[j0])) > tol:
        raise ConstructionError("q0 does not land on the marked axis-2 row")
    # the even screw motion maps the second row arc onto the first row arc
    phi = cfg.even_screw
    for jj in (0, 1):
        img = transform_points(phi, cfg.row2_points[jj])
        if float(np.linalg.norm(img - cfg.row1_points[jj])) > tol:
            raise ConstructionError("even screw motion fails its arc-pairing anchor")
    # sheet tori contain both axes; the base torus is equidistant from them
    axes = np.concatenate([cfg.axis1_points, cfg.axis2_points])
    for T in cfg.sheet_tori:
        if float(np.max(T.distance(axes))) > 1e-7:
            raise ConstructionError("sheet torus does not contain the axis circles")
    if float(np.max(np.abs(cfg.base_torus.distance(axes) - np.pi / 4))) > 1e-9:
        raise ConstructionError("base torus is not equidistant from the axes")


def fundamental_polygon_odd(cfg: Configuration) -> GeodesicPolygon:
    """Hexagonal fundamental boundary (six geodesic arcs) in the inner cell (1,1)."""
    V = np.stack(
        [
            cfg.axis1_points[0],
            cfg.row1_points[0],
            cfg.row1_points[1],
            cfg.axis1_points[1],
            cfg.row2_points[1],
            cfg.row2_points[0],
        ]
    )
    return GeodesicPolygon(V)


def lattice_edges(cfg: Configuration):
    """The two descriptions of the lattice of perpendicular great circles.

    Family 1 follows the sheet tori cut by the axis-1 spheres, family 2 the
    cut by the axis-2 spheres.  Each family is returned as 4mk quarter-circle
    arcs from an axis-1 point to an axis-2 point; the two families coincide
    as point sets.
    """
    n = 2 * cfg.k
    step = cfg.k // cfg.m  # q-index offset per branch band
    arcs1, arcs2 = [], []
    for j in range(n):
        for i in range(2 * cfg.m):
            arcs1.append(GeodesicArc(cfg.axis1_points[j], cfg.axis2_points[(j + i * step) % n]))
            arcs2.append(GeodesicArc(cfg.axis2_points[j], cfg.axis1_points[(j - i * step) % n]))
    return arcs1, arcs2


def region_membership(cfg: Configuration, label, points, band_tol: float = EPS_GEO):
    """Classify point(s) against one pentahedron: INSIDE, BOUNDARY or OUTSIDE.

    The test combines three signed distances: the side of the base torus, the
    slab between the two bounding great spheres, and the wedge between the two
    bounding torus branches.  Values within band_tol of zero are BOUNDARY.
    """
    region, i, j = cfg._check_label(label)
    x = np.asarray(points, float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    a, b, g = fiber_coords(x)
    w = g - b
    if region == "inner":
        v0 = np.pi / 4 - a
        slice_margin = _interval_margin(b - cfg.beta[j - 1], cfg.slice_width) * np.cos(a)
    else:
        v0 = a - np.pi / 4
        slice_margin = _interval_margin(g - cfg.beta[j - 1], cfg.slice_width) * np.sin(a)
    wedge_margin = _interval_margin(w - cfg.band[i - 1], cfg.band_width) * np.sin(a) * np.cos(a)
    margins = np.stack([v0, slice_margin, wedge_margin], axis=-1)
    out = np.full(x.shape[0], BOUNDARY, dtype=np.int8)
    out[np.all(margins > band_tol, axis=-1)] = INSIDE
    out[np.any(margins < -band_tol, axis=-1)] = OUTSIDE
    return out[0] if single else out


def classify_unique(cfg: Configuration, points, band_tol: float = EPS_GEO):
    """For each point: (number of cells claiming it inside, a claiming label or None)."""
    x = np.atleast_2d(np.asarray(points, float))
    counts = np.zeros(x.shape[0], dtype=int)
    labels = [None] * x.shape[0]
    for label in cfg.pentahedron_labels():
        cls = region_membership(cfg, label, x, band_tol)
        hit = cls == INSIDE
        counts += hit
        for idx in np.nonzero(hit)[0]:
            labels[idx] = label
    return counts, labels


def surface_angle_along_edge(cfg: Configuration, s: float) -> float:
    """Dihedral angle between the first sheet torus and the first great sphere
    at arclength s along the edge from the axis-1 point to the first row point.
    """
    if not (0 <= s <= np.pi / 4 + 1e-12):
        raise ValueError("arclength must lie in [0, pi/4]")
    p = cfg.axis1_points[0]
    v = np.array([0.0, 0.0, 1.0, 0.0])  # fiber direction at (b1, g=b1) with b1 = 0
    x = np.cos(s) * p + np.sin(s) * v
    t_edge = -np.sin(s) * p + np.cos(s) * v

    n_torus = cfg.sheet_tori[0].normal(x)
    n_sph = cfg.sphere1_normals[0]
    n_sph = normalize(n_sph - (n_sph @ x) * x)

    def in_plane_perp(nrm):
        A = np.stack([x, nrm, t_edge])
        _, _, vt = np.linalg.svd(A)
        return vt[-1]

    w1 = in_plane_perp(n_torus)
    w2 = in_plane_perp(n_sph)
    return float(np.arccos(np.clip(abs(w1 @ w2), -1.0, 1.0)))
