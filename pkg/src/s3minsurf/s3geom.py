"""Exact-formula spherical geometry of the unit 3-sphere in R^4.

Points are unit 4-vectors (plain numpy arrays of shape (4,) or batches
(..., 4)).  Isometries are orthogonal 4x4 matrices with det +1 and act on
point batches through ``transform_points``.  Great circles carry an ordered
orthonormal frame (u, v); orientation is part of their identity.

All objects here are immutable values and every function is pure, so
everything is safe to share between threads.

Conventions used throughout the package:

* ``plane_rotation(i, j, t)`` rotates the x_i x_j coordinate plane
  counterclockwise by t (e_i -> cos t e_i + sin t e_j) and fixes the
  complementary plane pointwise.
* A "screw motion" composes two equal-angle rotations in complementary
  planes; ``screw_motion_circle`` allows distinct speeds on an arbitrary
  polar circle pair.
* A "half turn" about a great circle C fixes C pointwise and negates the
  polar plane; it has det +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Centralized tolerances.  EPS_UNIT guards algebraic identities (unit norms,
# orthogonality, matrix closure); EPS_GEO guards geometric coincidences
# (point-on-circle, point-on-torus).  Callers may pass their own values.
EPS_UNIT = 1e-12
EPS_GEO = 1e-9


def normalize(x: np.ndarray) -> np.ndarray:
    """Return x scaled to unit norm along the last axis."""
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / n


def require_unit(p: np.ndarray, tol: float = EPS_UNIT) -> np.ndarray:
    """Validate that p is a unit vector (batch-aware); returns p as float64."""
    p = np.asarray(p, dtype=float)
    err = np.abs(np.sum(p * p, axis=-1) - 1.0)
    if np.any(err > 10 * tol):
        raise ValueError(f"point not on the unit sphere (norm error {float(np.max(err)):.3e})")
    return p


def geodesic_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Geodesic distance on S^3: arccos of the dot product, clamped to [-1, 1].

    Broadcasts over leading axes; returns values in [0, pi].
    """
    d = np.sum(np.asarray(p, float) * np.asarray(q, float), axis=-1)
    return np.arccos(np.clip(d, -1.0, 1.0))


def slerp(a: np.ndarray, b: np.ndarray, t) -> np.ndarray:
    """Geodesic interpolation between unit vectors a and b at parameter(s) t."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    t = np.asarray(t, float)
    ang = geodesic_distance(a, b)
    if ang < 1e-9:
        out = (1.0 - t)[..., None] * a + t[..., None] * b if t.ndim else (1 - t) * a + t * b
        return normalize(out)
    s = np.sin(ang)
    w0 = np.sin((1.0 - t) * ang) / s
    w1 = np.sin(t * ang) / s
    if t.ndim:
        return w0[..., None] * a + w1[..., None] * b
    return w0 * a + w1 * b


def transform_points(R: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply a 4x4 isometry to a point or a batch of points."""
    return np.asarray(X, float) @ np.asarray(R, float).T


def is_rotation(R: np.ndarray, tol: float = EPS_UNIT) -> bool:
    """True when R is orthogonal with det +1 within tol."""
    R = np.asarray(R, float)
    if R.shape != (4, 4):
        return False
    err = np.max(np.abs(R @ R.T - np.eye(4)))
    return bool(err < 10 * tol and np.linalg.det(R) > 0)


def plane_rotation(i: int, j: int, t: float) -> np.ndarray:
    """Rotation by angle t along the x_i x_j coordinate plane (1-based axes).

    Fixes the complementary coordinate plane pointwise.
    """
    if i == j or not {i, j} <= {1, 2, 3, 4}:
        raise ValueError(f"invalid axis pair ({i}, {j})")
    R = np.eye(4)
    c, s = np.cos(t), np.sin(t)
    a, b = i - 1, j - 1
    R[a, a] = c
    R[b, b] = c
    R[a, b] = -s
    R[b, a] = s
    return R


def screw_motion(i: int, j: int, k: int, l: int, t: float) -> np.ndarray:
    """Equal-speed screw motion: rotation by t in the x_i x_j plane composed
    with rotation by t in the x_k x_l plane.  Requires {i,j,k,l} = {1,2,3,4}.
    """
    if sorted((i, j, k, l)) != [1, 2, 3, 4]:
        raise ValueError(f"axes ({i},{j},{k},{l}) are not a permutation of 1..4")
    return plane_rotation(i, j, t) @ plane_rotation(k, l, t)


def rotation_in_plane(u: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    """Rotation by t in the oriented plane span(u, v), fixing its complement.

    u, v must be orthonormal; the rotation takes u toward v for t > 0.
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    P = np.outer(u, u) + np.outer(v, v)
    A = np.outer(v, u) - np.outer(u, v)
    return np.eye(4) + (np.cos(t) - 1.0) * P + np.sin(t) * A


@dataclass(frozen=True, eq=False)
class GreatCircle:
    """Oriented great circle: point at angle theta is cos(theta) u + sin(theta) v."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, float)
        v = np.asarray(self.v, float)
        if abs(u @ u - 1) > 1e-10 or abs(v @ v - 1) > 1e-10 or abs(u @ v) > 1e-10:
            raise ValueError("great-circle frame is not orthonormal")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, float)
        return np.cos(theta)[..., None] * self.u + np.sin(theta)[..., None] * self.v \
            if theta.ndim else np.cos(theta) * self.u + np.sin(theta) * self.v

    def tangent(self, theta: float) -> np.ndarray:
        return -np.sin(theta) * self.u + np.cos(theta) * self.v

    def tangent_at(self, x: np.ndarray) -> np.ndarray:
        """Unit tangent of the circle at a point x lying on it."""
        return normalize((x @ self.u) * self.v - (x @ self.v) * self.u)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Closest point on the circle (projection to the plane, renormalized)."""
        x = np.asarray(x, float)
        cu = x @ self.u
        cv = x @ self.v
        p = np.multiply.outer(cu, self.u) + np.multiply.outer(cv, self.v)
        return normalize(p)

    def residual(self, x: np.ndarray) -> np.ndarray:
        """Distance from x to the plane of the circle (0 iff on the circle)."""
        x = np.asarray(x, float)
        cu = x @ self.u
        cv = x @ self.v
        p = np.multiply.outer(cu, self.u) + np.multiply.outer(cv, self.v)
        return np.linalg.norm(x - p, axis=-1)

    def angle_of(self, x: np.ndarray) -> float:
        """Parameter angle of a point on (or near) the circle."""
        return float(np.arctan2(x @ self.v, x @ self.u))

    def reversed(self) -> "GreatCircle":
        return GreatCircle(self.u, -self.v)


def polar_circle(C: GreatCircle) -> GreatCircle:
    """The great circle in the orthogonal-complement plane of C.

    Every point of the result is at distance pi/2 from every point of C.  The
    orientation is fixed deterministically by Gram-Schmidt over the standard
    basis in order; polar(C_12) yields the frame (e3, e4).
    """
    basis = [C.u, C.v]
    out = []
    for k in range(4):
        w = np.zeros(4)
        w[k] = 1.0
        for b in basis + out:
            w = w - (w @ b) * b
        n = np.linalg.norm(w)
        if n > 0.3:
            out.append(w / n)
        if len(out) == 2:
            break
    if len(out) != 2:
        raise ValueError("degenerate circle frame")
    return GreatCircle(out[0], out[1])


def half_turn(C: GreatCircle) -> np.ndarray:
    """180-degree rotation about C: fixes C pointwise, negates the polar plane."""
    P = np.outer(C.u, C.u) + np.outer(C.v, C.v)
    return 2.0 * P - np.eye(4)


def screw_motion_circle(C: GreatCircle, t: float, s: float) -> np.ndarray:
    """Screw motion with distinct speeds about the polar pair (C, polar(C)).

    Restricted to C it translates by arclength t (in C's orientation);
    restricted to the polar circle it translates by s (in the orientation
    produced by ``polar_circle``).
    """
    P = polar_circle(C)
    return rotation_in_plane(C.u, C.v, t) @ rotation_in_plane(P.u, P.v, s)


@dataclass(frozen=True, eq=False)
class GeodesicArc:
    """Minor great-circle arc between two non-antipodal distinct points."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = require_unit(self.a)
        b = require_unit(self.b)
        d = geodesic_distance(a, b)
        if not (EPS_GEO < d < np.pi - EPS_GEO):
            raise ValueError(f"arc endpoints at distance {float(d):.3e}, need (0, pi)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return float(geodesic_distance(self.a, self.b))

    def circle(self) -> GreatCircle:
        v = normalize(self.b - (self.a @ self.b) * self.a)
        return GreatCircle(self.a, v)

    def point(self, t) -> np.ndarray:
        return slerp(self.a, self.b, t)

    def samples(self, n: int) -> np.ndarray:
        return self.point(np.linspace(0.0, 1.0, n))


@dataclass(frozen=True, eq=False)
class CliffordTorus:
    """Clifford torus given by a placing isometry Q.

    Q maps the standard torus {x1^2 + x2^2 = 1/2} onto this torus, so a point
    x lies on the torus iff (Q^T x) satisfies the standard equation.
    """

    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, float)
        if not is_rotation(Q, 1e-10):
            raise ValueError("placing matrix is not a rotation")
        object.__setattr__(self, "Q", Q)

    @staticmethod
    def standard() -> "CliffordTorus":
        return CliffordTorus(np.eye(4))

    @staticmethod
    def from_quadric(M: np.ndarray) -> "CliffordTorus":
        """Torus {x^T M x = 0} for a symmetric M with eigenvalues (.5,.5,-.5,-.5)."""
        w, U = np.linalg.eigh(M)
        if np.max(np.abs(np.sort(w) - np.array([-0.5, -0.5, 0.5, 0.5]))) > 1e-9:
            raise ValueError(f"quadric eigenvalues {w} are not (±1/2, ±1/2)")
        Q = U[:, [2, 3, 0, 1]]  # +1/2 eigenvectors first
        if np.linalg.det(Q) < 0:
            Q = Q[:, [0, 1, 3, 2]]
        return CliffordTorus(Q)

    def _local(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float) @ self.Q

    def membership_residual(self, x: np.ndarray) -> np.ndarray:
        y = self._local(x)
        return np.abs(y[..., 0] ** 2 + y[..., 1] ** 2 - 0.5)

    def fiber_angle(self, x: np.ndarray) -> np.ndarray:
        """Angle a in [0, pi/2] of the constant-distance fibration; pi/4 on the torus."""
        y = self._local(x)
        r12 = np.hypot(y[..., 0], y[..., 1])
        r34 = np.hypot(y[..., 2], y[..., 3])
        return np.arctan2(r34, r12)

    def distance(self, x: np.ndarray) -> np.ndarray:
        """Geodesic distance from x to the torus: |fiber angle - pi/4|."""
        return np.abs(self.fiber_angle(x) - np.pi / 4)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Closest point on the torus (each circle factor rescaled to 1/sqrt2)."""
        y = self._local(x)
        r12 = np.maximum(np.hypot(y[..., 0], y[..., 1]), 1e-300)
        r34 = np.maximum(np.hypot(y[..., 2], y[..., 3]), 1e-300)
        out = np.empty_like(y)
        c = 1.0 / np.sqrt(2.0)
        out[..., 0] = y[..., 0] / r12 * c
        out[..., 1] = y[..., 1] / r12 * c
        out[..., 2] = y[..., 2] / r34 * c
        out[..., 3] = y[..., 3] / r34 * c
        return out @ self.Q.T

    def normal(self, x: np.ndarray) -> np.ndarray:
        """Unit normal of the torus within T_x S^3, for x on (or near) the torus."""
        y = self._local(x)
        g = np.zeros_like(y)
        g[..., 0] = y[..., 0]
        g[..., 1] = y[..., 1]
        g = g @ self.Q.T
        x = np.asarray(x, float)
        g = g - np.sum(g * x, axis=-1, keepdims=True) * x
        return normalize(g)


def clifford_chart(x: float, y: float) -> np.ndarray:
    """Doubly ruled chart of the Clifford torus {x1 x3 = x2 x4} in S^3."""
    return np.stack(
        [
            np.cos(x) * np.sin(y),
            np.cos(x) * np.cos(y),
            np.sin(x) * np.cos(y),
            np.sin(x) * np.sin(y),
        ],
        axis=-1,
    )


def torus_distance(p: np.ndarray, T: CliffordTorus | None = None) -> np.ndarray:
    """Geodesic distance from p to a Clifford torus (standard torus by default)."""
    if T is None:
        T = CliffordTorus.standard()
    return T.distance(require_unit(p))


def reflection_through_sphere(n: np.ndarray) -> np.ndarray:
    """Reflection of S^3 across the great sphere {x . n = 0} (det -1)."""
    n = normalize(np.asarray(n, float))
    return np.eye(4) - 2.0 * np.outer(n, n)


def random_unit_vectors(rng: np.random.Generator, n: int, dim: int = 4) -> np.ndarray:
    """n uniform random points on the unit sphere of R^dim."""
    x = rng.standard_normal((n, dim))
    return normalize(x)
