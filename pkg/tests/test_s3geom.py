import numpy as np
import pytest

from s3minsurf import s3geom as g

RNG = np.random.default_rng(20240311)

E1, E2, E3, E4 = np.eye(4)


def test_geodesic_distance_basics():
    assert g.geodesic_distance(E1, E2) == pytest.approx(np.pi / 2)
    p = g.normalize([0.3, -0.2, 0.5, 0.9])
    assert g.geodesic_distance(p, p) == pytest.approx(0.0, abs=1e-12)


def test_geodesic_distance_polar_pairs():
    # every point of C12 is at distance pi/2 from every point of C34
    th = RNG.uniform(0, 2 * np.pi, size=20)
    ph = RNG.uniform(0, 2 * np.pi, size=20)
    p = np.stack([np.cos(th), np.sin(th), 0 * th, 0 * th], axis=-1)
    q = np.stack([0 * ph, 0 * ph, np.cos(ph), np.sin(ph)], axis=-1)
    d = g.geodesic_distance(p, q)
    np.testing.assert_allclose(d, np.pi / 2, atol=1e-12)


def test_distance_symmetry_and_triangle_inequality():
    P = g.random_unit_vectors(RNG, 60)
    a, b, c = P[:20], P[20:40], P[40:]
    dab = g.geodesic_distance(a, b)
    np.testing.assert_allclose(dab, g.geodesic_distance(b, a), atol=1e-15)
    assert np.all(dab <= g.geodesic_distance(a, c) + g.geodesic_distance(c, b) + 1e-12)


def test_plane_rotation_identity_and_quarter_turn():
    np.testing.assert_allclose(g.plane_rotation(1, 2, 0.0), np.eye(4), atol=0)
    np.testing.assert_allclose(g.plane_rotation(1, 2, np.pi / 2) @ E1, E2, atol=1e-15)


def test_plane_rotation_one_parameter_group():
    for _ in range(10):
        s, t = RNG.uniform(-5, 5, size=2)
        lhs = g.plane_rotation(1, 2, s) @ g.plane_rotation(1, 2, t)
        rhs = g.plane_rotation(1, 2, s + t)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_plane_rotation_invalid_axes():
    with pytest.raises(ValueError):
        g.plane_rotation(2, 2, 0.1)
    with pytest.raises(ValueError):
        g.plane_rotation(0, 5, 0.1)


def test_isometry_algebra_invariants():
    # all constructors return orthogonal det +1 matrices within 1e-12
    circles = [
        g.GreatCircle(E1, E2),
        g.GreatCircle(g.normalize([1, 0, 1, 0]), g.normalize([0, 1, 0, 1])),
    ]
    mats = [
        g.plane_rotation(1, 3, 0.7),
        g.screw_motion(1, 2, 3, 4, -1.1),
        g.screw_motion(1, 4, 2, 3, 0.3),
        g.half_turn(circles[0]),
        g.half_turn(circles[1]),
        g.screw_motion_circle(circles[1], 0.4, -0.9),
    ]
    for R in mats:
        assert np.max(np.abs(R @ R.T - np.eye(4))) < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_isometries_preserve_distance():
    P = g.random_unit_vectors(RNG, 40)
    R = g.screw_motion(1, 2, 3, 4, 0.83) @ g.half_turn(g.GreatCircle(E1, E3))
    d0 = g.geodesic_distance(P[:20], P[20:])
    d1 = g.geodesic_distance(g.transform_points(R, P[:20]), g.transform_points(R, P[20:]))
    np.testing.assert_allclose(d0, d1, atol=1e-12)


def test_screw_motion_identity_and_bad_axes():
    np.testing.assert_allclose(g.screw_motion(1, 2, 3, 4, 0.0), np.eye(4), atol=0)
    with pytest.raises(ValueError):
        g.screw_motion(1, 2, 3, 3, 0.5)


def test_screw_motion_preserves_standard_torus():
    T = g.CliffordTorus.standard()
    th = RNG.uniform(0, 2 * np.pi, size=(25, 2))
    pts = np.stack(
        [np.cos(th[:, 0]), np.sin(th[:, 0]), np.cos(th[:, 1]), np.sin(th[:, 1])], axis=-1
    ) / np.sqrt(2)
    for t in RNG.uniform(-3, 3, size=5):
        moved = g.transform_points(g.screw_motion(1, 2, 3, 4, t), pts)
        np.testing.assert_allclose(
            T.membership_residual(moved), T.membership_residual(pts), atol=1e-12
        )


def test_screw_motion_rules_chart_torus():
    # the screw motion on axes (1,4),(2,3) carries the reversed circle C21 onto
    # the ruling {x = t} of the doubly ruled chart
    y = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    c21 = np.stack([np.sin(y), np.cos(y), 0 * y, 0 * y], axis=-1)
    for t in [0.2, 1.1, -0.7]:
        R = g.screw_motion(1, 4, 2, 3, t)
        moved = g.transform_points(R, c21)
        np.testing.assert_allclose(moved, g.clifford_chart(t, y), atol=1e-12)


def test_screw_motion_circle_reduces_to_screw_motion():
    C12 = g.GreatCircle(E1, E2)
    for t in [0.0, 0.9, -2.2]:
        lhs = g.screw_motion_circle(C12, t, t)
        rhs = g.screw_motion(1, 2, 3, 4, t)
        assert np.max(np.abs(lhs - rhs)) < 1e-12
    np.testing.assert_allclose(g.screw_motion_circle(C12, 0.0, 0.0), np.eye(4), atol=0)


def test_screw_motion_circle_translates_both_circles():
    C = g.GreatCircle(g.normalize([1, 0, -1, 0]), g.normalize([0, 1, 0, 1]))
    P = g.polar_circle(C)
    t, s = 0.37, -1.21
    R = g.screw_motion_circle(C, t, s)
    for th in RNG.uniform(0, 2 * np.pi, size=6):
        np.testing.assert_allclose(g.transform_points(R, C.point(th)), C.point(th + t), atol=1e-12)
        np.testing.assert_allclose(g.transform_points(R, P.point(th)), P.point(th + s), atol=1e-12)


def test_half_turn_fixes_axis_and_is_involution():
    C = g.GreatCircle(g.normalize([1, 1, 0, 0]), g.normalize([0, 0, 1, -1]))
    R = g.half_turn(C)
    for th in RNG.uniform(0, 2 * np.pi, size=8):
        p = C.point(th)
        np.testing.assert_allclose(g.transform_points(R, p), p, atol=1e-12)
    np.testing.assert_allclose(R @ R, np.eye(4), atol=1e-12)


def test_polar_circle_of_c12_is_c34():
    C34 = g.polar_circle(g.GreatCircle(E1, E2))
    np.testing.assert_allclose(C34.u, E3, atol=1e-15)
    np.testing.assert_allclose(C34.v, E4, atol=1e-15)


def test_polar_circle_involution_and_orthogonality():
    C = g.GreatCircle(g.normalize([2, 1, 0, 1]), g.normalize([-1, 2, 1, 0.0]))
    P = g.polar_circle(C)
    PP = g.polar_circle(P)
    # involution as point sets: the plane of PP equals the plane of C
    th = RNG.uniform(0, 2 * np.pi, size=10)
    np.testing.assert_allclose(PP.residual(C.point(th)), 0.0, atol=1e-12)
    d = g.geodesic_distance(C.point(th), P.point(RNG.uniform(0, 2 * np.pi, size=10)))
    np.testing.assert_allclose(d, np.pi / 2, atol=1e-12)


def test_clifford_chart_identities():
    np.testing.assert_allclose(g.clifford_chart(0.0, 0.0), np.array([0, 1, 0, 0.0]), atol=0)
    xy = RNG.uniform(0, 2 * np.pi, size=(30, 2))
    pts = g.clifford_chart(xy[:, 0], xy[:, 1])
    np.testing.assert_allclose(np.linalg.norm(pts, axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(pts[:, 0] * pts[:, 2], pts[:, 1] * pts[:, 3], atol=1e-12)


def test_chart_rulings_are_great_circles():
    # fixed x: the curve lies in the plane spanned by its theta=0, pi/2 points
    for x0 in RNG.uniform(0, 2 * np.pi, size=4):
        y = np.linspace(0, 2 * np.pi, 40)
        curve = g.clifford_chart(x0, y)
        C = g.GreatCircle(g.clifford_chart(x0, 0.0), g.clifford_chart(x0, np.pi / 2))
        np.testing.assert_allclose(C.residual(curve), 0.0, atol=1e-12)
    for y0 in RNG.uniform(0, 2 * np.pi, size=4):
        x = np.linspace(0, 2 * np.pi, 40)
        curve = g.clifford_chart(x, y0)
        C = g.GreatCircle(g.clifford_chart(0.0, y0), g.clifford_chart(np.pi / 2, y0))
        np.testing.assert_allclose(C.residual(curve), 0.0, atol=1e-12)


def test_torus_distance_equidistance_property():
    th = RNG.uniform(0, 2 * np.pi, size=12)
    on_c12 = np.stack([np.cos(th), np.sin(th), 0 * th, 0 * th], axis=-1)
    on_c34 = np.stack([0 * th, 0 * th, np.cos(th), np.sin(th)], axis=-1)
    np.testing.assert_allclose(g.torus_distance(on_c12), np.pi / 4, atol=1e-12)
    np.testing.assert_allclose(g.torus_distance(on_c34), np.pi / 4, atol=1e-12)


def test_torus_distance_zero_on_torus():
    th = RNG.uniform(0, 2 * np.pi, size=(12, 2))
    pts = np.stack(
        [np.cos(th[:, 0]), np.sin(th[:, 0]), np.cos(th[:, 1]), np.sin(th[:, 1])], axis=-1
    ) / np.sqrt(2)
    np.testing.assert_allclose(g.torus_distance(pts), 0.0, atol=1e-12)


def _torus_grid_min_distance(p, rounds=6, n=160):
    # brute-force min of geodesic_distance over the standard torus, with
    # progressive zoom around the current argmin
    ca, cb, half = np.pi, np.pi, np.pi
    best = None
    for _ in range(rounds):
        a = np.linspace(ca - half, ca + half, n)
        b = np.linspace(cb - half, cb + half, n)
        A, B = np.meshgrid(a, b, indexing="ij")
        pts = np.stack([np.cos(A), np.sin(A), np.cos(B), np.sin(B)], axis=-1) / np.sqrt(2)
        d = g.geodesic_distance(p, pts)
        idx = np.unravel_index(np.argmin(d), d.shape)
        best = float(d[idx])
        ca, cb = a[idx[0]], b[idx[1]]
        half = 3 * (a[1] - a[0])
    return best


def test_torus_distance_matches_grid_search():
    # push chart points off the standard torus and compare against an
    # iteratively refined grid-search over the torus itself
    base = np.stack([np.cos(1.3), np.sin(1.3), np.cos(2.7), np.sin(2.7)]) / np.sqrt(2)
    for t in [0.03, 0.11]:
        p = g.transform_points(g.plane_rotation(1, 3, t), base)
        brute = _torus_grid_min_distance(p)
        assert abs(float(g.torus_distance(p)) - brute) < 1e-6


def test_torus_project_and_normal():
    T = g.CliffordTorus.standard()
    p = g.normalize([0.9, 0.1, 0.3, -0.2])
    q = T.project(p)
    assert float(T.membership_residual(q)) < 1e-14
    n = T.normal(q)
    assert abs(n @ q) < 1e-12
    assert np.linalg.norm(n) == pytest.approx(1.0)


def test_from_quadric_roundtrip():
    # torus {x1 x3 = x2 x4}: quadric with eigenvalues (±1/2)
    M = np.zeros((4, 4))
    M[0, 2] = M[2, 0] = 0.5
    M[1, 3] = M[3, 1] = -0.5
    T = g.CliffordTorus.from_quadric(M)
    xy = RNG.uniform(0, 2 * np.pi, size=(40, 2))
    pts = g.clifford_chart(xy[:, 0], xy[:, 1])
    np.testing.assert_allclose(T.membership_residual(pts), 0.0, atol=1e-12)
    np.testing.assert_allclose(T.distance(pts), 0.0, atol=1e-7)


def test_arc_and_circle_helpers():
    arc = g.GeodesicArc(E1, g.normalize([1, 1, 0, 0]))
    assert arc.length == pytest.approx(np.pi / 4)
    mid = arc.point(0.5)
    assert g.geodesic_distance(arc.a, mid) == pytest.approx(arc.length / 2, abs=1e-12)
    C = arc.circle()
    np.testing.assert_allclose(C.residual(arc.samples(9)), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        g.GeodesicArc(E1, E1)  # zero length
    with pytest.raises(ValueError):
        g.GeodesicArc(E1, -E1)  # antipodal
