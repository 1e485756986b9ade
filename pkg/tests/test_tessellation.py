import numpy as np
import pytest
from scipy.spatial import cKDTree

from s3minsurf import s3geom as g
from s3minsurf import tessellation as ts
from s3minsurf.errors import ParameterError

RNG = np.random.default_rng(7)


@pytest.fixture(scope="module")
def cfg21():
    return ts.build_configuration(2, 1)


@pytest.fixture(scope="module")
def cfg31():
    return ts.build_configuration(3, 1)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        ts.build_configuration(1, 1)
    with pytest.raises(ParameterError):
        ts.build_configuration(2, 0)


def test_marked_point_spacing(cfg21):
    # k = 4, 2k = 8 points spaced pi/4 on axis 1
    assert cfg21.k == 4
    P = cfg21.axis1_points
    assert P.shape == (8, 4)
    d = g.geodesic_distance(P, np.roll(P, -1, axis=0))
    np.testing.assert_allclose(d, np.pi / 4, atol=1e-12)


def test_row_points_are_segment_midpoints(cfg21):
    d1 = g.geodesic_distance(cfg21.axis1_points, cfg21.row1_points)
    d2 = g.geodesic_distance(cfg21.row1_points, cfg21.axis2_points)
    np.testing.assert_allclose(d1, np.pi / 4, atol=1e-12)
    np.testing.assert_allclose(d2, np.pi / 4, atol=1e-12)


def test_q0_lands_on_marked_row(cfg21):
    # the second-row opposite point coincides with the axis-2 point k/m index
    # steps past j=2
    j0 = 1 + cfg21.k // cfg21.m
    assert float(g.geodesic_distance(cfg21.q0_point, cfg21.axis2_points[j0])) < 1e-9
    assert float(g.geodesic_distance(cfg21.axis2_points[1], cfg21.q0_point)) == pytest.approx(
        np.pi / cfg21.m, abs=1e-12
    )


def test_sheet_torus_rotation_relation(cfg21):
    # T_{i+1} equals T_i rotated by pi/m in the second axis plane, as point sets
    R = g.plane_rotation(3, 4, np.pi / cfg21.m)
    th = RNG.uniform(0, 2 * np.pi, size=(50, 2))
    for i in range(len(cfg21.sheet_tori) - 1):
        c = cfg21.band[i]
        pts = ts.fiber_point(RNG.uniform(0, np.pi / 2, 50), th[:, 0], th[:, 0] + c)
        moved = g.transform_points(R, pts)
        assert float(np.max(cfg21.sheet_tori[i + 1].distance(moved))) < 1e-9


def test_grid_vertex_count_and_coincidence(cfg21, cfg31):
    for cfg in (cfg21, cfg31):
        n = 4 * cfg.m * cfg.k
        assert cfg.grid_points.shape == (n, 4)
        # no duplicates within either set
        t = cKDTree(cfg.grid_points)
        assert not t.query_pairs(1e-9)
        # inner-derived and outer-derived corner sets coincide as point sets
        d, _ = t.query(cfg.grid_points_outer)
        assert float(np.max(d)) < 1e-9


def test_grid_vertices_72_for_m3(cfg31):
    assert cfg31.grid_points.shape[0] == 4 * 3 * 6 == 72


def test_hexagon_edges_and_angles(cfg21):
    hexagon = ts.fundamental_polygon_odd(cfg21)
    V = hexagon.vertices
    assert len(hexagon) == 6
    # edge p1 -> p1' has length pi/4
    assert float(g.geodesic_distance(V[0], V[1])) == pytest.approx(np.pi / 4, abs=1e-12)
    # interior angle at the row vertices is pi/2 (external pi/2)
    edges = hexagon.edges()
    t_in = edges[0].circle().tangent_at(V[1])
    t_out = edges[1].circle().tangent_at(V[1])
    assert abs(t_in @ t_out) < 1e-12
    # interior angle at the axis vertices is pi/m (external (m-1)pi/m)
    t_in = edges[5].circle().tangent_at(V[0])
    t_out = edges[0].circle().tangent_at(V[0])
    ang = np.arccos(np.clip(t_in @ t_out, -1, 1))
    assert ang == pytest.approx(np.pi / cfg21.m, abs=1e-12)


def test_hexagon_edges_in_cell_skeleton(cfg21):
    # every hexagon edge lies on the boundary of the inner cell (1, 1)
    hexagon = ts.fundamental_polygon_odd(cfg21)
    for arc in hexagon.edges():
        cls = ts.region_membership(cfg21, ("inner", 1, 1), arc.samples(17))
        assert np.all(cls == ts.BOUNDARY)


def test_row_arc_length_on_base_torus(cfg21):
    # latitude arc between the two rows at fixed slice angle has length
    # pi / (sqrt 2 m): sample the latitude curve and sum chord lengths
    b = cfg21.beta[1]
    gammas = np.linspace(b, b + np.pi / cfg21.m, 4001)
    curve = ts.fiber_point(np.pi / 4, b, gammas)
    length = float(np.sum(np.linalg.norm(np.diff(curve, axis=0), axis=-1)))
    assert length == pytest.approx(np.pi / (np.sqrt(2) * cfg21.m), rel=1e-6)


def test_parallelogram_vertex_angles(cfg21):
    # tangent vectors of the cell base at a corner: along the ruling and along
    # the latitude; all four vertex angles are pi/4 or 3pi/4
    b = cfg21.beta[0]
    eps = 1e-6
    corner = cfg21.row1_points[0]
    along_ruling = (ts.fiber_point(np.pi / 4, b + eps, b + eps) - corner) / eps
    along_lat = (ts.fiber_point(np.pi / 4, b, b + eps) - corner) / eps
    cosang = along_ruling @ along_lat / (np.linalg.norm(along_ruling) * np.linalg.norm(along_lat))
    assert np.arccos(np.clip(cosang, -1, 1)) == pytest.approx(np.pi / 4, abs=1e-5)


def test_surface_angle_along_edge(cfg21):
    assert ts.surface_angle_along_edge(cfg21, 0.0) == pytest.approx(np.pi / 2, abs=1e-9)
    assert ts.surface_angle_along_edge(cfg21, np.pi / 4) == pytest.approx(np.pi / 4, abs=1e-9)
    assert ts.surface_angle_along_edge(cfg21, np.pi / 8) == pytest.approx(3 * np.pi / 8, abs=1e-9)


def test_lattice_identity_hausdorff(cfg21):
    arcs1, arcs2 = ts.lattice_edges(cfg21)
    assert len(arcs1) == len(arcs2) == 4 * cfg21.m * cfg21.k
    s1 = np.concatenate([a.samples(40) for a in arcs1])
    s2 = np.concatenate([a.samples(40) for a in arcs2])
    t1, t2 = cKDTree(s1), cKDTree(s2)
    h12 = float(np.max(t2.query(s1)[0]))
    h21 = float(np.max(t1.query(s2)[0]))
    assert max(h12, h21) < 1e-9


def test_axis2_hits_lattice_only_at_marked_points(cfg21):
    arcs1, _ = ts.lattice_edges(cfg21)
    samples = np.concatenate([a.samples(400) for a in arcs1])
    on_axis2 = samples[np.hypot(samples[:, 0], samples[:, 1]) < 1e-3]
    d, _ = cKDTree(cfg21.axis2_points).query(on_axis2)
    # every lattice point near axis 2 is near a marked point
    assert float(np.max(d)) < 2e-3


def test_base_torus_hits_lattice_at_grid(cfg21):
    arcs1, _ = ts.lattice_edges(cfg21)
    mids = np.stack([a.point(0.5) for a in arcs1])
    np.testing.assert_allclose(cfg21.base_torus.distance(mids), 0.0, atol=1e-12)
    d, _ = cKDTree(cfg21.grid_points).query(mids)
    assert float(np.max(d)) < 1e-9


def test_region_membership_basic(cfg21):
    label = ("inner", 1, 1)
    hexagon = ts.fundamental_polygon_odd(cfg21)
    center = g.normalize(hexagon.vertices.sum(axis=0))
    assert ts.region_membership(cfg21, label, center) == ts.INSIDE
    assert ts.region_membership(cfg21, label, cfg21.axis1_points[0]) == ts.BOUNDARY
    assert ts.region_membership(cfg21, ("outer", 1, 1), center) == ts.OUTSIDE
    counts, labels = ts.classify_unique(cfg21, center)
    assert counts[0] == 1 and labels[0] == label
    with pytest.raises(ValueError):
        ts.region_membership(cfg21, ("inner", 0, 1), center)
    with pytest.raises(ValueError):
        ts.region_membership(cfg21, ("middle", 1, 1), center)


def test_tiling_partition(cfg21):
    # random points fall inside exactly one pentahedron (resample boundary hits)
    rng = np.random.default_rng(42)
    pts = g.random_unit_vectors(rng, 400)
    counts, _ = ts.classify_unique(cfg21, pts, band_tol=1e-9)
    # points too close to a wall may be claimed by zero cells; resample those
    for _ in range(5):
        bad = counts != 1
        if not np.any(bad):
            break
        pts[bad] = g.random_unit_vectors(rng, int(np.sum(bad)))
        counts, _ = ts.classify_unique(cfg21, pts, band_tol=1e-9)
    assert np.all(counts == 1)


def test_screw_symmetry_permutes_cells(cfg21):
    # the screw motion by 2 pi / k in both axis planes permutes the cells
    R = g.screw_motion(1, 2, 3, 4, 2 * np.pi / cfg21.k)
    rng = np.random.default_rng(3)
    pts = g.random_unit_vectors(rng, 120)
    counts, _ = ts.classify_unique(cfg21, pts)
    pts = pts[counts == 1]
    _, labels_before = ts.classify_unique(cfg21, pts)
    counts_after, labels_after = ts.classify_unique(cfg21, g.transform_points(R, pts))
    assert np.all(counts_after == 1)
    # same-family mapping with a consistent label shift
    for lb, la in zip(labels_before, labels_after):
        assert la[0] == lb[0]
        assert la[1] == lb[1]
        assert (la[2] - lb[2]) % (2 * cfg21.k) == 2


def test_axis_half_turn_maps_cells(cfg21):
    # the half turn about axis 1 maps inner cell (i, j) to (i + m, j)
    R = g.half_turn(cfg21.axis1)
    rng = np.random.default_rng(4)
    pts = g.random_unit_vectors(rng, 200)
    counts, labels = ts.classify_unique(cfg21, pts)
    keep = [i for i in range(len(pts)) if counts[i] == 1 and labels[i][0] == "inner"]
    pts = pts[keep]
    labels = [labels[i] for i in keep]
    _, labels_after = ts.classify_unique(cfg21, g.transform_points(R, pts))
    for lb, la in zip(labels, labels_after):
        assert la == ("inner", (lb[1] + cfg21.m - 1) % (2 * cfg21.m) + 1, lb[2])


def test_inequality_between_feet():
    # distance between the two first-row feet vs first-row to second-row foot:
    # holds for ell = 2 (with equality), fails for ell = 1
    cfg2 = ts.build_configuration(2, 2)
    f = cfg2.mid_feet
    lhs = float(g.geodesic_distance(f["row1_j1"], f["row1_j2"]))
    rhs = float(g.geodesic_distance(f["row1_j2"], f["row2_j1"]))
    assert lhs <= rhs + 1e-12

    cfg1 = ts.build_configuration(2, 1)
    f = cfg1.mid_feet
    lhs = float(g.geodesic_distance(f["row1_j1"], f["row1_j2"]))
    rhs = float(g.geodesic_distance(f["row1_j2"], f["row2_j1"]))
    assert lhs > rhs + 1e-6


def test_mid_feet_distances(cfg21):
    f = cfg21.mid_feet
    m = cfg21.m
    assert float(g.geodesic_distance(f["mid_j2"], f["row2_j2"])) == pytest.approx(
        np.pi / (4 * m), abs=1e-12
    )
    assert float(g.geodesic_distance(f["row1_j1"], f["row2_j1"])) == pytest.approx(
        np.pi / (2 * m), abs=1e-12
    )
    assert float(g.geodesic_distance(f["row1_j2"], f["row2_j2"])) == pytest.approx(
        np.pi / (2 * m), abs=1e-12
    )


def test_even_screw_anchors(cfg21):
    phi = cfg21.even_screw
    np.testing.assert_allclose(
        g.transform_points(phi, cfg21.row2_points[0]), cfg21.row1_points[0], atol=1e-9
    )
    np.testing.assert_allclose(
        g.transform_points(phi, cfg21.row2_points[1]), cfg21.row1_points[1], atol=1e-9
    )
    # phi maps the inner cell (1,1) onto the outer cell (1,1)
    hexagon = ts.fundamental_polygon_odd(cfg21)
    center = g.normalize(hexagon.vertices.sum(axis=0))
    assert ts.region_membership(cfg21, ("outer", 1, 1), g.transform_points(phi, center)) == ts.INSIDE
    # phi^2 is the equal-speed screw motion by -pi/m
    np.testing.assert_allclose(
        phi @ phi, g.screw_motion(1, 2, 3, 4, -np.pi / cfg21.m), atol=1e-12
    )


def test_bounding_surfaces_table(cfg21):
    tab = cfg21.bounding_surfaces(("inner", 2, 8))
    assert ("sphere1", 8) in tab and ("sphere1", 1) in tab
    assert ("torus_branch", 2) in tab and ("torus_branch", 3) in tab
    assert ("base_torus",) in tab
    assert len(list(cfg21.pentahedron_labels())) == 8 * cfg21.m * cfg21.k


def test_config_json_roundtrip(cfg21):
    import json

    d = cfg21.to_json_dict()
    s = json.dumps(d, sort_keys=True)
    back = json.loads(s)
    assert back["parameters"] == {"m": 2, "ell": 1, "k": 4}
    assert len(back["points"]["grid"]) == 32
