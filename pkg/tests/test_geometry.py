import numpy as np
import pytest

from mmtaskgen.errors import DomainError
from mmtaskgen.geometry import (
    CollisionGeom,
    RigidTransform,
    SurfacePlane,
    build_sdf,
    contact_ratio,
    point_signed_distance,
    polygon_area,
    polygon_intersection_area,
    primitive_distance,
)
from mmtaskgen.geometry.shapes import sphere_proxies
from mmtaskgen.geometry.sdf import geoms_sdf


def rand_pose(rng, scale=1.0):
    q = rng.normal(size=4)
    return RigidTransform(q / np.linalg.norm(q), rng.normal(size=3) * scale)


def test_transform_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rand_pose(rng), rand_pose(rng)
        assert a.allclose(RigidTransform.from_matrix(a.as_matrix()), 1e-12)
        np.testing.assert_allclose((a @ b).as_matrix(), a.as_matrix() @ b.as_matrix(), atol=1e-12)
        np.testing.assert_allclose((a @ a.inverse()).as_matrix(), np.eye(4), atol=1e-12)
        assert RigidTransform.from_matrix(a.as_matrix()).allclose(a, 1e-12)
        assert RigidTransform.from_list(a.to_list()) == a


def test_transform_rejects_bad_input():
    with pytest.raises(DomainError):
        RigidTransform(np.zeros(4), np.zeros(3))
    with pytest.raises(DomainError):
        RigidTransform(np.array([1.0, 0, 0, 0]), [0.0, np.nan, 0.0])


def test_nonconvex_intersection():
    # L-shaped polygon: 2x2 square minus its upper-right unit square
    ell = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], float)
    unit = np.array([[1, 1], [2, 1], [2, 2], [1, 2]], float)
    assert polygon_area(ell) == pytest.approx(3.0)
    assert polygon_intersection_area(ell, unit) == pytest.approx(0.0, abs=1e-12)
    big = np.array([[0.5, 0.5], [3, 0.5], [3, 3], [0.5, 3]], float)
    # big covers [0.5,2]x[0.5,1] and [0.5,1]x[1,2] of the L
    assert polygon_intersection_area(ell, big) == pytest.approx(0.75 + 0.5, abs=1e-12)


def test_intersection_is_symmetric_and_bounded():
    rng = np.random.default_rng(3)
    for _ in range(30):
        a = rng.normal(size=(3, 2))
        b = rng.normal(size=(3, 2))
        a = a if np.linalg.det(np.c_[a[1:] - a[0]]) > 0 else a[::-1]
        b = b if np.linalg.det(np.c_[b[1:] - b[0]]) > 0 else b[::-1]
        ab, ba = polygon_intersection_area(a, b), polygon_intersection_area(b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab <= min(polygon_area(a), polygon_area(b)) + 1e-12


def test_3d_polygons_must_be_coplanar():
    a = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)
    b = a + [0, 0, 0.01]
    with pytest.raises(DomainError, match="off the common plane"):
        polygon_intersection_area(a, b)
    assert polygon_intersection_area(a, a + [0.5, 0, 0]) == pytest.approx(0.5)


def test_surface_plane_validation():
    sq = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)
    p = SurfacePlane.from_outline(sq[::-1], normal=[0, 0, 1])  # orientation fixed automatically
    assert p.area == pytest.approx(1.0)
    np.testing.assert_allclose(p.centroid, [0.5, 0.5, 0.0], atol=1e-12)
    with pytest.raises(DomainError, match="counter-clockwise"):
        SurfacePlane(np.array([0, 0, 1.0]), 0.0, sq[::-1])
    with pytest.raises(DomainError, match="coplanar"):
        SurfacePlane(np.array([0, 0, 1.0]), 0.0, sq + [[0, 0, 0], [0, 0, 0.1], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(DomainError, match="simple"):
        SurfacePlane(np.array([0, 0, 1.0]), 0.0, np.array([[0, 0, 0], [2, 0, 0], [2, 2, 0], [1, -1, 0], [0, 2, 0]], float))


def test_contact_ratio_projects_along_support_normal():
    sq = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)
    support = SurfacePlane.from_outline(sq, normal=[0, 0, 1])
    # object bottom hovering 5 mm above, tilted slightly; the projection still lands inside
    obj = SurfacePlane.from_outline((sq * 0.2 + [0.3, 0.3, 0.005])[::-1], normal=[0, 0, -1])
    assert contact_ratio(obj, support) == pytest.approx(1.0, abs=1e-12)


def test_geom_validation():
    with pytest.raises(DomainError):
        CollisionGeom.box((1.0, -1.0, 1.0))
    with pytest.raises(DomainError):
        CollisionGeom.cylinder(0.0, 1.0)
    with pytest.raises(DomainError, match="coplanar"):
        CollisionGeom.convex([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])


@pytest.mark.parametrize("geom", [
    CollisionGeom.box((0.3, 0.1, 0.05)),
    CollisionGeom.cylinder(0.04, 0.2),
    CollisionGeom.convex([[0, 0, 0], [0.2, 0, 0], [0, 0.1, 0], [0, 0, 0.3], [0.1, 0.1, 0.1]]),
])
def test_sphere_proxies_enclose(geom):
    rng = np.random.default_rng(0)
    centers, radii = sphere_proxies(geom)
    lo, hi = geom.local_bounds()
    pts = rng.uniform(lo, hi, size=(20000, 3))
    inside = point_signed_distance(geom, np.eye(4), pts) <= 0
    pts = pts[inside]
    covered = np.any(np.linalg.norm(pts[:, None] - centers[None], axis=2) <= radii[None] + 1e-12, axis=1)
    assert covered.all()


def test_box_distance_analytic():
    a = CollisionGeom.box((1.0, 1.0, 1.0))
    b = CollisionGeom.box((1.0, 1.0, 1.0))
    w = np.eye(4)
    w[:3, 3] = [1.3, 0.0, 0.0]
    assert primitive_distance(a, np.eye(4), b, w) == pytest.approx(0.3, abs=1e-9)
    w[:3, 3] = [0.8, 0.0, 0.0]
    assert primitive_distance(a, np.eye(4), b, w) == pytest.approx(-0.2, abs=1e-6)
    w[:3, 3] = [1.5, 1.5, 0.0]  # edge to edge
    assert primitive_distance(a, np.eye(4), b, w) == pytest.approx(np.sqrt(0.5), abs=1e-9)


def test_cylinder_distance_matches_point_field():
    rng = np.random.default_rng(2)
    cyl = CollisionGeom.cylinder(0.1, 0.4)
    tiny = CollisionGeom.box((1e-4, 1e-4, 1e-4))
    for _ in range(20):
        p = rng.uniform(-0.6, 0.6, 3)
        if np.all(np.abs(p) < 0.25):
            continue
        w = np.eye(4)
        w[:3, 3] = p
        d = primitive_distance(cyl, np.eye(4), tiny, w)
        ref = point_signed_distance(cyl, np.eye(4), p[None])[0]
        # the 16-sided prism sits inside the true cylinder by at most r (1 - cos(pi/16))
        assert ref - 0.0021 <= d <= ref + 0.0021


def test_sdf_is_a_lower_bound(room):
    grid = build_sdf(room, cell_size=0.05)
    rng = np.random.default_rng(1)
    pts = rng.uniform([-0.5, -1.0, 0.0], [2.0, 1.0, 1.2], size=(3000, 3))
    exact = np.min([point_signed_distance(g, w, pts) for _, _, g, w in room.posed_geoms()], axis=0)
    assert np.all(grid.lower_bound(pts) <= exact + 1e-9)
    assert np.max(np.abs(grid.query(pts) - exact)) <= grid.error_bound + 1e-9


def test_sdf_empty_scene_is_positive():
    grid = geoms_sdf([], cell_size=0.1)
    assert np.all(grid.values > 0)
