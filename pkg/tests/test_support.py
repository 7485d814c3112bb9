import numpy as np
import pytest

from conftest import DATA
from mmtaskgen.errors import DomainError, NoSupportError
from mmtaskgen.geometry import SurfacePlane
from mmtaskgen.scene_io import load_scene
from mmtaskgen.support import (
    SupportPlaneSelector,
    SupportQuery,
    calc_support_plane,
    extract_planes,
    object_bottom,
    support_link_of,
    support_of,
)


def square(z, half=0.5, center=(0.0, 0.0), normal=(0, 0, 1)):
    c = np.array([*center, z])
    pts = np.array([c + [-half, -half, 0], c + [half, -half, 0], c + [half, half, 0], c + [-half, half, 0]])
    return SurfacePlane.from_outline(pts, normal=normal)


def test_cup_and_shaker_on_table(room):
    assert support_link_of(room, "cup") == "dining_table"
    assert support_link_of(room, "salt_shaker") == "dining_table"
    sup = support_of(room, "cup")
    np.testing.assert_allclose(sup.normal, [0, 0, 1], atol=1e-12)
    assert sup.offset == pytest.approx(-0.75)


def test_book_in_cabinet():
    cab = load_scene(DATA / "cabinet.urdf")
    assert support_link_of(cab, "book") == "cabinet"
    sup = support_of(cab, "book")
    assert -sup.offset == pytest.approx(object_bottom(cab, "book").outline[:, 2].mean(), abs=1e-9)


def test_pruning_threshold(room):
    tops = extract_planes(room, min_abs_nz=0.5)
    every = extract_planes(room)
    assert len(every) > len(tops)
    assert all(abs(p.normal[2]) >= 0.5 for p in tops)


def test_constraints_filter_before_ratio():
    obj = square(0.8, 0.05, normal=(0, 0, -1))
    near = square(0.8, 0.03)  # coplanar but smaller: ratio < 1
    far = square(0.5, 1.0)  # full overlap but 30 cm below
    assert calc_support_plane(SupportQuery(obj, [near, far])) is near
    with pytest.raises(NoSupportError):
        calc_support_plane(SupportQuery(obj, [far]))


def test_tie_break_prefers_closer_then_larger():
    obj = square(0.8, 0.05, normal=(0, 0, -1))
    lower = square(0.79, 0.5)
    exact = square(0.8, 0.2)
    bigger = square(0.8, 0.4)
    assert calc_support_plane(SupportQuery(obj, [lower, exact])) is exact
    assert calc_support_plane(SupportQuery(obj, [exact, bigger])) is bigger


def test_query_validation():
    obj = square(0.8, 0.05, normal=(0, 0, -1))
    with pytest.raises(DomainError):
        SupportQuery(obj, [])
    with pytest.raises(DomainError):
        SupportQuery(obj, [square(0.8)], theta_d=0.0)
    with pytest.raises(DomainError):
        SupportQuery(obj, [square(0.8)], theta_a=1.5)


def test_selector_estimator(room):
    sel = SupportPlaneSelector().fit(room)
    preds = sel.predict(["cup", "salt_shaker"])
    assert [p.link for p in preds] == ["dining_table", "dining_table"]
    assert sel.score(["cup", "salt_shaker"]) == pytest.approx(1.0)
    assert sel.get_params()["theta_a"] == 0.97
