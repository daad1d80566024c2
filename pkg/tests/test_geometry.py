import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lttext.errors import DegeneratePolygon, SelfIntersectingPolygon
from lttext.geometry import (
    Polygon,
    area,
    intersection_area,
    intersection_over_first,
    iou,
    rasterized_iou_oracle,
    segments_intersect,
)

from conftest import boxes, simple_polygons

SQ = lambda x0, y0, x1, y1: Polygon.box(x0, y0, x1, y1)  # noqa: E731


# -- worked examples ---------------------------------------------------------

def test_unit_square_area():
    assert area(Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))) == 1.0


def test_triangle_area():
    assert area(Polygon(((0, 0), (4, 0), (0, 3)))) == 6.0


def test_collinear_points_are_degenerate():
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (1, 1), (2, 2)))


def test_overlapping_squares_intersection():
    assert intersection_area(SQ(0, 0, 2, 2), SQ(1, 1, 3, 3)) == pytest.approx(1.0, abs=1e-12)


def test_disjoint_squares_intersection():
    assert intersection_area(SQ(0, 0, 1, 1), SQ(5, 5, 6, 6)) == 0.0


def test_polygon_with_itself():
    p = Polygon(((0, 0), (10, 0), (10, 10), (5, 3), (0, 10)))
    assert intersection_area(p, p) == pytest.approx(area(p), rel=1e-12)


def test_iou_identical():
    assert iou(SQ(0, 0, 2, 2), SQ(0, 0, 2, 2)) == pytest.approx(1.0)


def test_iou_shifted_squares():
    assert iou(SQ(0, 0, 2, 2), SQ(1, 1, 3, 3)) == pytest.approx(1 / 7, abs=1e-12)


def test_iou_disjoint():
    assert iou(SQ(0, 0, 1, 1), SQ(5, 5, 6, 6)) == 0.0


def test_intersection_over_first_contained():
    assert intersection_over_first(SQ(1, 1, 2, 2), SQ(0, 0, 3, 3)) == 1.0


def test_intersection_over_first_disjoint():
    assert intersection_over_first(SQ(0, 0, 1, 1), SQ(5, 5, 6, 6)) == 0.0


def test_intersection_over_first_quarter():
    assert intersection_over_first(SQ(0, 0, 2, 2), SQ(1, 1, 3, 3)) == pytest.approx(0.25)


def test_oracle_identical_squares():
    assert rasterized_iou_oracle(SQ(0, 0, 2, 2), SQ(0, 0, 2, 2), 256) == 1.0


def test_oracle_shifted_squares():
    assert rasterized_iou_oracle(SQ(0, 0, 2, 2), SQ(1, 1, 3, 3), 1024) == pytest.approx(0.1429, abs=0.01)


def test_oracle_disjoint():
    assert rasterized_iou_oracle(SQ(0, 0, 1, 1), SQ(5, 5, 6, 6), 256) == 0.0


def test_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        rasterized_iou_oracle(SQ(0, 0, 1, 1), SQ(0, 0, 1, 1), 32)


# -- construction --------------------------------------------------------------

def test_orientation_normalised_for_computation():
    cw = Polygon(((0, 0), (0, 1), (1, 1), (1, 0)))
    assert not cw.is_ccw
    assert cw.points[1] == (0, 1)  # caller's order is kept for round-trips
    ring = cw.ring
    signed = sum(ring[i][0] * ring[(i + 1) % 4][1] - ring[(i + 1) % 4][0] * ring[i][1] for i in range(4))
    assert signed > 0


def test_consecutive_duplicates_merged():
    p = Polygon(((0, 0), (0, 0), (1, 0), (1, 0 + 1e-8), (1, 1), (0, 1), (0, 0)))
    assert len(p) == 4


def test_self_intersecting_rejected():
    with pytest.raises(SelfIntersectingPolygon):
        Polygon(((0, 0), (4, 4), (4, 0), (0, 2)))


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_non_finite_rejected(bad):
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (bad, 0), (1, 1)))


def test_two_vertices_rejected():
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (1, 1)))


def test_unvalidated_polygon_defers_checks():
    p = Polygon(((0, 0), (1, 1)), validate=False)
    with pytest.raises(DegeneratePolygon):
        p.check()
    with pytest.raises(DegeneratePolygon):
        area(p)


def test_segments_touching_at_endpoint():
    assert segments_intersect((0, 0), (1, 0), (1, 0), (2, 5))
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))


def test_concave_u_shape_against_bar():
    # U opening upward; the bar crosses both prongs but not the gap
    u = Polygon(((0, 0), (30, 0), (30, 30), (20, 30), (20, 10), (10, 10), (10, 30), (0, 30)))
    bar = SQ(-5, 20, 35, 25)
    assert intersection_area(u, bar) == pytest.approx(2 * 10 * 5)


def test_shared_edge_counts_once():
    a, b = SQ(0, 0, 10, 10), SQ(0, 0, 10, 5)
    assert intersection_area(a, b) == pytest.approx(50.0)
    assert intersection_area(SQ(0, 0, 1, 1), SQ(1, 0, 2, 1)) == 0.0


def test_large_coordinates_keep_precision():
    off = 1e6
    a, b = SQ(off, off, off + 2, off + 2), SQ(off + 1, off + 1, off + 3, off + 3)
    assert iou(a, b) == pytest.approx(1 / 7, abs=1e-9)


def test_against_shapely_on_random_pairs():
    shapely = pytest.importorskip("shapely.geometry")
    from lttext.synth import random_simple_polygon

    rng = random.Random(7)
    for _ in range(300):
        a = random_simple_polygon(rng, rng.randint(3, 12), 50, 50, 40, rng.random() < 0.5)
        b = random_simple_polygon(rng, rng.randint(3, 12), rng.uniform(20, 80), rng.uniform(20, 80), 40,
                                  rng.random() < 0.5)
        ref = shapely.Polygon(a.points).intersection(shapely.Polygon(b.points)).area
        assert intersection_area(a, b) == pytest.approx(ref, rel=1e-9, abs=1e-9)


# -- properties ----------------------------------------------------------------

@given(simple_polygons(), simple_polygons())
def test_iou_symmetric(a, b):
    assert abs(iou(a, b) - iou(b, a)) <= 1e-9


@given(simple_polygons(), simple_polygons())
def test_iou_in_range(a, b):
    assert 0.0 <= iou(a, b) <= 1.0 + 1e-9


@given(simple_polygons())
def test_iou_identity(p):
    assert iou(p, p) >= 1 - 1e-9


@given(simple_polygons(), simple_polygons(), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_translation_invariance(a, b, dx, dy):
    assert iou(a.translated(dx, dy), b.translated(dx, dy)) == pytest.approx(iou(a, b), abs=1e-9)


@given(simple_polygons(), simple_polygons(), st.floats(0.01, 100))
def test_scale_invariance(a, b, s):
    assert iou(a.scaled(s), b.scaled(s)) == pytest.approx(iou(a, b), abs=1e-7)


@given(simple_polygons(), simple_polygons())
def test_intersection_bounded_by_smaller_area(a, b):
    assert intersection_area(a, b) <= min(area(a), area(b)) + 1e-9


@given(boxes(), boxes())
def test_boxes_match_closed_form(a, b):
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    w = max(0, min(ax1, bx1) - max(ax0, bx0))
    h = max(0, min(ay1, by1) - max(ay0, by0))
    assert intersection_area(a, b) == pytest.approx(w * h, abs=1e-9)


@given(simple_polygons(max_vertices=8), simple_polygons(max_vertices=8))
def test_agrees_with_raster_oracle(a, b):
    assert abs(iou(a, b) - rasterized_iou_oracle(a, b, 512)) <= 0.02


@given(simple_polygons())
def test_vertex_rotation_does_not_change_area(p):
    k = len(p.points) // 2
    q = Polygon(p.points[k:] + p.points[:k])
    assert area(q) == pytest.approx(area(p), rel=1e-12)
    assert math.isclose(iou(p, q), 1.0, abs_tol=1e-9)
