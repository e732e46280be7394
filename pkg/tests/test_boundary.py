# tests/test_boundary.py
import math

import numpy as np
import pytest

import mesh_factory
from deq_library.boundary import (
    FlatCurve,
    discrete_curvature,
    flatten_boundary,
    verify_convex_simple,
)
from deq_library.error_handler import (
    IllConditionedCornerError,
    TopologyError,
    ZeroCurvatureError,
)
from deq_library.mesh import BoundaryCurve, boundary_loop_ccw


def test_square_corners_turn_by_right_angles():
    curve = boundary_loop_ccw(mesh_factory.square_grid(1))
    np.testing.assert_allclose(discrete_curvature(curve), math.pi / 2)


def test_straight_boundary_vertices_do_not_turn():
    curve = boundary_loop_ccw(mesh_factory.square_grid(3))
    kappa = discrete_curvature(curve)
    assert np.count_nonzero(kappa > 1e-12) == 4
    assert kappa.sum() == pytest.approx(2 * math.pi)


def test_regular_polygon_keeps_its_shape(hexagon_fan):
    flat = flatten_boundary(boundary_loop_ccw(hexagon_fan))
    assert isinstance(flat, FlatCurve)
    assert len(flat) == 6
    np.testing.assert_allclose(flat.target_curvature, math.pi / 3)
    assert flat.closure_gap < 1e-12
    sides = np.linalg.norm(np.diff(flat.closed_points, axis=0), axis=1)
    np.testing.assert_allclose(sides, 1.0, atol=1e-12)
    assert flat.perimeter == pytest.approx(6.0)
    assert flat.signed_area == pytest.approx(3 * math.sqrt(3) / 2)
    np.testing.assert_array_equal(flat.vertex_indices, [1, 2, 3, 4, 5, 6])


def test_curved_boundary_flattens_convex(bump):
    flat = flatten_boundary(boundary_loop_ccw(bump))
    assert flat.target_curvature.sum() == pytest.approx(2 * math.pi, abs=1e-12)
    assert verify_convex_simple(flat).passes


def test_random_disks_flatten_to_convex_simple_curves():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        mesh = mesh_factory.random_disk(rng)
        flat = flatten_boundary(boundary_loop_ccw(mesh))
        report = verify_convex_simple(flat)
        assert report.passes, report.to_dict()
        assert abs(flat.target_curvature.sum() - 2 * math.pi) <= 1e-12


def test_folded_corner_is_ill_conditioned():
    curve = BoundaryCurve([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [10, 11, 12])
    with pytest.raises(IllConditionedCornerError) as info:
        discrete_curvature(curve)
    assert 11 in info.value.vertices


def test_two_point_loop_is_rejected():
    curve = BoundaryCurve([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [0, 1])
    with pytest.raises(TopologyError):
        discrete_curvature(curve)


def test_loop_without_turning_is_rejected(monkeypatch):
    import deq_library.boundary as boundary

    monkeypatch.setattr(boundary, "discrete_curvature", lambda curve: np.zeros(len(curve)))
    with pytest.raises(ZeroCurvatureError):
        boundary.flatten_boundary(boundary_loop_ccw(mesh_factory.square_grid(1)))


def test_nonconvex_polygon_fails_convexity():
    star = np.array([[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]], dtype=float)
    report = verify_convex_simple(star)
    assert not report.convex
    assert report.simple
    assert report.turning_number == 1
    assert not report.passes


def test_self_intersecting_polygon_is_not_simple():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    assert not verify_convex_simple(bowtie).simple


def test_clockwise_square_winds_negatively():
    square = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float)
    report = verify_convex_simple(square)
    assert report.turning_number == -1
    assert not report.passes
