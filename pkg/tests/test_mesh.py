# tests/test_mesh.py
import math

import numpy as np
import pytest

import mesh_factory
from deq_library.error_handler import DegenerateFaceError, TopologyError
from deq_library.mesh import (
    BoundaryCurve,
    PlanarMap,
    TriMesh,
    boundary_loop_ccw,
    boundary_loop_indices,
    ensure_ccw,
    geometry_measures,
    mean_edge_length,
    planar_embedding,
    validate_disk_topology,
)


def test_unit_square_areas(unit_square):
    assert unit_square.n_vertices == 4
    assert unit_square.n_faces == 2
    np.testing.assert_allclose(unit_square.face_areas, [0.5, 0.5])


def test_grid_counts():
    mesh = mesh_factory.square_grid(4)
    assert mesh.n_vertices == 25
    assert mesh.n_faces == 32
    assert mesh.edges.shape[0] == 25 + 32 - 1


def test_collinear_face_is_rejected():
    vertices = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]]
    with pytest.raises(DegenerateFaceError) as info:
        TriMesh(vertices, [[0, 1, 2], [0, 1, 3]])
    assert info.value.faces == [0]


def test_repeated_index_is_rejected():
    with pytest.raises(DegenerateFaceError, match="repeated vertex"):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])


def test_out_of_range_index_is_rejected():
    with pytest.raises(DegenerateFaceError, match="out of range"):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])


def test_mesh_arrays_are_read_only(unit_square):
    with pytest.raises(ValueError):
        unit_square.vertices[0, 0] = 5.0


def test_grid_is_a_disk(flat_grid):
    diagnostics = validate_disk_topology(flat_grid)
    assert diagnostics.is_disk
    assert diagnostics.euler_characteristic == 1
    assert diagnostics.boundary_loop_count == 1
    assert diagnostics.failure_reasons() == []


def test_annulus_has_two_boundary_loops(annulus):
    diagnostics = validate_disk_topology(annulus)
    assert not diagnostics.is_disk
    assert diagnostics.euler_characteristic == 0
    assert diagnostics.boundary_loop_count == 2


def test_closed_surface_has_no_boundary(tetrahedron):
    diagnostics = validate_disk_topology(tetrahedron)
    assert diagnostics.euler_characteristic == 2
    assert diagnostics.boundary_loop_count == 0
    assert not diagnostics.is_disk
    with pytest.raises(TopologyError, match="no boundary"):
        boundary_loop_indices(tetrahedron)


def test_bowtie_vertex_is_non_manifold(bowtie):
    diagnostics = validate_disk_topology(bowtie)
    assert diagnostics.nonmanifold_vertex_count == 1
    assert not diagnostics.is_disk
    with pytest.raises(TopologyError, match="non-manifold"):
        boundary_loop_indices(bowtie)


def test_inconsistent_orientation_is_reported():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0]]
    mesh = TriMesh(vertices, [[0, 1, 2], [0, 1, 3]])
    diagnostics = validate_disk_topology(mesh)
    assert diagnostics.inconsistent_edge_count == 1
    assert not diagnostics.is_disk


def test_disjoint_triangles_are_two_components():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [6, 0, 0], [5, 1, 0]]
    diagnostics = validate_disk_topology(TriMesh(vertices, [[0, 1, 2], [3, 4, 5]]))
    assert diagnostics.component_count == 2
    assert not diagnostics.is_disk


def test_unreferenced_vertex_is_reported():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [3, 3, 0]]
    diagnostics = validate_disk_topology(TriMesh(vertices, [[0, 1, 2]]))
    assert diagnostics.unreferenced_vertex_count == 1
    assert not diagnostics.is_disk


def test_fan_boundary_loop_order(hexagon_fan):
    loop = boundary_loop_indices(hexagon_fan)
    np.testing.assert_array_equal(loop, [1, 2, 3, 4, 5, 6])


def test_boundary_loop_has_interior_on_the_left():
    curve = boundary_loop_ccw(mesh_factory.square_grid(3))
    xy = curve.points[:, :2]
    signed = 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
    assert signed == pytest.approx(1.0)
    assert curve.total_length == pytest.approx(4.0)


def test_boundary_curve_rejects_repeated_points():
    with pytest.raises(TopologyError):
        BoundaryCurve([[0, 0, 0], [0, 0, 0], [1, 0, 0]], [0, 1, 2])


def test_geometry_measures_sum_to_total(bump):
    measures = geometry_measures(bump)
    assert measures.vertex_areas.sum() == pytest.approx(measures.total_area, rel=1e-12)
    assert measures.total_area == pytest.approx(float(bump.face_areas.sum()))


def test_geometry_measures_reject_flipped_planar_faces():
    planar_map = PlanarMap([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
    with pytest.raises(DegenerateFaceError):
        geometry_measures(planar_map)


def test_planar_embedding_keeps_flat_input(flat_grid):
    planar_map = planar_embedding(flat_grid)
    assert planar_map is not None
    np.testing.assert_array_equal(planar_map.faces, flat_grid.faces)
    np.testing.assert_array_equal(planar_map.coords, flat_grid.vertices[:, :2])


def test_planar_embedding_reverses_clockwise_input(flat_grid):
    reversed_mesh = TriMesh(flat_grid.vertices, flat_grid.faces[:, ::-1])
    planar_map = planar_embedding(reversed_mesh)
    assert planar_map is not None
    assert np.all(planar_map.signed_areas > 0)


def test_planar_embedding_rejects_curved_input(bump):
    assert planar_embedding(bump) is None


def test_restrict_to_faces_keeps_order_and_provenance():
    planar_map = mesh_factory.square_map(2)
    keep = np.zeros(planar_map.n_faces, dtype=bool)
    keep[[1, 2]] = True
    sub = planar_map.restrict_to_faces(keep)
    assert sub.n_faces == 2
    used = np.unique(planar_map.faces[[1, 2]])
    np.testing.assert_array_equal(sub.provenance, used)
    np.testing.assert_array_equal(sub.coords, planar_map.coords[used])
    np.testing.assert_array_equal(sub.provenance[sub.faces], planar_map.faces[[1, 2]])


def test_land_only_drops_sea():
    planar_map = PlanarMap(
        mesh_factory.grid_xy(1), mesh_factory.grid_faces(1), land_mask=[True, False]
    )
    land = planar_map.land_only()
    assert land.n_faces == 1
    assert land.n_land_faces == 1
    assert land.n_vertices == 3


def test_ensure_ccw_reorients_faces():
    planar_map = PlanarMap([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 2, 1], [1, 3, 2]])
    fixed = ensure_ccw(planar_map)
    assert np.all(fixed.signed_areas > 0)
    np.testing.assert_array_equal(fixed.faces[1], [1, 3, 2])


def test_mean_edge_length_of_unit_square(unit_square):
    expected = (4.0 + math.sqrt(2.0)) / 5.0
    assert mean_edge_length(unit_square.vertices, unit_square.edges) == pytest.approx(expected)
