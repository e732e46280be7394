# tests/test_sea.py
import numpy as np
import pytest
from scipy.spatial import cKDTree

import mesh_factory
from deq_library.error_handler import ConfigurationError, DensityError
from deq_library.mesh import PlanarMap, boundary_loop_indices, validate_disk_topology
from deq_library.sea import (
    SeaConfig,
    build_sea,
    circumdisk_excludes_origin,
    extend_density,
    generate_gap_points,
    normalize_into_disk,
    reflect_glue,
    ring_points,
    triangulate_gap,
    unit_circle_vertices,
)
from deq_library.utils.planar import loop_polygon, points_in_polygon


@pytest.fixture
def land():
    # Even n puts a grid vertex on the centroid
    return mesh_factory.square_map(4, size=3.0)


def test_normalization_shrinks_into_the_disk(land):
    normalized, scale, center = normalize_into_disk(land, SeaConfig(shrink_radius=0.6))
    np.testing.assert_allclose(center, [1.5, 1.5])
    radii = np.linalg.norm(normalized.coords, axis=1)
    assert radii.max() == pytest.approx(0.6)
    assert scale == pytest.approx(0.6 / np.hypot(1.5, 1.5))


def test_ring_points_lie_on_the_unit_circle():
    ring = ring_points(0.1)
    assert ring.shape == (63, 2)
    np.testing.assert_allclose(np.linalg.norm(ring, axis=1), 1.0)


def test_coarse_spacing_is_rejected():
    with pytest.raises(ConfigurationError, match="at least 8"):
        ring_points(1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"shrink_radius": 1.2},
        {"shrink_radius": 0.0},
        {"truncate_radius": 0.9},
        {"gap_spacing": -0.1},
        {"gap_spacing_mode": "median"},
    ],
)
def test_sea_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SeaConfig(**kwargs)


def test_gap_points_avoid_the_land(land):
    normalized, _, _ = normalize_into_disk(land)
    spacing = 0.08
    gap = generate_gap_points(normalized, spacing)
    assert gap.lattice.shape[0] > 0
    assert gap.count == gap.lattice.shape[0] + gap.ring.shape[0]

    outline = loop_polygon(normalized.coords, boundary_loop_indices(normalized))
    assert not np.any(points_in_polygon(outline, gap.lattice))
    assert np.all(np.linalg.norm(gap.lattice, axis=1) <= 1.0 - 0.5 * spacing + 1e-12)
    gaps = np.linalg.norm(gap.lattice[:, None, :] - normalized.coords[None, :, :], axis=2)
    assert gaps.min() >= 0.5 * spacing


def test_triangulated_disk_keeps_land_first(land):
    normalized, _, _ = normalize_into_disk(land)
    disk = triangulate_gap(normalized, generate_gap_points(normalized, 0.1))
    assert disk.n_land_faces == land.n_faces
    np.testing.assert_array_equal(disk.faces[: land.n_faces], land.faces)
    np.testing.assert_array_equal(disk.coords[: land.n_vertices], normalized.coords)
    assert np.all(disk.signed_areas > 0)
    assert validate_disk_topology(disk).is_disk


def test_reflection_inverts_the_circle(land):
    normalized, _, _ = normalize_into_disk(land)
    disk = triangulate_gap(normalized, generate_gap_points(normalized, 0.1))
    glued = reflect_glue(disk)
    n = disk.n_vertices
    mirrors = glued.coords[n:]
    assert np.all(np.linalg.norm(mirrors, axis=1) > 1.0)
    assert np.all(glued.signed_areas > 0)
    assert glued.n_land_faces == disk.n_land_faces
    np.testing.assert_array_equal(
        unit_circle_vertices(glued.coords), unit_circle_vertices(disk.coords)
    )


def test_circumdisk_test_against_the_origin():
    coords = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
    faces = np.array([[0, 1, 2], [0, 3, 4], [0, 4, 1]])
    # Unit circle contains the origin; the last circumcircle passes through it
    np.testing.assert_array_equal(circumdisk_excludes_origin(coords, faces), [False, True, False])


def test_mirror_faces_are_counterclockwise_images(land):
    normalized, _, _ = normalize_into_disk(land)
    disk = triangulate_gap(normalized, generate_gap_points(normalized, 0.1))
    glued = reflect_glue(disk)
    mirror = glued.faces[disk.n_faces :]
    assert mirror.shape[0] > 0
    assert np.all(glued.provenance[disk.n_vertices :] == -1)
    # Every mirror face inverts back onto a disk face with the same corner order
    used = np.unique(mirror)
    coords = glued.coords[used]
    inverted = coords / np.einsum("ij,ij->i", coords, coords)[:, None]
    _, source = cKDTree(disk.coords).query(inverted)
    back = source[np.searchsorted(used, mirror)][:, ::-1]
    disk_faces = {tuple(np.roll(f, -int(np.argmin(f)))) for f in disk.faces.tolist()}
    for face in back:
        assert tuple(np.roll(face, -int(np.argmin(face)))) in disk_faces


@pytest.mark.parametrize("n", [2, 3, 4])
def test_coarse_land_gets_a_valid_sea(n):
    coarse = mesh_factory.square_map(n, size=3.0)
    aug = build_sea(coarse)
    assert np.all(aug.map.signed_areas > 0)
    assert aug.n_land_faces == coarse.n_faces
    assert aug.n_sea_faces > 0
    np.testing.assert_allclose(aug.map.coords[: coarse.n_vertices], coarse.coords, atol=1e-12)


def test_build_sea(land):
    cfg = SeaConfig(gap_spacing=0.1)
    aug = build_sea(land, cfg)
    planar_map = aug.map

    assert aug.n_land_faces == land.n_faces
    assert np.all(planar_map.land_mask[: land.n_faces])
    assert not np.any(planar_map.land_mask[land.n_faces :])
    np.testing.assert_allclose(planar_map.coords[: land.n_vertices], land.coords, atol=1e-12)
    assert np.all(planar_map.signed_areas > 0)

    normalized = aug.to_normalized(planar_map.coords)
    assert np.linalg.norm(normalized, axis=1).max() <= cfg.truncate_radius + 1e-9
    np.testing.assert_allclose(
        np.linalg.norm(normalized[aug.circle_ring], axis=1), 1.0, atol=1e-9
    )
    # The centroid is a land vertex, which has no inversion image
    assert aug.excluded_mirror_count == 1
    assert aug.stats()["sea_faces"] == aug.n_sea_faces > 0


def test_build_sea_rejects_maps_with_sea(land):
    with_sea = PlanarMap(land.coords, land.faces, land_mask=np.arange(land.n_faces) % 2 == 0)
    with pytest.raises(ConfigurationError, match="land-only"):
        build_sea(with_sea)


def test_sea_density_is_the_land_mean(land):
    aug = build_sea(land, SeaConfig(gap_spacing=0.1))
    rho = np.linspace(1.0, 4.0, land.n_faces)
    field = extend_density(aug, rho)
    sea = ~aug.map.land_mask
    np.testing.assert_allclose(field.rho_f[aug.map.land_mask], rho)
    np.testing.assert_allclose(field.rho_f[sea], rho.mean())


def test_weighted_sea_density(land):
    aug = build_sea(land, SeaConfig(gap_spacing=0.1))
    rho = np.linspace(1.0, 4.0, land.n_faces)
    field = extend_density(aug, rho, weighted=True)
    areas = aug.map.signed_areas[aug.map.land_mask]
    expected = float((areas * rho).sum() / areas.sum())
    np.testing.assert_allclose(field.rho_f[~aug.map.land_mask], expected)


def test_land_density_must_be_positive(land):
    aug = build_sea(land, SeaConfig(gap_spacing=0.1))
    rho = np.ones(land.n_faces)
    rho[3] = 0.0
    with pytest.raises(DensityError):
        extend_density(aug, rho)
    with pytest.raises(DensityError):
        extend_density(aug, np.ones(land.n_faces + 1))
