# tests/test_pipeline.py
import numpy as np
import pytest

import mesh_factory
from deq_library.diffusion import displacement_profile, power_law_slope
from deq_library.error_handler import TopologyError
from deq_library.pipeline import (
    area_preserving_parameterize,
    density_equalize,
    equalize,
    flattening_density_stats,
)
from deq_library.population import PopulationSpec


def _smooth_bump_population(centroids: np.ndarray) -> np.ndarray:
    center = centroids[:, :2].mean(axis=0)
    r2 = np.sum((centroids[:, :2] - center) ** 2, axis=1)
    return 1.0 + np.exp(-r2 / 1000.0)


@pytest.fixture(scope="module")
def square_run():
    mesh = mesh_factory.square_grid(32, size=32.0)
    return equalize(mesh, PopulationSpec("function", function=_smooth_bump_population))


def test_square_cartogram_equalizes(square_run):
    report = square_run.report
    diffusion = report.diffusion
    assert report.n_faces == 2048
    assert report.init_kind == "planar"
    assert diffusion.converged
    assert diffusion.iterations <= 30
    assert diffusion.iterations == len(diffusion.trace)
    assert 0.97 <= diffusion.land_density.median <= 1.03
    assert diffusion.land_density.iqr <= 0.15


def test_square_cartogram_keeps_the_land_area(square_run):
    land_area = float(np.sum(square_run.land_map.signed_areas))
    assert land_area == pytest.approx(32.0 * 32.0, rel=1e-9)
    assert np.all(square_run.land_map.signed_areas > 0)
    np.testing.assert_array_equal(square_run.land_map.faces, square_run.mesh.faces)


def test_sea_displacement_follows_an_inverse_square_law():
    # A population with a dipole moment; the sea takes the land mean, so there is no monopole
    mesh = mesh_factory.square_grid(32, size=32.0)
    run = equalize(mesh, PopulationSpec("function", function=lambda c: 1.0 + c[:, 0] / 32.0))
    assert run.report.diffusion.converged
    radii, displacement = displacement_profile(run.augmented, run.final_map, run.report.diffusion)
    assert -2.5 <= power_law_slope(radii, displacement, min_radius=1.0) <= -1.5


def test_report_serializes(square_run):
    data = square_run.report.to_dict()
    assert data["faces"] == 2048
    assert data["init"] == "planar"
    assert data["boundary"] is None
    assert data["sea"]["land_faces"] == 2048
    assert len(data["diffusion"]["trace"]) == data["diffusion"]["iterations"]


def test_planar_area_population_is_the_identity():
    mesh = mesh_factory.square_grid(6)
    land_map, report = density_equalize(mesh)
    assert report.diffusion.iterations == 0
    np.testing.assert_allclose(land_map.coords, mesh.vertices[:, :2], atol=1e-12)


def test_bump_cartogram_converges(bump):
    spec = PopulationSpec(
        "function", function=lambda c: 2.2 - np.abs(c[:, 0]) - np.abs(c[:, 1])
    )
    land_map, report = density_equalize(bump, spec)
    assert report.init_kind == "tutte"
    assert report.boundary.passes
    assert report.initial_flips == 0
    assert report.diffusion.converged
    assert report.diffusion.iterations <= 30
    assert land_map.n_faces == bump.n_faces
    assert float(np.sum(land_map.signed_areas)) == pytest.approx(
        float(bump.face_areas.sum()), rel=1e-9
    )


def test_peaks_area_preserving_map(peaks):
    land_map, report = area_preserving_parameterize(peaks)
    ratio = report.area_ratio
    assert ratio is not None
    assert 0.95 <= ratio.median <= 1.05
    assert ratio.sd_over_mean <= 0.05
    assert float(np.sum(land_map.signed_areas)) == pytest.approx(
        float(peaks.face_areas.sum()), rel=1e-9
    )
    # Flattening alone distorts areas more than the finished map
    assert report.flattening_density.sd_over_mean > ratio.sd_over_mean


def test_doubled_region_is_magnified():
    mesh = mesh_factory.square_grid(12)
    left = mesh.face_centroids[:, 0] < 0.5
    labels = np.where(left, 1, 0)

    baseline, _ = density_equalize(mesh, PopulationSpec.region_scaled(labels, [(1, 1.0)]))
    doubled, _ = density_equalize(mesh, PopulationSpec.region_scaled(labels, [(1, 2.0)]))
    baseline_area = float(np.asarray(baseline.signed_areas)[left].sum())
    doubled_area = float(np.asarray(doubled.signed_areas)[left].sum())
    assert doubled_area > baseline_area
    assert baseline_area == pytest.approx(0.5)


def test_coarse_square_equalizes():
    mesh = mesh_factory.square_grid(4, size=3.0)
    land_map, report = density_equalize(
        mesh, PopulationSpec("function", function=lambda c: 1.0 + c[:, 0])
    )
    assert report.sea["sea_faces"] > 0
    assert report.diffusion.iterations > 0
    diffusion = report.diffusion
    assert diffusion.land_density.sd_over_mean < diffusion.initial_land_density.sd_over_mean
    assert float(np.sum(land_map.signed_areas)) == pytest.approx(9.0, rel=1e-9)


def test_flattening_density_of_a_flat_grid_is_uniform(flat_grid):
    planar_map = mesh_factory.square_map(6)
    stats = flattening_density_stats(flat_grid, planar_map)
    assert stats.median == pytest.approx(1.0)
    assert stats.iqr == pytest.approx(0.0, abs=1e-12)


def test_non_disk_input_is_rejected(annulus):
    with pytest.raises(TopologyError, match="simply-connected"):
        density_equalize(annulus)
