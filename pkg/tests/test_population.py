# tests/test_population.py
import numpy as np
import pytest

from deq_library.error_handler import ConfigurationError, DensityError
from deq_library.population import PopulationSpec, resolve_population


def test_uniform_and_area(flat_grid):
    assert np.all(resolve_population(flat_grid, PopulationSpec("uniform")) == 1.0)
    area = resolve_population(flat_grid, PopulationSpec())
    np.testing.assert_allclose(area, flat_grid.face_areas)
    assert area.sum() == pytest.approx(1.0)


def test_per_face_values(unit_square):
    spec = PopulationSpec("per_face_file", values=np.array([2.0, 5.0]))
    np.testing.assert_array_equal(resolve_population(unit_square, spec), [2.0, 5.0])


def test_per_face_values_must_cover_every_face(unit_square):
    spec = PopulationSpec("per_face_file", values=np.array([2.0, 5.0, 1.0]))
    with pytest.raises(ConfigurationError, match="3 population values for 2 faces"):
        resolve_population(unit_square, spec)


def test_nonpositive_population_names_the_face(unit_square):
    spec = PopulationSpec("per_face_file", values=np.array([2.0, -1.0]))
    with pytest.raises(DensityError, match="face 1"):
        resolve_population(unit_square, spec)


def test_region_scaling_multiplies_area(flat_grid):
    labels = np.zeros(flat_grid.n_faces, dtype=int)
    labels[:10] = 7
    spec = PopulationSpec.region_scaled(labels, [(7, 3.0)])
    population = resolve_population(flat_grid, spec)
    np.testing.assert_allclose(population[:10], 3.0 * flat_grid.face_areas[:10])
    np.testing.assert_allclose(population[10:], flat_grid.face_areas[10:])


def test_rule_for_missing_region_is_rejected(flat_grid):
    spec = PopulationSpec.region_scaled(np.zeros(flat_grid.n_faces, dtype=int), [(4, 2.0)])
    with pytest.raises(ConfigurationError, match="region 4"):
        resolve_population(flat_grid, spec)


def test_function_of_centroids(bump):
    spec = PopulationSpec("function", function=lambda c: 1.0 + c[:, 2])
    population = resolve_population(bump, spec)
    np.testing.assert_allclose(population, 1.0 + bump.face_centroids[:, 2])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mode": "census"},
        {"mode": "per_face_file"},
        {"mode": "region_scaled"},
        {"mode": "function"},
        {"mode": "region_scaled", "region_labels": np.zeros(2), "scale_rules": ((0, 0.0),)},
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        PopulationSpec(**kwargs)
