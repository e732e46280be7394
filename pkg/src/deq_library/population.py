# src/deq_library/population.py
"""
Per-face population recipes.

    uniform        every face carries 1
    area           every face carries its 3D area (area-preserving map)
    per_face_file  values read elsewhere, one per face
    region_scaled  3D area times a multiplier per labelled region
    function       a callable evaluated at the 3D face centroids
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .error_handler import ConfigurationError, DensityError
from .mesh import TriMesh

lib_logger = logging.getLogger("deq_library")

POPULATION_MODES = ("uniform", "area", "per_face_file", "region_scaled", "function")


@dataclass(frozen=True, eq=False)
class PopulationSpec:
    """
    How to derive the per-face population of a mesh.

    Attributes:
        mode: one of POPULATION_MODES
        values: per-face values for "per_face_file"
        region_labels: per-face integer region ids for "region_scaled"
        scale_rules: (region id, multiplier) pairs for "region_scaled";
            unlisted regions keep multiplier 1
        function: f(centroids (F, 3)) -> (F,) for "function"
    """

    mode: str = "area"
    values: Optional[np.ndarray] = None
    region_labels: Optional[np.ndarray] = None
    scale_rules: Tuple[Tuple[int, float], ...] = ()
    function: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.mode not in POPULATION_MODES:
            raise ConfigurationError(
                f"unknown population mode '{self.mode}' "
                f"(use one of {', '.join(POPULATION_MODES)})"
            )
        object.__setattr__(
            self, "scale_rules", tuple((int(r), float(m)) for r, m in self.scale_rules)
        )
        if self.mode == "per_face_file" and self.values is None:
            raise ConfigurationError("per_face_file population needs per-face values")
        if self.mode == "region_scaled" and self.region_labels is None:
            raise ConfigurationError("region_scaled population needs region labels")
        if self.mode == "function" and self.function is None:
            raise ConfigurationError("function population needs a callable")
        for region, multiplier in self.scale_rules:
            if not multiplier > 0.0:
                raise ConfigurationError(
                    f"multiplier for region {region} must be positive, got {multiplier}"
                )

    @classmethod
    def region_scaled(
        cls, labels: Sequence[int], rules: Sequence[Tuple[int, float]]
    ) -> "PopulationSpec":
        return cls(mode="region_scaled", region_labels=np.asarray(labels), scale_rules=tuple(rules))


def _region_multipliers(spec: PopulationSpec, n_faces: int) -> np.ndarray:
    labels = np.asarray(spec.region_labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != n_faces:
        raise ConfigurationError(
            f"{labels.shape[0]} region labels for {n_faces} faces"
        )
    multipliers = np.ones(n_faces)
    present = set(np.unique(labels).tolist())
    for region, multiplier in spec.scale_rules:
        if region not in present:
            raise ConfigurationError(f"scale rule for region {region} matches no face")
        multipliers[labels == region] *= multiplier
    return multipliers


def resolve_population(mesh: TriMesh, spec: PopulationSpec) -> np.ndarray:
    """
    Per-face population of `mesh` under `spec`.

    Raises:
        DensityError: an entry is not finite and strictly positive
        ConfigurationError: sizes or rules do not match the mesh
    """
    n_faces = mesh.n_faces
    if spec.mode == "uniform":
        population = np.ones(n_faces)
    elif spec.mode == "area":
        population = np.array(mesh.face_areas)
    elif spec.mode == "per_face_file":
        population = np.asarray(spec.values, dtype=float).reshape(-1)
        if population.shape[0] != n_faces:
            raise ConfigurationError(
                f"{population.shape[0]} population values for {n_faces} faces"
            )
    elif spec.mode == "region_scaled":
        population = np.array(mesh.face_areas) * _region_multipliers(spec, n_faces)
    else:
        population = np.asarray(spec.function(mesh.face_centroids), dtype=float).reshape(-1)
        if population.shape[0] != n_faces:
            raise ConfigurationError(
                f"population function returned {population.shape[0]} values for "
                f"{n_faces} faces"
            )

    bad = np.nonzero(~(np.isfinite(population) & (population > 0.0)))[0]
    if bad.size:
        raise DensityError(
            f"population must be finite and strictly positive; {bad.size} faces are "
            f"not (first: face {int(bad[0])})"
        )
    lib_logger.debug(
        f"Resolved '{spec.mode}' population: total {population.sum():.6g} over {n_faces} faces"
    )
    return population
