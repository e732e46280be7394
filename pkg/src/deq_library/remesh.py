# src/deq_library/remesh.py
"""
Adaptive remeshing through a planar map.

Uniform samples on the planar image are triangulated and lifted back to
the surface by barycentric interpolation. Wherever the map magnified a
region, the uniform samples become dense on the surface.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import matplotlib.tri as mtri
import numpy as np
import triangle
from scipy.spatial import cKDTree

from .error_handler import ConfigurationError, TopologyError, TriangulationError
from .mesh import PlanarMap, TriMesh, boundary_loop_indices, mean_edge_length
from .utils.planar import (
    cross2,
    distance_to_boundary,
    hex_lattice,
    loop_polygon,
    points_in_polygon,
)

lib_logger = logging.getLogger("deq_library")

TRIANGULATIONS = ("delaunay",)

# Samples the point locator misses are snapped to a face within spacing * SNAP_RATIO
SNAP_RATIO = 0.1

# Nearest faces (by centroid) examined when snapping a sample
SNAP_CANDIDATES = 8


@dataclass(frozen=True)
class RemeshSpec:
    """
    Attributes:
        sample_spacing: lattice spacing on the planar map (None: mean land edge length)
        sample_count: approximate number of lattice samples; overrides the
            spacing when given
        triangulation: "delaunay"
    """

    sample_spacing: Optional[float] = None
    sample_count: Optional[int] = None
    triangulation: str = "delaunay"

    def __post_init__(self):
        if self.sample_spacing is not None and not self.sample_spacing > 0.0:
            raise ConfigurationError(
                f"sample_spacing must be positive, got {self.sample_spacing}"
            )
        if self.sample_count is not None and self.sample_count < 1:
            raise ConfigurationError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.triangulation not in TRIANGULATIONS:
            raise ConfigurationError(f"unknown triangulation '{self.triangulation}'")

    def resolve_spacing(self, land_map: PlanarMap) -> float:
        if self.sample_count is not None:
            area = float(np.abs(np.asarray(land_map.signed_areas)).sum())
            # A hexagonal lattice of spacing h covers sqrt(3)/2 h^2 per point
            return float(np.sqrt(2.0 * area / (np.sqrt(3.0) * self.sample_count)))
        if self.sample_spacing is not None:
            return self.sample_spacing
        return mean_edge_length(land_map.coords, land_map.edges)


class PointLocation(NamedTuple):
    faces: np.ndarray
    barycentric: np.ndarray
    found: np.ndarray


def barycentric_coordinates(
    planar_map: PlanarMap, faces: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """(k, 3) barycentric coordinates of `points` in the given faces."""
    corners = planar_map.coords[planar_map.faces[faces]]
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    double_area = cross2(b - a, c - a)
    beta = cross2(points - a, c - a) / double_area
    gamma = cross2(b - a, points - a) / double_area
    return np.column_stack([1.0 - beta - gamma, beta, gamma])


def _snap(
    planar_map: PlanarMap, points: np.ndarray, tolerance: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closest face (by clamped barycentrics) among the nearest centroids."""
    centroids = planar_map.coords[planar_map.faces].mean(axis=1)
    k = min(SNAP_CANDIDATES, planar_map.n_faces)
    _, candidates = cKDTree(centroids).query(points, k=k)
    candidates = np.asarray(candidates).reshape(points.shape[0], k)

    best_face = np.full(points.shape[0], -1, dtype=np.int64)
    best_bary = np.zeros((points.shape[0], 3))
    best_distance = np.full(points.shape[0], np.inf)
    for column in range(k):
        faces = candidates[:, column]
        bary = np.clip(barycentric_coordinates(planar_map, faces, points), 0.0, None)
        bary /= bary.sum(axis=1, keepdims=True)
        corners = planar_map.coords[planar_map.faces[faces]]
        projected = np.einsum("ij,ijk->ik", bary, corners)
        distance = np.linalg.norm(projected - points, axis=1)
        better = distance < best_distance
        best_face[better] = faces[better]
        best_bary[better] = bary[better]
        best_distance[better] = distance[better]
    return best_face, best_bary, best_distance <= tolerance


def locate_points(
    planar_map: PlanarMap, points: np.ndarray, snap_tolerance: float = 0.0
) -> PointLocation:
    """
    Face containing every point and its barycentric coordinates there.

    Points outside every face are snapped to the nearest face when they are
    within `snap_tolerance` of it; `found` is False for the rest.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    faces = np.full(points.shape[0], -1, dtype=np.int64)
    try:
        finder = mtri.Triangulation(
            planar_map.coords[:, 0], planar_map.coords[:, 1], planar_map.faces
        ).get_trifinder()
        faces = np.asarray(finder(points[:, 0], points[:, 1]), dtype=np.int64)
    except (RuntimeError, ValueError) as e:
        lib_logger.warning(f"Point locator unavailable ({e}); snapping every sample")

    found = faces >= 0
    barycentric = np.zeros((points.shape[0], 3))
    if np.any(found):
        barycentric[found] = barycentric_coordinates(planar_map, faces[found], points[found])

    missing = np.nonzero(~found)[0]
    if missing.size and planar_map.n_faces:
        snapped_faces, snapped_bary, close = _snap(planar_map, points[missing], snap_tolerance)
        keep = missing[close]
        faces[keep] = snapped_faces[close]
        barycentric[keep] = snapped_bary[close]
        found[keep] = True
    return PointLocation(faces, barycentric, found)


def lift_points(mesh: TriMesh, land_map: PlanarMap, points: np.ndarray) -> np.ndarray:
    """
    Carry planar points back to the surface: barycentric coordinates in the
    containing map face applied to the original 3D vertices of that face.

    Raises:
        TopologyError: a point lies outside the map or a face has no provenance
    """
    location = locate_points(land_map, points)
    if not np.all(location.found):
        raise TopologyError(
            f"{int((~location.found).sum())} points lie outside the planar map"
        )
    return _lift(mesh, land_map, location)


def _lift(mesh: TriMesh, land_map: PlanarMap, location: PointLocation) -> np.ndarray:
    originals = land_map.provenance[land_map.faces[location.faces]]
    if np.any(originals < 0):
        raise TopologyError("map faces without vertex provenance cannot be lifted")
    corners = mesh.vertices[originals]
    return np.einsum("ij,ijk->ik", location.barycentric, corners)


def sample_land(land_map: PlanarMap, spacing: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hexagonal samples strictly inside the land outline (at least spacing/2
    from it), followed by the outline vertices.

    Returns:
        (points, outline vertex indices of the map)
    """
    loop = boundary_loop_indices(land_map)
    outline = loop_polygon(land_map.coords, loop)
    xmin, ymin = land_map.coords.min(axis=0)
    xmax, ymax = land_map.coords.max(axis=0)
    lattice = hex_lattice((xmin, ymin, xmax, ymax), spacing)
    lattice = lattice[points_in_polygon(outline, lattice)]
    if lattice.shape[0]:
        lattice = lattice[distance_to_boundary(outline, lattice) >= 0.5 * spacing]
    return np.vstack([lattice, land_map.coords[loop]]), loop


def remesh_surface(
    mesh: TriMesh, land_map: PlanarMap, spec: Optional[RemeshSpec] = None
) -> TriMesh:
    """
    Resample `mesh` uniformly on its planar image `land_map`.

    Lattice samples are located in the map (snapped within spacing/10 or
    dropped with a warning), triangulated together with the outline
    vertices, and lifted to 3D.

    Raises:
        TriangulationError: the sample triangulation fails
        TopologyError: the map has no provenance back to `mesh`
    """
    spec = spec or RemeshSpec()
    land_map = land_map.land_only()
    spacing = spec.resolve_spacing(land_map)
    points, loop = sample_land(land_map, spacing)
    n_lattice = points.shape[0] - loop.shape[0]

    location = locate_points(land_map, points[:n_lattice], SNAP_RATIO * spacing)
    dropped = int((~location.found).sum())
    if dropped:
        lib_logger.warning(
            f"Dropped {dropped} samples that fell outside the map by more than "
            f"{SNAP_RATIO * spacing:.3g}"
        )
    lattice = points[:n_lattice][location.found]
    location = PointLocation(
        location.faces[location.found],
        location.barycentric[location.found],
        location.found[location.found],
    )

    outline = land_map.coords[loop]
    samples = np.vstack([lattice, outline])
    n_samples = samples.shape[0]
    ids = lattice.shape[0] + np.arange(loop.shape[0])
    segments = np.column_stack([ids, np.roll(ids, -1)])
    try:
        result = triangle.triangulate({"vertices": samples, "segments": segments}, "pQ")
    except (RuntimeError, ValueError) as e:
        raise TriangulationError(f"sample triangulation failed: {e}") from e
    if "triangles" not in result or result["vertices"].shape[0] != n_samples:
        raise TriangulationError("sample triangulation changed the sample set")

    if np.any(land_map.provenance[loop] < 0):
        raise TopologyError("map outline vertices without provenance cannot be lifted")
    lifted = np.vstack(
        [
            _lift(mesh, land_map, location),
            mesh.vertices[land_map.provenance[loop]],
        ]
    )
    remeshed = TriMesh(lifted, np.asarray(result["triangles"], dtype=np.int64))
    lib_logger.info(
        f"Remeshed surface: {remeshed.n_vertices} vertices, {remeshed.n_faces} faces "
        f"(spacing {spacing:.4g})"
    )
    return remeshed
