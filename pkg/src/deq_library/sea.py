# src/deq_library/sea.py
"""
Sea construction around a flattened land region.

The land is shrunk into the unit disk, the gap between the land and the
unit circle is filled with a hexagonal point lattice and triangulated with
the land outline as constraint segments, and the triangulated disk is glued
to its circle inversion z -> 1/conj(z). Everything beyond the truncation
radius is dropped and the result is scaled back to the land's size.

The sea keeps the land's vertex and face indices: land vertices and faces
come first, in their original order.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import triangle
from scipy.spatial import cKDTree

from .error_handler import ConfigurationError, DensityError, TriangulationError
from .mesh import PlanarMap, boundary_loop_indices, mean_edge_length
from .operators import DensityField, transitions
from .run_config import RunDefaults
from .utils.planar import (
    distance_to_boundary,
    hex_lattice,
    loop_polygon,
    points_in_polygon,
    triangle_signed_areas,
)

lib_logger = logging.getLogger("deq_library")

MIN_RING_POINTS = 8

# Vertices closer than this to the origin have no usable inversion image
MIRROR_EXCLUSION_RADIUS = 1e-6

RING_TOLERANCE = 1e-9

# Incircle and mirror-area cutoffs, scaled by the largest corner radius
INCIRCLE_RTOL = 1e-9
MIRROR_AREA_RTOL = 1e-12

GAP_SPACING_MODES = ("mean_edge_length",)


@dataclass(frozen=True)
class SeaConfig:
    """
    Parameters of the sea construction.

    Attributes:
        shrink_radius: largest land vertex radius inside the unit disk
        truncate_radius: sea vertices beyond this radius (before rescaling) are removed
        gap_spacing: lattice spacing in normalized units; None picks it from
            gap_spacing_mode
        gap_spacing_mode: "mean_edge_length" of the normalized land
        density_weighted: sea density is the land-area weighted mean instead
            of the plain mean of the land face densities
        seed: seed of the jitter used when the triangulation is retried
    """

    shrink_radius: float = field(default_factory=RunDefaults.shrink_radius)
    truncate_radius: float = field(default_factory=RunDefaults.truncate_radius)
    gap_spacing: Optional[float] = None
    gap_spacing_mode: str = "mean_edge_length"
    density_weighted: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.shrink_radius < 1.0 < self.truncate_radius):
            raise ConfigurationError(
                f"need 0 < shrink_radius < 1 < truncate_radius, got "
                f"{self.shrink_radius} and {self.truncate_radius}"
            )
        if self.gap_spacing is not None and not self.gap_spacing > 0.0:
            raise ConfigurationError(f"gap_spacing must be positive, got {self.gap_spacing}")
        if self.gap_spacing_mode not in GAP_SPACING_MODES:
            raise ConfigurationError(
                f"unknown gap_spacing_mode '{self.gap_spacing_mode}'"
            )


@dataclass(frozen=True, eq=False)
class AugmentedMap:
    """
    Land surrounded by sea.

    Attributes:
        map: land and sea faces; land_mask tags the land
        land_scale: factor the land was shrunk by inside the unit disk
        circle_ring: vertices that sat on the unit circle
        center: land centroid subtracted before shrinking
        gap_spacing: lattice spacing used in normalized units
        excluded_mirror_count: vertices left unmirrored near the origin
    """

    map: PlanarMap
    land_scale: float
    circle_ring: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    gap_spacing: float = float("nan")
    excluded_mirror_count: int = 0

    @property
    def n_land_faces(self) -> int:
        return self.map.n_land_faces

    @property
    def n_sea_faces(self) -> int:
        return self.map.n_faces - self.map.n_land_faces

    def land_map(self) -> PlanarMap:
        return self.map.land_only()

    def to_normalized(self, coords: np.ndarray) -> np.ndarray:
        """Map coordinates back into the frame where the unit circle was built."""
        return (np.asarray(coords) - self.center) * self.land_scale

    def stats(self) -> dict:
        return {
            "land_faces": self.n_land_faces,
            "sea_faces": self.n_sea_faces,
            "vertices": self.map.n_vertices,
            "ring_size": int(self.circle_ring.shape[0]),
            "land_scale": self.land_scale,
            "gap_spacing": self.gap_spacing,
            "excluded_mirror_vertices": self.excluded_mirror_count,
        }


class DiskNormalization(NamedTuple):
    map: PlanarMap
    land_scale: float
    center: np.ndarray


class GapPoints(NamedTuple):
    lattice: np.ndarray
    ring: np.ndarray

    @property
    def count(self) -> int:
        return int(self.lattice.shape[0] + self.ring.shape[0])


def normalize_into_disk(
    planar_map: PlanarMap, cfg: Optional[SeaConfig] = None
) -> DiskNormalization:
    """
    Translate the area-weighted centroid to the origin and scale so the
    farthest vertex lies at radius cfg.shrink_radius.
    """
    cfg = cfg or SeaConfig()
    coords = planar_map.coords
    areas = np.abs(np.asarray(planar_map.signed_areas))
    centroids = coords[planar_map.faces].mean(axis=1)
    center = (areas[:, None] * centroids).sum(axis=0) / areas.sum()

    radius = float(np.linalg.norm(coords - center, axis=1).max())
    land_scale = cfg.shrink_radius / radius
    normalized = planar_map.with_coords((coords - center) * land_scale)
    lib_logger.debug(
        f"Normalized land into the unit disk: center {center.tolist()}, "
        f"scale {land_scale:.6g}"
    )
    return DiskNormalization(normalized, land_scale, center)


def ring_points(spacing: float) -> np.ndarray:
    """ceil(2 pi / spacing) equally spaced points on the unit circle."""
    count = int(math.ceil(2.0 * math.pi / spacing))
    if count < MIN_RING_POINTS:
        raise ConfigurationError(
            f"gap spacing {spacing:.4g} leaves only {count} points on the unit "
            f"circle (need at least {MIN_RING_POINTS})"
        )
    angles = 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def generate_gap_points(planar_map: PlanarMap, spacing: float) -> GapPoints:
    """
    Points filling the gap between a normalized land region and the unit circle.

    The lattice is hexagonal with spacing `spacing`, kept within radius
    1 - spacing/2, and drops every point inside the land or closer than
    spacing/2 to the land outline or to a land vertex.

    Raises:
        ConfigurationError: spacing too large for 8 points on the circle
    """
    if not spacing > 0.0:
        raise ConfigurationError(f"gap spacing must be positive, got {spacing}")
    ring = ring_points(spacing)

    lattice = hex_lattice((-1.0, -1.0, 1.0, 1.0), spacing)
    lattice = lattice[np.linalg.norm(lattice, axis=1) <= 1.0 - 0.5 * spacing]

    loop = boundary_loop_indices(planar_map)
    outline = loop_polygon(planar_map.coords, loop)
    keep = ~points_in_polygon(outline, lattice)
    lattice = lattice[keep]
    if lattice.shape[0]:
        keep = distance_to_boundary(outline, lattice) >= 0.5 * spacing
        lattice = lattice[keep]
    if lattice.shape[0]:
        distances, _ = cKDTree(planar_map.coords).query(lattice)
        lattice = lattice[distances >= 0.5 * spacing]

    lib_logger.debug(
        f"Gap points: {lattice.shape[0]} lattice + {ring.shape[0]} ring "
        f"(spacing {spacing:.4g})"
    )
    return GapPoints(lattice, ring)


def _run_triangle(
    vertices: np.ndarray, segments: np.ndarray, hole: np.ndarray
) -> Optional[np.ndarray]:
    """Constrained Delaunay triangulation; None when it fails or adds vertices."""
    try:
        result = triangle.triangulate(
            {"vertices": vertices, "segments": segments, "holes": hole[None, :]}, "pQ"
        )
    except (RuntimeError, ValueError) as e:
        lib_logger.debug(f"Constrained triangulation failed: {e}")
        return None
    if "triangles" not in result or result["vertices"].shape[0] != vertices.shape[0]:
        lib_logger.debug("Constrained triangulation changed the vertex set")
        return None
    return np.asarray(result["triangles"], dtype=np.int64)


def triangulate_gap(
    planar_map: PlanarMap, gap: GapPoints, seed: Optional[int] = None
) -> PlanarMap:
    """
    Triangulate the unit disk around a normalized land region.

    The land outline and the circle ring are constraint segments, the land
    interior is a hole, and the resulting sea faces are appended after the
    land faces. Vertex order: land vertices, lattice points, ring points.

    Raises:
        TriangulationError: the triangulation fails twice (the retry jitters
            the lattice points by a small fraction of their spacing)
    """
    land_faces = planar_map.faces[planar_map.land_mask]
    if land_faces.shape[0] != planar_map.n_faces:
        raise TriangulationError("the gap can only be triangulated around a land-only map")

    loop = boundary_loop_indices(planar_map)
    n_land, n_loop = planar_map.n_vertices, loop.shape[0]
    n_lattice, n_ring = gap.lattice.shape[0], gap.ring.shape[0]

    loop_segments = np.column_stack([np.arange(n_loop), np.roll(np.arange(n_loop), -1)])
    ring_start = n_loop + n_lattice
    ring_ids = ring_start + np.arange(n_ring)
    ring_segments = np.column_stack([ring_ids, np.roll(ring_ids, -1)])
    segments = np.vstack([loop_segments, ring_segments])

    hole = planar_map.coords[planar_map.faces[0]].mean(axis=0)
    lattice = gap.lattice
    triangles = _run_triangle(
        np.vstack([planar_map.coords[loop], lattice, gap.ring]), segments, hole
    )
    if triangles is None and n_lattice:
        spacing = float(np.linalg.norm(gap.ring[1] - gap.ring[0]))
        rng = np.random.default_rng(seed)
        lattice = lattice + rng.uniform(-1e-3, 1e-3, size=lattice.shape) * spacing
        lib_logger.warning("Retrying the gap triangulation with jittered lattice points")
        triangles = _run_triangle(
            np.vstack([planar_map.coords[loop], lattice, gap.ring]), segments, hole
        )
    if triangles is None:
        raise TriangulationError(
            f"constrained Delaunay triangulation of the gap failed "
            f"({n_loop} outline vertices, {n_lattice} lattice points, {n_ring} ring points)"
        )

    # Triangle indices -> combined indices (outline points are land vertices)
    index_map = np.concatenate(
        [loop, n_land + np.arange(n_lattice + n_ring, dtype=np.int64)]
    )
    sea_faces = index_map[triangles]
    coords = np.vstack([planar_map.coords, lattice, gap.ring])

    flipped = triangle_signed_areas(coords, sea_faces) < 0.0
    sea_faces[flipped] = sea_faces[flipped][:, ::-1]

    faces = np.vstack([land_faces, sea_faces])
    land_mask = np.concatenate(
        [np.ones(land_faces.shape[0], dtype=bool), np.zeros(sea_faces.shape[0], dtype=bool)]
    )
    provenance = np.concatenate(
        [planar_map.provenance, np.full(n_lattice + n_ring, -1, dtype=np.int64)]
    )
    lib_logger.debug(f"Gap triangulated with {sea_faces.shape[0]} sea faces")
    return PlanarMap(coords, faces, land_mask, provenance)


def unit_circle_vertices(coords: np.ndarray) -> np.ndarray:
    """Indices of vertices with | |z| - 1 | <= 1e-9."""
    return np.nonzero(np.abs(np.linalg.norm(coords, axis=1) - 1.0) <= RING_TOLERANCE)[0]


def circumdisk_excludes_origin(coords: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """
    Per counter-clockwise face, True when the origin lies strictly outside
    its circumcircle.

    Inversion in the unit circle maps exactly these faces to triangles of
    reversed orientation; faces whose circumcircle passes through the origin
    collapse onto a line.
    """
    corners = coords[faces]
    lifted = np.einsum("fij,fij->fi", corners, corners)
    incircle = np.linalg.det(np.concatenate([corners, lifted[:, :, None]], axis=2))
    scale = lifted.max(axis=1) ** 2
    return incircle < -INCIRCLE_RTOL * scale


def reflect_glue(disk: PlanarMap) -> PlanarMap:
    """
    Glue a triangulated unit disk to its image under z -> 1/conj(z).

    Unit-circle vertices are shared; every other vertex with |z| >= 1e-6 has
    a mirror z / |z|^2. A face gains a mirror face, with reversed corner
    order, when all its corners have images and its circumcircle keeps the
    origin outside. Mirror faces are sea; mirror vertices no face uses are
    dropped.

    Raises:
        TriangulationError: a glued face is not counter-clockwise
    """
    coords = disk.coords
    n = disk.n_vertices
    radii = np.linalg.norm(coords, axis=1)

    on_ring = np.zeros(n, dtype=bool)
    on_ring[unit_circle_vertices(coords)] = True
    mirrored = ~on_ring & (radii >= MIRROR_EXCLUSION_RADIUS)
    excluded = ~on_ring & ~mirrored
    if np.any(excluded):
        lib_logger.warning(
            f"{int(excluded.sum())} vertices within {MIRROR_EXCLUSION_RADIUS:g} of the "
            f"origin are not reflected"
        )

    image = np.full(n, -1, dtype=np.int64)
    image[on_ring] = np.nonzero(on_ring)[0]
    image[mirrored] = n + np.arange(int(mirrored.sum()))
    all_coords = np.vstack([coords, coords[mirrored] / (radii[mirrored] ** 2)[:, None]])

    face_images = image[disk.faces]
    usable = np.all(face_images >= 0, axis=1) & circumdisk_excludes_origin(coords, disk.faces)
    mirror_faces = face_images[usable][:, ::-1]

    # Images of nearly cocircular faces can still be slivers
    mirror_corners = all_coords[mirror_faces]
    extent = np.einsum("fij,fij->fi", mirror_corners, mirror_corners).max(axis=1)
    proper = triangle_signed_areas(all_coords, mirror_faces) > MIRROR_AREA_RTOL * extent
    mirror_faces = mirror_faces[proper]

    dropped = int((~usable).sum() + (~proper).sum())
    if dropped:
        lib_logger.debug(f"{dropped} disk faces have no usable mirror face")

    glued = PlanarMap(
        all_coords,
        np.vstack([disk.faces, mirror_faces]),
        np.concatenate([disk.land_mask, np.zeros(mirror_faces.shape[0], dtype=bool)]),
        np.concatenate([disk.provenance, np.full(all_coords.shape[0] - n, -1, dtype=np.int64)]),
    ).restrict_to_faces(np.ones(disk.n_faces + mirror_faces.shape[0], dtype=bool))

    bad = np.nonzero(glued.signed_areas <= 0.0)[0]
    if bad.size:
        raise TriangulationError(
            f"glued sea has {bad.size} faces that are not counter-clockwise "
            f"(first: {bad[:5].tolist()})"
        )
    return glued


def truncate_and_rescale(
    glued: PlanarMap,
    land_scale: float,
    cfg: Optional[SeaConfig] = None,
    center: Optional[np.ndarray] = None,
    gap_spacing: float = float("nan"),
    excluded_mirror_count: int = 0,
) -> AugmentedMap:
    """
    Drop every vertex beyond cfg.truncate_radius together with its faces,
    then undo the disk normalization so the land regains its original
    position and size.
    """
    cfg = cfg or SeaConfig()
    center = np.zeros(2) if center is None else np.asarray(center, dtype=float)

    too_far = np.linalg.norm(glued.coords, axis=1) > cfg.truncate_radius
    keep_faces = ~np.any(too_far[glued.faces], axis=1)
    truncated = glued.restrict_to_faces(keep_faces)
    ring = unit_circle_vertices(truncated.coords)
    lib_logger.debug(
        f"Truncated the sea at radius {cfg.truncate_radius:g}: removed "
        f"{int((~keep_faces).sum())} faces"
    )

    restored = truncated.with_coords(truncated.coords / land_scale + center)
    return AugmentedMap(
        map=restored,
        land_scale=land_scale,
        circle_ring=ring,
        center=center,
        gap_spacing=gap_spacing,
        excluded_mirror_count=excluded_mirror_count,
    )


def extend_density(
    aug: AugmentedMap, rho_f_land: np.ndarray, weighted: bool = False
) -> DensityField:
    """
    Face densities over land and sea: land faces keep `rho_f_land`, sea faces
    get the plain (or land-area weighted) mean of it. Vertex densities are
    the face averages.

    Raises:
        DensityError: a land density is not strictly positive
    """
    planar_map = aug.map
    rho_f_land = np.asarray(rho_f_land, dtype=float).reshape(-1)
    if rho_f_land.shape[0] != planar_map.n_land_faces:
        raise DensityError(
            f"{rho_f_land.shape[0]} densities for {planar_map.n_land_faces} land faces"
        )
    if not np.all(np.isfinite(rho_f_land)) or np.any(rho_f_land <= 0.0):
        raise DensityError("land densities must be finite and strictly positive")

    if weighted:
        areas = np.abs(np.asarray(planar_map.signed_areas))[planar_map.land_mask]
        sea_value = float((areas * rho_f_land).sum() / areas.sum())
    else:
        sea_value = float(rho_f_land.mean())

    rho_f = np.full(planar_map.n_faces, sea_value)
    rho_f[planar_map.land_mask] = rho_f_land
    return DensityField.from_faces(rho_f, transitions(planar_map))


def build_sea(land: PlanarMap, cfg: Optional[SeaConfig] = None) -> AugmentedMap:
    """Surround a land-only planar map with an adaptive sea."""
    cfg = cfg or SeaConfig()
    if land.n_land_faces != land.n_faces:
        raise ConfigurationError("build_sea expects a land-only map")
    normalized, land_scale, center = normalize_into_disk(land, cfg)
    spacing = cfg.gap_spacing or mean_edge_length(normalized.coords, normalized.edges)
    gap = generate_gap_points(normalized, spacing)
    disk = triangulate_gap(normalized, gap, seed=cfg.seed)

    excluded = int(
        np.count_nonzero(np.linalg.norm(disk.coords, axis=1) < MIRROR_EXCLUSION_RADIUS)
    )
    glued = reflect_glue(disk)
    aug = truncate_and_rescale(
        glued,
        land_scale,
        cfg,
        center=center,
        gap_spacing=spacing,
        excluded_mirror_count=excluded,
    )
    lib_logger.info(
        f"Built sea: {aug.n_land_faces} land faces, {aug.n_sea_faces} sea faces, "
        f"ring of {aug.circle_ring.shape[0]} vertices"
    )
    return aug
