# src/deq_library/mesh.py
"""
Triangle-mesh data model shared by every stage of the pipeline.

TriMesh holds a 3D surface, PlanarMap a 2D embedding of a (possibly
sea-augmented) mesh. Both are immutable: arrays are copied on construction
and marked read-only, and derived adjacency is cached lazily.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .error_handler import DegenerateFaceError, TopologyError
from .utils.planar import triangle_signed_areas

lib_logger = logging.getLogger("deq_library")

# Faces with area <= this fraction of the total area are rejected at load time
DEGENERATE_AREA_RTOL = 1e-14

# A 3D mesh is treated as planar when its z extent is this small relative to x/y
PLANARITY_RTOL = 1e-9


def _frozen_array(values, dtype, width: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.size == 0:
        arr = arr.reshape(0, width)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{name} must have shape (n, {width}), got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _frozen_vector(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


def _check_face_indices(faces: np.ndarray, n_vertices: int) -> None:
    out_of_range = np.nonzero(((faces < 0) | (faces >= n_vertices)).any(axis=1))[0]
    if out_of_range.size:
        raise DegenerateFaceError(out_of_range, "face index out of range")
    repeated = np.nonzero(
        (faces[:, 0] == faces[:, 1])
        | (faces[:, 1] == faces[:, 2])
        | (faces[:, 2] == faces[:, 0])
    )[0]
    if repeated.size:
        raise DegenerateFaceError(repeated, "repeated vertex in face")


class _TopologyMixin:
    """Edge/face incidence derived from `faces` and `n_vertices`."""

    faces: np.ndarray

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @cached_property
    def half_edges(self) -> np.ndarray:
        """(3F, 2) directed edges in face order: (a,b), (b,c), (c,a) per face."""
        f = self.faces
        return np.stack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=1).reshape(-1, 2)

    @cached_property
    def _edge_table(self):
        undirected = np.sort(self.half_edges, axis=1)
        edges, inverse, counts = np.unique(
            undirected, axis=0, return_inverse=True, return_counts=True
        )
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) unique undirected edges, each sorted (i < j)."""
        return self._edge_table[0]

    @property
    def half_edge_to_edge(self) -> np.ndarray:
        """Index into `edges` for every half-edge."""
        return self._edge_table[1]

    @property
    def edge_face_counts(self) -> np.ndarray:
        """Number of faces bordering each undirected edge."""
        return self._edge_table[2]

    @cached_property
    def boundary_half_edges(self) -> np.ndarray:
        """Directed half-edges on the boundary, oriented as in their face."""
        on_boundary = self.edge_face_counts[self.half_edge_to_edge] == 1
        return self.half_edges[on_boundary]

    @cached_property
    def vertex_face_incidence(self) -> sparse.csr_matrix:
        """|V| x |F| 0/1 incidence matrix."""
        n_f = self.n_faces
        rows = self.faces.reshape(-1)
        cols = np.repeat(np.arange(n_f), 3)
        data = np.ones(rows.shape[0])
        inc = sparse.coo_matrix((data, (rows, cols)), shape=(self.n_vertices, n_f))
        return inc.tocsr()

    @property
    def n_vertices(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class TriMesh(_TopologyMixin):
    """
    Immutable 3D triangle mesh.

    Construction checks index ranges, repeated vertices inside a face and
    strictly positive face areas (relative to the total area). Manifoldness
    and disk topology are reported by validate_disk_topology.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        vertices = _frozen_array(self.vertices, float, 3, "vertices")
        faces = _frozen_array(self.faces, np.int64, 3, "faces")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

        if faces.shape[0] == 0:
            raise TopologyError("mesh has no faces")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertex coordinates must be finite")
        _check_face_indices(faces, vertices.shape[0])

        areas = self.face_areas
        total = float(areas.sum())
        bad = np.nonzero(areas <= DEGENERATE_AREA_RTOL * total)[0]
        if total <= 0.0 or bad.size:
            raise DegenerateFaceError(
                bad if bad.size else np.arange(faces.shape[0]), "zero-area faces"
            )

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        p0 = self.vertices[self.faces[:, 0]]
        cross = np.cross(
            self.vertices[self.faces[:, 1]] - p0, self.vertices[self.faces[:, 2]] - p0
        )
        return 0.5 * np.linalg.norm(cross, axis=1)

    @cached_property
    def face_centroids(self) -> np.ndarray:
        return self.vertices[self.faces].mean(axis=1)


@dataclass(frozen=True, eq=False)
class PlanarMap(_TopologyMixin):
    """
    Immutable 2D embedding of a mesh.

    Attributes:
        coords: (n, 2) vertex positions
        faces: (m, 3) vertex indices
        land_mask: per-face True for land, False for sea (default: all land)
        provenance: per-vertex index of the original TriMesh vertex, -1 for
            sea vertices (default: identity)
    """

    coords: np.ndarray
    faces: np.ndarray
    land_mask: Optional[np.ndarray] = None
    provenance: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = _frozen_array(self.coords, float, 2, "coords")
        faces = _frozen_array(self.faces, np.int64, 3, "faces")
        n, m = coords.shape[0], faces.shape[0]
        land = (
            np.ones(m, dtype=bool)
            if self.land_mask is None
            else _frozen_vector(self.land_mask, bool)
        )
        prov = (
            np.arange(n, dtype=np.int64)
            if self.provenance is None
            else _frozen_vector(self.provenance, np.int64)
        )
        land.setflags(write=False)
        prov.setflags(write=False)
        if land.shape[0] != m:
            raise ValueError(f"land_mask has {land.shape[0]} entries for {m} faces")
        if prov.shape[0] != n:
            raise ValueError(f"provenance has {prov.shape[0]} entries for {n} vertices")
        _check_face_indices(faces, n)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "land_mask", land)
        object.__setattr__(self, "provenance", prov)

    @property
    def n_vertices(self) -> int:
        return int(self.coords.shape[0])

    @property
    def n_land_faces(self) -> int:
        return int(np.count_nonzero(self.land_mask))

    @cached_property
    def signed_areas(self) -> np.ndarray:
        return triangle_signed_areas(self.coords, self.faces)

    @cached_property
    def land_vertex_mask(self) -> np.ndarray:
        """True for vertices touched by at least one land face."""
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.faces[self.land_mask].reshape(-1)] = True
        return mask

    def with_coords(self, coords: np.ndarray) -> "PlanarMap":
        """Same connectivity, tags and provenance over new positions."""
        return PlanarMap(coords, self.faces, self.land_mask, self.provenance)

    def restrict_to_faces(self, keep: np.ndarray) -> "PlanarMap":
        """
        Sub-map made of the faces selected by boolean `keep`, with
        unreferenced vertices dropped. Surviving vertices keep their relative
        order, so a prefix of land vertices stays a prefix.
        """
        keep = np.asarray(keep, dtype=bool)
        faces = self.faces[keep]
        used = np.zeros(self.n_vertices, dtype=bool)
        used[faces.reshape(-1)] = True
        new_index = np.full(self.n_vertices, -1, dtype=np.int64)
        new_index[used] = np.arange(int(used.sum()))
        return PlanarMap(
            self.coords[used],
            new_index[faces],
            self.land_mask[keep],
            self.provenance[used],
        )

    def land_only(self) -> "PlanarMap":
        return self.restrict_to_faces(self.land_mask)


@dataclass(frozen=True)
class MeshDiagnostics:
    """Topology report produced by validate_disk_topology."""

    euler_characteristic: int
    boundary_loop_count: int
    min_face_area: float
    nonmanifold_edge_count: int
    nonmanifold_vertex_count: int = 0
    inconsistent_edge_count: int = 0
    component_count: int = 1
    unreferenced_vertex_count: int = 0

    @property
    def is_disk(self) -> bool:
        return (
            self.euler_characteristic == 1
            and self.boundary_loop_count == 1
            and self.nonmanifold_edge_count == 0
            and self.nonmanifold_vertex_count == 0
            and self.inconsistent_edge_count == 0
            and self.component_count == 1
            and self.unreferenced_vertex_count == 0
        )

    def failure_reasons(self) -> list:
        """Human-readable list of the checks that failed."""
        reasons = []
        if self.euler_characteristic != 1:
            reasons.append(f"Euler characteristic {self.euler_characteristic} != 1")
        if self.boundary_loop_count != 1:
            reasons.append(f"{self.boundary_loop_count} boundary loops (need 1)")
        if self.nonmanifold_edge_count:
            reasons.append(f"{self.nonmanifold_edge_count} non-manifold edges")
        if self.nonmanifold_vertex_count:
            reasons.append(f"{self.nonmanifold_vertex_count} non-manifold vertices")
        if self.inconsistent_edge_count:
            reasons.append(
                f"{self.inconsistent_edge_count} edges with inconsistent face orientation"
            )
        if self.component_count != 1:
            reasons.append(f"{self.component_count} connected components")
        if self.unreferenced_vertex_count:
            reasons.append(f"{self.unreferenced_vertex_count} unreferenced vertices")
        return reasons

    def to_dict(self) -> dict:
        return {
            "euler_characteristic": self.euler_characteristic,
            "boundary_loop_count": self.boundary_loop_count,
            "min_face_area": self.min_face_area,
            "nonmanifold_edge_count": self.nonmanifold_edge_count,
            "nonmanifold_vertex_count": self.nonmanifold_vertex_count,
            "inconsistent_edge_count": self.inconsistent_edge_count,
            "component_count": self.component_count,
            "unreferenced_vertex_count": self.unreferenced_vertex_count,
            "is_disk": self.is_disk,
        }


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Ordered, cyclic boundary loop of a mesh with its arclength data."""

    points: np.ndarray
    vertex_indices: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float, copy=True)
        if points.ndim != 2 or points.shape[1] not in (2, 3):
            raise ValueError(f"points must have shape (n, 3), got {points.shape}")
        if points.shape[1] == 2:
            points = np.column_stack([points, np.zeros(points.shape[0])])
        points.setflags(write=False)
        indices = _frozen_vector(self.vertex_indices, np.int64)
        if indices.shape[0] != points.shape[0]:
            raise ValueError("one vertex index is required per boundary point")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "vertex_indices", indices)
        zero = np.nonzero(self.edge_lengths <= 0.0)[0]
        if zero.size:
            raise TopologyError(
                f"zero-length boundary edges after loop positions {zero.tolist()[:10]}"
            )

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Length of edge m, from point m to point m+1 (cyclic)."""
        return np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)

    @property
    def total_length(self) -> float:
        return float(self.edge_lengths.sum())


class GeometryMeasures(NamedTuple):
    face_areas: np.ndarray
    vertex_areas: np.ndarray
    total_area: float


MeshLike = Union[TriMesh, PlanarMap]


def _component_count(n_vertices: int, edges: np.ndarray, active: np.ndarray) -> int:
    """Connected components of the graph `edges`, counting only `active` vertices."""
    if not np.any(active):
        return 0
    graph = sparse.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])),
        shape=(n_vertices, n_vertices),
    )
    _, labels = csgraph.connected_components(graph, directed=False)
    return int(np.unique(labels[active]).size)


def validate_disk_topology(mesh: MeshLike) -> MeshDiagnostics:
    """
    Compute topology diagnostics. The mesh passes (`is_disk`) iff it is a
    single, consistently oriented, manifold component with Euler
    characteristic 1 and exactly one boundary loop.
    """
    n_v, n_f = mesh.n_vertices, mesh.n_faces
    edges = mesh.edges
    counts = mesh.edge_face_counts

    referenced = np.zeros(n_v, dtype=bool)
    referenced[mesh.faces.reshape(-1)] = True

    boundary = edges[counts == 1]
    boundary_degree = np.bincount(boundary.reshape(-1), minlength=n_v)

    _, directed_counts = np.unique(mesh.half_edges, axis=0, return_counts=True)

    if isinstance(mesh, TriMesh):
        areas = mesh.face_areas
    else:
        areas = np.abs(mesh.signed_areas)

    diagnostics = MeshDiagnostics(
        euler_characteristic=int(n_v - edges.shape[0] + n_f),
        boundary_loop_count=_component_count(n_v, boundary, boundary_degree > 0),
        min_face_area=float(areas.min()),
        nonmanifold_edge_count=int(np.count_nonzero(counts > 2)),
        nonmanifold_vertex_count=int(np.count_nonzero(boundary_degree > 2)),
        inconsistent_edge_count=int(np.count_nonzero(directed_counts > 1)),
        component_count=_component_count(n_v, edges, referenced),
        unreferenced_vertex_count=int(np.count_nonzero(~referenced)),
    )
    if not diagnostics.is_disk:
        lib_logger.debug(
            f"Disk topology check failed: {'; '.join(diagnostics.failure_reasons())}"
        )
    return diagnostics


def boundary_loop_indices(mesh: MeshLike) -> np.ndarray:
    """
    Vertex indices of the single boundary loop, ordered so the interior lies
    on the left (the direction of the boundary half-edges of each face).
    The walk starts at the smallest boundary vertex index.

    Raises:
        TopologyError: if there is not exactly one boundary loop, or a
            boundary vertex is non-manifold
    """
    half = mesh.boundary_half_edges
    if half.shape[0] == 0:
        raise TopologyError("mesh has no boundary (closed surface)")

    out_degree = np.bincount(half[:, 0], minlength=mesh.n_vertices)
    if np.any(out_degree > 1):
        bad = np.nonzero(out_degree > 1)[0]
        raise TopologyError(f"non-manifold boundary vertices: {bad.tolist()[:10]}")

    successor = np.full(mesh.n_vertices, -1, dtype=np.int64)
    successor[half[:, 0]] = half[:, 1]

    start = int(half[:, 0].min())
    loop = [start]
    current = int(successor[start])
    while current != start:
        if current < 0 or len(loop) > half.shape[0]:
            raise TopologyError("boundary half-edges do not form a closed loop")
        loop.append(current)
        current = int(successor[current])

    if len(loop) != half.shape[0]:
        raise TopologyError(
            f"mesh has more than one boundary loop ({len(loop)} of "
            f"{half.shape[0]} boundary edges in the first loop)"
        )
    return np.asarray(loop, dtype=np.int64)


def boundary_loop_ccw(mesh: MeshLike) -> BoundaryCurve:
    """
    Ordered boundary loop of a disk mesh as a BoundaryCurve, oriented with the
    interior on the left when traversed.
    """
    loop = boundary_loop_indices(mesh)
    if isinstance(mesh, TriMesh):
        points = mesh.vertices[loop]
    else:
        points = mesh.coords[loop]
    return BoundaryCurve(points, loop)


def geometry_measures(mesh: MeshLike) -> GeometryMeasures:
    """
    Face areas, lumped vertex areas (one third of the incident face areas)
    and total area. Planar maps must have strictly positive signed areas.
    """
    if isinstance(mesh, TriMesh):
        face_areas = np.asarray(mesh.face_areas)
    else:
        face_areas = np.asarray(mesh.signed_areas)
        bad = np.nonzero(face_areas <= 0.0)[0]
        if bad.size:
            raise DegenerateFaceError(bad, "non-positive face area")

    vertex_areas = np.bincount(
        mesh.faces.reshape(-1),
        weights=np.repeat(face_areas / 3.0, 3),
        minlength=mesh.n_vertices,
    )
    return GeometryMeasures(face_areas, vertex_areas, float(face_areas.sum()))


def ensure_ccw(planar_map: PlanarMap) -> PlanarMap:
    """Reverse every clockwise face so all faces have positive signed area."""
    areas = planar_map.signed_areas
    scale = float(np.abs(areas).sum())
    zero = np.nonzero(np.abs(areas) <= DEGENERATE_AREA_RTOL * max(scale, 1e-300))[0]
    if zero.size:
        raise DegenerateFaceError(zero, "zero-area faces")
    flipped = areas < 0.0
    if not np.any(flipped):
        return planar_map
    faces = np.array(planar_map.faces)
    faces[flipped] = faces[flipped][:, ::-1]
    lib_logger.debug(f"Reoriented {int(flipped.sum())} clockwise faces")
    return PlanarMap(
        planar_map.coords, faces, planar_map.land_mask, planar_map.provenance
    )


def planar_embedding(mesh: TriMesh) -> Optional[PlanarMap]:
    """
    Return the mesh itself as a PlanarMap when it lies in a plane z = const
    and its faces are consistently oriented; None otherwise.

    A mesh whose faces are all clockwise in the xy-plane keeps its
    coordinates and gets every index triple reversed. Mixed orientation
    means the mesh folds over itself, so it is flattened like a curved
    surface instead.
    """
    extent = np.ptp(mesh.vertices, axis=0)
    if extent[2] > PLANARITY_RTOL * max(float(extent[:2].max()), 1e-300):
        return None
    coords = mesh.vertices[:, :2]
    areas = triangle_signed_areas(coords, mesh.faces)
    if np.all(areas > 0.0):
        return PlanarMap(coords, mesh.faces)
    if np.all(areas < 0.0):
        return PlanarMap(coords, mesh.faces[:, ::-1])
    lib_logger.debug(
        "Planar input folds over itself; it will be flattened like a curved surface"
    )
    return None


def mean_edge_length(coords: np.ndarray, edges: np.ndarray) -> float:
    return float(np.linalg.norm(coords[edges[:, 1]] - coords[edges[:, 0]], axis=1).mean())
