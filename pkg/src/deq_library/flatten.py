# src/deq_library/flatten.py
"""
Initial planar embeddings of a disk mesh with a fixed convex boundary.

Two linear systems share one Dirichlet setup: boundary vertices are pinned
to the flattened boundary curve and every interior vertex satisfies
sum_j M_ij (phi_j - phi_i) = 0.

- tutte:    M_ij = 1 per edge (uniform weights, bijective for a convex boundary)
- authalic: M_ij = sum over the faces of edge ij of cot(angle at j) / |x_i - x_j|^2,
            measured on the 3D mesh (locally area preserving, not symmetric)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from .boundary import FlatCurve, flatten_boundary, verify_convex_simple
from .error_handler import ConfigurationError, FlippedFaceError, TopologyError
from .mesh import PlanarMap, TriMesh, boundary_loop_ccw
from .run_config import RunDefaults
from .sparse_linalg import SolveReport, assemble_arrays, solve_dirichlet

lib_logger = logging.getLogger("deq_library")

FLATTEN_KINDS = ("tutte", "authalic")


@dataclass(frozen=True, eq=False)
class FlattenSystem:
    """
    Linear system of one initial flattening.

    Attributes:
        matrix: |V| x |V| weights with zero row sums (diagonal = -sum of the row)
        boundary_indices: pinned vertices, in loop order
        boundary_positions: (b, 2) pinned positions
        kind: "tutte" or "authalic"
    """

    matrix: sparse.csr_matrix
    boundary_indices: np.ndarray
    boundary_positions: np.ndarray
    kind: str

    @property
    def interior_indices(self) -> np.ndarray:
        mask = np.ones(self.matrix.shape[0], dtype=bool)
        mask[self.boundary_indices] = False
        return np.nonzero(mask)[0]

    @property
    def interior_rows(self) -> sparse.csr_matrix:
        """Rows of the free vertices over all columns."""
        return self.matrix[self.interior_indices]

    @property
    def symmetric(self) -> bool:
        return self.kind == "tutte"


def _with_zero_row_sums(off_diagonal: sparse.csr_matrix) -> sparse.csr_matrix:
    row_sums = np.asarray(off_diagonal.sum(axis=1)).reshape(-1)
    matrix = (off_diagonal - sparse.diags(row_sums)).tocsr()
    matrix.sort_indices()
    return matrix


def tutte_matrix(mesh: TriMesh) -> sparse.csr_matrix:
    """Uniform-weight graph Laplacian: 1 per edge, minus the degree on the diagonal."""
    edges = mesh.edges
    n = mesh.n_vertices
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return _with_zero_row_sums(assemble_arrays(rows, cols, np.ones(rows.shape[0]), (n, n)))


def authalic_matrix(mesh: TriMesh, cot_clamp: Optional[float] = None) -> sparse.csr_matrix:
    """
    Locally authalic weights from the 3D geometry.

    Each face contributes, for every ordered corner pair (p, q), the cotangent
    of its angle at q divided by |x_p - x_q|^2. Cotangents are clamped to
    +/- cot_clamp.
    """
    cot_clamp = RunDefaults.cot_clamp() if cot_clamp is None else cot_clamp
    x = mesh.vertices
    faces = mesh.faces
    n = mesh.n_vertices

    rows, cols, weights = [], [], []
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            p = faces[:, a]
            q = faces[:, b]
            r = faces[:, 3 - a - b]
            u = x[p] - x[q]
            v = x[r] - x[q]
            cot = np.einsum("ij,ij->i", u, v) / np.linalg.norm(np.cross(u, v), axis=1)
            cot = np.clip(cot, -cot_clamp, cot_clamp)
            rows.append(p)
            cols.append(q)
            weights.append(cot / np.einsum("ij,ij->i", u, u))

    off_diagonal = assemble_arrays(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(weights), (n, n)
    )
    return _with_zero_row_sums(off_diagonal)


def _check_boundary_matches(mesh: TriMesh, boundary: FlatCurve) -> None:
    expected = np.unique(mesh.boundary_half_edges[:, 0])
    given = np.asarray(boundary.vertex_indices)
    if given.size != np.unique(given).size or not np.array_equal(np.sort(given), expected):
        raise TopologyError(
            "flattened boundary does not cover exactly the boundary vertices of the mesh"
        )


def build_flatten_system(
    mesh: TriMesh,
    boundary: FlatCurve,
    kind: str = "tutte",
    cot_clamp: Optional[float] = None,
) -> FlattenSystem:
    """Assemble the Tutte or authalic system with the boundary pinned to `boundary`."""
    if kind not in FLATTEN_KINDS:
        raise ConfigurationError(
            f"unknown flattening '{kind}' (use one of {', '.join(FLATTEN_KINDS)})"
        )
    _check_boundary_matches(mesh, boundary)
    matrix = tutte_matrix(mesh) if kind == "tutte" else authalic_matrix(mesh, cot_clamp)
    return FlattenSystem(
        matrix=matrix,
        boundary_indices=np.asarray(boundary.vertex_indices, dtype=np.int64),
        boundary_positions=np.asarray(boundary.points, dtype=float),
        kind=kind,
    )


def solve_flatten_system(system: FlattenSystem) -> Tuple[np.ndarray, SolveReport]:
    """Solve for all vertex positions; boundary positions are met exactly."""
    # -M is SPD on the interior for Tutte weights
    coords, report = solve_dirichlet(
        -system.matrix,
        system.boundary_indices,
        system.boundary_positions,
        spd=system.symmetric,
    )
    lib_logger.debug(
        f"{system.kind} flattening solved with {report.method}, "
        f"residual {report.residual:.2e}"
    )
    return coords, report


def check_no_flips(planar_map: PlanarMap) -> int:
    """Number of faces with signed area <= 0."""
    return int(np.count_nonzero(np.asarray(planar_map.signed_areas) <= 0.0))


def _flipped_faces(planar_map: PlanarMap) -> np.ndarray:
    return np.nonzero(np.asarray(planar_map.signed_areas) <= 0.0)[0]


def tutte_flatten(mesh: TriMesh, boundary: FlatCurve) -> PlanarMap:
    """
    Tutte embedding with the boundary pinned to a convex curve.

    Raises:
        FlippedFaceError: a face came out with non-positive area (only possible
            when the boundary is not convex)
    """
    system = build_flatten_system(mesh, boundary, "tutte")
    coords, _ = solve_flatten_system(system)
    planar_map = PlanarMap(coords, mesh.faces)
    flipped = _flipped_faces(planar_map)
    if flipped.size:
        raise FlippedFaceError(flipped, "Tutte embedding has flipped faces")
    return planar_map


def authalic_flatten(
    mesh: TriMesh,
    boundary: FlatCurve,
    strict: bool = False,
    cot_clamp: Optional[float] = None,
) -> PlanarMap:
    """
    Locally authalic embedding with the boundary pinned to a convex curve.

    The result is not guaranteed to be bijective. Flipped faces are logged;
    with `strict` the Tutte embedding is returned instead.
    """
    system = build_flatten_system(mesh, boundary, "authalic", cot_clamp)
    coords, _ = solve_flatten_system(system)
    planar_map = PlanarMap(coords, mesh.faces)
    flipped = _flipped_faces(planar_map)
    if flipped.size:
        if strict:
            lib_logger.warning(
                f"Authalic flattening flipped {flipped.size} faces; "
                f"falling back to the Tutte embedding"
            )
            return tutte_flatten(mesh, boundary)
        lib_logger.warning(
            f"Authalic flattening flipped {flipped.size} of {mesh.n_faces} faces "
            f"(first: {flipped[:10].tolist()}); continuing with it as initializer"
        )
    return planar_map


def initial_flatten(
    mesh: TriMesh,
    kind: str = "tutte",
    strict: bool = False,
    boundary: Optional[FlatCurve] = None,
) -> PlanarMap:
    """
    Flatten a disk mesh: boundary by curvature, interior by `kind`.

    Args:
        mesh: Disk-topology surface
        kind: "tutte" or "authalic"
        strict: Fall back to Tutte when the authalic map has flipped faces
        boundary: Precomputed flattened boundary (computed when omitted)
    """
    if kind not in FLATTEN_KINDS:
        raise ConfigurationError(
            f"unknown flattening '{kind}' (use one of {', '.join(FLATTEN_KINDS)})"
        )
    if boundary is None:
        boundary = flatten_boundary(boundary_loop_ccw(mesh))
    convexity = verify_convex_simple(boundary)
    if not convexity.passes:
        lib_logger.warning(
            f"Flattened boundary is not a simple convex curve ({convexity.to_dict()}); "
            f"the embedding may fold"
        )
    if kind == "tutte":
        return tutte_flatten(mesh, boundary)
    return authalic_flatten(mesh, boundary, strict=strict)
