# src/deq_library/operators.py
"""
Discrete operators on planar triangulations.

- cotan_laplacian: symmetric cotangent stiffness L and lumped mass D = 2 A(i),
  so that the Laplacian is D^-1 L.
- transitions: face <-> vertex averaging matrices.
- face_gradient: per-face gradient of a piecewise-linear vertex field.

Cotangents and gradients use signed face areas, so a face that flipped
during advection yields finite (if meaningless) values instead of an error.
Only zero-area faces are rejected.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .error_handler import DegenerateFaceError, DensityError, TopologyError
from .mesh import DEGENERATE_AREA_RTOL, PlanarMap
from .sparse_linalg import assemble_arrays

lib_logger = logging.getLogger("deq_library")


@dataclass(frozen=True)
class LaplacianPair:
    """L (cotangent weights, zero row sums) and diagonal D with D_ii = 2 A(i)."""

    L: sparse.csr_matrix
    D: sparse.dia_matrix

    @property
    def vertex_areas(self) -> np.ndarray:
        return 0.5 * self.D.diagonal()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Laplacian D^-1 L u."""
        return (self.L @ u) / self.D.diagonal()


@dataclass(frozen=True)
class TransitionSet:
    """
    Row-stochastic conversions between face and vertex values.

    Attributes:
        m_vf: |F| x |V|, each face averages its three corners
        m_fv: |V| x |F|, each vertex averages its incident faces
        w_fv: |V| x |F|, as m_fv but weighted by the face areas of this map
    """

    m_vf: sparse.csr_matrix
    m_fv: sparse.csr_matrix
    w_fv: sparse.csr_matrix


@dataclass(frozen=True, eq=False)
class DensityField:
    """Strictly positive per-face and per-vertex densities of one map."""

    rho_f: np.ndarray
    rho_v: np.ndarray

    def __post_init__(self):
        for name in ("rho_f", "rho_v"):
            values = np.array(getattr(self, name), dtype=float, copy=True).reshape(-1)
            if not np.all(np.isfinite(values)):
                raise DensityError(f"{name} contains non-finite values")
            bad = np.nonzero(values <= 0.0)[0]
            if bad.size:
                raise DensityError(
                    f"{name} must be strictly positive; {bad.size} entries are not "
                    f"(first at index {int(bad[0])}, value {values[bad[0]]:.3e})"
                )
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def from_faces(cls, rho_f: np.ndarray, transitions: TransitionSet) -> "DensityField":
        """Pair face densities with their vertex average rho_v = m_fv rho_f."""
        rho_f = np.asarray(rho_f, dtype=float)
        return cls(rho_f, transitions.m_fv @ rho_f)


def _signed_double_areas(planar_map: PlanarMap) -> np.ndarray:
    double_areas = 2.0 * np.asarray(planar_map.signed_areas)
    scale = float(np.abs(double_areas).sum())
    zero = np.nonzero(
        np.abs(double_areas) <= DEGENERATE_AREA_RTOL * max(scale, 1e-300)
    )[0]
    if zero.size:
        raise DegenerateFaceError(zero, "zero-area faces in planar map")
    return double_areas


def cotan_laplacian(planar_map: PlanarMap) -> LaplacianPair:
    """
    Cotangent Laplacian of a planar map.

    L_ij = cot(alpha_ij) + cot(beta_ij) over the faces sharing edge ij (a
    single cotangent on boundary edges), L_ii = -sum_j L_ij.
    D_ii = 2 A(i), with A(i) one third of the incident face areas.
    """
    coords = planar_map.coords
    faces = planar_map.faces
    double_areas = _signed_double_areas(planar_map)
    n = planar_map.n_vertices

    rows, cols, weights = [], [], []
    # Corner c of each face is opposite the edge joining the other two corners
    for c in range(3):
        i = faces[:, (c + 1) % 3]
        j = faces[:, (c + 2) % 3]
        k = faces[:, c]
        u = coords[i] - coords[k]
        v = coords[j] - coords[k]
        cot = np.einsum("ij,ij->i", u, v) / double_areas
        rows.extend([i, j])
        cols.extend([j, i])
        weights.extend([cot, cot])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    weights = np.concatenate(weights)
    off_diagonal = assemble_arrays(rows, cols, weights, (n, n))
    row_sums = np.asarray(off_diagonal.sum(axis=1)).reshape(-1)
    L = (off_diagonal - sparse.diags(row_sums)).tocsr()
    L.sort_indices()

    vertex_areas = np.bincount(
        faces.reshape(-1),
        weights=np.repeat(np.abs(double_areas) / 6.0, 3),
        minlength=n,
    )
    if np.any(vertex_areas <= 0.0):
        isolated = np.nonzero(vertex_areas <= 0.0)[0]
        raise TopologyError(f"isolated vertices: {isolated.tolist()[:10]}")
    return LaplacianPair(L=L, D=sparse.diags(2.0 * vertex_areas))


def transitions(planar_map: PlanarMap) -> TransitionSet:
    """
    Face/vertex transition matrices of a map.

    Raises:
        TopologyError: a vertex touches no face (its rows would be zero)
    """
    faces = planar_map.faces
    n_v, n_f = planar_map.n_vertices, planar_map.n_faces
    face_ids = np.repeat(np.arange(n_f), 3)
    corners = faces.reshape(-1)

    m_vf = assemble_arrays(face_ids, corners, np.full(3 * n_f, 1.0 / 3.0), (n_f, n_v))

    incidence = assemble_arrays(corners, face_ids, np.ones(3 * n_f), (n_v, n_f))
    counts = np.asarray(incidence.sum(axis=1)).reshape(-1)
    isolated = np.nonzero(counts == 0)[0]
    if isolated.size:
        raise TopologyError(
            f"isolated vertices have no incident faces: {isolated.tolist()[:10]}"
        )
    m_fv = (sparse.diags(1.0 / counts) @ incidence).tocsr()

    return TransitionSet(m_vf=m_vf, m_fv=m_fv, w_fv=area_weighted_fv(planar_map))


def area_weighted_fv(planar_map: PlanarMap) -> sparse.csr_matrix:
    """
    |V| x |F| face-to-vertex average weighted by the current face areas.

    Depends on the coordinates; rebuild it whenever the map moves.
    """
    faces = planar_map.faces
    n_v, n_f = planar_map.n_vertices, planar_map.n_faces
    face_ids = np.repeat(np.arange(n_f), 3)
    areas = np.abs(np.asarray(planar_map.signed_areas))
    weighted = assemble_arrays(faces.reshape(-1), face_ids, np.repeat(areas, 3), (n_v, n_f))
    area_sums = np.asarray(weighted.sum(axis=1)).reshape(-1)
    return (sparse.diags(1.0 / area_sums) @ weighted).tocsr()


def face_gradient(planar_map: PlanarMap, rho_v: np.ndarray) -> np.ndarray:
    """
    Gradient of the piecewise-linear interpolant of `rho_v` on every face.

    For face [i, j, k] the result g satisfies <g, x_j - x_i> = rho_j - rho_i
    and <g, x_k - x_j> = rho_k - rho_j, i.e.
    g = (1 / 2A) * sum_i rho_i * rot90(e_i), where e_i is the edge opposite
    corner i traversed counter-clockwise and rot90(x, y) = (-y, x).

    Returns:
        (|F|, 2) array
    """
    rho_v = np.asarray(rho_v, dtype=float).reshape(-1)
    if rho_v.shape[0] != planar_map.n_vertices:
        raise ValueError(
            f"rho_v has {rho_v.shape[0]} entries for {planar_map.n_vertices} vertices"
        )
    coords = planar_map.coords
    faces = planar_map.faces
    double_areas = _signed_double_areas(planar_map)

    gradient = np.zeros((faces.shape[0], 2))
    for c in range(3):
        start = coords[faces[:, (c + 1) % 3]]
        end = coords[faces[:, (c + 2) % 3]]
        edge = end - start
        rotated = np.column_stack([-edge[:, 1], edge[:, 0]])
        gradient += rho_v[faces[:, c]][:, None] * rotated
    return gradient / double_areas[:, None]


def has_nonnegative_weights(laplacian: LaplacianPair) -> bool:
    """True if every off-diagonal cotangent weight is >= 0 (maximum principle holds)."""
    off = laplacian.L - sparse.diags(laplacian.L.diagonal())
    return bool(off.nnz == 0 or off.data.min() >= -1e-12)

