# src/deq_library/utils/planar.py
"""Small planar helpers shared by the sea construction and the remesher."""

import math
from typing import Tuple

import numpy as np
import shapely
from shapely.geometry import Polygon


def cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """z-component of the cross product of 2D vectors (row-wise)."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def triangle_signed_areas(coords: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Signed area of every triangle; positive for counter-clockwise corners."""
    p0 = coords[faces[:, 0]]
    return 0.5 * cross2(coords[faces[:, 1]] - p0, coords[faces[:, 2]] - p0)


def polygon_signed_area(points: np.ndarray) -> float:
    """Shoelace area of a closed polygon given without the repeated first point."""
    nxt = np.roll(points, -1, axis=0)
    return 0.5 * float(np.sum(cross2(points, nxt)))


def hex_lattice(
    bounds: Tuple[float, float, float, float], spacing: float
) -> np.ndarray:
    """
    Hexagonal lattice with nearest-neighbour distance `spacing` covering
    `bounds` = (xmin, ymin, xmax, ymax). Rows are emitted bottom to top,
    points left to right, so the output order is deterministic.
    """
    xmin, ymin, xmax, ymax = bounds
    row_step = spacing * math.sqrt(3.0) / 2.0
    n_rows = int(math.floor((ymax - ymin) / row_step)) + 1
    n_cols = int(math.floor((xmax - xmin) / spacing)) + 2
    rows = []
    for r in range(n_rows):
        offset = 0.5 * spacing if r % 2 else 0.0
        xs = xmin + offset + spacing * np.arange(n_cols)
        xs = xs[xs <= xmax]
        ys = np.full(xs.shape, ymin + r * row_step)
        rows.append(np.column_stack([xs, ys]))
    if not rows:
        return np.zeros((0, 2))
    return np.vstack(rows)


def loop_polygon(coords: np.ndarray, loop: np.ndarray) -> Polygon:
    """Shapely polygon through the vertices of a boundary loop."""
    return Polygon(coords[loop])


def points_in_polygon(polygon: Polygon, points: np.ndarray) -> np.ndarray:
    """Boolean mask of points strictly inside or on the boundary of `polygon`."""
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    return shapely.intersects_xy(polygon, points[:, 0], points[:, 1])


def distance_to_boundary(polygon: Polygon, points: np.ndarray) -> np.ndarray:
    """Distance of every point to the polygon outline."""
    if len(points) == 0:
        return np.zeros(0)
    return shapely.distance(polygon.exterior, shapely.points(points))
