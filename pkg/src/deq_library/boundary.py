# src/deq_library/boundary.py
"""
Curvature-based flattening of a boundary loop into a convex plane curve.

The turning angle at every boundary vertex is measured in 3D, rescaled so
the angles total 2*pi, and integrated along the original edge lengths. The
small closure gap left by the integration is spread linearly over arclength.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from shapely.geometry import LinearRing

from .error_handler import IllConditionedCornerError, TopologyError, ZeroCurvatureError
from .mesh import BoundaryCurve
from .utils.planar import cross2, polygon_signed_area

lib_logger = logging.getLogger("deq_library")

# Turning angles this close to pi mean the boundary doubles back on itself
FOLD_TOLERANCE = 1e-9

# Closure gaps above this fraction of the perimeter may break convexity
CLOSURE_GAP_WARN_RATIO = 0.1

CONVEXITY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class FlatCurve:
    """
    Planar image of a boundary loop.

    Attributes:
        points: (b, 2) positions in loop order, first point not repeated
        vertex_indices: mesh vertex of every point
        target_curvature: rescaled per-vertex turning angles (sum 2*pi)
        closure_gap: distance between the ends before the closure adjustment
    """

    points: np.ndarray
    vertex_indices: np.ndarray
    target_curvature: np.ndarray
    closure_gap: float

    def __post_init__(self):
        for name in ("points", "vertex_indices", "target_curvature"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def closed_points(self) -> np.ndarray:
        """(b + 1, 2) positions with the first point repeated at the end."""
        return np.vstack([self.points, self.points[:1]])

    @cached_property
    def perimeter(self) -> float:
        return float(np.linalg.norm(np.diff(self.closed_points, axis=0), axis=1).sum())

    @property
    def signed_area(self) -> float:
        return polygon_signed_area(self.points)


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    simple: bool
    turning_number: int

    @property
    def passes(self) -> bool:
        return self.convex and self.simple and self.turning_number == 1

    def to_dict(self) -> dict:
        return {
            "convex": self.convex,
            "simple": self.simple,
            "turning_number": self.turning_number,
        }


def discrete_curvature(curve: BoundaryCurve) -> np.ndarray:
    """
    Unsigned turning angle at every vertex of a closed loop, in [0, pi).

    The angle is taken between the unit tangents of the incoming and
    outgoing edges, i.e. the integrated curvature over the vertex's dual cell.

    Raises:
        TopologyError: fewer than 3 vertices
        IllConditionedCornerError: the loop doubles back at a vertex
    """
    points = np.asarray(curve.points, dtype=float)
    if points.shape[0] < 3:
        raise TopologyError(f"boundary loop needs at least 3 vertices, got {points.shape[0]}")

    outgoing = np.roll(points, -1, axis=0) - points
    outgoing /= np.linalg.norm(outgoing, axis=1)[:, None]
    incoming = np.roll(outgoing, 1, axis=0)

    sin_part = np.linalg.norm(np.cross(incoming, outgoing), axis=1)
    cos_part = np.einsum("ij,ij->i", incoming, outgoing)
    angles = np.arctan2(sin_part, cos_part)

    folded = np.nonzero(angles >= math.pi - FOLD_TOLERANCE)[0]
    if folded.size:
        raise IllConditionedCornerError(np.asarray(curve.vertex_indices)[folded])
    return angles


def flatten_boundary(curve: BoundaryCurve) -> FlatCurve:
    """
    Build a closed convex plane polygon with the loop's edge lengths and
    turning angles rescaled to total 2*pi.

    Heading of edge m is the cumulative sum of the rescaled angles up to and
    including vertex m; positions are integrated from the origin and the end
    mismatch is removed in proportion to arclength.

    Raises:
        ZeroCurvatureError: the loop has no turning at all
        IllConditionedCornerError: propagated from discrete_curvature
    """
    kappa = discrete_curvature(curve)
    total = float(kappa.sum())
    if not total > 0.0:
        raise ZeroCurvatureError("boundary loop has zero total turning angle")

    target = 2.0 * math.pi * kappa / total
    headings = np.cumsum(target)
    lengths = np.asarray(curve.edge_lengths)
    steps = lengths[:, None] * np.column_stack([np.cos(headings), np.sin(headings)])

    positions = np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    mismatch = positions[-1] - positions[0]
    gap = float(np.linalg.norm(mismatch))

    total_length = float(lengths.sum())
    arclength = np.concatenate([[0.0], np.cumsum(lengths)])[:-1]
    points = positions[:-1] - (arclength / total_length)[:, None] * mismatch[None, :]

    if gap > CLOSURE_GAP_WARN_RATIO * total_length:
        lib_logger.warning(
            f"Boundary closure gap {gap:.4g} exceeds {CLOSURE_GAP_WARN_RATIO:.0%} of "
            f"the perimeter {total_length:.4g}; the flattened boundary may not be convex"
        )
    else:
        lib_logger.debug(
            f"Flattened boundary of {len(curve)} vertices, closure gap {gap:.3e}"
        )

    return FlatCurve(
        points=points,
        vertex_indices=np.asarray(curve.vertex_indices),
        target_curvature=target,
        closure_gap=gap,
    )


def verify_convex_simple(flat: Union[FlatCurve, np.ndarray]) -> ConvexityReport:
    """
    Check that a closed polygon is convex, simple and winds once.

    Convex: every cross product of consecutive edges is >= -1e-9 * scale^2,
    with scale the largest bounding-box side. Turning number: sum of signed
    exterior angles over 2*pi, rounded. Simple: no two non-adjacent edges meet.
    """
    points = np.asarray(flat.points if isinstance(flat, FlatCurve) else flat, dtype=float)
    edges = np.roll(points, -1, axis=0) - points
    previous = np.roll(edges, 1, axis=0)

    scale = float(np.ptp(points, axis=0).max()) if points.shape[0] else 0.0
    crosses = cross2(previous, edges)
    convex = bool(np.all(crosses >= -CONVEXITY_RTOL * scale * scale))

    # Zero-length edges carry no direction and do not turn
    nonzero = (np.linalg.norm(edges, axis=1) > 0) & (np.linalg.norm(previous, axis=1) > 0)
    signed_turns = np.arctan2(crosses, np.einsum("ij,ij->i", previous, edges))
    turning_number = int(round(float(signed_turns[nonzero].sum()) / (2.0 * math.pi)))

    simple = bool(points.shape[0] >= 3 and LinearRing(points).is_simple)
    return ConvexityReport(convex=convex, simple=simple, turning_number=turning_number)
