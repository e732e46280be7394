# src/deq_app/svg_writer.py
"""
SVG rendering of planar maps.

Land faces are filled from a diverging color ramp centred on 1 (log scale),
so faces denser than average and faces sparser than average read as
opposite hues. The viewBox bounds the land layer; an optional sea layer is
drawn underneath in a flat color.
"""

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import svgwrite
from matplotlib import colormaps, colors

from deq_library.error_handler import ConfigurationError
from deq_library.mesh import PlanarMap
from deq_library.utils.resilient_io import write_text_atomic

lib_logger = logging.getLogger("deq_library")

COLORMAP = "RdBu_r"
SEA_FILL = "#dfe8f0"
CANVAS_WIDTH = 800
# Smallest half-range of the log ramp, so a uniform field still maps to the centre color
MIN_LOG_SPAN = 1e-6

Polygon = List[Tuple[float, float]]


@dataclass(frozen=True)
class SvgScene:
    """
    Everything write_svg draws.

    Attributes:
        land: one polygon per land face, in map coordinates
        fills: hex fill color per land polygon
        sea: sea polygons (empty when the sea is not drawn)
        stroke_width: edge width in map units; 0 draws no edges
        value_range: (min, max) of the colored field, shown in the legend
        label: legend caption
    """

    land: Tuple[Polygon, ...]
    fills: Tuple[str, ...]
    sea: Tuple[Polygon, ...] = ()
    stroke_width: float = 0.0
    value_range: Tuple[float, float] = (1.0, 1.0)
    label: str = "density"

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        points = np.asarray([p for polygon in self.land for p in polygon])
        xmin, ymin = points.min(axis=0)
        xmax, ymax = points.max(axis=0)
        return float(xmin), float(ymin), float(xmax), float(ymax)


def ramp_colors(values: Sequence[float]) -> Tuple[Tuple[str, ...], float]:
    """
    Hex colors of strictly positive `values` on the diverging ramp.

    Returns:
        (colors, half-range of log(value) mapped onto the ramp)
    """
    logs = np.log(np.asarray(values, dtype=float))
    span = max(float(np.abs(logs).max()) if logs.size else 0.0, MIN_LOG_SPAN)
    cmap = colormaps[COLORMAP]
    positions = 0.5 + 0.5 * logs / span
    return tuple(colors.to_hex(cmap(float(t))) for t in positions), span


def _polygons(coords: np.ndarray, faces: np.ndarray) -> Tuple[Polygon, ...]:
    # SVG y grows downwards
    corners = coords[faces]
    return tuple(
        [(round(float(x), 6), round(float(-y), 6)) for x, y in triangle]
        for triangle in corners
    )


def build_scene(
    planar_map: PlanarMap,
    values: Sequence[float],
    include_sea: bool = False,
    stroke: bool = True,
    label: str = "density",
) -> SvgScene:
    """
    Scene for `planar_map` with one value per land face.

    Raises:
        ConfigurationError: no land faces, or a value count that does not match
    """
    land = planar_map.faces[planar_map.land_mask]
    if land.shape[0] == 0:
        raise ConfigurationError("nothing to draw: the map has no land faces")
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != land.shape[0]:
        raise ConfigurationError(
            f"{values.shape[0]} values for {land.shape[0]} land faces"
        )
    if not np.all(np.isfinite(values) & (values > 0.0)):
        raise ConfigurationError("colored values must be finite and positive")

    fills, _ = ramp_colors(values)
    land_polygons = _polygons(planar_map.coords, land)
    sea_polygons: Tuple[Polygon, ...] = ()
    if include_sea:
        sea_polygons = _polygons(planar_map.coords, planar_map.faces[~planar_map.land_mask])

    stroke_width = 0.0
    if stroke:
        edges = planar_map.coords[land[:, 1]] - planar_map.coords[land[:, 0]]
        stroke_width = 0.05 * float(np.median(np.linalg.norm(edges, axis=1)))
    return SvgScene(
        land=land_polygons,
        fills=fills,
        sea=sea_polygons,
        stroke_width=stroke_width,
        value_range=(float(values.min()), float(values.max())),
        label=label,
    )


def _legend(dwg: svgwrite.Drawing, scene: SvgScene, bounds):
    xmin, ymin, xmax, ymax = bounds
    size = 0.04 * max(xmax - xmin, ymax - ymin)
    low, high = scene.value_range
    low_fill, high_fill = ramp_colors([low, high])[0]
    group = dwg.g(id="legend", font_size=f"{0.8 * size:.6g}", font_family="sans-serif")
    for row, (value, fill) in enumerate(((low, low_fill), (high, high_fill))):
        y = ymin + row * 1.3 * size
        group.add(
            dwg.rect(insert=(xmin, y), size=(size, size), fill=fill, stroke="none")
        )
        group.add(
            dwg.text(
                f"{'min' if row == 0 else 'max'} {scene.label} {value:.4g}",
                insert=(xmin + 1.3 * size, y + 0.85 * size),
                fill="black",
            )
        )
    return group


def render_svg(scene: SvgScene) -> str:
    """SVG 1.1 document text for `scene`."""
    xmin, ymin, xmax, ymax = scene.bounds
    width = max(xmax - xmin, 1e-12)
    height = max(ymax - ymin, 1e-12)
    dwg = svgwrite.Drawing(
        size=(CANVAS_WIDTH, max(1, int(math.ceil(CANVAS_WIDTH * height / width)))),
        profile="full",
    )
    dwg.viewbox(xmin, ymin, width, height)

    if scene.sea:
        sea = dwg.add(dwg.g(id="sea", fill=SEA_FILL, stroke="none"))
        for polygon in scene.sea:
            sea.add(dwg.polygon(polygon))

    if scene.stroke_width > 0.0:
        land = dwg.add(
            dwg.g(id="land", stroke="black", stroke_width=f"{scene.stroke_width:.6g}")
        )
    else:
        land = dwg.add(dwg.g(id="land", stroke="none"))
    for polygon, fill in zip(scene.land, scene.fills):
        if scene.stroke_width > 0.0:
            land.add(dwg.polygon(polygon, fill=fill))
        else:
            land.add(dwg.polygon(polygon, fill=fill, stroke="none"))

    dwg.add(_legend(dwg, scene, (xmin, ymin, xmax, ymax)))
    buffer = io.StringIO()
    dwg.write(buffer, pretty=True)
    return buffer.getvalue()


def write_svg(
    planar_map: PlanarMap,
    values: Sequence[float],
    path: Union[str, Path],
    include_sea: bool = False,
    stroke: bool = True,
    label: str = "density",
) -> SvgScene:
    """
    Render `planar_map` colored by one positive value per land face.

    Raises:
        ConfigurationError: empty land or mismatched values
        MeshWriteError: the file cannot be written
    """
    scene = build_scene(planar_map, values, include_sea, stroke, label)
    write_text_atomic(path, render_svg(scene))
    lib_logger.info(
        f"Wrote SVG with {len(scene.land)} land faces"
        + (f" and {len(scene.sea)} sea faces" if scene.sea else "")
        + f" to {path}"
    )
    return scene
