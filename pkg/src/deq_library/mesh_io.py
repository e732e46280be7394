# src/deq_library/mesh_io.py
"""
OFF / OBJ readers and writers.

Readers keep the vertex and face order of the file. Writers emit LF line
endings and 17 significant digits, so a save/load round trip reproduces the
coordinates exactly. Planar maps are written with z = 0.
"""

import logging
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .error_handler import MeshParseError
from .mesh import PlanarMap, TriMesh
from .utils.resilient_io import write_text_atomic

lib_logger = logging.getLogger("deq_library")

SUPPORTED_FORMATS = ("off", "obj")

# OBJ statements that carry no geometry we need
_OBJ_IGNORED = frozenset(
    {"vn", "vt", "vp", "g", "o", "s", "l", "usemtl", "mtllib", "cstype", "deg"}
)


def _resolve_format(path: Path, fmt: Optional[str]) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in SUPPORTED_FORMATS:
        raise MeshParseError(
            str(path), None, f"unsupported mesh format '{fmt}' (use off or obj)"
        )
    return fmt


def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    """Yield (1-based line number, tokens) for every non-blank, non-comment line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_floats(path: str, lineno: int, tokens: List[str]) -> List[float]:
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise MeshParseError(path, lineno, f"expected numbers, got '{' '.join(tokens)}'")
    if not all(np.isfinite(values)):
        raise MeshParseError(path, lineno, "non-finite coordinate")
    return values


def _parse_off(path: str, text: str) -> Tuple[np.ndarray, np.ndarray]:
    lines = _content_lines(text)
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise MeshParseError(path, None, "empty file")

    if not tokens[0].upper().endswith("OFF"):
        raise MeshParseError(path, lineno, f"expected 'OFF' header, got '{tokens[0]}'")
    if tokens[0].upper() != "OFF":
        raise MeshParseError(path, lineno, f"unsupported OFF variant '{tokens[0]}'")

    # Counts may share the header line ("OFF 3 1 0")
    counts = tokens[1:]
    if not counts:
        try:
            lineno, counts = next(lines)
        except StopIteration:
            raise MeshParseError(path, None, "missing vertex/face counts")
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise MeshParseError(path, lineno, f"bad counts line '{' '.join(counts)}'")
    if n_vertices < 0 or n_faces < 0:
        raise MeshParseError(path, lineno, "negative vertex or face count")

    vertices = np.empty((n_vertices, 3))
    for i in range(n_vertices):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(
                path, None, f"expected {n_vertices} vertices, found {i}"
            )
        if len(tokens) < 3:
            raise MeshParseError(path, lineno, "vertex line needs 3 coordinates")
        vertices[i] = _parse_floats(path, lineno, tokens[:3])

    faces = np.empty((n_faces, 3), dtype=np.int64)
    for f in range(n_faces):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(path, None, f"expected {n_faces} faces, found {f}")
        try:
            corner_count = int(tokens[0])
            corners = [int(t) for t in tokens[1 : 1 + corner_count]]
        except ValueError:
            raise MeshParseError(path, lineno, f"bad face line '{' '.join(tokens)}'")
        if corner_count != 3 or len(corners) != 3:
            raise MeshParseError(
                path, lineno, f"only triangles are supported (got {corner_count} corners)"
            )
        if any(c < 0 or c >= n_vertices for c in corners):
            raise MeshParseError(path, lineno, f"face index out of range: {corners}")
        faces[f] = corners

    for lineno, _ in lines:
        lib_logger.warning(f"{path}:{lineno}: ignoring content after the last face")
        break
    return vertices, faces


def _obj_index(path: str, lineno: int, token: str, n_vertices: int) -> int:
    try:
        index = int(token.split("/", 1)[0])
    except ValueError:
        raise MeshParseError(path, lineno, f"bad face index '{token}'")
    if index == 0:
        raise MeshParseError(path, lineno, "OBJ indices are 1-based; got 0")
    # Negative indices count back from the last vertex read so far
    resolved = index - 1 if index > 0 else n_vertices + index
    if resolved < 0:
        raise MeshParseError(path, lineno, f"face index out of range: {index}")
    return resolved


def _parse_obj(path: str, text: str) -> Tuple[np.ndarray, np.ndarray]:
    vertices: List[List[float]] = []
    faces: List[List[int]] = []
    face_lines: List[int] = []
    for lineno, tokens in _content_lines(text):
        keyword = tokens[0]
        if keyword == "v":
            if len(tokens) < 4:
                raise MeshParseError(path, lineno, "vertex line needs 3 coordinates")
            vertices.append(_parse_floats(path, lineno, tokens[1:4]))
        elif keyword == "f":
            if len(tokens) != 4:
                raise MeshParseError(
                    path,
                    lineno,
                    f"only triangles are supported (got {len(tokens) - 1} corners)",
                )
            faces.append(
                [_obj_index(path, lineno, t, len(vertices)) for t in tokens[1:]]
            )
            face_lines.append(lineno)
        elif keyword not in _OBJ_IGNORED:
            lib_logger.debug(f"{path}:{lineno}: ignoring OBJ statement '{keyword}'")

    n_vertices = len(vertices)
    for corners, lineno in zip(faces, face_lines):
        if any(c >= n_vertices for c in corners):
            raise MeshParseError(path, lineno, f"face index out of range: {corners}")

    return (
        np.asarray(vertices, dtype=float).reshape(-1, 3),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
    )


def load_mesh(path: Union[str, Path], fmt: Optional[str] = None) -> TriMesh:
    """
    Read a triangle mesh from an OFF or OBJ file.

    Args:
        path: Mesh file
        fmt: "off" or "obj"; inferred from the suffix when omitted

    Returns:
        TriMesh with construction invariants checked

    Raises:
        MeshParseError: unreadable file or malformed content (with line number)
        DegenerateFaceError: repeated indices or zero-area faces
    """
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise MeshParseError(str(path), None, f"cannot read file: {e}") from e

    parser = _parse_off if fmt == "off" else _parse_obj
    vertices, faces = parser(str(path), text)
    mesh = TriMesh(vertices, faces)
    lib_logger.info(
        f"Loaded {path.name}: {mesh.n_vertices} vertices, {mesh.n_faces} faces"
    )
    return mesh


def _format_vertex_rows(mesh: Union[TriMesh, PlanarMap]) -> List[str]:
    if isinstance(mesh, PlanarMap):
        return [f"{x:.17g} {y:.17g} 0" for x, y in mesh.coords.tolist()]
    return [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices.tolist()]


def save_mesh(
    mesh: Union[TriMesh, PlanarMap],
    path: Union[str, Path],
    fmt: Optional[str] = None,
) -> None:
    """
    Write a mesh or planar map as OBJ (1-based) or OFF (0-based).

    Raises:
        MeshWriteError: if the destination cannot be written
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "obj").lower()
    if fmt not in SUPPORTED_FORMATS:
        fmt = "obj"

    rows = _format_vertex_rows(mesh)
    faces = mesh.faces.tolist()
    if fmt == "obj":
        lines = [f"v {row}" for row in rows]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    else:
        lines = ["OFF", f"{len(rows)} {len(faces)} 0"]
        lines += rows
        lines += [f"3 {a} {b} {c}" for a, b, c in faces]

    write_text_atomic(path, "\n".join(lines) + "\n")
    lib_logger.info(f"Wrote {fmt.upper()} mesh to {path}")
