# src/deq_app/population_io.py
"""
Readers for the per-face CSV inputs of the CLI.

    population  face_index,population   (0-based, header optional)
    regions     face_index,region_id
    rules       region_id,multiplier
"""

import csv
import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from deq_library.error_handler import PopulationFileError

lib_logger = logging.getLogger("deq_library")


def _rows(path: Path) -> Iterator[Tuple[int, List[str]]]:
    """Non-empty, non-comment rows with their 1-based line numbers."""
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise PopulationFileError(path, None, f"cannot open file: {e.strerror or e}") from e
    with handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            cells = [cell.strip() for cell in row]
            if not cells or not any(cells) or cells[0].startswith("#"):
                continue
            yield line_number, cells


def _is_header(cells: List[str]) -> bool:
    try:
        int(cells[0])
    except ValueError:
        return True
    return False


def _read_pairs(path: Union[str, Path], value_type: type) -> List[Tuple[int, int, object]]:
    """(line, key, value) triples of a two-column CSV; a leading text row is a header."""
    path = Path(path)
    pairs = []
    first = True
    for line_number, cells in _rows(path):
        if first and _is_header(cells):
            first = False
            continue
        first = False
        if len(cells) < 2:
            raise PopulationFileError(path, line_number, "expected two comma-separated columns")
        try:
            key = int(cells[0])
        except ValueError:
            raise PopulationFileError(path, line_number, f"'{cells[0]}' is not an integer index")
        try:
            value = value_type(cells[1])
        except ValueError:
            raise PopulationFileError(
                path, line_number, f"'{cells[1]}' is not a valid {value_type.__name__}"
            )
        pairs.append((line_number, key, value))
    return pairs


def _per_face(
    path: Path, pairs: List[Tuple[int, int, object]], n_faces: int, dtype
) -> np.ndarray:
    values = np.zeros(n_faces, dtype=dtype)
    seen = np.zeros(n_faces, dtype=bool)
    for line_number, face, value in pairs:
        if not 0 <= face < n_faces:
            raise PopulationFileError(
                path, line_number, f"face index {face} out of range for {n_faces} faces"
            )
        if seen[face]:
            raise PopulationFileError(path, line_number, f"face {face} listed twice")
        seen[face] = True
        values[face] = value
    missing = np.nonzero(~seen)[0]
    if missing.size:
        raise PopulationFileError(
            path,
            None,
            f"{len(pairs)} rows for {n_faces} faces; missing face {int(missing[0])}"
            + (f" and {missing.size - 1} more" if missing.size > 1 else ""),
        )
    return values


def read_population_csv(path: Union[str, Path], n_faces: int) -> np.ndarray:
    """
    Per-face population from `face_index,population` rows.

    Raises:
        PopulationFileError: unreadable file, bad row, index out of range,
            duplicate or missing face, or a value that is not strictly positive
    """
    path = Path(path)
    pairs = _read_pairs(path, float)
    for line_number, _, value in pairs:
        if not (np.isfinite(value) and value > 0.0):
            raise PopulationFileError(
                path, line_number, f"population must be positive, got {value}"
            )
    population = _per_face(path, pairs, n_faces, float)
    lib_logger.info(f"Read population for {n_faces} faces from '{path}'")
    return population


def read_region_csv(path: Union[str, Path], n_faces: int) -> np.ndarray:
    """Per-face integer region labels from `face_index,region_id` rows."""
    path = Path(path)
    return _per_face(path, _read_pairs(path, int), n_faces, np.int64)


def read_rules_csv(path: Union[str, Path]) -> Tuple[Tuple[int, float], ...]:
    """
    `region_id,multiplier` rules.

    Raises:
        PopulationFileError: bad row, repeated region, or a multiplier that
            is not strictly positive
    """
    path = Path(path)
    rules = []
    seen = set()
    for line_number, region, multiplier in _read_pairs(path, float):
        if not (np.isfinite(multiplier) and multiplier > 0.0):
            raise PopulationFileError(
                path, line_number, f"multiplier must be positive, got {multiplier}"
            )
        if region in seen:
            raise PopulationFileError(path, line_number, f"region {region} listed twice")
        seen.add(region)
        rules.append((region, float(multiplier)))
    if not rules:
        raise PopulationFileError(path, None, "no rules found")
    return tuple(rules)
