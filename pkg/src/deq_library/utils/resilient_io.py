# src/deq_library/utils/resilient_io.py
"""
Resilient I/O utilities for writing pipeline artifacts.

Provides three patterns:
1. write_text_atomic - For primary artifacts (meshes, SVG drawings). Written
   through a temp file and moved into place; failures raise MeshWriteError so
   a half-written OBJ never lands on disk.
2. safe_write_json - For reports. Same atomic pattern; raises or returns False
   depending on `raise_on_failure`.
3. safe_mkdir - For log directories that can be skipped on failure.
"""

import json
import os
import tempfile
import logging
from pathlib import Path
from typing import Any, Dict, Union

from ..error_handler import MeshWriteError


def write_text_atomic(path: Union[str, Path], content: str) -> None:
    """
    Write text to `path` atomically with LF line endings.

    Args:
        path: Destination file
        content: Full file content

    Raises:
        MeshWriteError: if the directory is missing/unwritable or the move fails
    """
    path = Path(path)
    tmp_fd = None
    tmp_path = None
    try:
        tmp_fd, tmp_path = tempfile.mkstemp(
            dir=path.parent, prefix=".tmp_", suffix=path.suffix, text=False
        )
        with os.fdopen(tmp_fd, "wb") as f:
            tmp_fd = None  # fdopen owns the fd now
            f.write(content.encode("utf-8"))
        os.replace(tmp_path, path)
        tmp_path = None
    except (OSError, PermissionError, IOError) as e:
        raise MeshWriteError(str(path), str(e)) from e
    finally:
        # Cleanup on failure
        if tmp_fd is not None:
            try:
                os.close(tmp_fd)
            except OSError:
                pass
        if tmp_path and os.path.exists(tmp_path):
            try:
                os.unlink(tmp_path)
            except OSError:
                pass


def safe_write_json(
    path: Union[str, Path],
    data: Dict[str, Any],
    logger: logging.Logger,
    indent: int = 2,
    raise_on_failure: bool = True,
) -> bool:
    """
    Write JSON data to file atomically.

    Keys are emitted in insertion order so identical runs give byte-identical
    files.

    Args:
        path: File path to write to
        data: JSON-serializable data
        logger: Logger for warnings
        indent: JSON indentation level (default: 2)
        raise_on_failure: Raise MeshWriteError instead of returning False

    Returns:
        True on success, False on failure when raise_on_failure is False
    """
    try:
        content = json.dumps(data, indent=indent, allow_nan=False) + "\n"
        write_text_atomic(path, content)
        return True
    except (MeshWriteError, TypeError, ValueError) as e:
        if raise_on_failure:
            if isinstance(e, MeshWriteError):
                raise
            raise MeshWriteError(str(path), f"not serializable: {e}") from e
        logger.warning(f"Failed to write JSON to {path}: {e}")
        return False


def safe_mkdir(path: Union[str, Path], logger: logging.Logger) -> bool:
    """
    Create directory with error handling.

    Args:
        path: Directory path to create
        logger: Logger for warnings

    Returns:
        True on success (or already exists), False on failure
    """
    try:
        Path(path).mkdir(parents=True, exist_ok=True)
        return True
    except (OSError, PermissionError) as e:
        logger.warning(f"Failed to create directory {path}: {e}")
        return False
