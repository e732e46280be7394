# src/deq_library/utils/__init__.py

from .paths import get_default_root, get_env_file, get_logs_dir
from .resilient_io import (
    write_text_atomic,
    safe_write_json,
    safe_mkdir,
)

__all__ = [
    "get_default_root",
    "get_logs_dir",
    "get_env_file",
    "write_text_atomic",
    "safe_write_json",
    "safe_mkdir",
]
