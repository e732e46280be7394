# src/deq_library/utils/paths.py
"""
Where runs put their side files.

Meshes, SVGs and reports go wherever the caller names them. Only the
`.env` file the CLI reads and the logs directory (`deq.log`,
`failures.log`) fall back to a default location: the executable's folder
for a frozen build, the working directory otherwise.
"""

import sys
from pathlib import Path
from typing import Optional, Union

PathLike = Union[Path, str]

ENV_FILENAME = ".env"
LOGS_DIRNAME = "logs"


def get_default_root() -> Path:
    """Folder that holds `.env` and `logs/` when no override is given."""
    if getattr(sys, "frozen", False):
        return Path(sys.executable).parent
    return Path.cwd()


def get_logs_dir(log_dir: Optional[PathLike] = None) -> Path:
    """
    Resolve and create the logs directory.

    An explicit `log_dir` (from --log-dir or DEQ_LOG_DIR) is used as given;
    otherwise `<root>/logs`.
    """
    logs_dir = Path(log_dir) if log_dir else get_default_root() / LOGS_DIRNAME
    logs_dir.mkdir(parents=True, exist_ok=True)
    return logs_dir


def get_env_file(root: Optional[PathLike] = None) -> Path:
    """Path of the `.env` file with DEQ_* overrides. It may not exist."""
    return (Path(root) if root else get_default_root()) / ENV_FILENAME
