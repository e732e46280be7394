# src/deq_library/failure_logger.py
import logging
import json
from logging.handlers import RotatingFileHandler
from pathlib import Path
from datetime import datetime, timezone
from typing import Any, Dict, Optional, Union

from .error_handler import classify_error, is_validation_error
from .utils.paths import get_logs_dir


class JsonFormatter(logging.Formatter):
    """Formats a dict message as one JSON line."""

    def format(self, record):
        return json.dumps(record.msg, default=str)


# Module-level state for lazy initialization
_failure_logger: Optional[logging.Logger] = None
_configured_logs_dir: Optional[Path] = None


def configure_failure_logger(logs_dir: Optional[Union[Path, str]] = None) -> None:
    """
    Configure the failure logger to use a specific logs directory.

    Call this before first use to override the default location. The logger
    is rebuilt on next use.
    """
    global _configured_logs_dir, _failure_logger
    _configured_logs_dir = Path(logs_dir) if logs_dir else None
    _failure_logger = None


def _setup_failure_logger(logs_dir: Path) -> logging.Logger:
    logger = logging.getLogger("deq_failures")
    logger.setLevel(logging.INFO)
    logger.propagate = False

    # Clear existing handlers to prevent duplicates on re-setup
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    try:
        logs_dir.mkdir(parents=True, exist_ok=True)
        handler = RotatingFileHandler(
            logs_dir / "failures.log",
            maxBytes=5 * 1024 * 1024,  # 5 MB
            backupCount=2,
        )
        handler.setFormatter(JsonFormatter())
        logger.addHandler(handler)
    except (OSError, PermissionError, IOError) as e:
        logging.warning(f"Cannot create failure log file handler: {e}")
        logger.addHandler(logging.NullHandler())

    return logger


def get_failure_logger() -> logging.Logger:
    """Get the failure logger, initializing it lazily if needed."""
    global _failure_logger, _configured_logs_dir

    if _failure_logger is None:
        logs_dir = _configured_logs_dir if _configured_logs_dir else get_logs_dir()
        _failure_logger = _setup_failure_logger(logs_dir)

    return _failure_logger


main_lib_logger = logging.getLogger("deq_library")


def _error_chain(error: Exception, limit: int = 5) -> list:
    chain = []
    visited = set()
    current = error
    while current is not None and id(current) not in visited:
        visited.add(id(current))
        chain.append({"type": type(current).__name__, "message": str(current)[:2000]})
        if len(chain) > limit:
            break
        current = current.__cause__ or current.__context__
    return chain


def build_failure_record(
    error: Exception, context: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """The JSON record written to failures.log for `error`."""
    classified = classify_error(error)
    chain = _error_chain(error)
    record: Dict[str, Any] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "error_type": type(error).__name__,
        "classification": classified.error_type,
        "exit_code": classified.exit_code,
        "input_error": is_validation_error(classified),
        "error_message": str(error)[:5000],
        "context": dict(context or {}),
        "error_chain": chain if len(chain) > 1 else None,
    }
    # Index lists carried by the structured exceptions
    for attribute in ("faces", "vertices"):
        values = getattr(error, attribute, None)
        if isinstance(values, list):
            record[attribute] = values[:100]
    report = getattr(error, "report", None)
    if report is not None and hasattr(report, "to_dict"):
        record["report"] = report.to_dict()
    return record


def log_failure(error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
    """
    Log a detailed failure record to failures.log and a one-line summary to
    the main library logger.

    Args:
        error: The exception that ended the run
        context: Run details (command, input path, flags) stored with the record
    """
    record = build_failure_record(error, context)
    try:
        get_failure_logger().error(record)
    except (OSError, IOError) as e:
        logging.warning(f"Failed to write to failures.log: {e}")

    main_lib_logger.error(
        f"Run failed ({record['classification']}): {type(error).__name__}: "
        f"{str(error)[:300]}. See failures.log for details."
    )
