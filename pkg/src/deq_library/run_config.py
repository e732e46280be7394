# src/deq_library/run_config.py
"""
Centralized numeric defaults for the density-equalizing pipeline.

All values can be overridden via environment variables:
    DEQ_EPSILON - Stopping threshold on sd/mean of the face density (default: 1e-3)
    DEQ_MAX_ITERATIONS - Cap on diffusion iterations (default: 200)
    DEQ_SOLVER_TOL - Relative residual tolerance of linear solves (default: 1e-10)
    DEQ_SHRINK_RADIUS - Max radius of the land inside the unit disk (default: 0.7)
    DEQ_TRUNCATE_RADIUS - Radius beyond which the reflected sea is cut (default: 5)
    DEQ_COT_CLAMP - Bound on |cot| in the authalic matrix (default: 1e4)
    DEQ_LOG_DIR - Directory for deq.log / failures.log (default: unset, no file logs)
"""

import os
import logging
from typing import Optional

lib_logger = logging.getLogger("deq_library")


class RunDefaults:
    """
    Centralized numeric defaults.

    All values can be overridden via environment variables.
    """

    # Default values
    _EPSILON = 1e-3
    _MAX_ITERATIONS = 200
    _SOLVER_TOL = 1e-10
    _SHRINK_RADIUS = 0.7
    _TRUNCATE_RADIUS = 5.0
    _COT_CLAMP = 1e4

    @classmethod
    def _get_env_float(cls, key: str, default: float) -> float:
        """Get a float value from environment variable, or return default."""
        value = os.environ.get(key)
        if value is not None:
            try:
                return float(value)
            except ValueError:
                lib_logger.warning(
                    f"Invalid value for {key}: {value}. Using default: {default}"
                )
        return default

    @classmethod
    def _get_env_int(cls, key: str, default: int) -> int:
        """Get an int value from environment variable, or return default."""
        value = os.environ.get(key)
        if value is not None:
            try:
                return int(value)
            except ValueError:
                lib_logger.warning(
                    f"Invalid value for {key}: {value}. Using default: {default}"
                )
        return default

    @classmethod
    def epsilon(cls) -> float:
        """Stopping threshold on sd(rho_F)/mean(rho_F)."""
        return cls._get_env_float("DEQ_EPSILON", cls._EPSILON)

    @classmethod
    def max_iterations(cls) -> int:
        """Iteration cap of the diffusion loop."""
        return cls._get_env_int("DEQ_MAX_ITERATIONS", cls._MAX_ITERATIONS)

    @classmethod
    def solver_tol(cls) -> float:
        """Relative residual tolerance for sparse solves."""
        return cls._get_env_float("DEQ_SOLVER_TOL", cls._SOLVER_TOL)

    @classmethod
    def shrink_radius(cls) -> float:
        """Max vertex radius of the land after normalization into the unit disk."""
        return cls._get_env_float("DEQ_SHRINK_RADIUS", cls._SHRINK_RADIUS)

    @classmethod
    def truncate_radius(cls) -> float:
        """Radius beyond which reflected sea vertices are removed."""
        return cls._get_env_float("DEQ_TRUNCATE_RADIUS", cls._TRUNCATE_RADIUS)

    @classmethod
    def cot_clamp(cls) -> float:
        """Bound on |cot| used by the locally authalic matrix."""
        return cls._get_env_float("DEQ_COT_CLAMP", cls._COT_CLAMP)

    @classmethod
    def log_dir(cls) -> Optional[str]:
        """Directory for file logs, or None when file logging is off."""
        value = os.environ.get("DEQ_LOG_DIR")
        return value or None
