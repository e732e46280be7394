import logging
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence

if TYPE_CHECKING:
    from .diffusion import DiffusionReport

lib_logger = logging.getLogger("deq_library")


def _preview_indices(indices: Iterable[int], limit: int = 10) -> str:
    """Render at most `limit` indices, with a count of the remainder."""
    items = [int(i) for i in indices]
    head = ", ".join(str(i) for i in items[:limit])
    if len(items) > limit:
        return f"{head}, ... (+{len(items) - limit} more)"
    return head


class DeqError(Exception):
    """Base class for every error raised by the density-equalizing map library."""

    pass


class MeshParseError(DeqError):
    """
    Raised when a mesh file cannot be parsed.

    Attributes:
        path: The file being read
        line: 1-based line number of the offending line (None if not line-specific)
        message: Human-readable description of the problem
    """

    def __init__(self, path: str, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        self.message = message
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class MeshWriteError(DeqError):
    """Raised when a mesh, report or drawing cannot be written to disk."""

    def __init__(self, path: str, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"Cannot write '{self.path}': {reason}")


class DegenerateFaceError(DeqError):
    """
    Raised when one or more triangles have (near) zero area, a repeated vertex,
    or an out-of-range index.

    Attributes:
        faces: Indices of the offending faces
    """

    def __init__(self, faces: Sequence[int], message: str = "degenerate faces"):
        self.faces: List[int] = [int(f) for f in faces]
        self.message = message
        super().__init__(f"{message}: {_preview_indices(self.faces)}")


class TopologyError(DeqError):
    """Raised when a mesh is not a topological disk where one is required."""

    pass


class AssemblyError(DeqError, ValueError):
    """Raised when sparse matrix assembly receives invalid triplets."""

    pass


class SolverError(DeqError):
    """Raised when a linear solve fails or misses its residual tolerance."""

    pass


class NonSymmetricMatrixError(SolverError):
    """Raised when an SPD solve is requested for a non-symmetric matrix."""

    pass


class SingularMatrixError(SolverError):
    """Raised when a factorization detects a singular matrix."""

    pass


class ConvergenceError(SolverError):
    """Raised when an iterative solver exhausts its iteration cap."""

    pass


class IllConditionedCornerError(DeqError):
    """
    Raised when a boundary vertex folds back onto itself (turning angle of pi),
    which leaves the discrete curvature undefined.
    """

    def __init__(self, vertices: Sequence[int]):
        self.vertices = [int(v) for v in vertices]
        super().__init__(
            f"Boundary folds back on itself at vertices: {_preview_indices(self.vertices)}"
        )


class ZeroCurvatureError(DeqError):
    """Raised when a boundary loop has no total curvature to redistribute."""

    pass


class FlippedFaceError(DeqError):
    """
    Raised when an embedding that must be bijective contains flipped faces.

    Attributes:
        faces: Indices of faces with non-positive signed area
    """

    def __init__(self, faces: Sequence[int], message: str = "flipped faces"):
        self.faces = [int(f) for f in faces]
        super().__init__(f"{message}: {_preview_indices(self.faces)}")


class ConfigurationError(DeqError, ValueError):
    """Raised for invalid configuration values (radii, spacings, modes)."""

    pass


class TriangulationError(DeqError):
    """Raised when the constrained Delaunay triangulation of the gap fails."""

    pass


class DensityError(DeqError):
    """Raised when a density or population is non-positive or non-finite."""

    pass


class PopulationFileError(DeqError):
    """
    Raised for malformed population, region or rule CSV files.

    Attributes:
        path: The CSV file
        line: 1-based line number (None when the problem is file-wide)
    """

    def __init__(self, path: str, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        self.message = message
        where = f"{self.path}, line {line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class NonConvergenceError(DeqError):
    """
    Raised by callers that demand convergence when the diffusion loop hits its
    iteration cap. The partial report is attached.
    """

    def __init__(self, report: "DiffusionReport"):
        self.report = report
        super().__init__(
            f"Diffusion did not converge after {report.iterations} iterations "
            f"(last sd/mean = {report.trace[-1] if report.trace else float('nan'):.3e})"
        )


# =============================================================================
# ERROR CLASSIFICATION FOR CLI EXIT CODES
# =============================================================================

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NON_CONVERGENCE = 2

# Errors that stem from the input or the flags rather than from the numerics
VALIDATION_ERROR_TYPES = frozenset(
    {
        "mesh_parse",
        "mesh_write",
        "degenerate_face",
        "topology",
        "configuration",
        "population_file",
        "density",
        "io",
    }
)


class ClassifiedError:
    """A structured representation of a classified pipeline error."""

    def __init__(self, error_type: str, original_exception: Exception, exit_code: int):
        self.error_type = error_type
        self.original_exception = original_exception
        self.exit_code = exit_code

    def __str__(self):
        return (
            f"ClassifiedError(type={self.error_type}, exit_code={self.exit_code}, "
            f"original_exc={self.original_exception})"
        )


_ERROR_TYPES = (
    (NonConvergenceError, "non_convergence"),
    (MeshParseError, "mesh_parse"),
    (MeshWriteError, "mesh_write"),
    (DegenerateFaceError, "degenerate_face"),
    (TopologyError, "topology"),
    (ConfigurationError, "configuration"),
    (PopulationFileError, "population_file"),
    (DensityError, "density"),
    (FlippedFaceError, "flipped_face"),
    (IllConditionedCornerError, "boundary_curve"),
    (ZeroCurvatureError, "boundary_curve"),
    (TriangulationError, "triangulation"),
    (SolverError, "solver"),
    (AssemblyError, "assembly"),
    (OSError, "io"),
)


def classify_error(e: Exception) -> ClassifiedError:
    """
    Classify an exception raised by the pipeline and pick the CLI exit code.

    Non-convergence maps to exit code 2; everything else (bad input, bad flags,
    numerical failures) maps to 1.
    """
    for exc_type, error_type in _ERROR_TYPES:
        if isinstance(e, exc_type):
            exit_code = (
                EXIT_NON_CONVERGENCE
                if error_type == "non_convergence"
                else EXIT_VALIDATION
            )
            return ClassifiedError(error_type, e, exit_code)
    return ClassifiedError("unknown", e, EXIT_VALIDATION)


def is_validation_error(classified_error: ClassifiedError) -> bool:
    """Check if an error was caused by the input rather than by the numerics."""
    return classified_error.error_type in VALIDATION_ERROR_TYPES
