# src/deq_library/sparse_linalg.py
"""
Sparse assembly and linear solvers.

Direct solves go through CHOLMOD when scikit-sparse is installed and SuperLU
otherwise; CG (Jacobi preconditioned) and BiCGSTAB are available on request.
Every solve checks its relative residual and reports it in a SolveReport.
Right-hand sides may carry several columns (x and y of a planar embedding
are solved together).
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .error_handler import (
    AssemblyError,
    ConfigurationError,
    ConvergenceError,
    NonSymmetricMatrixError,
    SingularMatrixError,
    SolverError,
)
from .run_config import RunDefaults

lib_logger = logging.getLogger("deq_library")

try:  # Optional sparse Cholesky (CHOLMOD)
    from sksparse import cholmod

    _has_cholmod = True
except ImportError:
    _has_cholmod = False

SPD_METHODS = ("auto", "cholesky", "lu", "cg")
GENERAL_METHODS = ("auto", "lu", "bicgstab")

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one (possibly multi-column) linear solve."""

    iterations: int
    residual: float
    method: str


# =============================================================================
# ASSEMBLY
# =============================================================================


def assemble_arrays(
    rows: np.ndarray,
    cols: np.ndarray,
    values: np.ndarray,
    shape: Tuple[int, int],
) -> sparse.csr_matrix:
    """
    Build a CSR matrix from coordinate arrays. Duplicate (row, col) pairs are
    summed; column indices are sorted within each row.

    Raises:
        AssemblyError: index out of range, mismatched lengths or non-finite values
    """
    rows = np.asarray(rows, dtype=np.int64).reshape(-1)
    cols = np.asarray(cols, dtype=np.int64).reshape(-1)
    values = np.asarray(values, dtype=float).reshape(-1)
    n_rows, n_cols = int(shape[0]), int(shape[1])

    if not (rows.shape == cols.shape == values.shape):
        raise AssemblyError(
            f"triplet arrays differ in length: {rows.shape[0]}, {cols.shape[0]}, "
            f"{values.shape[0]}"
        )
    if rows.size:
        bad = np.nonzero(
            (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
        )[0]
        if bad.size:
            k = int(bad[0])
            raise AssemblyError(
                f"index ({rows[k]}, {cols[k]}) out of range for a "
                f"{n_rows}x{n_cols} matrix"
            )
        if not np.all(np.isfinite(values)):
            raise AssemblyError("non-finite matrix entry")

    matrix = sparse.coo_matrix((values, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def assemble(
    triplets: Iterable[Tuple[int, int, float]], rows: int, cols: int
) -> sparse.csr_matrix:
    """Build a CSR matrix from (row, col, value) triplets, summing duplicates."""
    triplets = list(triplets)
    if not triplets:
        return sparse.csr_matrix((rows, cols))
    r, c, v = zip(*triplets)
    return assemble_arrays(np.array(r), np.array(c), np.array(v), (rows, cols))


def is_symmetric(A: sparse.spmatrix, rtol: float = SYMMETRY_RTOL) -> bool:
    """True if max|A - A^T| <= rtol * max|A|."""
    A = sparse.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        return False
    if A.nnz == 0:
        return True
    scale = float(abs(A).max())
    diff = A - A.T
    if diff.nnz == 0:
        return True
    return float(abs(diff).max()) <= rtol * scale


# =============================================================================
# SOLVERS
# =============================================================================


def _as_columns(A: sparse.spmatrix, b: np.ndarray) -> Tuple[np.ndarray, bool]:
    if A.shape[0] != A.shape[1]:
        raise SolverError(f"matrix must be square, got {A.shape}")
    b = np.asarray(b, dtype=float)
    was_vector = b.ndim == 1
    columns = b.reshape(-1, 1) if was_vector else b
    if columns.shape[0] != A.shape[0]:
        raise SolverError(
            f"right-hand side has {columns.shape[0]} rows for a {A.shape[0]}x"
            f"{A.shape[1]} matrix"
        )
    if not np.all(np.isfinite(columns)):
        raise SolverError("right-hand side contains non-finite values")
    return columns, was_vector


def relative_residual(A: sparse.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    """max over columns of ||Ax - b|| / ||b|| (absolute residual if b = 0)."""
    r = A @ x - b
    r_norm = np.linalg.norm(r.reshape(r.shape[0], -1), axis=0)
    b_norm = np.linalg.norm(b.reshape(b.shape[0], -1), axis=0)
    rel = np.where(b_norm > 0.0, r_norm / np.where(b_norm > 0.0, b_norm, 1.0), r_norm)
    return float(rel.max()) if rel.size else 0.0


def _factorize(A: sparse.spmatrix, method: str):
    """Return a callable solving A x = b for 1D or 2D b."""
    if method == "cholesky":
        try:
            factor = cholmod.cholesky(sparse.csc_matrix(A))
        except cholmod.CholmodNotPositiveDefiniteError as e:
            raise SingularMatrixError(f"matrix is not positive definite: {e}") from e
        return factor
    try:
        lu = spla.splu(sparse.csc_matrix(A))
    except RuntimeError as e:
        raise SingularMatrixError(f"LU factorization failed: {e}") from e
    return lu.solve


def _direct_solve(
    A: sparse.csr_matrix, b: np.ndarray, tol: float, method: str
) -> Tuple[np.ndarray, SolveReport]:
    solve = _factorize(A, method)
    x = np.asarray(solve(b)).reshape(b.shape)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError(f"{method} solve produced non-finite values")
    residual = relative_residual(A, x, b)
    iterations = 1
    if residual > tol:
        # One step of iterative refinement with the same factorization
        x = x + np.asarray(solve(b - A @ x)).reshape(b.shape)
        residual = relative_residual(A, x, b)
        iterations = 2
    if residual > tol:
        raise SolverError(
            f"{method} solve missed tolerance: residual {residual:.3e} > {tol:.1e}"
        )
    return x, SolveReport(iterations=iterations, residual=residual, method=method)


def _iterative_solve(
    A: sparse.csr_matrix,
    b: np.ndarray,
    tol: float,
    method: str,
    max_iter: Optional[int],
) -> Tuple[np.ndarray, SolveReport]:
    n = A.shape[0]
    max_iter = max_iter or 10 * n
    preconditioner = None
    if method == "cg":
        diagonal = A.diagonal()
        if np.any(diagonal <= 0.0):
            raise SolverError("CG requires a positive diagonal")
        preconditioner = sparse.diags(1.0 / diagonal)
    routine = spla.cg if method == "cg" else spla.bicgstab

    x = np.zeros_like(b)
    total_iterations = 0
    for k in range(b.shape[1]):
        count = [0]

        def _count(_xk, count=count):
            count[0] += 1

        column, info = routine(
            A, b[:, k], rtol=tol, maxiter=max_iter, M=preconditioner, callback=_count
        )
        if info > 0:
            raise ConvergenceError(
                f"{method} did not converge within {max_iter} iterations"
            )
        if info < 0:
            raise SolverError(f"{method} breakdown (info={info})")
        x[:, k] = column
        total_iterations += count[0]

    residual = relative_residual(A, x, b)
    if residual > tol * 10.0:
        raise ConvergenceError(
            f"{method} residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    return x, SolveReport(iterations=total_iterations, residual=residual, method=method)


def _pick_spd_method(method: str) -> str:
    if method not in SPD_METHODS:
        raise ConfigurationError(
            f"unknown SPD solve method '{method}' (use one of {', '.join(SPD_METHODS)})"
        )
    if method == "auto":
        return "cholesky" if _has_cholmod else "lu"
    if method == "cholesky" and not _has_cholmod:
        lib_logger.warning("scikit-sparse is not installed; using sparse LU instead")
        return "lu"
    return method


def solve_spd(
    A: sparse.spmatrix,
    b: np.ndarray,
    tol: Optional[float] = None,
    method: str = "auto",
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve a symmetric positive definite system.

    Args:
        A: SPD matrix (symmetry is verified to a relative 1e-12)
        b: Right-hand side, shape (n,) or (n, k)
        tol: Relative residual tolerance (default RunDefaults.solver_tol())
        method: "auto" (CHOLMOD if available, else LU), "cholesky", "lu" or "cg"
        max_iter: Iteration cap for "cg" (default 10 n)

    Returns:
        (x with the shape of b, SolveReport)

    Raises:
        NonSymmetricMatrixError: A is not symmetric
        SingularMatrixError: the factorization breaks down
        ConvergenceError: CG hits the iteration cap
        SolverError: the residual misses the tolerance
    """
    A = sparse.csr_matrix(A, dtype=float)
    columns, was_vector = _as_columns(A, b)
    if not is_symmetric(A):
        raise NonSymmetricMatrixError("solve_spd requires a symmetric matrix")
    tol = RunDefaults.solver_tol() if tol is None else tol
    method = _pick_spd_method(method)

    if method == "cg":
        x, report = _iterative_solve(A, columns, tol, method, max_iter)
    else:
        x, report = _direct_solve(A, columns, tol, method)
    return (x[:, 0] if was_vector else x), report


def solve_general(
    A: sparse.spmatrix,
    b: np.ndarray,
    tol: Optional[float] = None,
    method: str = "auto",
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve a square, possibly non-symmetric system with sparse LU (default) or
    BiCGSTAB. Same contract as solve_spd without the symmetry requirement.
    """
    A = sparse.csr_matrix(A, dtype=float)
    columns, was_vector = _as_columns(A, b)
    tol = RunDefaults.solver_tol() if tol is None else tol
    if method not in GENERAL_METHODS:
        raise ConfigurationError(
            f"unknown solve method '{method}' (use one of {', '.join(GENERAL_METHODS)})"
        )

    if method == "bicgstab":
        x, report = _iterative_solve(A, columns, tol, method, max_iter)
    else:
        x, report = _direct_solve(A, columns, tol, "lu")
    return (x[:, 0] if was_vector else x), report


def solve_dirichlet(
    A: sparse.spmatrix,
    fixed: Sequence[int],
    values: np.ndarray,
    spd: bool = True,
    rhs: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    method: str = "auto",
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve A x = rhs with x prescribed on the `fixed` rows.

    Fixed rows are removed and their columns moved to the right-hand side,
    so the prescribed values are met exactly.

    Args:
        A: Square system matrix over all unknowns
        fixed: Indices of the constrained unknowns
        values: Prescribed values, shape (len(fixed),) or (len(fixed), k)
        spd: Solve the reduced system with solve_spd (else solve_general)
        rhs: Right-hand side over all unknowns (default zero)

    Returns:
        (full solution, SolveReport of the reduced solve)
    """
    A = sparse.csr_matrix(A, dtype=float)
    n = A.shape[0]
    fixed = np.asarray(fixed, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    was_vector = values.ndim == 1
    values = values.reshape(fixed.shape[0], -1)

    if np.unique(fixed).size != fixed.size:
        raise SolverError("duplicate fixed indices")
    free_mask = np.ones(n, dtype=bool)
    free_mask[fixed] = False
    free = np.nonzero(free_mask)[0]

    x = np.zeros((n, values.shape[1]))
    x[fixed] = values
    if free.size == 0:
        report = SolveReport(iterations=0, residual=0.0, method="none")
    else:
        full_rhs = (
            np.zeros((n, values.shape[1]))
            if rhs is None
            else np.asarray(rhs, dtype=float).reshape(n, -1)
        )
        A_free = A[free]
        reduced_rhs = full_rhs[free] - A_free[:, fixed] @ values
        reduced = A_free[:, free]
        solver = solve_spd if spd else solve_general
        x[free], report = solver(reduced, reduced_rhs, tol=tol, method=method)
    return (x[:, 0] if was_vector else x), report
