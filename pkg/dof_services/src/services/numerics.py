"""
Tolerance-aware dense complex linear algebra.

Every rank and null-space decision in the package goes through the SVD
helpers in this module so that one relative threshold governs all of
them. Nothing here draws random numbers.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from ..exceptions import InvalidInputError, InvalidParameterError

DEFAULT_RELATIVE_EPSILON = 1e-9


@dataclass(frozen=True)
class RankTolerance:
    """Relative singular-value cutoff, scaled by sigma_max and max(rows, cols)."""
    relative_epsilon: float = DEFAULT_RELATIVE_EPSILON

    def __post_init__(self):
        if not 0.0 < self.relative_epsilon < 1.0:
            raise InvalidParameterError(
                f"relative_epsilon must lie in (0, 1), got {self.relative_epsilon}"
            )

    def threshold(self, singular_values: np.ndarray, shape: Tuple[int, int]) -> float:
        if singular_values.size == 0:
            return 0.0
        return self.relative_epsilon * float(singular_values[0]) * max(shape)


DEFAULT_TOLERANCE = RankTolerance()


def as_complex_matrix(A) -> np.ndarray:
    """Validate and coerce to a 2-D complex128 array with finite entries."""
    matrix = np.asarray(A, dtype=np.complex128)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got {matrix.ndim} dimensions")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("matrix contains non-finite entries")
    return matrix


def _svd(A: np.ndarray, full: bool):
    return linalg.svd(A, full_matrices=full, lapack_driver="gesdd", check_finite=False)


def _significant(singular_values: np.ndarray, shape: Tuple[int, int], tol: RankTolerance) -> int:
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > tol.threshold(singular_values, shape)))


def numerical_rank(A, tol: RankTolerance = DEFAULT_TOLERANCE) -> int:
    """
    Count singular values above ``tol.relative_epsilon * sigma_max * max(rows, cols)``.

    Empty matrices have rank zero.
    """
    matrix = as_complex_matrix(A)
    if matrix.size == 0:
        return 0
    singular_values = linalg.svdvals(matrix, check_finite=False)
    return _significant(singular_values, matrix.shape, tol)


def null_space_basis(A, tol: RankTolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """
    Orthonormal basis of the right null space of `A`.

    Parameters
    ----------
    A : array_like
        Complex matrix of shape (m, n). A matrix with no rows has the whole
        space as null space.
    tol : RankTolerance
        Cutoff shared with `numerical_rank`.

    Returns
    -------
    np.ndarray
        Matrix of shape (n, n - rank(A)) with orthonormal columns. A full
        column rank input yields a 0-column result.
    """
    matrix = as_complex_matrix(A)
    rows, cols = matrix.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if rows == 0:
        return np.eye(cols, dtype=np.complex128)
    _, singular_values, vh = _svd(matrix, full=True)
    rank = _significant(singular_values, matrix.shape, tol)
    return np.ascontiguousarray(vh[rank:].conj().T)


def left_null_space_basis(A, tol: RankTolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Orthonormal rows V spanning {v : v A = 0}; shape (rows(A) - rank(A), rows(A))."""
    matrix = as_complex_matrix(A)
    rows, cols = matrix.shape
    if rows == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if cols == 0:
        return np.eye(rows, dtype=np.complex128)
    u, singular_values, _ = _svd(matrix, full=True)
    rank = _significant(singular_values, matrix.shape, tol)
    return np.ascontiguousarray(u[:, rank:].conj().T)


def kronecker(A, B) -> np.ndarray:
    return np.kron(as_complex_matrix(A), as_complex_matrix(B))


def vectorize(A) -> np.ndarray:
    """Stack the columns of `A` into one column (column-major vec)."""
    matrix = as_complex_matrix(A)
    return matrix.reshape(-1, 1, order="F")


def unvectorize(v, rows: int, cols: int) -> np.ndarray:
    column = as_complex_matrix(v)
    if column.size != rows * cols:
        raise InvalidInputError(
            f"cannot reshape {column.size} entries into a {rows}x{cols} matrix"
        )
    return column.reshape(rows, cols, order="F")


def orthonormal_rows(A) -> bool:
    matrix = as_complex_matrix(A)
    gram = matrix @ matrix.conj().T
    return bool(np.allclose(gram, np.eye(matrix.shape[0]), atol=1e-10))


def spectral_norm(A) -> float:
    matrix = as_complex_matrix(A)
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


def relative_residual(terms, scale: float = 0.0) -> float:
    """||sum(terms)||_F / max(sum(||term||_F), scale), with 0/0 taken as 0.

    `scale` is a floor for the denominator: with a single term the plain
    ratio is 1 for any nonzero leftover, however small.
    """
    terms = list(terms)
    if not terms:
        return 0.0
    denominator = max(float(sum(np.linalg.norm(term) for term in terms)), float(scale))
    if denominator == 0.0:
        return 0.0
    return float(np.linalg.norm(sum(terms))) / denominator
