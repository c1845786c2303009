"""Validated dense-matrix types and the elementary kernels every other module
consumes.

Matrices are float64 numpy arrays kept in column-major (Fortran) order, since
every algorithm here works column by column. All types are immutable after
validation: the wrapped arrays are marked read-only, so instances are safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    NonFiniteError,
    NotOrthonormalError,
    RankDeficientError,
)

DEFAULT_TOL_RANK = 1e-10
DEFAULT_TOL_ORTHO = 1e-10
DEFAULT_TOL_DET = 1e-10

#: Condition-estimate bound up to which the orthonormality and reconstruction
#: tolerances are guaranteed; beyond it results carry diagnostics instead.
GUARANTEE_CONDITION = 1e6


def as_matrix(raw) -> np.ndarray:
    """Coerce ``raw`` to a read-only column-major float matrix.

    Raises ``DimensionError`` for non-2d input or empty axes and
    ``NonFiniteError`` if any entry is NaN or infinite.
    """
    a = np.array(raw, dtype=float, order="F")
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got {a.ndim} dimensions")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix axes must be positive, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix contains NaN or infinite entries")
    a.setflags(write=False)
    return a


def max_abs(a: np.ndarray) -> float:
    """Largest entry in absolute value (0 for an empty array)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def orthonormality_defect(a: np.ndarray) -> float:
    """Max-abs deviation of ``a.T @ a`` from the identity."""
    return max_abs(a.T @ a - np.eye(a.shape[1]))


def singular_values(a: np.ndarray) -> np.ndarray:
    return np.linalg.svd(a, compute_uv=False)


@dataclass(frozen=True)
class InjectiveMap:
    """An m x d matrix with linearly independent columns.

    ``condition_estimate`` is the ratio of the largest to the smallest
    column-space singular value; it is diagnostic only.
    """

    matrix: np.ndarray
    condition_estimate: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class StiefelFrame:
    """An m x d matrix with orthonormal columns (a Stiefel-manifold point)."""

    matrix: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class Rotation:
    """An m x m special-orthogonal matrix."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@lru_cache(maxsize=None)
def _triangle_layout(dim: int):
    """Index arrays for the packed upper triangle of a dim x dim matrix.

    Returns ``(rows, cols, diag_positions)`` where positions follow row-major
    order within the triangle.
    """
    rows, cols = np.triu_indices(dim)
    diag = np.flatnonzero(rows == cols)
    for arr in (rows, cols, diag):
        arr.setflags(write=False)
    return rows, cols, diag


@dataclass(frozen=True)
class UpperTriangularPositive:
    """A d x d upper-triangular matrix with strictly positive diagonal.

    Only the upper triangle is stored, row-major within the triangle; the
    strict lower triangle is zero by construction and never materialized
    except through :meth:`to_dense`.
    """

    dim: int
    packed: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dim must be a positive integer")
        expected = self.dim * (self.dim + 1) // 2
        packed = np.asarray(self.packed, dtype=float)
        if packed.shape != (expected,):
            raise DimensionError(
                f"packed triangle for dim {self.dim} needs {expected} entries, "
                f"got shape {packed.shape}"
            )
        if not np.all(np.isfinite(packed)):
            raise NonFiniteError("triangle contains NaN or infinite entries")
        packed = packed.copy()
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)
        if not np.all(self.diagonal() > 0.0):
            raise DomainError("diagonal entries must be strictly positive")

    @classmethod
    def from_dense(cls, dense, *, lower_atol: float = 0.0) -> "UpperTriangularPositive":
        """Pack a dense upper-triangular matrix.

        Rejects matrices whose strict lower triangle exceeds ``lower_atol``
        in absolute value (the default demands exact zeros).
        """
        a = np.asarray(dense, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        dim = a.shape[0]
        lower = a[np.tril_indices(dim, k=-1)]
        if lower.size and np.max(np.abs(lower)) > lower_atol:
            raise DomainError("strict lower triangle is not zero")
        rows, cols, _ = _triangle_layout(dim)
        return cls(dim=dim, packed=a[rows, cols])

    def diagonal(self) -> np.ndarray:
        _, _, diag = _triangle_layout(self.dim)
        return self.packed[diag]

    def to_dense(self) -> np.ndarray:
        rows, cols, _ = _triangle_layout(self.dim)
        a = np.zeros((self.dim, self.dim))
        a[rows, cols] = self.packed
        return a


def validate_injective(raw, tol_rank: float = DEFAULT_TOL_RANK) -> InjectiveMap:
    """Validate an m x d matrix as an injective linear map.

    The columns count as linearly independent when the smallest singular
    value exceeds ``tol_rank`` times the largest.

    Raises ``DimensionError`` if d > m, ``RankDeficientError`` if the
    singular-value ratio is at or below ``tol_rank``, and ``NonFiniteError``
    for NaN/Inf entries.
    """
    if not 0.0 < tol_rank < 1.0:
        raise DomainError(f"tol_rank must lie in (0, 1), got {tol_rank}")
    a = as_matrix(raw)
    m, d = a.shape
    if d > m:
        raise DimensionError(f"need d <= m for an injective map, got {m}x{d}")
    sv = singular_values(a)
    largest, smallest = float(sv[0]), float(sv[-1])
    if smallest <= tol_rank * largest:
        raise RankDeficientError(
            f"columns are not independent at tol_rank={tol_rank:g}: "
            f"singular-value ratio {smallest / largest if largest else 0.0:.3e}"
        )
    return InjectiveMap(matrix=a, condition_estimate=largest / smallest)


def validate_frame(raw, tol_ortho: float = DEFAULT_TOL_ORTHO) -> StiefelFrame:
    """Validate an m x d matrix as an orthonormal frame.

    Raises ``NotOrthonormalError`` carrying the max-abs deviation of
    ``raw.T @ raw`` from the identity when it exceeds ``tol_ortho``.
    """
    a = as_matrix(raw)
    m, d = a.shape
    if d > m:
        raise DimensionError(f"need d <= m for a frame, got {m}x{d}")
    defect = orthonormality_defect(a)
    if defect > tol_ortho:
        raise NotOrthonormalError(
            f"columns deviate from orthonormality by {defect:.3e} "
            f"(tol_ortho={tol_ortho:g})",
            deviation=defect,
        )
    return StiefelFrame(matrix=a)


def validate_rotation(
    raw,
    tol_ortho: float = DEFAULT_TOL_ORTHO,
    tol_det: float = DEFAULT_TOL_DET,
) -> Rotation:
    """Validate a square matrix as special-orthogonal (orthogonal, det +1)."""
    a = as_matrix(raw)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"rotation must be square, got shape {a.shape}")
    defect = orthonormality_defect(a)
    if defect > tol_ortho:
        raise NotOrthonormalError(
            f"matrix deviates from orthogonality by {defect:.3e}", deviation=defect
        )
    det = float(np.linalg.det(a))
    if abs(det - 1.0) > tol_det:
        raise DomainError(f"determinant must be +1 within {tol_det:g}, got {det!r}")
    return Rotation(matrix=a)


def include_frame(frame: StiefelFrame) -> InjectiveMap:
    """View an orthonormal frame as an injective map.

    The underlying matrix is unchanged (shared, read-only) and the condition
    estimate is exactly 1.
    """
    return InjectiveMap(matrix=frame.matrix, condition_estimate=1.0)


def tri_solve_inverse(u: UpperTriangularPositive) -> UpperTriangularPositive:
    """Invert an upper-triangular positive-diagonal matrix by back
    substitution.

    The result's diagonal entries are the reciprocals of the input's, hence
    positive, and the product with the input is the identity within roundoff.
    """
    n = u.dim
    a = u.to_dense()
    x = np.eye(n)
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return UpperTriangularPositive.from_dense(x)
