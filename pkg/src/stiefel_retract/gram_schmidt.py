"""Gram-Schmidt orthonormalization onto the Stiefel manifold.

The central map sends an injective m x d matrix to the orthonormal frame
produced by Gram-Schmidt on its columns. Alongside the frame we extract the
unique upper-triangular coefficient matrix with positive diagonal that turns
the input columns into the frame (input @ coefficients = frame), which for
square inputs is the inverse of the R factor of the positive-diagonal QR
decomposition.

Two sweep variants are provided. Classical projects each column against the
original input columns; modified projects against the partially reduced
columns, which computes the same map in exact arithmetic but keeps
orthogonality down to far worse conditioning in floating point. Modified is
the default and, when a sweep leaves a measurable orthogonality defect, a
single reorthogonalization pass is applied (again the identity map in exact
arithmetic).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL_ORTHO,
    DEFAULT_TOL_RANK,
    InjectiveMap,
    StiefelFrame,
    UpperTriangularPositive,
    as_matrix,
    max_abs,
    orthonormality_defect,
    singular_values,
    tri_solve_inverse,
    validate_frame,
)
from .errors import (
    DimensionError,
    DomainError,
    NotOrthonormalError,
    NumericalRankLossError,
    RankDeficientError,
)


class Variant(enum.Enum):
    CLASSICAL = "classical"
    MODIFIED = "modified"


#: Orthogonality tolerance for frames produced by the classical sweep, which
#: loses orthogonality roughly like eps * condition^2.
CLASSICAL_TOL_ORTHO = 1e-6

#: Fraction of tol_ortho above which a modified sweep triggers one
#: reorthogonalization pass.
_REORTH_FACTOR = 0.5

#: Max-abs agreement demanded between the triangular-solve coefficients and
#: the inductive replay when debug mode is on.
_DEBUG_AGREEMENT = 1e-8

FAULT_ENV = "STIEFEL_RETRACT_FAULT"
_FAULT_MGS_SIGN = "mgs-sign"


def _mgs_sign() -> float:
    # Test hook: lets the self-test harness prove it detects a broken kernel.
    return -1.0 if os.environ.get(FAULT_ENV) == _FAULT_MGS_SIGN else 1.0


@dataclass(frozen=True)
class GramSchmidtResult:
    """Frame, coefficient matrix and sweep diagnostics bundled together.

    ``coefficient_matrix`` column i holds the expansion coefficients of frame
    column i in the input columns; its diagonal entries are the reciprocals
    of ``intermediate_norms``, the per-column norms seen just before
    normalization.
    """

    frame: StiefelFrame
    coefficient_matrix: UpperTriangularPositive
    intermediate_norms: np.ndarray
    variant_used: Variant


def _classical_sweep(a: np.ndarray, tol_rank: float, input_norms: np.ndarray):
    m, d = a.shape
    q = np.zeros((m, d), order="F")
    r = np.zeros((d, d))
    for i in range(d):
        v = a[:, i]
        h = q[:, :i].T @ v
        w = v - q[:, :i] @ h
        nrm = float(np.linalg.norm(w))
        if nrm < tol_rank * input_norms[i]:
            raise NumericalRankLossError(
                f"column {i} collapsed during classical sweep: "
                f"residual norm {nrm:.3e} below tol_rank * column norm"
            )
        r[:i, i] = h
        r[i, i] = nrm
        q[:, i] = w / nrm
    return q, r


def _modified_sweep(a: np.ndarray, tol_rank: float, input_norms: np.ndarray):
    d = a.shape[1]
    q = np.array(a, order="F", copy=True)
    r = np.zeros((d, d))
    sign = _mgs_sign()
    for i in range(d):
        nrm = float(np.linalg.norm(q[:, i]))
        if nrm < tol_rank * input_norms[i]:
            raise NumericalRankLossError(
                f"column {i} collapsed during modified sweep: "
                f"residual norm {nrm:.3e} below tol_rank * column norm"
            )
        r[i, i] = nrm
        q[:, i] /= nrm
        if i + 1 < d:
            coeff = q[:, i] @ q[:, i + 1 :]
            q[:, i + 1 :] -= sign * np.outer(q[:, i], coeff)
            r[i, i + 1 :] = coeff
    return q, r


def _factorize(a: np.ndarray, variant: Variant, tol_rank: float, tol_ortho: float):
    """Run one sweep (plus reorthogonalization for modified) and return
    ``(q, r_dense)`` with q orthonormal within tol_ortho and r upper
    triangular with positive diagonal."""
    input_norms = np.linalg.norm(a, axis=0)
    if variant is Variant.CLASSICAL:
        q, r = _classical_sweep(a, tol_rank, input_norms)
    elif variant is Variant.MODIFIED:
        q, r = _modified_sweep(a, tol_rank, input_norms)
        if orthonormality_defect(q) > _REORTH_FACTOR * tol_ortho:
            # Second pass on near-orthonormal columns restores orthogonality
            # to roundoff; fold its triangular factor into r.
            q, r2 = _modified_sweep(q, tol_rank, np.linalg.norm(q, axis=0))
            r = r2 @ r
    else:
        raise DomainError(f"unknown variant {variant!r}")
    return q, r


def orthonormalize(
    alpha: InjectiveMap,
    variant: Variant = Variant.MODIFIED,
    tol_rank: float = DEFAULT_TOL_RANK,
    tol_ortho: float | None = None,
    debug: bool = False,
) -> GramSchmidtResult:
    """Orthonormalize the columns of ``alpha`` and extract the coefficient
    matrix.

    The frame satisfies the inductive rule: the first column is the first
    input column normalized, and each later column is the input column minus
    its projections onto the previous frame columns, normalized. The
    coefficient matrix is computed as the back-substitution inverse of the
    triangular factor accumulated by the sweep, which is better conditioned
    than accumulating the inductive coefficient updates directly; ``debug``
    replays the inductive route and asserts agreement within 1e-8.

    Raises ``NumericalRankLossError`` when a column norm collapses below
    ``tol_rank`` times its input norm, or when the produced frame misses the
    orthogonality tolerance (classical sweeps default to a relaxed 1e-6).
    """
    if tol_ortho is None:
        tol_ortho = CLASSICAL_TOL_ORTHO if variant is Variant.CLASSICAL else DEFAULT_TOL_ORTHO
    a = alpha.matrix
    q, r = _factorize(a, variant, tol_rank, tol_ortho)
    r_tri = UpperTriangularPositive.from_dense(r)
    coeff = tri_solve_inverse(r_tri)
    try:
        frame = validate_frame(q, tol_ortho)
    except NotOrthonormalError as exc:
        raise NumericalRankLossError(
            f"orthonormalization lost orthogonality: defect {exc.deviation:.3e} "
            f"exceeds tol_ortho={tol_ortho:g} "
            f"(condition estimate {alpha.condition_estimate:.3e})"
        ) from exc
    if debug:
        replay = _inductive_coefficients(a)
        gap = max_abs(replay - coeff.to_dense())
        if gap > _DEBUG_AGREEMENT:
            raise AssertionError(
                f"inductive coefficient replay disagrees by {gap:.3e} "
                f"(> {_DEBUG_AGREEMENT:g})"
            )
    return GramSchmidtResult(
        frame=frame,
        coefficient_matrix=coeff,
        intermediate_norms=r_tri.diagonal(),
        variant_used=variant,
    )


def _inductive_coefficients(a: np.ndarray) -> np.ndarray:
    """Dense upper-triangular coefficients built by the inductive update.

    Column i is accumulated from the expansion of the projections in the
    previous columns' coefficients, then scaled by the residual norm. Used
    only as an independent cross-check of the triangular-solve route.
    """
    d = a.shape[1]
    lam = np.zeros((d, d))
    for i in range(d):
        lam_t = np.zeros(d)
        lam_t[i] = 1.0
        if i:
            prev = a @ lam[:, :i]
            proj = prev.T @ a[:, i]
            lam_t[:i] = -(lam[:i, :i] @ proj)
        residual = a @ lam_t
        lam[:, i] = lam_t / np.linalg.norm(residual)
    return lam


def retract(alpha: InjectiveMap, tol_rank: float = DEFAULT_TOL_RANK) -> StiefelFrame:
    """The Gram-Schmidt retraction: the orthonormal frame of ``alpha``."""
    return orthonormalize(alpha, Variant.MODIFIED, tol_rank).frame


def coefficient_matrix(
    alpha: InjectiveMap, tol_rank: float = DEFAULT_TOL_RANK
) -> UpperTriangularPositive:
    """The unique positive-diagonal upper-triangular matrix carrying
    ``alpha`` onto its frame (alpha @ result = frame)."""
    return orthonormalize(alpha, Variant.MODIFIED, tol_rank).coefficient_matrix


def qr_decompose(
    alpha: InjectiveMap, tol_rank: float = DEFAULT_TOL_RANK
) -> tuple[StiefelFrame, UpperTriangularPositive]:
    """Positive-diagonal QR decomposition of a square injective map.

    Q is the Gram-Schmidt frame (orthogonal, determinant +-1) and R is the
    inverse of the coefficient matrix, i.e. the triangular factor accumulated
    by the sweep, so Q @ R = alpha within roundoff and the positive diagonal
    makes the factorization unique.
    """
    m, d = alpha.matrix.shape
    if m != d:
        raise DimensionError("qr requires a square matrix")
    q, r = _factorize(alpha.matrix, Variant.MODIFIED, tol_rank, DEFAULT_TOL_ORTHO)
    try:
        frame = validate_frame(q, DEFAULT_TOL_ORTHO)
    except NotOrthonormalError as exc:
        raise NumericalRankLossError(
            f"qr lost orthogonality: defect {exc.deviation:.3e}"
        ) from exc
    return frame, UpperTriangularPositive.from_dense(r)


def householder_qr_oracle(
    a, tol_rank: float = DEFAULT_TOL_RANK
) -> tuple[StiefelFrame, UpperTriangularPositive]:
    """Householder-reflector QR with the diagonal of R flipped positive.

    Backed by LAPACK through numpy, so it shares no code with the sweeps
    above; by uniqueness of the positive-diagonal factorization it must
    reproduce :func:`qr_decompose` and is used to cross-validate it.
    """
    arr = as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    sv = singular_values(arr)
    if float(sv[-1]) <= tol_rank * float(sv[0]):
        raise RankDeficientError(
            f"matrix is numerically singular: singular-value ratio "
            f"{float(sv[-1]) / float(sv[0]) if sv[0] else 0.0:.3e}"
        )
    q, r = np.linalg.qr(arr)
    signs = np.where(np.diagonal(r) < 0.0, -1.0, 1.0)
    q = q * signs
    r = np.triu(r * signs[:, None])
    return validate_frame(q), UpperTriangularPositive.from_dense(r)
