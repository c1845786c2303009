"""Left rotation action on injective maps and numerical equivariance checks.

Rotating the input commutes with the retraction (frames rotate along) while
the coefficient matrix and the triangular interpolant are invariant, so the
whole homotopy is equivariant. ``check_equivariance`` measures all three
defects on a concrete input/rotation pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL_ORTHO,
    DEFAULT_TOL_RANK,
    InjectiveMap,
    Rotation,
    StiefelFrame,
    max_abs,
    validate_frame,
    validate_injective,
    validate_rotation,
)
from .errors import DimensionError, DomainError, RankDeficientError
from .gram_schmidt import Variant, orthonormalize, qr_decompose
from .homotopy import _step

DEFAULT_T_SAMPLES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class EquivarianceReport:
    frame_defect: float
    coefficient_defect: float
    homotopy_defects: tuple[tuple[float, float], ...]
    passed: bool


def random_rotation(m: int, seed: int) -> Rotation:
    """Haar-distributed rotation: QR of a seeded Gaussian matrix (positive
    diagonal by construction), with the last column negated if the
    determinant comes out -1. Deterministic given the seed."""
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    rng = np.random.default_rng(seed)
    while True:
        gauss = rng.standard_normal((m, m))
        try:
            alpha = validate_injective(gauss)
        except RankDeficientError:
            continue
        break
    q, _ = qr_decompose(alpha)
    mat = np.array(q.matrix)
    if np.linalg.det(mat) < 0.0:
        mat[:, -1] = -mat[:, -1]
    return validate_rotation(mat)


def act(
    o: Rotation, alpha: InjectiveMap, tol_rank: float = DEFAULT_TOL_RANK
) -> InjectiveMap:
    """Left-multiply by the rotation and revalidate (full rank is preserved
    since rotations are invertible)."""
    if o.dim != alpha.matrix.shape[0]:
        raise DimensionError(
            f"rotation is {o.dim}x{o.dim} but map has {alpha.matrix.shape[0]} rows"
        )
    return validate_injective(o.matrix @ alpha.matrix, tol_rank)


def act_on_frame(
    o: Rotation, frame: StiefelFrame, tol_ortho: float = DEFAULT_TOL_ORTHO
) -> StiefelFrame:
    """Left-multiply a frame by a rotation; the result is again a frame."""
    if o.dim != frame.matrix.shape[0]:
        raise DimensionError(
            f"rotation is {o.dim}x{o.dim} but frame has {frame.matrix.shape[0]} rows"
        )
    return validate_frame(o.matrix @ frame.matrix, tol_ortho)


def check_equivariance(
    alpha: InjectiveMap,
    o: Rotation,
    t_samples=DEFAULT_T_SAMPLES,
    tolerance: float = 1e-9,
    tol_rank: float = DEFAULT_TOL_RANK,
) -> EquivarianceReport:
    """Measure how far rotation and retraction are from commuting.

    frame defect: retract(o @ alpha) vs o @ retract(alpha);
    coefficient defect: the coefficient matrices of both (invariant);
    homotopy defects: the same comparison at each requested time.
    ``passed`` is true when every defect is at most ``tolerance``.
    """
    ts = [float(t) for t in t_samples]
    if not ts:
        raise DomainError("t_samples must be nonempty")
    for t in ts:
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t_samples must lie in [0, 1], got {t!r}")
    if tolerance <= 0.0:
        raise DomainError(f"tolerance must be positive, got {tolerance}")
    rotated = act(o, alpha, tol_rank)
    base = orthonormalize(alpha, Variant.MODIFIED, tol_rank)
    moved = orthonormalize(rotated, Variant.MODIFIED, tol_rank)
    frame_defect = max_abs(moved.frame.matrix - o.matrix @ base.frame.matrix)
    coefficient_defect = max_abs(
        moved.coefficient_matrix.packed - base.coefficient_matrix.packed
    )
    homotopy_defects = []
    for t in ts:
        left = _step(rotated, moved.coefficient_matrix, t, tol_rank)
        right = _step(alpha, base.coefficient_matrix, t, tol_rank)
        homotopy_defects.append(
            (t, max_abs(left.matrix - o.matrix @ right.matrix))
        )
    defects = [frame_defect, coefficient_defect] + [d for _, d in homotopy_defects]
    return EquivarianceReport(
        frame_defect=frame_defect,
        coefficient_defect=coefficient_defect,
        homotopy_defects=tuple(homotopy_defects),
        passed=all(d <= tolerance for d in defects),
    )


def report_to_json_obj(report: EquivarianceReport) -> dict:
    return {
        "frame_defect": report.frame_defect,
        "coefficient_defect": report.coefficient_defect,
        "homotopy_defects": [[t, d] for t, d in report.homotopy_defects],
        "passed": report.passed,
    }
