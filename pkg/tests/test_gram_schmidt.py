import numpy as np
import pytest

from stiefel_retract import (
    DimensionError,
    NumericalRankLossError,
    RankDeficientError,
    Variant,
    coefficient_matrix,
    householder_qr_oracle,
    include_frame,
    orthonormalize,
    qr_decompose,
    retract,
    validate_injective,
)
from stiefel_retract.core import max_abs, orthonormality_defect
from stiefel_retract.gram_schmidt import FAULT_ENV, _inductive_coefficients
from stiefel_retract.sampling import (
    conditioned_injective,
    generate_injective,
    random_dims,
)

HAND_INPUT = np.array([[2.0, 1.0], [0.0, 3.0]])
HAND_COEFF = np.array([[0.5, -1.0 / 6.0], [0.0, 1.0 / 3.0]])


@pytest.fixture(params=[Variant.CLASSICAL, Variant.MODIFIED])
def variant(request):
    return request.param


class TestOrthonormalize:
    def test_standard_basis_columns_fixed(self, variant):
        alpha = validate_injective(np.eye(5)[:, :3])
        res = orthonormalize(alpha, variant)
        assert np.array_equal(res.frame.matrix, alpha.matrix)
        assert np.array_equal(res.coefficient_matrix.to_dense(), np.eye(3))
        assert res.variant_used is variant

    def test_hand_case(self, variant):
        alpha = validate_injective(HAND_INPUT)
        res = orthonormalize(alpha, variant, debug=True)
        assert max_abs(res.frame.matrix - np.eye(2)) <= 1e-14
        assert max_abs(res.coefficient_matrix.to_dense() - HAND_COEFF) <= 1e-14
        # reconstruction: input @ coefficients lands on the frame
        assert max_abs(HAND_INPUT @ res.coefficient_matrix.to_dense() - np.eye(2)) <= 1e-14
        assert np.array_equal(res.intermediate_norms, [2.0, 3.0])

    def test_single_column(self, variant):
        alpha = validate_injective(np.array([[3.0], [4.0]]))
        res = orthonormalize(alpha, variant)
        assert np.array_equal(res.frame.matrix, np.array([[0.6], [0.8]]))
        assert np.array_equal(res.coefficient_matrix.to_dense(), [[0.2]])
        assert np.array_equal(res.intermediate_norms, [5.0])

    def test_one_by_one_is_reciprocal_norm(self, variant):
        res = orthonormalize(validate_injective([[2.0]]), variant)
        assert np.array_equal(res.coefficient_matrix.to_dense(), [[0.5]])

    def test_diagonal_reciprocal_invariant(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m, d = random_dims(rng, 24)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            res = orthonormalize(alpha)
            rel = np.abs(
                res.coefficient_matrix.diagonal() * res.intermediate_norms - 1.0
            )
            assert rel.max() <= 1e-12

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            m, d = random_dims(rng, 48)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            res = orthonormalize(alpha)
            assert orthonormality_defect(res.frame.matrix) <= 1e-10
            assert (
                max_abs(alpha.matrix @ res.coefficient_matrix.to_dense() - res.frame.matrix)
                <= 1e-10
            )

    def test_variants_agree_on_tame_inputs(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            m, d = random_dims(rng, 24)
            alpha = conditioned_injective(rng, m, d, 10.0 ** rng.uniform(0, 4))
            classical = orthonormalize(alpha, Variant.CLASSICAL)
            modified = orthonormalize(alpha, Variant.MODIFIED)
            assert max_abs(classical.frame.matrix - modified.frame.matrix) <= 1e-8

    def test_inductive_replay_matches_triangular_route(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m, d = random_dims(rng, 12)
            alpha = conditioned_injective(rng, m, d, 10.0 ** rng.uniform(0, 3))
            res = orthonormalize(alpha)
            replay = _inductive_coefficients(alpha.matrix)
            assert max_abs(replay - res.coefficient_matrix.to_dense()) <= 1e-8

    def test_rank_collapse_raises(self):
        # Passes a loose validation but collapses at the sweep's tolerance.
        raw = np.array([[1.0, 1.0], [0.0, 1e-12]])
        alpha = validate_injective(raw, tol_rank=1e-14)
        with pytest.raises(NumericalRankLossError):
            orthonormalize(alpha, tol_rank=1e-10)

    def test_fault_hook_breaks_orthogonality(self, monkeypatch):
        monkeypatch.setenv(FAULT_ENV, "mgs-sign")
        alpha = validate_injective(np.array([[2.0, 1.0], [0.0, 3.0]]))
        with pytest.raises(NumericalRankLossError):
            orthonormalize(alpha)


class TestRetract:
    def test_frame_is_fixed_point(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            m, d = random_dims(rng, 24)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            frame = retract(alpha)
            again = retract(include_frame(frame))
            assert max_abs(again.matrix - frame.matrix) <= 1e-10

    def test_single_column(self):
        assert np.array_equal(
            retract(validate_injective([[3.0], [4.0]])).matrix, [[0.6], [0.8]]
        )

    def test_positive_column_scaling_ignored(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            m, d = random_dims(rng, 16)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e4)
            frame = retract(alpha)
            scales = 10.0 ** rng.uniform(-1, 1, size=d)
            scaled = validate_injective(frame.matrix * scales)
            assert max_abs(retract(scaled).matrix - frame.matrix) <= 1e-14

    def test_right_triangular_scaling_ignored(self):
        from stiefel_retract import UpperTriangularPositive

        rng = np.random.default_rng(14)
        for _ in range(10):
            m, d = random_dims(rng, 16)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e4)
            dense = np.triu(rng.uniform(-0.5, 0.5, size=(d, d)), k=1)
            dense[np.diag_indices(d)] = 10.0 ** rng.uniform(-1, 1, size=d)
            t = UpperTriangularPositive.from_dense(dense)
            scaled = validate_injective(alpha.matrix @ t.to_dense())
            assert max_abs(retract(scaled).matrix - retract(alpha).matrix) <= 1e-9


class TestCoefficientMatrix:
    def test_orthonormal_input_gives_identity(self):
        alpha = validate_injective(np.eye(4)[:, :2])
        assert np.array_equal(coefficient_matrix(alpha).to_dense(), np.eye(2))

    def test_hand_case(self):
        coeff = coefficient_matrix(validate_injective(HAND_INPUT))
        assert max_abs(coeff.to_dense() - HAND_COEFF) <= 1e-14

    def test_positive_diagonal(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            m, d = random_dims(rng, 24)
            alpha, _ = generate_injective(rng, m, d)
            assert np.all(coefficient_matrix(alpha).diagonal() > 0.0)


class TestQrDecompose:
    def test_identity(self):
        q, r = qr_decompose(validate_injective(np.eye(3)))
        assert np.array_equal(q.matrix, np.eye(3))
        assert np.array_equal(r.to_dense(), np.eye(3))

    def test_hand_case(self):
        q, r = qr_decompose(validate_injective(HAND_INPUT))
        assert max_abs(q.matrix - np.eye(2)) <= 1e-14
        assert max_abs(r.to_dense() - HAND_INPUT) <= 1e-14

    def test_random_eight_by_eight(self):
        rng = np.random.default_rng(42)
        alpha = validate_injective(rng.standard_normal((8, 8)))
        q, r = qr_decompose(alpha)
        assert max_abs(q.matrix @ r.to_dense() - alpha.matrix) <= 1e-10
        assert orthonormality_defect(q.matrix) <= 1e-10
        qh, rh = householder_qr_oracle(alpha.matrix)
        assert max_abs(q.matrix - qh.matrix) <= 1e-9
        assert max_abs(r.packed - rh.packed) <= 1e-9

    def test_rectangular_rejected(self):
        with pytest.raises(DimensionError, match="square"):
            qr_decompose(validate_injective(np.eye(3)[:, :2]))

    def test_agrees_with_oracle_across_sizes(self):
        rng = np.random.default_rng(18)
        for _ in range(15):
            m = int(rng.integers(1, 33))
            alpha, _ = generate_injective(rng, m, m)
            q, r = qr_decompose(alpha)
            qh, rh = householder_qr_oracle(alpha.matrix)
            assert max_abs(q.matrix - qh.matrix) <= 1e-9
            assert max_abs(r.packed - rh.packed) <= 1e-9


class TestHouseholderOracle:
    def test_identity(self):
        q, r = householder_qr_oracle(np.eye(4))
        assert np.array_equal(q.matrix, np.eye(4))
        assert np.array_equal(r.to_dense(), np.eye(4))

    def test_hand_case(self):
        q, r = householder_qr_oracle(HAND_INPUT)
        assert max_abs(q.matrix - np.eye(2)) <= 1e-15
        assert max_abs(r.to_dense() - HAND_INPUT) <= 1e-15

    def test_permutation(self):
        perm = np.array([[0.0, 1.0], [1.0, 0.0]])
        q, r = householder_qr_oracle(perm)
        assert np.array_equal(q.matrix, perm)
        assert np.array_equal(r.to_dense(), np.eye(2))
        assert np.all(r.diagonal() > 0.0)

    def test_singular_rejected(self):
        with pytest.raises(RankDeficientError):
            householder_qr_oracle(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_rectangular_rejected(self):
        with pytest.raises(DimensionError):
            householder_qr_oracle(np.eye(3)[:, :2])
