import json

import numpy as np
import pytest

from stiefel_retract import (
    DomainError,
    NonFiniteError,
    Spacing,
    ZeroVectorError,
    coefficient_matrix,
    homotopy_step,
    include_frame,
    interpolant,
    retract,
    sphere_interpolant,
    trace_path,
    validate_frame,
    validate_injective,
)
from stiefel_retract.core import max_abs
from stiefel_retract.homotopy import (
    parse_path_csv,
    parse_path_json_obj,
    path_to_csv,
    path_to_json_obj,
)
from stiefel_retract.sampling import generate_injective, random_dims

HAND_INPUT = np.array([[2.0, 1.0], [0.0, 3.0]])


class TestInterpolant:
    def test_t_zero_is_identity(self):
        alpha = validate_injective(HAND_INPUT)
        assert np.array_equal(interpolant(alpha, 0.0).to_dense(), np.eye(2))

    def test_t_one_is_coefficient_matrix(self):
        alpha = validate_injective(HAND_INPUT)
        assert np.array_equal(
            interpolant(alpha, 1.0).packed, coefficient_matrix(alpha).packed
        )

    def test_hand_midpoint(self):
        alpha = validate_injective(HAND_INPUT)
        expected = np.array([[0.75, -1.0 / 12.0], [0.0, 2.0 / 3.0]])
        assert max_abs(interpolant(alpha, 0.5).to_dense() - expected) <= 1e-15

    @pytest.mark.parametrize("t", [-0.1, 1.1, np.nan, 2.0])
    def test_out_of_interval_rejected(self, t):
        alpha = validate_injective(HAND_INPUT)
        with pytest.raises(DomainError):
            interpolant(alpha, t)

    def test_linearity_in_t(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            m, d = random_dims(rng, 16)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            coeff = coefficient_matrix(alpha)
            eye_packed = interpolant(alpha, 0.0).packed
            for t in (0.25, float(rng.uniform(0, 1)), 0.75):
                lhs = (1.0 - t) * eye_packed + t * coeff.packed
                rhs = interpolant(alpha, t).packed
                assert max_abs(lhs - rhs) <= 4e-16 * max(1.0, max_abs(coeff.packed))

    def test_diagonal_stays_positive(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            m, d = random_dims(rng, 24)
            alpha, _ = generate_injective(rng, m, d)
            for t in np.linspace(0.0, 1.0, 11):
                assert np.all(interpolant(alpha, float(t)).diagonal() > 0.0)


class TestHomotopyStep:
    def test_t_zero_returns_source_object(self):
        alpha = validate_injective(HAND_INPUT)
        out = homotopy_step(alpha, 0.0)
        assert out is alpha
        assert np.array_equal(out.matrix, alpha.matrix)

    def test_hand_case_lands_on_identity(self):
        alpha = validate_injective(HAND_INPUT)
        assert max_abs(homotopy_step(alpha, 1.0).matrix - np.eye(2)) <= 1e-14

    def test_single_column_midpoint(self):
        alpha = validate_injective(np.array([[3.0], [4.0]]))
        moved = homotopy_step(alpha, 0.5)
        # scalar interpolant is (1 - 0.5) + 0.5 / 5 = 0.6
        assert max_abs(moved.matrix - np.array([[1.8], [2.4]])) <= 1e-15
        assert abs(np.linalg.norm(moved.matrix) - 3.0) <= 1e-15

    def test_t_one_matches_retract(self):
        rng = np.random.default_rng(25)
        for _ in range(10):
            m, d = random_dims(rng, 32)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            assert max_abs(homotopy_step(alpha, 1.0).matrix - retract(alpha).matrix) <= 1e-10

    @pytest.mark.parametrize("t", [-1e-9, 1.0000001])
    def test_out_of_interval_rejected(self, t):
        with pytest.raises(DomainError):
            homotopy_step(validate_injective(HAND_INPUT), t)


class TestSphereInterpolant:
    def test_unit_vector_fixed(self):
        v = np.array([0.6, 0.8])
        for t in (0.0, 0.3, 1.0):
            assert np.array_equal(sphere_interpolant(v, t), v)

    def test_normalization_endpoint(self):
        out = sphere_interpolant(np.array([3.0, 4.0]), 1.0)
        assert max_abs(out - np.array([0.6, 0.8])) <= 1e-15

    def test_midpoint(self):
        out = sphere_interpolant(np.array([3.0, 4.0]), 0.5)
        assert max_abs(out - np.array([1.8, 2.4])) <= 1e-15

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            sphere_interpolant(np.zeros(3), 0.5)

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteError):
            sphere_interpolant(np.array([np.nan, 1.0]), 0.5)

    def test_out_of_interval_rejected(self):
        with pytest.raises(DomainError):
            sphere_interpolant(np.array([1.0, 2.0]), 1.5)

    def test_matches_homotopy_on_columns(self):
        rng = np.random.default_rng(27)
        for _ in range(50):
            m = int(rng.integers(1, 65))
            v = rng.uniform(-1.0, 1.0, size=m)
            if np.linalg.norm(v) <= 1e-10:
                continue
            t = float(rng.uniform(0.0, 1.0))
            embedded = validate_injective(v[:, None])
            assert (
                max_abs(sphere_interpolant(v, t) - homotopy_step(embedded, t).matrix[:, 0])
                <= 1e-12
            )


class TestTracePath:
    def test_orthonormal_source_is_constant(self):
        frame = validate_frame(np.eye(4)[:, :2])
        path = trace_path(include_frame(frame), 3)
        assert len(path.samples) == 3
        for sample in path.samples:
            assert max_abs(sample.point.matrix - frame.matrix) <= 1e-12
            assert sample.ortho_defect <= 1e-12

    def test_hand_case_two_samples(self):
        path = trace_path(validate_injective(HAND_INPUT), 2)
        assert [s.t for s in path.samples] == [0.0, 1.0]
        assert np.array_equal(path.samples[0].point.matrix, HAND_INPUT)
        assert max_abs(path.samples[1].point.matrix - np.eye(2)) <= 1e-14

    def test_seeded_four_by_two(self):
        alpha, _ = generate_injective(np.random.default_rng(7), 4, 2)
        path = trace_path(alpha, 11)
        ts = [s.t for s in path.samples]
        assert ts[0] == 0.0 and ts[-1] == 1.0
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert all(s.min_interpolant_diag > 0.0 for s in path.samples)
        assert path.samples[-1].ortho_defect <= 1e-10

    def test_revalidation_along_dense_grid(self):
        rng = np.random.default_rng(29)
        for _ in range(5):
            m, d = random_dims(rng, 32)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            trace_path(alpha, 101)  # every sample revalidates

    def test_too_few_samples_rejected(self):
        with pytest.raises(DomainError):
            trace_path(validate_injective(HAND_INPUT), 1)

    def test_spacing_enum(self):
        path = trace_path(validate_injective(HAND_INPUT), 2, spacing=Spacing.UNIFORM)
        assert len(path.samples) == 2


class TestContinuity:
    def test_steps_bounded_by_coefficient_gap(self):
        rng = np.random.default_rng(31)
        h = 1e-3
        for _ in range(10):
            m, d = random_dims(rng, 24)
            alpha, _ = generate_injective(rng, m, d, max_condition=1e6)
            coeff = coefficient_matrix(alpha)
            bound = 2.0 * max_abs(alpha.matrix) * max_abs(coeff.to_dense() - np.eye(d))
            for t in np.linspace(0.0, 1.0 - h, 6):
                diff = max_abs(
                    homotopy_step(alpha, float(t) + h).matrix
                    - homotopy_step(alpha, float(t)).matrix
                )
                assert diff <= bound * h


class TestPathSerialization:
    def test_csv_round_trip_exact(self):
        alpha, _ = generate_injective(np.random.default_rng(7), 4, 2)
        path = trace_path(alpha, 5)
        rows = parse_path_csv(path_to_csv(path))
        assert len(rows) == 5
        for row, sample in zip(rows, path.samples):
            assert row["t"] == sample.t
            assert np.array_equal(row["point"], sample.point.matrix)
            assert row["min_diag"] == sample.min_interpolant_diag
            assert row["ortho_defect"] == sample.ortho_defect

    def test_json_round_trip_exact(self):
        alpha, _ = generate_injective(np.random.default_rng(9), 3, 3)
        path = trace_path(alpha, 4)
        rows = parse_path_json_obj(json.loads(json.dumps(path_to_json_obj(path))))
        for row, sample in zip(rows, path.samples):
            assert row["t"] == sample.t
            assert np.array_equal(row["point"], sample.point.matrix)

    def test_csv_header_layout(self):
        path = trace_path(validate_injective(HAND_INPUT), 2)
        header = path_to_csv(path).splitlines()[0]
        assert header == "t,entry_0_0,entry_0_1,entry_1_0,entry_1_1,min_diag,ortho_defect"
