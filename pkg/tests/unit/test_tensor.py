import numpy as np
import pytest

from imputation.errors import DimensionError, ModeError
from imputation.tensor import (
    TensorSeries,
    kron_loadings,
    mode_product,
    multi_mode_product,
    refold,
    series_mode_product,
    unfold,
    unfold_series,
    vectorize,
)

pytestmark = pytest.mark.unit


class TestUnfold:
    def test_mode_one_of_matrix_is_identity(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(unfold(x, 0), x)

    def test_matches_fibre_enumeration(self):
        x = np.arange(24, dtype=float).reshape(2, 3, 4)
        expected = np.zeros((3, 8))
        for i1 in range(2):
            for i2 in range(3):
                for i3 in range(4):
                    expected[i2, i1 + 2 * i3] = x[i1, i2, i3]
        np.testing.assert_array_equal(unfold(x, 1), expected)

    def test_refold_of_enumerated_matrix(self):
        x = np.arange(24, dtype=float).reshape(2, 3, 4)
        m = np.zeros((3, 8))
        for i1 in range(2):
            for i2 in range(3):
                for i3 in range(4):
                    m[i2, i1 + 2 * i3] = x[i1, i2, i3]
        np.testing.assert_array_equal(refold(m, 1, (2, 3, 4)), x)

    @pytest.mark.parametrize("dims", [(5,), (3, 4), (2, 3, 4), (2, 3, 2, 3)])
    def test_roundtrip_is_exact(self, rng, dims):
        x = rng.standard_normal(dims)
        for k in range(len(dims)):
            np.testing.assert_array_equal(refold(unfold(x, k), k, dims), x)

    def test_row_vector_refold(self):
        m = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(refold(m, 0, (1, 3)), m)

    def test_mode_out_of_range(self):
        with pytest.raises(ModeError):
            unfold(np.zeros((2, 2)), 2)

    def test_refold_shape_mismatch(self):
        with pytest.raises(DimensionError):
            refold(np.zeros((3, 7)), 1, (2, 3, 4))


class TestModeProduct:
    def test_identity(self, rng):
        x = rng.standard_normal((2, 3, 4))
        np.testing.assert_allclose(mode_product(x, np.eye(3), 1), x, rtol=0, atol=0)

    def test_scalar_tensor(self):
        np.testing.assert_array_equal(mode_product(np.array([3.0]), np.array([[2.0]]), 0), [6.0])

    def test_unfolding_definition(self, rng):
        x = rng.standard_normal((2, 3, 4))
        a = rng.standard_normal((5, 4))
        result = mode_product(x, a, 2)
        assert result.shape == (2, 3, 5)
        np.testing.assert_allclose(unfold(result, 2), a @ unfold(x, 2), rtol=1e-12, atol=1e-12)

    def test_distinct_modes_commute(self, rng):
        x = rng.standard_normal((3, 4, 5))
        a = rng.standard_normal((2, 3))
        b = rng.standard_normal((6, 5))
        left = mode_product(mode_product(x, a, 0), b, 2)
        right = mode_product(mode_product(x, b, 2), a, 0)
        np.testing.assert_allclose(left, right, rtol=1e-12, atol=1e-12)

    def test_kronecker_vectorization_identity(self, rng):
        core = rng.standard_normal((2, 3, 2))
        mats = [rng.standard_normal((4, 2)), rng.standard_normal((3, 3)), rng.standard_normal((5, 2))]
        lhs = vectorize(multi_mode_product(core, mats))
        rhs = kron_loadings(mats) @ vectorize(core)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)

    def test_unfolding_kronecker_identity(self, rng):
        core = rng.standard_normal((2, 3, 2))
        mats = [rng.standard_normal((4, 2)), rng.standard_normal((3, 3)), rng.standard_normal((5, 2))]
        x = multi_mode_product(core, mats)
        expected = mats[1] @ unfold(core, 1) @ np.kron(mats[2], mats[0]).T
        np.testing.assert_allclose(unfold(x, 1), expected, rtol=1e-10, atol=1e-10)

    def test_inner_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mode_product(np.zeros((2, 3)), np.zeros((4, 2)), 1)


class TestVectorize:
    def test_column_major_layout(self):
        x = np.array([[1.0, 3.0], [2.0, 4.0]])
        np.testing.assert_array_equal(vectorize(x), [1.0, 2.0, 3.0, 4.0])

    def test_first_entry(self, rng):
        x = rng.standard_normal((3, 2, 4))
        assert vectorize(x)[0] == x[0, 0, 0]


class TestSeriesHelpers:
    def test_unfold_series_matches_per_slice_unfold(self, rng):
        x = rng.standard_normal((4, 2, 3, 2))
        stacked = unfold_series(x, 1)
        for t in range(4):
            np.testing.assert_array_equal(stacked[t], unfold(x[t], 1))

    def test_series_mode_product_matches_per_slice(self, rng):
        x = rng.standard_normal((3, 2, 4))
        a = rng.standard_normal((5, 4))
        out = series_mode_product(x, a, 1)
        for t in range(3):
            np.testing.assert_allclose(out[t], mode_product(x[t], a, 1), rtol=1e-12, atol=1e-12)


class TestTensorSeries:
    def test_nan_marks_missing_by_default(self):
        values = np.array([[[1.0, np.nan]], [[3.0, 4.0]]])
        series = TensorSeries.from_arrays(values)
        assert series.T == 2
        assert series.dims == (1, 2)
        np.testing.assert_array_equal(series.mask, ~np.isnan(values))

    def test_explicit_mask_sets_sentinel(self):
        series = TensorSeries.from_arrays(np.ones((2, 2)), np.array([[True, False], [True, True]]))
        assert np.isnan(series.values[0, 1])
        assert series.zero_filled[0, 1] == 0.0

    def test_arrays_are_read_only(self):
        series = TensorSeries.complete(np.ones((2, 2)))
        with pytest.raises(ValueError):
            series.values[0, 0] = 2.0

    def test_mask_shape_mismatch(self):
        with pytest.raises(DimensionError):
            TensorSeries.from_arrays(np.ones((2, 2)), np.ones((2, 3), dtype=bool))

    def test_non_finite_observed_value(self):
        with pytest.raises(DimensionError):
            TensorSeries.from_arrays(np.array([[np.inf, 1.0]]), np.ones((1, 2), dtype=bool))

    def test_observed_mean_and_centering(self):
        values = np.array([[[1.0, np.nan]], [[3.0, 5.0]]])
        series = TensorSeries.from_arrays(values)
        centered, means = series.centered()
        np.testing.assert_array_equal(means, [[2.0, 5.0]])
        np.testing.assert_array_equal(centered.zero_filled, [[[-1.0, 0.0]], [[1.0, 0.0]]])
        np.testing.assert_array_equal(centered.mask, series.mask)

    def test_fully_observed(self):
        assert TensorSeries.complete(np.zeros((3, 2))).fully_observed
        assert not TensorSeries.from_arrays(np.array([[np.nan, 1.0]])).fully_observed
