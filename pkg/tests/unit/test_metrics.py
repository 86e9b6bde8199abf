import numpy as np
import pytest

from grading.metrics import EntrySelection, col_space_distance, q_rse, quantile_cuts, relative_mse
from imputation.errors import DimensionError, InputError, NumericalError

from .conftest import orthonormal


@pytest.mark.unit
class TestEntrySelection:
    def test_roles_partition_entries(self, rng):
        observed = rng.random((4, 3, 2)) > 0.4
        obs = EntrySelection.from_observed(observed, "observed")
        mis = EntrySelection.from_observed(observed, "missing")
        every = EntrySelection.from_observed(observed, "all")

        assert not (obs.mask & mis.mask).any()
        np.testing.assert_array_equal(obs.mask | mis.mask, every.mask)
        assert obs.size + mis.size == every.size == 24

    def test_indices(self):
        observed = np.array([[True, False], [False, False]])
        np.testing.assert_array_equal(EntrySelection.from_observed(observed, "observed").indices(), [[0, 0]])

    def test_unknown_role(self):
        with pytest.raises(InputError):
            EntrySelection.from_observed(np.ones(3, dtype=bool), "some")


@pytest.mark.unit
class TestColSpaceDistance:
    def test_identical(self, rng):
        q = rng.standard_normal((6, 2))
        assert col_space_distance(q, q) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_lines(self):
        assert col_space_distance(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == pytest.approx(1.0)

    def test_rotation_and_scale_invariant(self, rng):
        q = rng.standard_normal((8, 3))
        rotated = q @ orthonormal(rng, 3, 3) * 5.0
        assert col_space_distance(q, rotated) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self, rng):
        a, b = rng.standard_normal((7, 2)), rng.standard_normal((7, 2))
        assert col_space_distance(a, b) == pytest.approx(col_space_distance(b, a), abs=1e-12)

    def test_rank_deficient(self):
        with pytest.raises(DimensionError):
            col_space_distance(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))

    def test_row_mismatch(self):
        with pytest.raises(DimensionError):
            col_space_distance(np.ones((3, 1)), np.ones((4, 1)))


@pytest.mark.unit
class TestRelativeMSE:
    def test_exact_fit(self):
        assert relative_mse(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_zero_fit(self, rng):
        truth = rng.standard_normal(10)
        assert relative_mse(np.zeros(10), truth) == pytest.approx(1.0)

    def test_hand_case(self):
        assert relative_mse(np.array([1.0, 1.0, 2.0]), np.array([1.0, 2.0, 2.0])) == pytest.approx(1 / 9)

    def test_selection(self):
        truth = np.array([[1.0, 2.0], [2.0, 5.0]])
        fitted = np.array([[1.0, 1.0], [2.0, 0.0]])
        sel = EntrySelection.from_observed(np.array([[True, True], [True, False]]), "observed")
        assert relative_mse(fitted, truth, sel) == pytest.approx(1 / 9)

    def test_scale_invariant(self, rng):
        truth, fitted = rng.standard_normal(20), rng.standard_normal(20)
        assert relative_mse(-3.0 * fitted, -3.0 * truth) == pytest.approx(relative_mse(fitted, truth))

    def test_zero_denominator(self):
        with pytest.raises(NumericalError):
            relative_mse(np.ones(3), np.zeros(3))

    def test_empty_selection(self):
        sel = EntrySelection.from_observed(np.zeros(3, dtype=bool), "observed")
        with pytest.raises(InputError):
            relative_mse(np.ones(3), np.ones(3), sel)


@pytest.mark.unit
class TestQuantileRSE:
    def test_cuts(self):
        np.testing.assert_array_equal(quantile_cuts(10, 3), [0, 4, 7, 10])
        np.testing.assert_array_equal(quantile_cuts(4, 4), [0, 1, 2, 3, 4])

    def test_hand_case(self):
        truth = np.array([1.0, 2.0, 3.0, 4.0])
        fitted = np.array([1.0, 2.0, 3.0, 0.0])
        assert q_rse(truth, fitted, 2) == pytest.approx(4 / 14.5)

    def test_sorting_by_truth(self):
        truth = np.array([4.0, 3.0, 2.0, 1.0])
        fitted = np.array([0.0, 3.0, 2.0, 1.0])
        assert q_rse(truth, fitted, 2) == pytest.approx(4 / 14.5)

    def test_groups_follow_signed_truth(self):
        # signed order gives groups {-4, -1} and {2, 3}; ordering by |truth| would pair {-1, 2} and {3, -4}
        truth = np.array([-1.0, 2.0, 3.0, -4.0])
        fitted = np.array([-1.0, 2.0, 0.0, -4.0])
        assert q_rse(truth, fitted, 2) == pytest.approx(2.25 / 12.5)

    def test_exact_fit(self, rng):
        truth = rng.standard_normal(30)
        assert q_rse(truth, truth, 5) == 0.0

    def test_q_equal_n_is_relative_mse(self, rng):
        truth, fitted = rng.standard_normal(50), rng.standard_normal(50)
        assert q_rse(truth, fitted, 50) == pytest.approx(relative_mse(fitted, truth), rel=1e-12)

    def test_averages_out_noise(self, rng):
        truth = rng.standard_normal(10_000)
        fitted = truth + rng.standard_normal(10_000)
        assert q_rse(truth, fitted, 10) < 0.01 < relative_mse(fitted, truth)

    @pytest.mark.parametrize("q", [0, 5])
    def test_q_out_of_range(self, q):
        with pytest.raises(InputError):
            q_rse(np.ones(4), np.ones(4), q)

    def test_zero_bin_means(self):
        with pytest.raises(NumericalError):
            q_rse(np.array([-1.0, 1.0]), np.zeros(2), 1)
