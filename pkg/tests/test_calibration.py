import numpy as np
import pytest

from sparselogit import (
    CalibrationError,
    Dataset,
    LambdaGrid,
    ParameterError,
    PathPoint,
    RegularizationPath,
    calibrate,
    default_grid,
    fit_path,
    lambda_zero_threshold,
    select_lambda_testing,
    thresholded_support,
)

from oracles import brute_force_selection, random_instance, synthetic_path


def path_from_betas(lams, betas, converged=None):
    grid = LambdaGrid(np.asarray(lams, dtype=float))
    flags = [True] * len(lams) if converged is None else converged
    points = tuple(
        PathPoint(lam=float(lam), beta=np.asarray(beta, dtype=float), intercept=0.0,
                  kkt_residual=0.0, iterations=1, converged=flag)
        for lam, beta, flag in zip(grid.values, betas, flags)
    )
    return RegularizationPath(grid=grid, points=points)


class TestSelectLambdaTesting:
    def test_identical_estimates_select_smallest(self):
        betas = [np.array([0.4, -0.2])] * 5
        path = path_from_betas([0.1, 0.2, 0.3, 0.4, 0.5], betas)
        lam_hat, index, trace = select_lambda_testing(path, 1.5)
        assert index == 0 and lam_hat == 0.1
        assert all(record.passed for record in trace)
        assert trace[0].statistic == -1.5  # topmost test is the self pair

    def test_single_point_grid_selects_it(self):
        path = path_from_betas([0.7], [np.array([1.0])])
        lam_hat, index, _ = select_lambda_testing(path, 1.5)
        assert index == 0 and lam_hat == 0.7

    def test_three_point_worked_example(self):
        # gaps: |b1-b2| = 10, |b1-b3| = 10, |b2-b3| = 0; C = 1.5
        betas = [np.array([10.0]), np.array([0.0]), np.array([0.0])]
        path = path_from_betas([1.0, 2.0, 3.0], betas)
        lam_hat, index, trace = select_lambda_testing(path, 1.5)
        assert lam_hat == 2.0 and index == 1
        scanned = {record.lam: record.passed for record in trace}
        assert scanned[3.0] and scanned[2.0] and not scanned[1.0]
        assert trace[-1].statistic == pytest.approx(10.0 / 3.0 - 1.5)

    def test_matches_brute_force_on_synthetic_paths(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            path, lams, betas = synthetic_path(rng, rng.integers(3, 12), rng.integers(1, 5))
            constant = rng.uniform(0.1, 1.2)
            _, index, _ = select_lambda_testing(path, constant)
            expected, _ = brute_force_selection(lams, betas, constant)
            assert index == expected

    def test_pass_set_upward_closed(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            _, lams, betas = synthetic_path(rng, rng.integers(3, 10), rng.integers(1, 4))
            _, passes = brute_force_selection(lams, betas, rng.uniform(0.1, 1.0))
            flips = np.diff(passes.astype(int))
            assert np.all(flips >= 0)  # once passing, always passing upward

    def test_nonconverged_point_at_frontier_raises(self):
        betas = [np.zeros(2)] * 4
        path = path_from_betas([0.1, 0.2, 0.3, 0.4], betas, converged=[True, True, False, True])
        with pytest.raises(CalibrationError, match="0.3"):
            select_lambda_testing(path, 1.5)

    def test_nonconverged_point_below_selection_is_ignored(self):
        # failure at lam=0.2 stops the scan before the bottom point is touched
        path = path_from_betas(
            [0.1, 0.2, 0.3, 0.4],
            [np.array([0.0]), np.array([30.0]), np.array([0.0]), np.array([0.0])],
            converged=[False, True, True, True],
        )
        lam_hat, index, _ = select_lambda_testing(path, 1.5)
        assert lam_hat == 0.3 and index == 2

    def test_rejects_negative_constant(self):
        path = path_from_betas([0.5], [np.zeros(1)])
        with pytest.raises(ParameterError):
            select_lambda_testing(path, -0.1)

    def test_grid_order_irrelevant(self):
        rng = np.random.default_rng(2)
        path, lams, betas = synthetic_path(rng, 8, 3)
        _, index, _ = select_lambda_testing(path, 0.5)
        perm = rng.permutation(8)
        shuffled = path_from_betas(lams[perm], betas[perm])
        _, index_shuffled, _ = select_lambda_testing(shuffled, 0.5)
        assert index == index_shuffled


class TestThresholdedSupport:
    def test_zero_vector_gives_empty_set(self):
        assert thresholded_support(np.zeros(4), 1.5, 0.3).size == 0

    def test_zero_constant_gives_plain_support(self):
        beta = np.array([0.0, -0.2, 0.0, 1e-12])
        np.testing.assert_array_equal(thresholded_support(beta, 0.0, 0.5), [1, 3])

    def test_boundary_value_included(self):
        beta = np.array([0.44, 0.46])
        np.testing.assert_array_equal(thresholded_support(beta, 1.5, 0.1), [1])
        assert thresholded_support(np.array([0.45]), 1.5, 0.1).size == 1

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ParameterError):
            thresholded_support(np.ones(2), 1.5, 0.0)


class TestCalibrate:
    def test_trivial_grid_above_threshold(self):
        rng = np.random.default_rng(3)
        data, _ = random_instance(rng, 30, 6, s=2)
        threshold = lambda_zero_threshold(data)
        grid = LambdaGrid(threshold * np.array([1.1, 1.5, 2.0, 3.0]))
        result = calibrate(data, grid)
        assert result.lambda_index == 0
        assert np.all(result.beta_hat == 0)
        assert result.support_hat.size == 0

    def test_equals_full_path_selection(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            data, _ = random_instance(rng, 40, 10, s=3)
            grid = default_grid(40, 10, 30)
            result = calibrate(data, grid)
            path = fit_path(data, grid)
            lam_full, index_full, _ = select_lambda_testing(path)
            assert result.lambda_index == index_full
            assert result.lambda_hat == lam_full

    def test_result_invariants(self):
        rng = np.random.default_rng(5)
        data, _ = random_instance(rng, 50, 8, s=3)
        grid = default_grid(50, 8, 40)
        result = calibrate(data, grid)
        threshold = 3.0 * result.constant_c * result.lambda_hat
        expected = np.flatnonzero(
            (result.beta_hat != 0) & (np.abs(result.beta_hat) >= threshold)
        )
        np.testing.assert_array_equal(result.support_hat, expected)
        assert set(result.support_hat) <= set(np.flatnonzero(result.beta_hat))
        assert result.lambda_hat in grid.values

    def test_nonconvergence_aborts(self):
        rng = np.random.default_rng(6)
        data, _ = random_instance(rng, 40, 10, s=3)
        grid = default_grid(40, 10, 20)
        with pytest.raises(CalibrationError):
            calibrate(data, grid, max_iter=1)

    def test_trace_matches_scan_depth(self):
        rng = np.random.default_rng(7)
        data, _ = random_instance(rng, 40, 8, s=2)
        grid = default_grid(40, 8, 25)
        result = calibrate(data, grid)
        n_passing = sum(record.passed for record in result.test_trace)
        assert n_passing == len(grid) - result.lambda_index
        # scan order is descending in lam
        lams = [record.lam for record in result.test_trace]
        assert lams == sorted(lams, reverse=True)
