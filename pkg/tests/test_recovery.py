"""LP density fit and quantile eigenvalue extraction."""

import numpy as np
import pytest

from kernmoment import (MomentSequence, RbfSpectrumSpec, RecoveryConfig,
                        SpectralGrid, default_grid, default_upper_bound,
                        extract_eigenvalues, fit_density, linear_process_moments,
                        rbf_moments, recover, solve_lp)


def moments_of(eigs, k, d):
    values = {n: float(sum(e**n for e in eigs)) for n in range(1, k + 1)}
    return MomentSequence(values, "analytic", k), d


class TestSolveLp:
    def test_known_small_lp(self):
        # min x0 + x1 s.t. x0 + 2 x1 = 4, x >= 0  ->  x = (0, 2)
        x, obj = solve_lp([1.0, 1.0], [[1.0, 2.0]], [4.0])
        assert np.allclose(x, [0.0, 2.0])
        assert obj == pytest.approx(2.0)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.1, 1, size=(3, 8))
        b = a @ rng.uniform(0, 1, size=8)
        c = rng.uniform(0, 1, size=8)
        x1, o1 = solve_lp(c, a, b)
        x2, o2 = solve_lp(c, a, b)
        assert np.array_equal(x1, x2) and o1 == o2


class TestSpectralGrid:
    def test_weight_normalization_enforced(self):
        with pytest.raises(ValueError, match="probability"):
            SpectralGrid(points=np.array([0.1, 0.2]),
                         weights=np.array([0.6, 0.6]), b=1.0)

    def test_points_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            SpectralGrid(points=np.array([0.2, 0.1]),
                         weights=np.array([0.5, 0.5]), b=1.0)

    def test_default_grid_spans_upper_bound(self):
        pts = default_grid(2.0, 10)
        assert pts[0] == pytest.approx(0.2) and pts[-1] == pytest.approx(2.0)


class TestFitDensity:
    def test_point_mass_exactly_representable(self):
        moments, d = moments_of([0.5], 5, 1)
        grid = fit_density(moments, RecoveryConfig(d=d, b=1.0, t_count=10, k=5))
        assert grid.objective == pytest.approx(0.0, abs=1e-9)
        idx = int(np.argmax(grid.weights))
        assert grid.points[idx] == pytest.approx(0.5)
        assert grid.weights[idx] == pytest.approx(1.0, abs=1e-9)

    def test_zero_moments_concentrate_at_lowest_point(self):
        moments = MomentSequence({n: 0.0 for n in range(1, 6)}, "analytic", 5)
        grid = fit_density(moments, RecoveryConfig(d=1, b=1.0, t_count=50, k=5))
        assert np.argmax(grid.weights) == 0

    def test_linear_process_mass_near_true_eigenvalue(self):
        moments = linear_process_moments(20, 0.3, 10)
        grid = fit_density(moments, RecoveryConfig(d=20, b=1.0, t_count=200, k=10))
        near = np.abs(grid.points - 0.3) <= 0.05
        assert grid.weights[near].sum() >= 0.95

    def test_moment_roundtrip_within_objective(self):
        moments, d = moments_of([0.7, 0.4, 0.4], 8, 3)
        cfg = RecoveryConfig(d=d, b=1.0, t_count=100, k=8)
        grid = fit_density(moments, cfg)
        err = sum(abs(moments.values[n] -
                      d * float(grid.weights @ grid.points**n))
                  for n in range(1, 9))
        assert err <= grid.objective * d + 1e-9

    def test_simplex_constraints_at_solution(self):
        moments = rbf_moments(RbfSpectrumSpec((4.0, 4.0)), 6)
        grid = fit_density(moments, RecoveryConfig(d=10, b=1.0, t_count=80, k=6))
        assert np.all(grid.weights >= -1e-12)
        assert grid.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_missing_moment_rejected(self):
        moments = MomentSequence({1: 1.0, 3: 0.5}, "dp", 3)
        with pytest.raises(ValueError, match="missing"):
            fit_density(moments, RecoveryConfig(d=1, b=1.0, t_count=10, k=3))


class TestExtractEigenvalues:
    def test_point_mass_quantiles(self):
        grid = SpectralGrid(points=np.array([0.25, 0.5, 0.75]),
                            weights=np.array([0.0, 1.0, 0.0]), b=1.0)
        assert extract_eigenvalues(grid, 3).values == (0.5, 0.5, 0.5)

    def test_uniform_median(self):
        pts = np.round(np.arange(1, 11) * 0.1, 10)
        grid = SpectralGrid(points=pts, weights=np.full(10, 0.1), b=1.0)
        assert extract_eigenvalues(grid, 1).values[0] == pytest.approx(0.5)

    def test_output_sorted_and_bounded(self):
        moments = rbf_moments(RbfSpectrumSpec((400.0,)), 10)
        cfg = RecoveryConfig(d=50, b=1.0, t_count=200, k=10)
        eigs = recover(moments, cfg).values
        assert all(a >= b for a, b in zip(eigs, eigs[1:]))
        assert all(0 <= v <= 1.0 for v in eigs)


class TestRecover:
    def test_rank_one_exact(self):
        moments, d = moments_of([0.5], 6, 1)
        eigs = recover(moments, RecoveryConfig(d=1, b=1.0, t_count=20, k=6))
        assert eigs.values[0] == pytest.approx(0.5, abs=1e-9)

    def test_default_upper_bound_exceeds_top_eigenvalue(self):
        moments, _ = moments_of([0.8, 0.2], 6, 2)
        b = default_upper_bound(moments)
        assert b >= 0.8
        assert b == pytest.approx(1.2 * max(
            moments.values[n] ** (1 / n) for n in range(1, 7)))
