"""Closed-form spectrum and moments vs the block-circulant determinant oracle."""

import math

import numpy as np
import pytest

from kernmoment import (RbfSpectrumSpec, block_circulant_moment, compute_etas,
                        linear_process_moments, phi_scalar, rbf_eigenvalue,
                        rbf_moment, rbf_moments, rbf_top_eigenvalues)

GOLDEN = (1 + math.sqrt(5)) / 2


def random_pd(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)


class TestPhiScalar:
    def test_golden_ratio_at_one(self):
        assert phi_scalar(1.0) == pytest.approx(GOLDEN, rel=1e-12)

    def test_value_at_four(self):
        assert phi_scalar(4.0) == pytest.approx((1 + math.sqrt(17)) / 8)

    def test_large_z_asymptotics(self):
        z = 1e6
        assert phi_scalar(z) == pytest.approx(1 / math.sqrt(z), rel=1e-3)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            phi_scalar(0.0)


class TestComputeEtas:
    def test_isotropic_quarter_sigma(self):
        etas = compute_etas(np.eye(5), 0.25 * np.eye(5))
        assert np.allclose(etas, 4.0)

    def test_equal_covariances_give_ones(self):
        s = random_pd(3, 0)
        assert np.allclose(compute_etas(s, s), 1.0)

    def test_matches_nonsymmetric_eigensolve(self):
        sx, s = random_pd(3, 1), random_pd(3, 2)
        direct = np.sort(np.linalg.eigvals(sx @ np.linalg.inv(s)).real)[::-1]
        assert np.allclose(compute_etas(sx, s), direct, rtol=1e-10)


class TestRbfEigenvalues:
    def test_zero_multiset_is_largest(self):
        spec = RbfSpectrumSpec((1.0, 2.0))
        top = rbf_eigenvalue(spec, (0, 0))
        for u in [(1, 0), (0, 1), (2, 3)]:
            assert rbf_eigenvalue(spec, u) < top

    def test_d1_unit_eta_base_value(self):
        spec = RbfSpectrumSpec((1.0,))
        assert rbf_eigenvalue(spec, (0,)) == pytest.approx(1 / GOLDEN, rel=1e-12)

    def test_d1_geometric_ratio(self):
        spec = RbfSpectrumSpec((1.0,))
        for u in range(4):
            ratio = rbf_eigenvalue(spec, (u,)) / rbf_eigenvalue(spec, (u + 1,))
            assert ratio == pytest.approx(GOLDEN**2, rel=1e-12)

    def test_top_eigenvalues_d1_chain(self):
        spec = RbfSpectrumSpec((2.5,))
        top = rbf_top_eigenvalues(spec, 6).values
        expect = [rbf_eigenvalue(spec, (u,)) for u in range(6)]
        assert np.allclose(top, expect, rtol=1e-12)

    def test_symmetric_degenerate_pair(self):
        spec = RbfSpectrumSpec((1.0, 1.0))
        top = rbf_top_eigenvalues(spec, 3).values
        assert top[1] == pytest.approx(top[2], rel=1e-12)
        assert top[1] == pytest.approx(rbf_eigenvalue(spec, (1, 0)), rel=1e-12)

    def test_moment_sum_consistency(self):
        spec = RbfSpectrumSpec((1.0, 3.0))
        partial = sum(v**2 for v in rbf_top_eigenvalues(spec, 500).values)
        truth = rbf_moment(spec, 2)
        assert partial <= truth + 1e-15
        assert partial == pytest.approx(truth, rel=1e-8)


class TestRbfMoments:
    def test_first_moment_is_one_for_any_spec(self):
        for seed in range(5):
            etas = tuple(np.random.default_rng(seed).uniform(0.1, 50, size=4))
            assert rbf_moment(RbfSpectrumSpec(etas), 1) == pytest.approx(
                1.0, rel=1e-12)

    def test_d1_unit_eta_second_moment(self):
        assert rbf_moment(RbfSpectrumSpec((1.0,)), 2) == pytest.approx(
            1 / math.sqrt(5), rel=1e-12)

    def test_cross_oracle_isotropic(self):
        got = rbf_moment(RbfSpectrumSpec((4.0, 4.0, 4.0)), 2)
        oracle = block_circulant_moment(np.eye(3), 0.25 * np.eye(3), 2)
        assert got == pytest.approx(oracle, rel=1e-8)

    def test_cross_oracle_anisotropic(self):
        sx, s = np.diag([1.0, 2.0]), np.diag([0.5, 0.25])
        spec = RbfSpectrumSpec(tuple(compute_etas(sx, s)))
        assert rbf_moment(spec, 3) == pytest.approx(
            block_circulant_moment(sx, s, 3), rel=1e-8)

    def test_root_moments_non_increasing_toward_top_eigenvalue(self):
        spec = RbfSpectrumSpec((1.0, 5.0, 9.0))
        lam_max = rbf_eigenvalue(spec, (0,) * 3)
        roots = [rbf_moment(spec, n) ** (1 / n) for n in range(1, 12)]
        assert all(a >= b - 1e-12 for a, b in zip(roots, roots[1:]))
        assert roots[-1] >= lam_max - 1e-12
        assert roots[-1] == pytest.approx(lam_max, rel=0.2)

    def test_moment_monotonicity_bound(self):
        spec = RbfSpectrumSpec((0.5, 7.0))
        lam_max = rbf_eigenvalue(spec, (0, 0))
        for n in range(1, 8):
            assert rbf_moment(spec, n + 1) <= rbf_moment(spec, n) * lam_max


class TestBlockCirculant:
    def test_first_moment_is_one(self):
        for seed in range(4):
            sx, s = random_pd(3, seed), random_pd(3, seed + 10)
            assert block_circulant_moment(sx, s, 1) == pytest.approx(
                1.0, rel=1e-10)

    def test_scalar_unit_case(self):
        assert block_circulant_moment([[1.0]], [[1.0]], 2) == pytest.approx(
            1 / math.sqrt(5), rel=1e-10)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="guard"):
            block_circulant_moment(np.eye(300), np.eye(300), 10)


class TestLinearProcess:
    def test_fig3_values(self):
        seq = linear_process_moments(20, 0.3, 2)
        assert seq.values[1] == pytest.approx(6.0)
        assert seq.values[2] == pytest.approx(1.8)

    def test_unit_eigenvalue(self):
        seq = linear_process_moments(1, 1.0, 5)
        assert all(v == pytest.approx(1.0) for v in seq.values.values())


class TestMomentSequenceExport:
    def test_analytic_tag(self):
        seq = rbf_moments(RbfSpectrumSpec((4.0,)), 3)
        assert seq.estimator == "analytic"
        assert set(seq.values) == {1, 2, 3}
