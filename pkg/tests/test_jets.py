"""Taylor-jet algebra and generating-function moments.

Moment oracles are direct sums over the thermal pmf or finite differences;
none of them reuse the jet arithmetic under test.
"""

import math

import numpy as np
import pytest

from ghostspec import (
    TaylorJet,
    correlation_stats,
    extract_moment,
    extract_moment_derivative,
    g_k_jet,
    g_th_jet,
    mgf_product,
    thermal_pmf,
)


def random_jet(rng, unit_constant=False):
    c = rng.normal(size=(3, 3, 2))
    if unit_constant:
        c[0, 0, 0] = 1.0
    return TaylorJet(c)


class TestJetAlgebra:
    def test_constant_identity(self):
        one = TaylorJet.constant(1.0)
        rng = np.random.default_rng(3)
        a = random_jet(rng)
        assert np.allclose((a * one).c, a.c, rtol=0.0, atol=0.0)

    @pytest.mark.parametrize("seed", range(8))
    def test_product_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_jet(rng) for _ in range(3))
        left = (a * b) * c
        right = a * (b * c)
        assert np.allclose(left.c, right.c, rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("seed", range(8))
    def test_reciprocal_inverts(self, seed):
        rng = np.random.default_rng(100 + seed)
        a = random_jet(rng, unit_constant=True)
        prod = a.reciprocal() * a
        expected = np.zeros((3, 3, 2))
        expected[0, 0, 0] = 1.0
        assert np.allclose(prod.c, expected, rtol=1e-13, atol=1e-13)

    def test_reciprocal_rejects_zero_constant(self):
        c = np.zeros((3, 3, 2))
        c[1, 0, 0] = 1.0
        with pytest.raises(ZeroDivisionError):
            TaylorJet(c).reciprocal()

    def test_coefficients_are_read_only(self):
        jet = TaylorJet.constant(2.0)
        with pytest.raises(ValueError):
            jet.c[0, 0, 0] = 3.0


class TestThermalJet:
    def test_vacuum_is_constant_one(self):
        jet = g_th_jet(0.0)
        expected = np.zeros((3, 3, 2))
        expected[0, 0, 0] = 1.0
        assert np.array_equal(jet.c, expected)

    @pytest.mark.parametrize("mean", [0.25, 1.0, 2.0])
    def test_first_coefficient_is_the_mean(self, mean):
        jet = g_th_jet(mean)
        assert jet.c[1, 0, 0] == pytest.approx(mean, rel=1e-14)

    def test_second_moment_against_direct_sum(self):
        # brute-force sum n^2 p_th(n | 1) over the geometric law
        oracle = math.fsum(n * n * thermal_pmf(n, 1.0) for n in range(400))
        jet = g_th_jet(1.0)
        assert extract_moment(jet, 2, 0) == pytest.approx(oracle, rel=1e-12)
        assert extract_moment(jet, 2, 0) == pytest.approx(3.0, rel=1e-13)

    def test_rejects_negative_mean(self):
        with pytest.raises(ValueError):
            g_th_jet(-0.1)


class TestAnalyzedModeJet:
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0])
    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
    def test_bucket_marginal_matches_thermal_jet(self, t, nbar):
        jet = g_k_jet(t, nbar)
        thermal = g_th_jet(t * nbar)
        assert np.allclose(jet.c[:, 0, 0], thermal.c[:, 0, 0], rtol=1e-13, atol=1e-15)

    def test_arm_means(self):
        jet = g_k_jet(0.5, 1.0)
        assert extract_moment(jet, 1, 0) == pytest.approx(0.5, rel=1e-13)
        assert extract_moment(jet, 0, 1) == pytest.approx(1.0, rel=1e-13)

    def test_correlation_without_loss(self):
        # <n1 n2> = nbar^2 t + (t nbar) nbar = 2 at t = nbar = 1
        jet = g_k_jet(1.0, 1.0)
        assert extract_moment(jet, 1, 1) == pytest.approx(2.0, rel=1e-13)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            g_k_jet(1.2, 1.0)
        with pytest.raises(ValueError):
            g_k_jet(0.5, -1.0)


class TestProduct:
    def test_single_mode_reduces_to_analyzed_jet(self):
        assert np.array_equal(mgf_product(0, [0.7], 1.3).c, g_k_jet(0.7, 1.3).c)

    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("seed", range(4))
    def test_bucket_mean_is_sum_of_mode_means(self, nbar, seed):
        rng = np.random.default_rng(seed)
        ts = rng.uniform(0.0, 1.0, size=rng.integers(1, 6))
        jet = mgf_product(0, ts, nbar)
        assert extract_moment(jet, 1, 0) == pytest.approx(
            nbar * ts.sum(), rel=1e-12
        )

    @pytest.mark.parametrize("seed", range(4))
    def test_covariance_comes_from_the_analyzed_mode(self, seed):
        rng = np.random.default_rng(50 + seed)
        ts = rng.uniform(0.05, 1.0, size=4)
        nbar = 0.8
        k = int(rng.integers(0, 4))
        jet = mgf_product(k, ts, nbar)
        cov = (
            extract_moment(jet, 1, 1)
            - extract_moment(jet, 1, 0) * extract_moment(jet, 0, 1)
        )
        assert cov == pytest.approx(nbar ** 2 * ts[k], rel=1e-11)

    def test_reference_bucket_mean(self):
        jet = mgf_product(0, [0.5, 0.5], 1.0)
        assert extract_moment(jet, 1, 0) == pytest.approx(1.0, rel=1e-13)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            mgf_product(2, [0.5, 0.5], 1.0)


class TestMomentExtraction:
    def test_normalization_coefficient(self):
        for jet in (g_th_jet(1.5), g_k_jet(0.3, 0.9), mgf_product(1, [0.2, 0.8], 1.0)):
            assert extract_moment(jet, 0, 0) == pytest.approx(1.0, rel=1e-13)

    def test_order_guard(self):
        with pytest.raises(ValueError):
            extract_moment(g_th_jet(1.0), 3, 0)
        with pytest.raises(ValueError):
            extract_moment_derivative(g_th_jet(1.0), 0, 3)


class TestCorrelationStats:
    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("seed", range(3))
    def test_signal_derivative_is_2_nbar_sq(self, nbar, seed):
        rng = np.random.default_rng(200 + seed)
        ts = rng.uniform(0.0, 1.0, size=rng.integers(1, 7))
        k = int(rng.integers(0, ts.size))
        stats = correlation_stats(k, ts, nbar)
        assert stats.dc12_dt == pytest.approx(2.0 * nbar ** 2, rel=1e-12)

    def test_derivative_matches_finite_differences(self):
        ts = np.array([0.3, 0.6, 0.2])
        nbar, k, h = 1.3, 1, 1e-6
        up, down = ts.copy(), ts.copy()
        up[k] += h
        down[k] -= h
        fd = (
            correlation_stats(k, up, nbar).c12 - correlation_stats(k, down, nbar).c12
        ) / (2 * h)
        assert correlation_stats(k, ts, nbar).dc12_dt == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_variance_kernel_nonnegative(self, seed):
        rng = np.random.default_rng(300 + seed)
        ts = rng.uniform(0.0, 1.0, size=rng.integers(1, 6))
        nbar = float(rng.uniform(0.1, 2.0))
        k = int(rng.integers(0, ts.size))
        stats = correlation_stats(k, ts, nbar)
        assert stats.m22 >= stats.c12 ** 2

    def test_reference_correlation(self):
        assert correlation_stats(0, [1.0], 1.0).c12 == pytest.approx(2.0, rel=1e-13)

    @pytest.mark.parametrize("seed", range(4))
    def test_cross_correlation_identity(self, seed):
        # g2(0) = <n1 n2> / (<n1><n2>) = 1 + t_k / sum(t)
        rng = np.random.default_rng(400 + seed)
        ts = rng.uniform(0.05, 1.0, size=5)
        nbar = float(rng.uniform(0.3, 1.5))
        k = int(rng.integers(0, 5))
        stats = correlation_stats(k, ts, nbar)
        g2 = stats.c12 / (stats.mean1 * stats.mean2)
        assert g2 == pytest.approx(1.0 + ts[k] / ts.sum(), rel=1e-10)
        assert g2 > 1.0
