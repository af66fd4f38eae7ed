"""K-mode joint pmf: convolution fast path against the enumeration oracle."""

import math

import numpy as np
import pytest

from ghostspec import (
    JointPMF,
    RunConfig,
    TruncationError,
    TruncationSpec,
    correlation_stats,
    joint_pmf_convolve,
    joint_pmf_enumerate,
    pmf_moments,
    simulate_classical_run,
    single_mode_joint_table,
    thermal_pmf_vector,
    truncation_bound,
)
from ghostspec.joint_pmf import compositions


class TestTruncationBound:
    def test_opaque_profile_needs_no_bucket_axis(self):
        n1_max, _ = truncation_bound([0.0, 0.0, 0.0], 1.0, 1e-12)
        assert n1_max == 0

    def test_vacuum_input(self):
        assert truncation_bound([0.5, 0.5], 0.0, 1e-12) == (0, 0)

    @pytest.mark.parametrize("tol", [1e-6, 1e-9, 1e-12])
    def test_bound_certified_by_direct_tail_summation(self, tol):
        ts, nbar = [0.5, 0.5, 0.5], 1.0
        n1_max, n2_max = truncation_bound(ts, nbar, tol)
        # exact bucket marginal: convolution of the three thermal pmfs
        big = 4 * n1_max + 400
        w = None
        for t in ts:
            v = thermal_pmf_vector(t * nbar, big)
            w = v if w is None else np.convolve(w, v)[: big + 1]
        bucket_tail = 1.0 - math.fsum(w[: n1_max + 1])
        analyzer_tail = (nbar / (1 + nbar)) ** (n2_max + 1)
        assert bucket_tail < tol
        assert analyzer_tail < tol
        assert bucket_tail + analyzer_tail < 2 * tol

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            truncation_bound([0.5], 1.0, 0.0)


class TestCompositions:
    def test_counts_match_stars_and_bars(self):
        for total in range(6):
            for parts in range(1, 5):
                n = sum(1 for _ in compositions(total, parts))
                assert n == math.comb(total + parts - 1, parts - 1)

    def test_each_sums_to_total(self):
        for split in compositions(5, 3):
            assert sum(split) == 5


class TestConvolve:
    def test_single_mode_equals_table(self):
        pmf = joint_pmf_convolve(0, [0.6], 1.0, bounds=(25, 25))
        table, _ = single_mode_joint_table(0.6, 2.0, 25)
        assert np.array_equal(pmf.table, table)

    def test_vacuum_spectators_drop_out(self):
        with_spectators = joint_pmf_convolve(1, [0.0, 0.7, 0.0], 0.8, bounds=(20, 20))
        alone = joint_pmf_convolve(0, [0.7], 0.8, bounds=(20, 20))
        assert np.allclose(with_spectators.table, alone.table, rtol=1e-14, atol=0.0)

    @pytest.mark.parametrize(
        "ts,k",
        [
            ([0.3, 0.7], 0),
            ([0.3, 0.7], 1),
            ([0.2, 0.5, 0.8], 1),
            ([0.9, 0.1, 0.4, 0.6], 3),
        ],
    )
    @pytest.mark.parametrize("nbar", [0.5, 1.0])
    def test_matches_enumeration(self, ts, k, nbar):
        bounds = (12, 20)
        fast = joint_pmf_convolve(k, ts, nbar, bounds=bounds)
        oracle = joint_pmf_enumerate(k, ts, nbar, bounds=bounds)
        assert np.abs(fast.table - oracle.table).max() < 1e-12

    def test_normalization(self):
        pmf = joint_pmf_convolve(0, [0.4, 0.8], 1.0, TruncationSpec(tol=1e-10))
        assert abs(pmf.table.sum() + pmf.tail_mass - 1.0) < 1e-9
        assert pmf.tail_mass < 1e-10

    def test_spectator_permutation_invariance(self):
        base = joint_pmf_convolve(0, [0.5, 0.1, 0.7, 0.3], 1.0, bounds=(25, 25))
        permuted = joint_pmf_convolve(0, [0.5, 0.3, 0.1, 0.7], 1.0, bounds=(25, 25))
        assert np.abs(base.table - permuted.table).max() < 1e-13

    def test_monotone_truncation(self):
        loose = joint_pmf_convolve(0, [0.4, 0.6], 1.0, TruncationSpec(tol=1e-6))
        tight = joint_pmf_convolve(0, [0.4, 0.6], 1.0, TruncationSpec(tol=1e-13))
        shared = loose.table.shape
        diff = np.abs(tight.table[: shared[0], : shared[1]] - loose.table).max()
        assert diff <= loose.tail_mass

    def test_bucket_marginal_is_thermal_convolution(self):
        ts, nbar = [0.2, 0.5, 0.8], 1.0
        pmf = joint_pmf_convolve(1, ts, nbar, TruncationSpec(tol=1e-13))
        w = None
        for t in ts:
            v = thermal_pmf_vector(t * nbar, pmf.n1_max)
            w = v if w is None else np.convolve(w, v)[: pmf.n1_max + 1]
        marginal = pmf.table.sum(axis=1)
        assert np.abs(marginal - w).max() < 1e-10

    def test_truncation_cap_is_an_error(self):
        with pytest.raises(TruncationError):
            joint_pmf_convolve(
                0, [0.9, 0.9], 2.0, TruncationSpec(tol=1e-12, n1_cap=10)
            )

    def test_index_check(self):
        with pytest.raises(IndexError):
            joint_pmf_convolve(2, [0.5, 0.5], 1.0, bounds=(5, 5))


class TestEnumerate:
    def test_mode_count_guard(self):
        with pytest.raises(ValueError, match="limited to 4 modes"):
            joint_pmf_enumerate(0, [0.2] * 5, 1.0, bounds=(5, 5))

    def test_bucket_extent_guard(self):
        with pytest.raises(ValueError, match="limited to n1_max"):
            joint_pmf_enumerate(0, [0.9, 0.9], 2.0, TruncationSpec(tol=1e-12))

    def test_single_mode_values(self):
        pmf = joint_pmf_enumerate(0, [0.5], 1.0, bounds=(10, 15))
        table, _ = single_mode_joint_table(0.5, 2.0, 15)
        assert np.allclose(pmf.table, table[:11, :], rtol=1e-12, atol=0.0)

    def test_normalization(self):
        pmf = joint_pmf_enumerate(0, [0.3, 0.7], 0.25, TruncationSpec(tol=1e-9))
        assert abs(pmf.table.sum() + pmf.tail_mass - 1.0) < 1e-9

    def test_monte_carlo_histogram(self):
        ts, nbar, reps = [0.3, 0.7], 0.5, 1_000_000
        pmf = joint_pmf_enumerate(0, ts, nbar, bounds=(15, 25))
        summary = simulate_classical_run(
            RunConfig(ts=ts, nbar=nbar, repetitions=reps, seed=515)
        )
        hist = summary.histograms[0]
        checked = 0
        for n1 in range(min(hist.shape[0], pmf.table.shape[0])):
            for n2 in range(min(hist.shape[1], pmf.table.shape[1])):
                p = pmf.table[n1, n2]
                expect = reps * p
                if expect < 25.0:
                    continue
                assert abs(hist[n1, n2] - expect) < 5.0 * math.sqrt(expect * (1 - p))
                checked += 1
        assert checked > 15


class TestPmfMoments:
    def test_zeroth_moment_is_retained_mass(self):
        pmf = joint_pmf_convolve(0, [0.5, 0.5], 1.0, TruncationSpec(tol=1e-10))
        moment, bias = pmf_moments(pmf, 0, 0)
        assert moment == pytest.approx(1.0 - pmf.tail_mass, abs=1e-14)
        assert bias == pmf.tail_mass

    def test_lossless_single_mode_correlation(self):
        pmf = joint_pmf_convolve(0, [1.0], 1.0, TruncationSpec(tol=1e-13))
        moment, bias = pmf_moments(pmf, 1, 1)
        assert abs(moment - 2.0) < 1e-9 + bias

    @pytest.mark.parametrize("k", [0, 2])
    def test_cross_checks_generating_function(self, k):
        ts, nbar = [0.2, 0.6, 0.9], 1.0
        pmf = joint_pmf_convolve(k, ts, nbar, TruncationSpec(tol=1e-13))
        stats = correlation_stats(k, ts, nbar)
        for alpha, beta, expected in [
            (1, 0, stats.mean1),
            (0, 1, stats.mean2),
            (1, 1, stats.c12),
            (2, 2, stats.m22),
        ]:
            moment, _ = pmf_moments(pmf, alpha, beta)
            assert moment == pytest.approx(expected, rel=1e-8)

    def test_rejects_negative_orders(self):
        pmf = joint_pmf_convolve(0, [0.5], 1.0, bounds=(5, 5))
        with pytest.raises(ValueError):
            pmf_moments(pmf, -1, 0)


class TestJointPMFInvariants:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            JointPMF(table=np.array([[0.5, -0.1], [0.3, 0.3]]), tail_mass=0.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            JointPMF(table=np.array([[0.5, 0.1]]), tail_mass=0.0)

    def test_table_is_immutable(self):
        pmf = joint_pmf_convolve(0, [0.5], 1.0, bounds=(8, 8))
        with pytest.raises(ValueError):
            pmf.table[0, 0] = 0.5
