import math

import numpy as np
import pytest
from scipy import stats as sstats

from lpmkl.kernels import KernelMatrix
from lpmkl.labels import LabelVector
from lpmkl.metrics import (EvalReport, average_precision, conditional_std,
                           welch_t_test, wilcoxon_signed_rank)
from lpmkl.rng import CounterRng
from lpmkl.alignment import ideal_kernel

import oracles
from conftest import random_labels


def labels(*vals):
    return LabelVector(np.asarray(vals, dtype=np.int8))


class TestAveragePrecision:
    def test_perfect_ranking(self):
        y = labels(1, 1, -1, -1)
        assert average_precision([4.0, 3.0, 2.0, 1.0], y) == 1.0

    def test_positive_ranked_second(self):
        y = labels(1, -1)
        assert average_precision([0.0, 1.0], y) == pytest.approx(0.5)

    def test_single_positive_at_rank_r(self):
        n = 12
        for r in range(1, n + 1):
            values = np.full(n, -1, dtype=np.int8)
            values[r - 1] = 1
            scores = -np.arange(n, dtype=float)  # descending by index
            ap = average_precision(scores, LabelVector(values))
            assert ap == pytest.approx(1.0 / r)

    def test_matches_loop_oracle(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 30))
            y = random_labels(rng, n)
            scores = rng.normal(size=n)
            assert average_precision(scores, y) == pytest.approx(
                oracles.average_precision_loops(scores, y.values), abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        y = random_labels(rng, 40)
        scores = rng.normal(size=40)
        a = average_precision(scores, y)
        b = average_precision(np.tanh(scores) * 3.0 + 1.0, y)
        assert a == b

    def test_random_ranking_approximates_positive_ratio(self):
        # constant scores with random tie breaking emulate a random ranking
        n, n_pos = 400, 120
        values = np.full(n, -1, dtype=np.int8)
        values[:n_pos] = 1
        y = LabelVector(values)
        rng = CounterRng(512)
        aps = [average_precision(np.zeros(n), y, tie_break="random", rng=rng)
               for _ in range(10_000)]
        assert np.mean(aps) == pytest.approx(n_pos / n, abs=0.02)

    def test_no_positives_rejected(self):
        with pytest.raises(ValueError):
            average_precision([1.0, 2.0], labels(-1, -1))

    def test_ties_break_by_index(self):
        y = labels(-1, 1)
        # equal scores: index 0 (negative) ranks first
        assert average_precision([1.0, 1.0], y) == pytest.approx(0.5)


class TestConditionalStd:
    def test_ideal_kernel_balanced_gives_zero(self):
        y = labels(1, 1, -1, -1)
        assert conditional_std(ideal_kernel(y), y) == pytest.approx(0.0, abs=1e-12)

    def test_constant_kernel_gives_zero(self):
        y = labels(1, -1, 1, -1)
        K = KernelMatrix(np.full((4, 4), 0.7))
        assert conditional_std(K, y) == pytest.approx(0.0)

    def test_matches_double_loop(self, rng):
        y = random_labels(rng, 6)
        M = rng.normal(size=(6, 6))
        K = KernelMatrix((M + M.T) / 2)
        assert conditional_std(K, y) == pytest.approx(
            oracles.conditional_std_loops(K.entries, y.values), abs=1e-12)

    def test_label_flip_symmetry(self, rng):
        y = random_labels(rng, 8)
        flipped = LabelVector(-y.values)
        M = rng.normal(size=(8, 8))
        K = KernelMatrix((M + M.T) / 2)
        assert conditional_std(K, y) == pytest.approx(
            conditional_std(K, flipped), abs=1e-12)

    def test_degenerate_pair_set_rejected(self):
        y = labels(1, -1)  # no same-label pairs
        K = KernelMatrix(np.eye(2))
        with pytest.raises(ValueError):
            conditional_std(K, y)


class TestWilcoxon:
    def test_identical_samples_flagged(self):
        a = np.arange(8.0)
        res = wilcoxon_signed_rank(a, a)
        assert res.p_value == 1.0 and res.degenerate

    def test_six_positive_differences(self):
        a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        res = wilcoxon_signed_rank(a + 1.0, a)
        assert res.p_value == pytest.approx(2.0 / 64.0)

    def test_symmetric_differences_near_one(self):
        a = np.zeros(8)
        b = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
        res = wilcoxon_signed_rank(a, b)
        assert res.p_value > 0.9

    def test_matches_enumeration_oracle(self, rng):
        for _ in range(10):
            d = rng.normal(size=9)
            res = wilcoxon_signed_rank(d, np.zeros(9))
            ref = oracles.wilcoxon_exact_enumeration(d)
            assert res.p_value == pytest.approx(ref, abs=1e-12)

    def test_exact_vs_normal_agreement_at_boundary(self, rng):
        for _ in range(20):
            a = rng.normal(size=25)
            b = rng.normal(size=25)
            exact = wilcoxon_signed_rank(a, b, exact_limit=25).p_value
            approx = wilcoxon_signed_rank(a, b, exact_limit=0).p_value
            assert abs(exact - approx) < 0.02

    def test_matches_scipy_exact(self, rng):
        for _ in range(10):
            a = rng.normal(size=14)
            b = rng.normal(size=14)
            ours = wilcoxon_signed_rank(a, b).p_value
            ref = sstats.wilcoxon(a, b, mode="exact").pvalue
            assert ours == pytest.approx(ref, abs=1e-10)

    def test_too_few_pairs_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1.0, 2.0], [0.0, 0.0])


class TestWelch:
    def test_identical_flagged(self):
        res = welch_t_test(np.ones(4), np.ones(4))
        assert res.p_value == 1.0 and res.degenerate

    def test_tiny_variance_split(self):
        a = np.zeros(4)
        b = np.array([10.0, 10.0, 10.0, 10.0001])
        assert welch_t_test(a, b).p_value < 1e-6

    def test_matches_scipy(self, rng):
        for _ in range(20):
            a = rng.normal(size=12)
            b = rng.normal(loc=0.3, size=9)
            ours = welch_t_test(a, b)
            ref = sstats.ttest_ind(a, b, equal_var=False)
            assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)
            assert ours.statistic == pytest.approx(ref.statistic, abs=1e-12)

    def test_paired_matches_scipy(self, rng):
        for _ in range(10):
            a = rng.normal(size=10)
            b = a + rng.normal(scale=0.2, size=10) + 0.1
            ours = welch_t_test(a, b, paired=True)
            ref = sstats.ttest_rel(a, b)
            assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)

    def test_zero_variance_unequal_means(self):
        res = welch_t_test(np.zeros(3), np.ones(3))
        assert res.p_value == 0.0 and res.degenerate


class TestEvalReport:
    def test_summary_recomputable(self, rng):
        scores = rng.uniform(size=37)
        report = EvalReport(method_name="m", per_unit_scores=scores)
        assert report.mean == pytest.approx(float(scores.mean()), abs=1e-12)
        assert report.std == pytest.approx(float(scores.std(ddof=1)), abs=1e-12)
        assert report.n_units == 37

    def test_single_unit_std_zero(self):
        report = EvalReport(method_name="m", per_unit_scores=[0.5])
        assert report.std == 0.0
