import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precis.errors import DimensionMismatch, SingleClass
from precis.metrics import (
    ClassificationMetrics,
    ConfusionCounts,
    auc,
    classification_metrics,
    confusion,
    frobenius_error,
)

from helpers import brute_force_auc


def symmetric_bool(rng, d, p=0.3):
    m = rng.random((d, d)) < p
    m = m | m.T
    np.fill_diagonal(m, False)
    return m


def symmetric_scores(rng, d):
    s = rng.random((d, d))
    s = (s + s.T) / 2
    np.fill_diagonal(s, 1.0)
    return s


class TestConfusion:
    def test_perfect_recovery(self):
        rng = np.random.default_rng(0)
        truth = symmetric_bool(rng, 10)
        while upper_count(truth) != 10:
            truth = symmetric_bool(rng, 10)
        c = confusion(truth, truth)
        assert (c.tp, c.fn, c.fp, c.tn) == (10, 0, 0, 35)

    def test_empty_estimate(self):
        rng = np.random.default_rng(1)
        truth = symmetric_bool(rng, 6)
        c = confusion(np.zeros((6, 6), dtype=bool), truth)
        assert c.tp == 0 and c.fp == 0
        assert c.fn == upper_count(truth)

    def test_counts_sum_to_pairs(self):
        rng = np.random.default_rng(2)
        for d in (3, 5, 9):
            c = confusion(symmetric_bool(rng, d), symmetric_bool(rng, d))
            assert c.total == d * (d - 1) // 2

    def test_matches_scan_oracle(self):
        rng = np.random.default_rng(3)
        est, truth = symmetric_bool(rng, 8), symmetric_bool(rng, 8)
        c = confusion(est, truth)
        tp = fp = tn = fn = 0
        for i in range(8):
            for j in range(i + 1, 8):
                if est[i, j] and truth[i, j]:
                    tp += 1
                elif est[i, j]:
                    fp += 1
                elif truth[i, j]:
                    fn += 1
                else:
                    tn += 1
        assert (c.tp, c.fp, c.tn, c.fn) == (tp, fp, tn, fn)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            confusion(np.zeros((3, 3), dtype=bool), np.zeros((4, 4), dtype=bool))


def upper_count(m):
    return int(m[np.triu_indices(m.shape[0], 1)].sum())


class TestClassificationMetrics:
    def test_perfect(self):
        m = classification_metrics(ConfusionCounts(tp=5, fp=0, tn=10, fn=0))
        assert (m.sen, m.spe, m.pre, m.acc, m.mcc) == (1.0, 1.0, 1.0, 1.0, 1.0)
        assert m.degenerate == ()

    def test_hand_case_with_sqrt_denominator(self):
        m = classification_metrics(ConfusionCounts(tp=10, fp=5, tn=80, fn=5))
        assert m.sen == pytest.approx(2 / 3)
        assert m.spe == pytest.approx(16 / 17)
        assert m.pre == pytest.approx(2 / 3)
        assert m.acc == pytest.approx(0.9)
        # sqrt((15)(15)(85)(85)) = 15*85 = 1275
        assert m.mcc == pytest.approx(775 / 1275)
        assert m.mcc == pytest.approx(0.60784, abs=1e-5)

    def test_degenerate_all_negative(self):
        m = classification_metrics(ConfusionCounts(tp=0, fp=0, tn=10, fn=0))
        assert m.spe == 1.0 and m.acc == 1.0
        assert m.sen == 0.0 and m.pre == 0.0
        assert "sen" in m.degenerate and "pre" in m.degenerate and "mcc" in m.degenerate

    def test_depends_only_on_counts(self):
        a = classification_metrics(ConfusionCounts(tp=4, fp=2, tn=8, fn=1))
        b = classification_metrics(ConfusionCounts(tp=4, fp=2, tn=8, fn=1))
        assert a == b

    def test_mcc_range(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            tp, fp, tn, fn = rng.integers(0, 30, 4)
            m = classification_metrics(ConfusionCounts(int(tp), int(fp), int(tn), int(fn)))
            assert -1 - 1e-12 <= m.mcc <= 1 + 1e-12
            for value in (m.sen, m.spe, m.pre, m.acc):
                assert 0 <= value <= 1


class TestAuc:
    def test_perfect_separation(self):
        truth = np.zeros((4, 4), dtype=bool)
        truth[0, 1] = truth[1, 0] = True
        scores = np.where(truth, 0.9, 0.1)
        np.fill_diagonal(scores, 1.0)
        assert auc(scores, truth) == 1.0

    def test_all_ties_half(self):
        rng = np.random.default_rng(5)
        truth = symmetric_bool(rng, 5)
        while not (0 < upper_count(truth) < 10):
            truth = symmetric_bool(rng, 5)
        scores = np.full((5, 5), 0.5)
        np.fill_diagonal(scores, 1.0)
        assert auc(scores, truth) == 0.5

    def test_matches_brute_force_battery(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            d = int(rng.integers(5, 8))  # 10 to 21 pairs
            truth = symmetric_bool(rng, d)
            if not (0 < upper_count(truth) < d * (d - 1) // 2):
                continue
            scores = symmetric_scores(rng, d)
            if rng.random() < 0.3:  # force ties sometimes
                q = np.round(scores * 4) / 4
                scores = (q + q.T) / 2
            iu = np.triu_indices(d, 1)
            want = brute_force_auc(scores[iu], truth[iu])
            assert auc(scores, truth) == pytest.approx(want, abs=1e-12)

    def test_single_class_raises(self):
        scores = symmetric_scores(np.random.default_rng(7), 4)
        with pytest.raises(SingleClass):
            auc(scores, np.zeros((4, 4), dtype=bool))
        with pytest.raises(SingleClass):
            full = np.ones((4, 4), dtype=bool)
            np.fill_diagonal(full, False)
            auc(scores, full)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(8)
        truth = symmetric_bool(rng, 6)
        while not (0 < upper_count(truth) < 15):
            truth = symmetric_bool(rng, 6)
        scores = symmetric_scores(rng, 6)
        base = auc(scores, truth)
        for transform in (lambda s: 3 * s + 1, np.exp, lambda s: s**3):
            assert auc(transform(scores), truth) == pytest.approx(base, abs=1e-12)

    def test_complement_symmetry(self):
        rng = np.random.default_rng(9)
        truth = symmetric_bool(rng, 6)
        while not (0 < upper_count(truth) < 15):
            truth = symmetric_bool(rng, 6)
        scores = symmetric_scores(rng, 6)  # continuous, ties improbable
        assert auc(scores, truth) + auc(1 - scores, truth) == pytest.approx(1.0, abs=1e-12)


class TestFrobeniusError:
    def test_identical(self):
        assert frobenius_error(np.eye(3), np.eye(3)) == 0.0

    def test_scaled_identity(self):
        assert frobenius_error(np.eye(4), 2 * np.eye(4)) == pytest.approx(2.0)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(10)
        a, b = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
        want = np.sqrt(sum((a[i, j] - b[i, j]) ** 2 for i in range(5) for j in range(5)))
        assert frobenius_error(a, b) == pytest.approx(want, rel=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a, b, c = rng.standard_normal((3, 4, 4))
            assert frobenius_error(a, c) <= (
                frobenius_error(a, b) + frobenius_error(b, c) + 1e-12
            )

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_symmetry_in_arguments(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal((2, 3, 3))
        assert frobenius_error(a, b) == frobenius_error(b, a)
