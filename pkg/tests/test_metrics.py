import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from flowsentry.errors import MetricError
from flowsentry.metrics import average_precision, precision_at_k, roc_auc, summary


def pair_auc(s, y):
    pos = [a for a, b in zip(s, y) if b]
    neg = [a for a, b in zip(s, y) if not b]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def ordered(s):
    return sorted(range(len(s)), key=lambda i: (-s[i], i))


def step_ap(s, y):
    hits, acc = 0, []
    for rank, i in enumerate(ordered(s), start=1):
        if y[i]:
            hits += 1
            acc.append(hits / rank)
    return math.fsum(acc) / sum(y)


def count_precision(s, y, k):
    return sum(y[i] for i in ordered(s)[:k]) / k


def random_instance(gen, n=30):
    s = np.round(gen.random(n) * 8) / 8  # coarse grid forces ties
    y = gen.integers(0, 2, n)
    y[gen.integers(0, n)] = 1
    y[gen.integers(0, n)] = 0
    return s, y


class TestExamples:
    def test_auc_perfect(self):
        assert roc_auc([0.9, 0.8, 0.1], [1, 0, 0]) == 1.0

    def test_auc_inverted(self):
        assert roc_auc([0.2, 0.8], [1, 0]) == 0.0

    def test_ap_positives_first(self):
        assert average_precision([5, 4, 3, 2], [1, 1, 0, 0]) == 1.0

    def test_ap_single_last(self):
        assert average_precision([4, 3, 2, 1, 0], [0, 0, 0, 0, 1]) == 1 / 5

    def test_precision_four_of_five(self):
        s = [10, 9, 8, 7, 6, 5, 4]
        assert precision_at_k(s, [1, 1, 0, 1, 1, 0, 1], 5) == 0.8

    def test_precision_all_is_rate(self):
        y = [1, 0, 0, 1, 0]
        assert precision_at_k([1, 2, 3, 4, 5], y, 5) == 0.4


class TestOracles:
    def test_random_twenty(self):
        gen = np.random.default_rng(3)
        s, y = gen.random(20), gen.integers(0, 2, 20)
        y[:2] = [0, 1]
        assert roc_auc(s, y) == pair_auc(s.tolist(), y.tolist())
        assert abs(average_precision(s, y) - step_ap(s.tolist(), y.tolist())) < 1e-12
        for k in (1, 7, 20):
            assert precision_at_k(s, y, k) == count_precision(s.tolist(), y.tolist(), k)


class TestProperties:
    @given(hnp.arrays(np.float64, 15, elements=st.integers(-50, 50)),
           hnp.arrays(np.int64, 15, elements=st.integers(0, 1)),
           st.integers(1, 20), st.integers(-100, 100))
    def test_increasing_transform(self, s, y, a, b):
        if y.min() == y.max():
            return
        t = a * s + b
        assert roc_auc(s, y) == roc_auc(t, y)
        assert average_precision(s, y) == average_precision(t, y)
        assert precision_at_k(s, y, 5) == precision_at_k(t, y, 5)

    @given(st.lists(st.floats(-100, 100), min_size=4, max_size=25, unique=True), st.data())
    def test_auc_complement(self, s, data):
        y = data.draw(hnp.arrays(np.int64, len(s), elements=st.integers(0, 1)))
        if y.min() == y.max():
            return
        s = np.array(s)
        assert abs(roc_auc(s, y) + roc_auc(-s, y) - 1.0) < 1e-12

    @given(st.integers(1, 20), st.integers(0, 1), st.data())
    def test_constant_labels(self, n, label, data):
        s = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
        for k in range(1, n + 1):
            assert precision_at_k(s, [label] * n, k) == label


class TestErrors:
    def test_single_class(self):
        with pytest.raises(MetricError):
            roc_auc([1, 2], [1, 1])
        with pytest.raises(MetricError):
            average_precision([1, 2], [0, 0])

    def test_bad_inputs(self):
        with pytest.raises(MetricError):
            roc_auc([1, 2], [1])
        with pytest.raises(MetricError):
            roc_auc([], [])
        with pytest.raises(MetricError):
            roc_auc([1, 2], [0, 2])
        with pytest.raises(MetricError):
            roc_auc([1, np.nan], [0, 1])
        with pytest.raises(MetricError):
            precision_at_k([1, 2], [0, 1], 3)

    def test_summary_keys(self):
        out = summary(np.arange(10.0), [0] * 8 + [1, 1], ks=(5, 20))
        assert out["roc_auc"] == 1.0 and out["precision@5"] == 0.4
        assert "precision@20" not in out and out["precision@all"] == 0.2
