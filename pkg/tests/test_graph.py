import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from flowsentry.errors import ConfigError, DataError, FormatError, LabelAccessError
from flowsentry.graph import (WorkflowGraph, forbid_labels, neighbors, normalize_columns,
                              split_dataset, symmetrize)

from conftest import path_adjacency

binary_square = st.integers(1, 9).flatmap(
    lambda n: hnp.arrays(np.int8, (n, n), elements=st.integers(0, 1)))
finite_matrix = hnp.arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
                           elements=st.floats(-1e6, 1e6))


class TestSymmetrize:
    def test_single_edge(self):
        assert symmetrize([[0, 1], [0, 0]]).tolist() == [[0, 1], [1, 0]]

    def test_zero_matrix(self):
        assert not symmetrize(np.zeros((3, 3), dtype=int)).any()

    def test_directed_cycle(self):
        out = symmetrize([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
        assert out.tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]

    def test_non_square(self):
        with pytest.raises(FormatError):
            symmetrize(np.zeros((2, 3)))

    def test_non_binary(self):
        with pytest.raises(FormatError):
            symmetrize([[0, 2], [0, 0]])

    @given(binary_square)
    def test_idempotent_and_symmetric(self, m):
        s = symmetrize(m)
        assert np.array_equal(symmetrize(s), s)
        assert np.array_equal(s, s.T)
        assert not np.diagonal(s).any()


class TestNormalizeColumns:
    @pytest.mark.parametrize("col, expected", [
        ([2, 4, 6], [0, 0.5, 1]),
        ([5, 5], [0, 0]),
        ([-1, 0, 3], [0, 0.25, 1]),
    ])
    def test_examples(self, col, expected):
        out = normalize_columns(np.array(col, dtype=float)[:, None])
        assert out[:, 0].tolist() == expected

    def test_non_finite_names_position(self):
        with pytest.raises(DataError, match="row 1, column 0"):
            normalize_columns([[0.0], [np.nan]])

    @given(finite_matrix)
    def test_range_and_idempotence(self, x):
        once = normalize_columns(x)
        assert ((once >= 0) & (once <= 1)).all()
        np.testing.assert_allclose(normalize_columns(once), once, atol=1e-12)


class TestNeighbors:
    def test_path_middle(self):
        g = WorkflowGraph(path_adjacency(3), np.zeros((3, 1)))
        assert neighbors(g, 1) == [0, 2]

    def test_isolated(self):
        g = WorkflowGraph(np.zeros((2, 2)), np.zeros((2, 1)))
        assert g.neighbors(0) == []

    def test_star_center(self):
        a = np.zeros((4, 4), dtype=int)
        a[0, 1:] = a[1:, 0] = 1
        assert WorkflowGraph(a, np.zeros((4, 1))).neighbors(0) == [1, 2, 3]

    def test_out_of_range(self):
        g = WorkflowGraph(path_adjacency(3), np.zeros((3, 1)))
        with pytest.raises(IndexError):
            g.neighbors(3)

    @given(binary_square)
    def test_symmetric_relation(self, m):
        g = WorkflowGraph(symmetrize(m), np.zeros((m.shape[0], 1)))
        for u in range(g.n):
            for v in g.neighbors(u):
                assert u in g.neighbors(v)


class TestWorkflowGraph:
    def test_rejects_asymmetric(self):
        with pytest.raises(DataError):
            WorkflowGraph([[0, 1], [0, 0]], np.zeros((2, 1)))

    def test_rejects_bad_feature_rows(self):
        with pytest.raises(FormatError):
            WorkflowGraph(path_adjacency(3), np.zeros((2, 1)))

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            WorkflowGraph(path_adjacency(2), [[0.0], [np.inf]])

    def test_from_raw_shifts_and_normalizes(self):
        g = WorkflowGraph.from_raw([[0, 1], [0, 0]], [[1.0, 100.0], [3.0, 104.0]],
                                   timestamp_columns=[1])
        assert g.features.tolist() == [[0.0, 0.0], [1.0, 1.0]]
        assert g.adjacency.tolist() == [[0, 1], [1, 0]]

    def test_arrays_are_read_only(self):
        g = WorkflowGraph(path_adjacency(2), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            g.features[0, 0] = 1.0

    def test_label_guard(self):
        g = WorkflowGraph(path_adjacency(2), np.zeros((2, 1)), labels=[0, 1])
        assert g.labels.tolist() == [0, 1]
        with forbid_labels("a test"):
            with pytest.raises(LabelAccessError, match="a test"):
                g.labels
            assert g.has_labels
        assert g.labels is not None

    def test_permuted(self, rng):
        from conftest import random_graph
        g = random_graph(rng, 6, 2, labels=True)
        perm = rng.permutation(6)
        h = g.permuted(perm)
        assert np.array_equal(h.features, g.features[perm])
        assert np.array_equal(h.labels, g.labels[perm])
        assert np.array_equal(h.adjacency, g.adjacency[np.ix_(perm, perm)])


class TestSplit:
    @pytest.mark.parametrize("n, sizes", [(10, (6, 2, 2)), (5, (3, 1, 1))])
    def test_sizes(self, n, sizes):
        s = split_dataset(range(n))
        assert (len(s.train), len(s.val), len(s.test)) == sizes

    def test_deterministic(self):
        assert split_dataset(range(20), seed=3) == split_dataset(range(20), seed=3)

    def test_default_ratios(self):
        assert split_dataset(range(4)).ratios == (0.6, 0.2, 0.2)

    @pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.6, 0.3, 0.3), (1.0, 0.0, 0.0)])
    def test_bad_ratios(self, ratios):
        with pytest.raises(ConfigError):
            split_dataset(range(5), ratios)

    def test_duplicates_and_empty(self):
        with pytest.raises(ConfigError):
            split_dataset(["a", "a"])
        with pytest.raises(ConfigError):
            split_dataset([])

    @settings(max_examples=50)
    @given(st.integers(1, 200), st.integers(0, 2**32 - 1))
    def test_partition(self, n, seed):
        s = split_dataset(range(n), seed=seed)
        parts = [set(s.train), set(s.val), set(s.test)]
        assert set().union(*parts) == set(range(n))
        assert sum(map(len, parts)) == n
