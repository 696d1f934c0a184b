"""Attributed workflow graphs: preprocessing, neighbor queries, splitting."""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, FormatError, LabelAccessError

DEFAULT_SPLIT = (0.6, 0.2, 0.2)

_labels_forbidden: contextvars.ContextVar[str | None] = contextvars.ContextVar(
    "_labels_forbidden", default=None
)


@contextlib.contextmanager
def forbid_labels(where: str = "training"):
    """Make every read of :attr:`WorkflowGraph.labels` raise inside the block."""
    token = _labels_forbidden.set(where)
    try:
        yield
    finally:
        _labels_forbidden.reset(token)


def symmetrize(raw_adjacency) -> np.ndarray:
    """Undirected 0/1 adjacency from a directed one; self-loops are dropped."""
    a = np.asarray(raw_adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise FormatError(f"adjacency must be square, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise FormatError("adjacency entries must be 0 or 1")
    out = ((a != 0) | (a.T != 0)).astype(np.int8)
    np.fill_diagonal(out, 0)
    return out


def normalize_columns(x) -> np.ndarray:
    """Min-max scale each column to [0, 1]; constant columns become zeros."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise FormatError(f"feature matrix must be 2-d with n >= 1, got {x.shape}")
    bad = np.argwhere(~np.isfinite(x))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"non-finite feature value at row {i}, column {j}")
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    out = np.zeros_like(x)
    ok = span > 0
    out[:, ok] = (x[:, ok] - lo[ok]) / span[ok]
    return out


def shift_columns(x, columns: Sequence[int]) -> np.ndarray:
    """Subtract the column minimum from each listed column."""
    x = np.array(x, dtype=np.float64)
    for j in columns:
        x[:, j] -= x[:, j].min()
    return x


def adjacency_to_csr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row pointer and sorted column index arrays of a 0/1 matrix."""
    rows, cols = np.nonzero(a)
    indptr = np.zeros(a.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, cols.astype(np.int64)


class WorkflowGraph:
    """One preprocessed DAG execution.

    Parameters
    ----------
    adjacency : (n, n) array
        Symmetric 0/1 matrix with a zero diagonal.
    features : (n, d) array
        Finite node features, usually column-normalized.
    labels : (n,) array, optional
        Ground-truth 0/1 anomaly labels. Only evaluation code may read them;
        see :func:`forbid_labels`.
    node_ids : sequence of str, optional
        Defaults to ``"0" .. "n-1"``.
    graph_id : str
    feature_names : sequence of str, optional
    """

    def __init__(self, adjacency, features, labels=None, node_ids=None, graph_id="",
                 feature_names=None):
        a = np.array(adjacency, dtype=np.int8)
        x = np.array(features, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise FormatError(f"adjacency must be square, got shape {a.shape}")
        n = a.shape[0]
        if n < 1:
            raise FormatError("graph must have at least one node")
        if x.ndim != 2 or x.shape[0] != n:
            raise FormatError(f"features must have shape ({n}, d), got {x.shape}")
        if not np.isin(a, (0, 1)).all():
            raise DataError("adjacency entries must be 0 or 1")
        if (a != a.T).any() or np.diagonal(a).any():
            raise DataError("adjacency must be symmetric with a zero diagonal")
        if not np.isfinite(x).all():
            raise DataError("features contain non-finite values")
        y = None
        if labels is not None:
            y = np.array(labels, dtype=np.int8)
            if y.shape != (n,) or not np.isin(y, (0, 1)).all():
                raise DataError("labels must be a 0/1 vector of length n")
            y.setflags(write=False)
        if node_ids is None:
            node_ids = [str(i) for i in range(n)]
        node_ids = tuple(str(s) for s in node_ids)
        if len(node_ids) != n:
            raise FormatError("node_ids length differs from node count")
        a.setflags(write=False)
        x.setflags(write=False)
        self.adjacency = a
        self.features = x
        self._labels = y
        self.node_ids = node_ids
        self.graph_id = str(graph_id)
        self.feature_names = tuple(feature_names) if feature_names is not None else None
        indptr, indices = adjacency_to_csr(a)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self.indptr = indptr
        self.indices = indices

    @classmethod
    def from_raw(cls, raw_adjacency, raw_features, labels=None, node_ids=None, graph_id="",
                 feature_names=None, timestamp_columns=(), normalize=True):
        """Symmetrize, shift timestamp columns and column-normalize raw data."""
        a = symmetrize(raw_adjacency)
        x = np.asarray(raw_features, dtype=np.float64)
        if x.ndim == 2 and not np.isfinite(x).all():
            i, j = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite feature value at row {i}, column {j}")
        x = shift_columns(x, timestamp_columns)
        if normalize:
            x = normalize_columns(x)
        return cls(a, x, labels=labels, node_ids=node_ids, graph_id=graph_id,
                   feature_names=feature_names)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def has_labels(self) -> bool:
        return self._labels is not None

    @property
    def labels(self) -> np.ndarray | None:
        where = _labels_forbidden.get()
        if where is not None:
            raise LabelAccessError(f"ground-truth labels read during {where}")
        return self._labels

    def neighbors(self, u: int) -> list[int]:
        if not 0 <= u < self.n:
            raise IndexError(f"node index {u} out of range for n={self.n}")
        return self.indices[self.indptr[u]:self.indptr[u + 1]].tolist()

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def with_features(self, features) -> "WorkflowGraph":
        return WorkflowGraph(self.adjacency, features, labels=self._labels,
                             node_ids=self.node_ids, graph_id=self.graph_id,
                             feature_names=self.feature_names)

    def without_labels(self) -> "WorkflowGraph":
        return WorkflowGraph(self.adjacency, self.features, node_ids=self.node_ids,
                             graph_id=self.graph_id, feature_names=self.feature_names)

    def permuted(self, perm) -> "WorkflowGraph":
        """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
        perm = np.asarray(perm)
        y = None if self._labels is None else self._labels[perm]
        return WorkflowGraph(self.adjacency[np.ix_(perm, perm)], self.features[perm],
                             labels=y, node_ids=[self.node_ids[i] for i in perm],
                             graph_id=self.graph_id, feature_names=self.feature_names)

    def __repr__(self):
        return (f"WorkflowGraph(id={self.graph_id!r}, n={self.n}, d={self.d}, "
                f"edges={int(self.adjacency.sum()) // 2}, labels={self.has_labels})")


def neighbors(g: WorkflowGraph, u: int) -> list[int]:
    return g.neighbors(u)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple
    ratios: tuple = DEFAULT_SPLIT


def split_dataset(graph_ids, ratios=DEFAULT_SPLIT, seed: int = 0) -> DatasetSplit:
    """Seeded shuffle followed by contiguous cuts at the floor of each ratio."""
    ids = list(graph_ids)
    if not ids:
        raise ConfigError("cannot split an empty dataset")
    if len(set(ids)) != len(ids):
        raise ConfigError("graph ids must be unique")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three positive reals summing to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    cut1 = int(np.floor(n * ratios[0] + 1e-9))
    cut2 = int(np.floor(n * (ratios[0] + ratios[1]) + 1e-9))
    return DatasetSplit(tuple(shuffled[:cut1]), tuple(shuffled[cut1:cut2]),
                        tuple(shuffled[cut2:]), ratios)
