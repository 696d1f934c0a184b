"""Rank-based detection metrics.

Ordering is by descending score with ties broken by ascending index, so every
metric is reproducible bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .decoder import rank_order
from .errors import MetricError


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise MetricError(f"{s.size} scores but {y.size} labels")
    if s.size == 0:
        raise MetricError("empty input")
    if not np.isin(y, (0, 1)).all():
        raise MetricError("labels must be 0 or 1")
    if not np.isfinite(s).all():
        raise MetricError("scores must be finite")
    return s, y.astype(np.int64)


def _average_ranks(s):
    """1-based ranks of ``s`` ascending; tied values share their mean rank."""
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    ranks = np.empty(s.size)
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return ranks


def roc_auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counting one half."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC-AUC needs both positive and negative labels")
    u = _average_ranks(s)[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean of the precision at the rank of each positive."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("average precision needs at least one positive label")
    hits = y[rank_order(s)]
    tp = np.cumsum(hits)
    ranks = np.arange(1, s.size + 1)
    return math.fsum((tp[hits == 1] / ranks[hits == 1]).tolist()) / n_pos


def precision_at_k(scores, labels, k: int) -> float:
    s, y = _check(scores, labels)
    if not 1 <= int(k) <= s.size:
        raise MetricError(f"k must lie in [1, {s.size}], got {k}")
    k = int(k)
    return int(y[rank_order(s)[:k]].sum()) / k


def summary(scores, labels, ks=(5, 20)) -> dict:
    """All metrics in one dict; ``precision@all`` uses k = n."""
    s, y = _check(scores, labels)
    out = {"roc_auc": roc_auc(s, y), "average_precision": average_precision(s, y)}
    for k in ks:
        if k <= s.size:
            out[f"precision@{k}"] = precision_at_k(s, y, k)
    out["precision@all"] = precision_at_k(s, y, s.size)
    out["n"] = int(s.size)
    out["n_pos"] = int(y.sum())
    return out
