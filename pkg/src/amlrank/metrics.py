"""Ranking metrics: Precision@K, Recall@K, F1, accuracy and AUC."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


def _labels_for(ranking, labels):
    ranking = np.asarray(ranking, dtype=np.int64)
    if isinstance(labels, Mapping):
        try:
            y = np.array([labels[v] for v in ranking.tolist()], dtype=np.int64)
        except KeyError as exc:
            raise MetricError(f"no label for ranked node {exc.args[0]}") from None
    else:
        y = np.asarray(labels, dtype=np.int64)[ranking]
    if np.any((y != 0) & (y != 1)):
        raise MetricError("every ranked node needs a 0/1 label")
    return y


def _check_k(k, n):
    if int(k) != k or not 1 <= k <= n:
        raise MetricError(f"k must lie in 1..{n}, got {k}")
    return int(k)


def hits_at_k(ranking, labels, k) -> int:
    y = _labels_for(ranking, labels)
    k = _check_k(k, len(y))
    return int(y[:k].sum())


def precision_at_k(ranking, labels, k) -> float:
    """Share of true anomalies among the first ``k`` ranked nodes."""
    return hits_at_k(ranking, labels, k) / int(k)


def recall_at_k(ranking, labels, k) -> float:
    """Share of all anomalies (among ranked nodes) found in the first ``k``."""
    y = _labels_for(ranking, labels)
    k = _check_k(k, len(y))
    pos = int(y.sum())
    if pos == 0:
        raise MetricError("recall is undefined without positive labels")
    return int(y[:k].sum()) / pos


def f1_score(precision, recall) -> float:
    return 0.0 if precision + recall == 0 else 2.0 * precision * recall / (precision + recall)


def accuracy_at_k(ranking, labels, k) -> float:
    """Accuracy when the top ``k`` are predicted anomalous and the rest normal."""
    y = _labels_for(ranking, labels)
    k = _check_k(k, len(y))
    pred = np.zeros(len(y), dtype=np.int64)
    pred[:k] = 1
    return float((pred == y).mean())


def auc(scores, labels) -> float:
    """ROC AUC via the Mann-Whitney rank sum; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes")
    ranks = rankdata(scores)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pairwise(scores, labels) -> float:
    """Brute-force AUC over all positive/negative pairs (test oracle)."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    pos, neg = scores[y == 1], scores[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("AUC needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)
