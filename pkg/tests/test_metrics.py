import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlrank.metrics import (MetricError, accuracy_at_k, auc, auc_pairwise, f1_score,
                             hits_at_k, precision_at_k, recall_at_k)


def test_auc_four_pairs():
    # pos {0.9, 0.4}, neg {0.6, 0.1}: 3 of 4 pairs ordered
    assert auc([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0]) == 0.75


def test_auc_extremes():
    assert auc([3, 4, 1, 2], [1, 1, 0, 0]) == 1.0
    assert auc([1, 1, 1, 1], [1, 0, 1, 0]) == 0.5
    with pytest.raises(MetricError):
        auc([1, 2], [1, 1])


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 500).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 20), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n))))
def test_auc_equals_pairwise(data):
    scores, labels = data
    if len(set(labels)) < 2:
        return
    assert auc(scores, labels) == auc_pairwise(scores, labels)


# (ranking, positives, k, hits)
FIXTURES = [
    (["a", "b", "c", "d"], {"a", "c"}, 2, 1),
    (["a", "b", "c", "d"], {"a", "b"}, 2, 2),
    (["d", "c", "b", "a"], {"a"}, 3, 0),
    (["x", "y", "z"], {"x", "y", "z"}, 1, 1),
    (list("abcdefgh"), {"b", "e", "h"}, 5, 2),
]


@pytest.mark.parametrize("ranking,positives,k,hits", FIXTURES)
def test_at_k_confusion_counts(ranking, positives, k, hits):
    ids = list(range(len(ranking)))
    labels = {i: int(r in positives) for i, r in enumerate(ranking)}
    n, P = len(ranking), len(positives)
    tp, fp = hits, k - hits
    fn = P - tp
    tn = n - tp - fp - fn
    assert hits_at_k(ids, labels, k) == tp
    assert precision_at_k(ids, labels, k) == tp / k
    assert recall_at_k(ids, labels, k) == tp / P
    assert accuracy_at_k(ids, labels, k) == (tp + tn) / n
    p, r = tp / k, tp / P
    assert f1_score(p, r) == (0.0 if tp == 0 else 2 * p * r / (p + r))


def test_recall_needs_positives():
    with pytest.raises(MetricError, match="undefined"):
        recall_at_k([0, 1], [0, 0], 1)


def test_k_range():
    for k in (0, 3):
        with pytest.raises(MetricError):
            precision_at_k([0, 1], [1, 0], k)


def test_random_precision_near_base_rate():
    rng = np.random.default_rng(0)
    labels = (rng.uniform(size=1000) < 0.3).astype(int)
    ranking = np.argsort(-rng.uniform(size=1000))
    assert abs(precision_at_k(ranking, labels, 100) - labels.mean()) <= 0.1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=60), st.integers(0, 10**6))
def test_precision_equals_recall_at_positive_count(labels, seed):
    if sum(labels) == 0:
        return
    y = np.array(labels)
    ranking = np.random.default_rng(seed).permutation(len(y))
    k = int(y.sum())
    assert precision_at_k(ranking, y, k) == recall_at_k(ranking, y, k)
    perfect = np.argsort(-y, kind="stable")
    precs = [precision_at_k(perfect, y, j) for j in range(1, len(y) + 1)]
    assert np.all(np.diff(precs) <= 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=2, max_size=60),
       st.integers(0, 10**6))
def test_metrics_invariant_to_relabeling(rows, seed):
    scores = np.array([s for s, _ in rows])
    y = np.array([l for _, l in rows])
    if len(set(y)) < 2:
        return
    perm = np.random.default_rng(seed).permutation(len(y))
    assert auc(scores[perm], y[perm]) == auc(scores, y)
    order = np.lexsort((np.arange(len(y)), -scores))
    k = int(y.sum())
    # renaming ids keeps the ranked label sequence, hence every @k metric
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    renamed = inv[order]
    y_renamed = y[perm]
    assert precision_at_k(renamed, y_renamed, k) == precision_at_k(order, y, k)
