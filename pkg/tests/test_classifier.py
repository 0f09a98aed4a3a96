import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlrank.behavior import BehaviorScores
from amlrank.classifier import (F_FLOOR, FeatureError, FeatureSet, LogisticModel, TrainingError,
                                build_features, class_weights, crossfit_f, features_from_scores,
                                fit_logistic, log_loss, log_loss_grad, log_loss_hessian,
                                predict_f, read_features, sigmoid, split_nodes, stratified_folds,
                                stratified_split, train, write_features)
from amlrank.metrics import auc


def test_build_features():
    fs = build_features({3: 0.2, 1: 0.0}, {3: 0.7, 1: 1.0}, {3: 1})
    assert fs.nodes.tolist() == [1, 3]
    assert fs.X.tolist() == [[0.0, 1.0], [0.2, 0.7]]
    assert fs.y.tolist() == [-1, 1]
    assert list(fs.rows())[1] == (3, (0.2, 0.7), 1)


def test_build_features_empty_and_mismatch():
    assert len(build_features({}, {})) == 0
    with pytest.raises(FeatureError):
        build_features({1: 0.1}, {2: 0.3})


def test_features_from_scores_matches_build():
    bs = BehaviorScores(np.array([0, 2]), np.zeros(2), np.array([0.1, 0.9]),
                        np.zeros(2), np.array([0.5, 0.4]))
    a = features_from_scores(bs, np.array([0, -1, 1]))
    b = build_features(bs.nts, bs.nws, np.array([0, -1, 1]))
    assert a.X.tolist() == b.X.tolist() and a.y.tolist() == b.y.tolist()


def _problem(seed, n=40):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    y = (rng.uniform(size=n) < sigmoid(3 * X[:, 0] - 2 * X[:, 1])).astype(float)
    y[:2] = [0, 1]
    return X, y, class_weights(y)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    X, y, w = _problem(seed)
    rng = np.random.default_rng(100 + seed)
    params = rng.normal(0, 2, 3)
    h = 1e-6
    num = np.array([(log_loss(params + h * e, X, y, w, 0.1) - log_loss(params - h * e, X, y, w, 0.1))
                    / (2 * h) for e in np.eye(3)])
    ana = log_loss_grad(params, X, y, w, 0.1)
    assert np.linalg.norm(ana - num) <= 1e-5 * max(np.linalg.norm(num), 1e-8)


def test_hessian_matches_finite_differences():
    X, y, w = _problem(0)
    params = np.array([0.3, -0.7, 0.1])
    h = 1e-6
    num = np.column_stack([(log_loss_grad(params + h * e, X, y, w, 0.5)
                            - log_loss_grad(params - h * e, X, y, w, 0.5)) / (2 * h)
                           for e in np.eye(3)])
    assert np.allclose(log_loss_hessian(params, X, y, w, 0.5), num, atol=1e-7)


def test_bias_not_penalized():
    X, y, w = _problem(1)
    p = np.array([0.0, 0.0, 5.0])
    assert log_loss(p, X, y, w, 10.0) == log_loss(p, X, y, w, 0.0)


def test_separable_toy_set():
    X = np.array([[0.0, 0.0], [1.0, 1.0]] * 20)
    y = np.array([0, 1] * 20)
    m = fit_logistic(X, y, reg=0.01)
    assert np.all((m.predict_proba(X) > 0.5) == (y == 1))


def test_loss_never_increases():
    X, y, _ = _problem(3, 200)
    m = fit_logistic(X, y, reg=0.01)
    assert np.all(np.diff(m.loss_history) <= 1e-15)
    assert m.converged


def test_duplicated_rows_same_boundary():
    X, y, _ = _problem(4, 100)
    a = fit_logistic(X, y, reg=0.1, tol=1e-10)
    b = fit_logistic(np.vstack([X, X]), np.concatenate([y, y]), reg=0.1, tol=1e-10)
    assert np.allclose(a.weights, b.weights, atol=1e-6)
    assert abs(a.bias - b.bias) <= 1e-6


def test_random_labels_give_chance_auc():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(1000, 2))
    y = rng.integers(0, 2, 1000)
    fs = FeatureSet(np.arange(1000), X, y)
    m = train(fs, seed=0)
    _, val, _ = split_nodes(fs, seed=0)
    assert abs(auc(m.predict_proba(X[val]), y[val]) - 0.5) <= 0.1


def test_single_class_training_fold():
    fs = FeatureSet(np.arange(20), np.zeros((20, 2)), np.zeros(20, dtype=int))
    with pytest.raises(TrainingError, match="stratified"):
        train(fs)


def test_train_is_deterministic():
    X, y, _ = _problem(5, 300)
    fs = FeatureSet(np.arange(300), X, y.astype(int))
    a, b = train(fs, seed=3), train(fs, seed=3)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias
    assert a.reg_strength in (0.01, 0.1, 1.0)


def test_predict_f_rules():
    fs = FeatureSet(np.arange(3), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), None)
    zero = LogisticModel(np.zeros(2), 0.0, 0.1)
    assert predict_f(zero, fs).f_value.tolist() == [0.5] * 3
    sure = LogisticModel(np.array([np.log(999.0), 30.0]), 0.0, 0.1)
    f = predict_f(sure, fs).f_value
    assert f[1] == pytest.approx(0.001)
    assert f[2] == F_FLOOR
    with pytest.raises(FeatureError):
        LogisticModel(np.zeros(3), 0.0, 0.1).decision(fs.X)


def test_model_roundtrip(tmp_path):
    m = LogisticModel(np.array([0.1234567890123, -2.5]), 0.75, 0.1, seed=4, n_iter=7, converged=True)
    m.save(tmp_path / "m.txt")
    back = LogisticModel.load(tmp_path / "m.txt")
    assert back.weights.tobytes() == m.weights.tobytes()
    assert (back.bias, back.reg_strength, back.seed, back.n_iter, back.converged) == \
        (0.75, 0.1, 4, 7, True)


def test_model_version_checked(tmp_path):
    (tmp_path / "m.txt").write_text("format_version = 99\n")
    with pytest.raises(ValueError):
        LogisticModel.load(tmp_path / "m.txt")


def test_features_roundtrip(tmp_path):
    fs = FeatureSet(np.array([2, 5]), np.array([[0.1, 0.2], [1.0 / 3, 0.0]]), np.array([1, -1]))
    write_features(fs, tmp_path / "f.csv")
    back = read_features(tmp_path / "f.csv")
    assert back.X.tobytes() == fs.X.tobytes()
    assert back.y.tolist() == [1, -1] and back.nodes.tolist() == [2, 5]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(20, 200), st.integers(2, 20))
def test_stratified_split_partitions(seed, n, n_pos):
    y = np.zeros(n, dtype=int)
    y[:min(n_pos, n - 1)] = 1
    parts = stratified_split(y, (0.8, 0.1, 0.1), seed)
    allidx = np.concatenate(parts)
    assert sorted(allidx.tolist()) == list(range(n))
    tr = parts[0]
    assert abs(y[tr].mean() - y.mean()) <= 1.0 / len(tr) + 1e-9 + 1.0 / max(1, y.sum())


def test_stratified_folds_balanced():
    y = np.array([1] * 20 + [0] * 180)
    fold = stratified_folds(y, 10, 0)
    assert all((y[fold == i] == 1).sum() == 2 for i in range(10))
    assert np.bincount(fold).tolist() == [20] * 10


def test_bad_split():
    with pytest.raises(ValueError):
        stratified_split([0, 1], (0.5, 0.5, 0.5))


def test_crossfit_out_of_fold():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(200, 2))
    y = (X[:, 0] > 0.7).astype(int)
    y[-10:] = -1
    pfs = crossfit_f(FeatureSet(np.arange(200), X, y), n_folds=10, seed=0)
    assert np.all((pfs.f_value >= F_FLOOR) & (pfs.f_value <= 1))
    known = y >= 0
    assert auc(-pfs.f_value[known], y[known]) > 0.95
