"""Logistic-regression fusion of the NTS/NWS features.

The model is fit by damped Newton iterations on a class-weighted,
L2-regularized mean log-loss (the bias is not penalized). The pattern
feature handed to the anomaly score is the benign-class probability,
floored at ``F_FLOOR`` so that dividing by it is always finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

F_FLOOR = 1e-6
SCHEMA = ("theta_norm", "omega_norm")
MODEL_FORMAT_VERSION = 1
REG_GRID = (0.01, 0.1, 1.0)


class TrainingError(ValueError):
    pass


class FeatureError(ValueError):
    pass


class FeatureRow(NamedTuple):
    node: int
    features: tuple
    label: int | None


@dataclass(frozen=True, eq=False)
class FeatureSet:
    nodes: np.ndarray
    X: np.ndarray
    y: np.ndarray | None = None

    def __len__(self):
        return len(self.nodes)

    def rows(self):
        for i, v in enumerate(self.nodes.tolist()):
            lab = None if self.y is None or self.y[i] < 0 else int(self.y[i])
            yield FeatureRow(v, tuple(self.X[i].tolist()), lab)

    def subset(self, idx) -> "FeatureSet":
        return FeatureSet(self.nodes[idx], self.X[idx], None if self.y is None else self.y[idx])


def build_features(nts: Mapping, nws: Mapping, labels=None) -> FeatureSet:
    """Pair ``[Ntheta(v), Nomega(v)]`` per node, ascending node id.

    ``labels`` is either a mapping ``node -> 0/1`` or an array indexed by
    node id where ``-1`` marks an unknown label.
    """
    if set(nts) != set(nws):
        missing = sorted(set(nts) ^ set(nws))
        raise FeatureError(f"NTS and NWS cover different nodes, e.g. {missing[:5]}")
    nodes = np.array(sorted(nts), dtype=np.int64)
    X = np.array([[nts[v], nws[v]] for v in nodes.tolist()], dtype=np.float64).reshape(-1, 2)
    y = None
    if labels is not None:
        if isinstance(labels, Mapping):
            y = np.array([labels.get(v, -1) for v in nodes.tolist()], dtype=np.int64)
        else:
            y = np.asarray(labels, dtype=np.int64)[nodes]
    return FeatureSet(nodes, X, y)


def features_from_scores(bs, labels=None) -> FeatureSet:
    """Array fast path of :func:`build_features` for a ``BehaviorScores``."""
    X = np.column_stack([bs.theta_norm, bs.omega_norm]).astype(np.float64).reshape(-1, 2)
    y = None
    if labels is not None:
        y = np.asarray(labels, dtype=np.int64)[bs.nodes]
    return FeatureSet(np.asarray(bs.nodes, dtype=np.int64), X, y)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def class_weights(y) -> np.ndarray:
    """Inverse-frequency sample weights, ``n / (2 * n_class)``."""
    y = np.asarray(y)
    n = len(y)
    n_pos = int((y == 1).sum())
    n_neg = n - n_pos
    w = np.empty(n)
    w[y == 1] = n / (2.0 * n_pos) if n_pos else 0.0
    w[y == 0] = n / (2.0 * n_neg) if n_neg else 0.0
    return w


def log_loss(params, X, y, sample_weight, reg):
    """Weighted mean log-loss plus ``reg/2 * |w|^2``; ``params = [w..., b]``."""
    z = X @ params[:-1] + params[-1]
    # log(1 + e^z) - y z, computed stably
    per = np.logaddexp(0.0, z) - y * z
    return float(np.dot(sample_weight, per) / sample_weight.sum()
                 + 0.5 * reg * np.dot(params[:-1], params[:-1]))


def log_loss_grad(params, X, y, sample_weight, reg):
    z = X @ params[:-1] + params[-1]
    resid = (sigmoid(z) - y) * sample_weight / sample_weight.sum()
    g = np.empty_like(params)
    g[:-1] = X.T @ resid + reg * params[:-1]
    g[-1] = resid.sum()
    return g


def log_loss_hessian(params, X, y, sample_weight, reg):
    z = X @ params[:-1] + params[-1]
    p = sigmoid(z)
    c = p * (1.0 - p) * sample_weight / sample_weight.sum()
    Xb = np.column_stack([X, np.ones(len(X))])
    H = Xb.T @ (Xb * c[:, None])
    H[:-1, :-1] += reg * np.eye(X.shape[1])
    return H


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    reg_strength: float
    iter_cap: int = 1000
    tol: float = 1e-6
    seed: int = 0
    schema: tuple = SCHEMA
    n_iter: int = 0
    converged: bool = False
    loss_history: list = field(default_factory=list)

    def decision(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.weights):
            raise FeatureError(f"expected {len(self.weights)} features, got shape {X.shape}")
        return X @ self.weights + self.bias

    def predict_proba(self, X):
        """P(label = 1 | x)."""
        return sigmoid(self.decision(X))

    def save(self, path):
        lines = [
            f"format_version = {MODEL_FORMAT_VERSION}",
            f"schema = {','.join(self.schema)}",
            f"weights = {','.join(repr(float(w)) for w in self.weights)}",
            f"bias = {float(self.bias)!r}",
            f"reg_strength = {float(self.reg_strength)!r}",
            f"iter_cap = {self.iter_cap}",
            f"tol = {self.tol!r}",
            f"seed = {self.seed}",
            f"n_iter = {self.n_iter}",
            f"converged = {int(self.converged)}",
        ]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        kv = {}
        for line in Path(path).read_text().splitlines():
            if line.strip() and not line.lstrip().startswith("#"):
                k, _, v = line.partition("=")
                kv[k.strip()] = v.strip()
        version = int(kv.get("format_version", -1))
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        return cls(
            weights=np.array([float(x) for x in kv["weights"].split(",")]),
            bias=float(kv["bias"]),
            reg_strength=float(kv["reg_strength"]),
            iter_cap=int(kv["iter_cap"]),
            tol=float(kv["tol"]),
            seed=int(kv["seed"]),
            schema=tuple(kv["schema"].split(",")),
            n_iter=int(kv.get("n_iter", 0)),
            converged=bool(int(kv.get("converged", 0))),
        )


def fit_logistic(X, y, reg=0.1, sample_weight=None, iter_cap=1000, tol=1e-6) -> LogisticModel:
    """Damped Newton on the regularized weighted log-loss.

    Stops once the gradient norm drops below ``tol`` or after ``iter_cap``
    iterations. Backtracking keeps the loss non-increasing.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if sample_weight is None:
        sample_weight = class_weights(y)
    params = np.zeros(X.shape[1] + 1)
    loss = log_loss(params, X, y, sample_weight, reg)
    history = [loss]
    converged = False
    it = 0
    for it in range(1, iter_cap + 1):
        g = log_loss_grad(params, X, y, sample_weight, reg)
        if np.linalg.norm(g) < tol:
            converged = True
            it -= 1
            break
        H = log_loss_hessian(params, X, y, sample_weight, reg)
        # ridge on the bias direction when the data give no curvature
        H += 1e-12 * np.eye(len(params))
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        t = 1.0
        while True:
            cand = params - t * step
            new_loss = log_loss(cand, X, y, sample_weight, reg)
            if new_loss <= loss - 1e-4 * t * float(g @ step) or t < 1e-10:
                break
            t *= 0.5
        if new_loss > loss:
            break
        params, loss = cand, new_loss
        history.append(loss)
    else:
        g = log_loss_grad(params, X, y, sample_weight, reg)
        converged = bool(np.linalg.norm(g) < tol)
    return LogisticModel(params[:-1].copy(), float(params[-1]), reg, iter_cap=iter_cap,
                         tol=tol, n_iter=it, converged=converged, loss_history=history)


def stratified_split(y, fractions=(0.8, 0.1, 0.1), seed=0):
    """Seeded stratified split into train/validation/test index arrays."""
    fractions = np.asarray(fractions, dtype=np.float64)
    if len(fractions) != 3 or np.any(fractions < 0) or not math.isclose(fractions.sum(), 1.0):
        raise ValueError(f"split fractions must be three non-negatives summing to 1, got {fractions}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    parts = [[], [], []]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        cuts = np.floor(np.cumsum(fractions)[:2] * len(idx) + 0.5).astype(int)
        for p, chunk in zip(parts, np.split(idx, cuts)):
            p.append(chunk)
    return tuple(np.sort(np.concatenate(p)) if p else np.empty(0, dtype=np.int64) for p in parts)


def stratified_folds(y, n_folds=10, seed=0) -> np.ndarray:
    """Fold id per sample, each class dealt round-robin after a seeded shuffle."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = (np.arange(len(idx)) + offset) % n_folds
        offset += len(idx)
    return fold


def _select_and_fit(X_tr, y_tr, X_val, y_val, reg_grid, iter_cap, tol):
    if len(np.unique(y_tr)) < 2:
        raise TrainingError("training fold holds a single class; resample with a stratified split")
    best = None
    w_tr = class_weights(y_tr)
    for reg in reg_grid:
        model = fit_logistic(X_tr, y_tr, reg, w_tr, iter_cap, tol)
        if len(y_val):
            w_val = class_weights(y_val)
            if w_val.sum() == 0:
                w_val = np.ones(len(y_val))
            score = log_loss(np.append(model.weights, model.bias), X_val,
                             y_val.astype(float), w_val, 0.0)
        else:
            score = 0.0
        if best is None or score < best[0]:
            best = (score, model)
    return best[1]


def train(features: FeatureSet, split=(0.8, 0.1, 0.1), seed=0, reg_grid=REG_GRID,
          iter_cap=1000, tol=1e-6) -> LogisticModel:
    """Fit on the training fold, choosing ``reg_strength`` on the validation fold.

    Only rows with a known label (0 or 1) take part.
    """
    if features.y is None:
        raise TrainingError("features carry no labels")
    known = np.flatnonzero(features.y >= 0)
    X, y = features.X[known], features.y[known]
    tr, val, _ = stratified_split(y, split, seed)
    model = _select_and_fit(X[tr], y[tr], X[val], y[val], reg_grid, iter_cap, tol)
    model.seed = seed
    return model


def split_nodes(features: FeatureSet, split=(0.8, 0.1, 0.1), seed=0):
    """Node ids of the train/validation/test folds used by :func:`train`."""
    known = np.flatnonzero(features.y >= 0)
    parts = stratified_split(features.y[known], split, seed)
    return tuple(features.nodes[known[p]] for p in parts)


@dataclass(frozen=True, eq=False)
class PatternFeatureSet:
    nodes: np.ndarray
    f_value: np.ndarray
    p_illicit: np.ndarray

    def as_dict(self) -> dict:
        return dict(zip(self.nodes.tolist(), self.f_value.tolist()))


def predict_f(model: LogisticModel, features: FeatureSet) -> PatternFeatureSet:
    z = model.decision(features.X)
    p_benign = sigmoid(-z)
    f = np.clip(p_benign, F_FLOOR, 1.0)
    return PatternFeatureSet(features.nodes, f, sigmoid(z))


def crossfit_f(features: FeatureSet, n_folds=10, seed=0, reg_grid=REG_GRID,
               iter_cap=1000, tol=1e-6) -> PatternFeatureSet:
    """Out-of-fold pattern features for every row.

    Labeled rows are dealt into ``n_folds`` stratified folds. For fold
    ``i`` the model is trained on all folds except ``i`` and ``i+1``, with
    ``i+1`` as the validation fold, so each fit sees the same 80/10/10
    proportions at ``n_folds=10``. Unlabeled rows get the mean prediction
    of all fold models.
    """
    if features.y is None:
        raise TrainingError("features carry no labels")
    known = np.flatnonzero(features.y >= 0)
    fold = np.full(len(features), -1)
    fold[known] = stratified_folds(features.y[known], n_folds, seed)
    z = np.zeros(len(features))
    unknown = fold < 0
    for i in range(n_folds):
        val_fold = (i + 1) % n_folds
        tr = (fold >= 0) & (fold != i) & (fold != val_fold)
        val = fold == val_fold
        model = _select_and_fit(features.X[tr], features.y[tr], features.X[val],
                                features.y[val], reg_grid, iter_cap, tol)
        test = fold == i
        z[test] = model.decision(features.X[test])
        if unknown.any():
            z[unknown] += model.decision(features.X[unknown]) / n_folds
    f = np.clip(sigmoid(-z), F_FLOOR, 1.0)
    return PatternFeatureSet(features.nodes.copy(), f, sigmoid(z))


def write_features(fs: FeatureSet, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["node_id", *SCHEMA, "label"])
        for i, v in enumerate(fs.nodes.tolist()):
            lab = -1 if fs.y is None else int(fs.y[i])
            wr.writerow([v, repr(float(fs.X[i, 0])), repr(float(fs.X[i, 1])), lab])


def read_features(path) -> FeatureSet:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return FeatureSet(np.empty(0, dtype=np.int64), np.empty((0, 2)), np.empty(0, dtype=np.int64))
    y = data[:, 3].astype(np.int64) if data.shape[1] > 3 else None
    return FeatureSet(data[:, 0].astype(np.int64), data[:, 1:3].copy(), y)


def write_predictions(pfs: PatternFeatureSet, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["node_id", "f_value"])
        for v, f in zip(pfs.nodes.tolist(), pfs.f_value.tolist()):
            wr.writerow([v, repr(f)])
