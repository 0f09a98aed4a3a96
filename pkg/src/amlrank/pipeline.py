"""End-to-end detection runs and their evaluation.

Modes
-----
``full``
    PPR, NTS/NWS, logistic fusion, ``sigma = pi / F``.
``tw``
    Classifier suspicion alone, ``sigma = 1 / F``, with NTS/NWS computed
    over every non-isolated node since there is no PPR visited set.
``random``
    Aggregated PPR alone, ``sigma = pi``.

Fold protocol
-------------
``crossfit`` (default) gives every labeled node an out-of-fold pattern
feature from rotating 80/10/10 splits and evaluates on all labeled nodes.
``test`` trains one model on a single 80/10/10 split and evaluates on the
held-out test fold only.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import config as config_mod
from .anomaly import AnomalyScoreSet, anomaly_scores, rank_nodes, write_suspect_report
from .behavior import BehaviorScores, behavior_scores
from .classifier import (LogisticModel, PatternFeatureSet, crossfit_f, features_from_scores,
                         predict_f, split_nodes, train)
from .graph import TransactionGraph, load_graph
from .metrics import MetricError, accuracy_at_k, auc, f1_score, precision_at_k, recall_at_k
from .ppr import PPRConfig, PPRScoreSet, multi_source_ppr


class Mode(str, Enum):
    FULL = "full"
    NORMALIZED_TW = "tw"
    RANDOM_ONLY = "random"


MODE_ALIASES = {"full": Mode.FULL, "tw": Mode.NORMALIZED_TW, "normalizedtw": Mode.NORMALIZED_TW,
                "normalized_tw": Mode.NORMALIZED_TW, "random": Mode.RANDOM_ONLY,
                "randomonly": Mode.RANDOM_ONLY, "random_only": Mode.RANDOM_ONLY}


def parse_mode(mode) -> Mode:
    if isinstance(mode, Mode):
        return mode
    try:
        return MODE_ALIASES[str(mode).lower()]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; choose full, tw or random") from None


@dataclass
class EvalReport:
    precision_at_k: float
    recall_at_k: float
    f1: float
    accuracy: float
    auc: float
    k: int
    mode: str
    fold: str
    n_eval: int
    n_positive: int
    n_scored: int
    seed: int
    config_hash: str
    dataset_id: str
    wall_clock_s: float = 0.0

    def as_dict(self, wall_clock=True) -> dict:
        d = asdict(self)
        if not wall_clock:
            d.pop("wall_clock_s")
        return d

    def to_json(self, wall_clock=True) -> str:
        return json.dumps(self.as_dict(wall_clock), sort_keys=True, indent=1) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class Detection:
    mode: Mode
    scores: AnomalyScoreSet
    pps: PPRScoreSet | None
    behavior: BehaviorScores | None
    patterns: PatternFeatureSet | None
    model: LogisticModel | None
    eval_nodes: np.ndarray
    extras: dict = field(default_factory=dict)


def _classifier_args(cfg):
    return dict(
        reg_grid=config_mod.floats(cfg["classifier.reg_grid"]),
        iter_cap=int(cfg["classifier.iter_cap"]),
        tol=float(cfg["classifier.tol"]),
    )


def detect(g: TransactionGraph, cfg=None, mode="full", threads=1) -> Detection:
    """Run the stages of ``mode`` on a labeled graph and rank every node."""
    cfg = config_mod.resolve(overrides=cfg)
    mode = parse_mode(mode)
    if g.labels is None:
        raise ValueError("detection with a trained fusion model needs node labels")
    fold = cfg["eval.fold"]
    seed = int(cfg["classifier.seed"])
    labels = g.labels.astype(np.int64)

    pps = None
    if mode is not Mode.NORMALIZED_TW:
        pps = multi_source_ppr(g, None, PPRConfig.from_mapping(cfg), threads=threads)
        scored = pps.visited
    else:
        scored = np.flatnonzero((g.in_degree + g.out_degree) > 0)

    if mode is Mode.RANDOM_ONLY:
        sas = anomaly_scores(pps, dict.fromkeys(scored.tolist(), 1.0)
                             if len(scored) else {}, g.n_nodes)
        bs = model = pfs = None
        if fold == "test":
            bs = behavior_scores(g, scored)
            eval_nodes = split_nodes(features_from_scores(bs, labels),
                                     config_mod.floats(cfg["classifier.split"]), seed)[2]
        else:
            eval_nodes = np.flatnonzero(labels >= 0)
        return Detection(mode, sas, pps, bs, None, None, eval_nodes)

    bs = behavior_scores(g, scored)
    feats = features_from_scores(bs, labels)
    model = None
    if fold == "crossfit":
        pfs = crossfit_f(feats, n_folds=int(cfg["eval.n_folds"]), seed=seed,
                         **_classifier_args(cfg))
        eval_nodes = np.flatnonzero(labels >= 0)
    elif fold == "test":
        split = config_mod.floats(cfg["classifier.split"])
        model = train(feats, split=split, seed=seed, **_classifier_args(cfg))
        pfs = predict_f(model, feats)
        eval_nodes = split_nodes(feats, split, seed)[2]
    else:
        raise ValueError(f"unknown fold protocol {fold!r}; choose crossfit or test")

    if mode is Mode.FULL:
        sas = anomaly_scores(pps, pfs)
    else:
        inv = np.zeros(g.n_nodes)
        inv[pfs.nodes] = 1.0 / pfs.f_value
        mask = np.zeros(g.n_nodes, dtype=bool)
        mask[pfs.nodes] = True
        f_arr = np.full(g.n_nodes, np.nan)
        f_arr[pfs.nodes] = pfs.f_value
        sas = AnomalyScoreSet(inv, mask, rank_nodes(inv, mask), np.zeros(g.n_nodes), f_arr)
    return Detection(mode, sas, pps, bs, pfs, model, eval_nodes)


def evaluate(det: Detection, labels, k=None):
    """Metrics over ``det.eval_nodes`` in ranking order."""
    pos = det.scores.rank_of()
    nodes = det.eval_nodes[np.argsort(pos[det.eval_nodes], kind="stable")]
    y = np.asarray(labels, dtype=np.int64)[nodes]
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("evaluation set holds no labeled anomalies; recall is undefined")
    k = n_pos if k in (None, "auto") else int(k)
    p = precision_at_k(nodes, labels, k)
    r = recall_at_k(nodes, labels, k)
    # unscored nodes sit below every scored node (sigma >= 0)
    sas = det.scores
    order_score = np.where(sas.scored[nodes], sas.sigma[nodes], -1.0)
    return dict(precision_at_k=p, recall_at_k=r, f1=f1_score(p, r),
                accuracy=accuracy_at_k(nodes, labels, k),
                auc=auc(order_score, y), k=k, n_eval=len(nodes), n_positive=n_pos)


def run_pipeline(dataset, cfg=None, mode="full", k=None, threads=None, out_dir=None) -> EvalReport:
    """Detect and evaluate on a labeled dataset (graph or graph directory).

    With ``out_dir`` the ranked suspect report, the metrics report, the
    resolved config and a run manifest are written there.
    """
    start = time.perf_counter()
    g = dataset if isinstance(dataset, TransactionGraph) else load_graph(dataset)
    cfg = config_mod.resolve(overrides=cfg)
    mode = parse_mode(mode)
    cfg["eval.mode"] = mode.value
    if k is not None:
        cfg["eval.k"] = str(k)
    if threads is None:
        threads = int(cfg.get("run.threads", 1))
    det = detect(g, cfg, mode, threads=threads)
    m = evaluate(det, g.labels, cfg["eval.k"])
    report = EvalReport(**m, mode=mode.value, fold=cfg["eval.fold"],
                        n_scored=int(det.scores.scored.sum()), seed=int(cfg["ppr.seed"]),
                        config_hash=config_mod.config_hash(cfg), dataset_id=g.checksum(),
                        wall_clock_s=time.perf_counter() - start)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_suspect_report(det.scores, out / "suspects.csv", g.addresses, det.behavior)
        report.write(out / "metrics.json")
        config_mod.write_kv(cfg, out / "config.resolved")
        write_manifest(out / "manifest.json", cfg, g)
    return report


def write_manifest(path, cfg, g):
    manifest = {
        "config_hash": config_mod.config_hash(cfg),
        "seed": int(cfg["ppr.seed"]),
        "classifier_seed": int(cfg["classifier.seed"]),
        "dataset_checksum": g.checksum(),
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
