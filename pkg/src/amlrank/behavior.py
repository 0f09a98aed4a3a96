"""Normalized timestamp (NTS) and weight (NWS) scores.

For a node ``v``:

* ``theta(v) = |spread(out timestamps) - spread(in timestamps)|`` where
  ``spread`` is max minus min, and 0 for fewer than two timestamps.
* ``omega(v) = |sum(in weights) - sum(out weights)|``.

Both are min-max normalized over the scored node set; a constant score
vector normalizes to all zeros.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .graph import TransactionGraph


@dataclass(frozen=True, eq=False)
class BehaviorScores:
    nodes: np.ndarray
    theta_raw: np.ndarray
    theta_norm: np.ndarray
    omega_raw: np.ndarray
    omega_norm: np.ndarray

    def __len__(self):
        return len(self.nodes)

    @property
    def nts(self) -> dict:
        return dict(zip(self.nodes.tolist(), self.theta_norm.tolist()))

    @property
    def nws(self) -> dict:
        return dict(zip(self.nodes.tolist(), self.omega_norm.tolist()))


def min_max(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    out = (values - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def _spread(g, ptr, edges):
    n = g.n_nodes
    ts = g.timestamp[edges]
    owner = np.repeat(np.arange(n), np.diff(ptr))
    hi = np.full(n, np.iinfo(np.int64).min, dtype=np.int64)
    lo = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    np.maximum.at(hi, owner, ts)
    np.minimum.at(lo, owner, ts)
    spread = np.where(np.diff(ptr) >= 2, hi - lo, 0)
    return spread.astype(np.float64)


def _as_nodes(g, nodes):
    if nodes is None:
        return np.arange(g.n_nodes, dtype=np.int64)
    nodes = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes,
                                 dtype=np.int64))
    if len(nodes) and (nodes[0] < 0 or nodes[-1] >= g.n_nodes):
        raise KeyError("scored node outside the graph")
    return nodes


def timestamp_spreads(g: TransactionGraph):
    """Per-node ``(theta_in, theta_out)`` over all nodes."""
    return _spread(g, g.in_ptr, g.in_edges), _spread(g, g.out_ptr, g.out_edges)


def timestamp_scores(g: TransactionGraph, nodes=None):
    """Raw and min-max normalized timestamp asymmetry for ``nodes`` (ascending)."""
    nodes = _as_nodes(g, nodes)
    theta_in, theta_out = timestamp_spreads(g)
    raw = np.abs(theta_out[nodes] - theta_in[nodes])
    return raw, min_max(raw)


def weight_scores(g: TransactionGraph, nodes=None):
    """Raw and min-max normalized in/out weight imbalance for ``nodes`` (ascending)."""
    nodes = _as_nodes(g, nodes)
    w_in = np.bincount(g.dst, weights=g.weight, minlength=g.n_nodes)
    w_out = np.bincount(g.src, weights=g.weight, minlength=g.n_nodes)
    raw = np.abs(w_in[nodes] - w_out[nodes])
    return raw, min_max(raw)


def behavior_scores(g: TransactionGraph, nodes=None) -> BehaviorScores:
    nodes = _as_nodes(g, nodes)
    theta_raw, theta_norm = timestamp_scores(g, nodes)
    omega_raw, omega_norm = weight_scores(g, nodes)
    return BehaviorScores(nodes, theta_raw, theta_norm, omega_raw, omega_norm)


def write_scores(bs: BehaviorScores, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["node_id", "theta_raw", "theta_norm", "omega_raw", "omega_norm"])
        for row in zip(bs.nodes.tolist(), bs.theta_raw.tolist(), bs.theta_norm.tolist(),
                       bs.omega_raw.tolist(), bs.omega_norm.tolist()):
            wr.writerow([row[0]] + [repr(x) for x in row[1:]])


def read_scores(path) -> BehaviorScores:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.empty((0, 5))
    return BehaviorScores(data[:, 0].astype(np.int64), data[:, 1], data[:, 2],
                          data[:, 3], data[:, 4])
