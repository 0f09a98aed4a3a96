"""Anomaly score ``sigma(v) = pi(v) / F(v)`` and the suspect ranking."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classifier import PatternFeatureSet
from .ppr import PPRScoreSet


class CoverageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AnomalyScoreSet:
    """Scores for every node id ``0..n-1``.

    ``scored`` marks nodes that carry PPR evidence; the ranking puts them
    first by descending sigma (ties to the lower id), then every unscored
    node by id.
    """

    sigma: np.ndarray
    scored: np.ndarray
    ranking: np.ndarray
    pi: np.ndarray
    f_value: np.ndarray

    def rank_of(self) -> np.ndarray:
        pos = np.empty(len(self.ranking), dtype=np.int64)
        pos[self.ranking] = np.arange(len(self.ranking))
        return pos


def rank_nodes(sigma, scored=None) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    ids = np.arange(len(sigma))
    if scored is None:
        scored = np.ones(len(sigma), dtype=bool)
    return np.lexsort((ids, -sigma, ~np.asarray(scored, dtype=bool)))


def _dense(values, n, fill):
    if isinstance(values, Mapping):
        out = np.full(n, fill, dtype=np.float64)
        mask = np.zeros(n, dtype=bool)
        for k, x in values.items():
            out[int(k)] = x
            mask[int(k)] = True
        return out, mask
    arr = np.asarray(values, dtype=np.float64)
    return arr.copy(), np.ones(len(arr), dtype=bool)


def anomaly_scores(pi, pfs, n_nodes=None) -> AnomalyScoreSet:
    """Divide the PPR evidence by the pattern feature for every visited node.

    Parameters
    ----------
    pi : PPRScoreSet or mapping
        A score set (its max-scaled aggregate is used and its visited set
        defines the scored nodes) or a plain ``node -> pi`` mapping.
    pfs : PatternFeatureSet or mapping
        ``node -> F`` with ``F`` in ``(0, 1]``.

    Raises
    ------
    CoverageError
        A node with nonzero ``pi`` has no pattern feature.
    """
    if isinstance(pi, PPRScoreSet):
        n = pi.n_nodes
        pi_arr = pi.scaled()
        scored = np.zeros(n, dtype=bool)
        scored[pi.visited] = True
    else:
        if n_nodes is None:
            n_nodes = (max(map(int, pi)) + 1) if isinstance(pi, Mapping) and pi else len(pi)
        n = n_nodes
        pi_arr, scored = _dense(pi, n, 0.0)
        if len(pi_arr) < n:
            pi_arr = np.concatenate([pi_arr, np.zeros(n - len(pi_arr))])
            scored = np.concatenate([scored, np.zeros(n - len(scored), dtype=bool)])
    if isinstance(pfs, PatternFeatureSet):
        f_arr = np.full(n, np.nan)
        f_arr[pfs.nodes] = pfs.f_value
    else:
        f_arr, _ = _dense(pfs, n, np.nan)
    need = scored & (pi_arr > 0)
    missing = np.flatnonzero(need & np.isnan(f_arr))
    if len(missing):
        raise CoverageError(f"{len(missing)} scored nodes lack a pattern feature: "
                            f"{missing[:10].tolist()}")
    if np.any(f_arr[need] <= 0):
        raise ValueError("pattern features must be positive")
    sigma = np.zeros(n)
    sigma[need] = pi_arr[need] / f_arr[need]
    return AnomalyScoreSet(sigma, scored, rank_nodes(sigma, scored), pi_arr, f_arr)


def top_k(sas: AnomalyScoreSet, k) -> np.ndarray:
    if int(k) != k or not 1 <= k <= len(sas.ranking):
        raise ValueError(f"k must lie in 1..{len(sas.ranking)}, got {k}")
    return sas.ranking[:int(k)]


def write_suspect_report(sas: AnomalyScoreSet, path, addresses=None, behavior=None, k=None):
    """Write ``rank,node_id,address,sigma,pi,f_value,theta_norm,omega_norm`` rows."""
    nodes = sas.ranking if k is None else top_k(sas, k)
    theta = np.full(len(sas.sigma), np.nan)
    omega = np.full(len(sas.sigma), np.nan)
    if behavior is not None:
        theta[behavior.nodes] = behavior.theta_norm
        omega[behavior.nodes] = behavior.omega_norm

    def fmt(x):
        return "" if np.isnan(x) else repr(float(x))

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["rank", "node_id", "address", "sigma", "pi", "f_value",
                     "theta_norm", "omega_norm"])
        for r, v in enumerate(nodes.tolist(), start=1):
            addr = addresses[v] if addresses is not None else str(v)
            wr.writerow([r, v, addr, repr(float(sas.sigma[v])), repr(float(sas.pi[v])),
                         fmt(sas.f_value[v]), fmt(theta[v]), fmt(omega[v])])
