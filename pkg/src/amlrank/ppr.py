"""Multi-source approximate Personalized PageRank.

Each source runs a forward push down to a degree-scaled residual threshold,
then the leftover residual mass is settled with alpha-terminating random
walks (the FORA scheme). Walks that reach a node with no out-edges stop
there (``dangling_rule="absorb"``) or jump back to the source
(``dangling_rule="teleport"``). :func:`exact_ppr_oracle` solves the same
model by power iteration and is used as the reference in tests.
"""

from __future__ import annotations

import csv
import logging
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .graph import TransactionGraph, bfs_levels, identify_sources

log = logging.getLogger(__name__)

DANGLING_RULES = ("absorb", "teleport")


class ConfigError(ValueError):
    pass


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class PPRConfig:
    """Approximate-PPR parameters.

    ``p_f=1`` (the default, following the tuned setting) gives
    ``ln(2/p_f) = ln 2`` and no longer carries a failure-probability
    guarantee; ``p_f=0.01`` is the setting with a meaningful guarantee.
    """

    alpha: float = 0.5
    epsilon: float = 0.5
    p_f: float = 1.0
    hop_cap: int | None = None
    seed: int = 0
    dangling_rule: str = "absorb"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.p_f <= 1.0:
            raise ConfigError(f"p_f must lie in (0, 1], got {self.p_f}")
        if self.hop_cap is not None and (int(self.hop_cap) != self.hop_cap or self.hop_cap < 1):
            raise ConfigError(f"hop_cap must be a positive integer, got {self.hop_cap}")
        if self.dangling_rule not in DANGLING_RULES:
            raise ConfigError(f"dangling_rule must be one of {DANGLING_RULES}")

    @classmethod
    def from_mapping(cls, cfg: Mapping, prefix="ppr."):
        kw = {}
        casts = {"alpha": float, "epsilon": float, "p_f": float,
                 "hop_cap": _opt_int, "seed": int, "dangling_rule": str}
        for key, cast in casts.items():
            if prefix + key in cfg:
                kw[key] = cast(cfg[prefix + key])
        return cls(**kw)


def _opt_int(value):
    if value is None or str(value).strip().lower() in ("", "none"):
        return None
    return int(value)


def walk_budget(d_s, cfg: PPRConfig) -> int:
    """Number of random walks K(s) for a source of out-degree ``d_s``."""
    if d_s < 0:
        raise ValueError("out-degree must be non-negative")
    eps, a = cfg.epsilon, cfg.alpha
    raw = ((2.0 / 3.0) * eps + 2.0) * max(d_s, 1) * math.log(2.0 / cfg.p_f) / (eps * eps * a * (1.0 - a))
    return max(1, math.ceil(raw))


@dataclass
class SourceResult:
    source: int
    budget: int
    reserves: dict
    residuals: dict
    scores: dict
    n_pushes: int = 0
    n_walks: int = 0


def _hop_set(g, s, hop_cap):
    if hop_cap is None:
        return None
    lv = bfs_levels(g, [s], max_hops=hop_cap)
    return set(np.flatnonzero(lv >= 0).tolist())


def forward_push(g: TransactionGraph, s, cfg: PPRConfig, budget=None, within=None):
    """Push residual mass from ``s`` until every residual is below threshold.

    A node ``u`` with out-degree ``d(u) > 0`` is pushed while
    ``r(s,u) > d(u) / (alpha * K(s))``. Nodes with no out-edges keep their
    residual for the random-walk phase. With ``within`` given, only nodes
    in that set are pushed.

    Returns
    -------
    residuals, reserves : dict
        Node id to residual ``r(s,.)`` and settled score ``pi0(s,.)``.
    """
    s = g.check_node(s)
    out = g.out_lists()
    alpha = cfg.alpha
    if budget is None:
        budget = walk_budget(len(out[s]), cfg)
    if within is None and cfg.hop_cap is not None:
        within = _hop_set(g, s, cfg.hop_cap)
    scale = 1.0 / (alpha * budget)
    residual = {s: 1.0}
    reserve: dict = {}
    queue = deque([s])
    queued = {s}
    while queue:
        u = queue.popleft()
        queued.discard(u)
        nbrs = out[u]
        d = len(nbrs)
        r = residual.get(u, 0.0)
        if d == 0 or r <= d * scale or (within is not None and u not in within):
            continue
        reserve[u] = reserve.get(u, 0.0) + alpha * r
        residual[u] = 0.0
        share = (1.0 - alpha) * r / d
        for v in nbrs:
            rv = residual.get(v, 0.0) + share
            residual[v] = rv
            if v not in queued:
                dv = len(out[v])
                if dv and rv > dv * scale:
                    queue.append(v)
                    queued.add(v)
    residual = {u: r for u, r in residual.items() if r > 0.0}
    return residual, reserve


def _walk(out, start, source, alpha, teleport, rnd):
    u = start
    while True:
        if rnd() < alpha:
            return u
        nbrs = out[u]
        if nbrs:
            u = nbrs[int(rnd() * len(nbrs))]
        elif teleport:
            u = source
        else:
            return u


def monte_carlo_refine(g: TransactionGraph, s, residuals: Mapping, partial_scores: Mapping,
                       cfg: PPRConfig, budget=None, rng=None, within=None):
    """Settle leftover residuals with alpha-terminating random walks.

    Every node ``v`` with residual starts ``round(r(s,v) * K(s))`` walks; a
    walk ending at ``w`` (inside the hop cap) adds ``1 / K(s)`` to the
    estimate for ``w``. The RNG defaults to the per-source stream
    ``seed ^ s`` so results do not depend on processing order.
    """
    s = g.check_node(s)
    out = g.out_lists()
    if budget is None:
        budget = walk_budget(len(out[s]), cfg)
    if rng is None:
        rng = random.Random(cfg.seed ^ s)
    if within is None and cfg.hop_cap is not None:
        within = _hop_set(g, s, cfg.hop_cap)
    scores = dict(partial_scores)
    inc = 1.0 / budget
    rnd = rng.random
    teleport = cfg.dangling_rule == "teleport"
    alpha = cfg.alpha
    for v in sorted(residuals):
        n = int(math.floor(residuals[v] * budget + 0.5))
        for _ in range(n):
            w = _walk(out, v, s, alpha, teleport, rnd)
            if within is None or w in within:
                scores[w] = scores.get(w, 0.0) + inc
    return scores


def single_source_ppr(g: TransactionGraph, s, cfg: PPRConfig) -> SourceResult:
    s = int(s)
    budget = walk_budget(int(g.out_degree[s]), cfg)
    within = _hop_set(g, s, cfg.hop_cap)
    residuals, reserves = forward_push(g, s, cfg, budget=budget, within=within)
    scores = monte_carlo_refine(g, s, residuals, reserves, cfg, budget=budget, within=within)
    return SourceResult(s, budget, reserves, residuals, scores)


@dataclass
class PPRScoreSet:
    """Per-(source, node) PPR estimates plus the visited-node set.

    ``pairs`` is an ``(m, 2)`` array of ``(source, node)`` sorted
    lexicographically with matching ``values``. ``aggregated`` is the
    per-node sum over sources (length ``n_nodes``); :meth:`scaled` gives
    it divided by its maximum over the visited set.
    """

    n_nodes: int
    sources: np.ndarray
    pairs: np.ndarray
    values: np.ndarray
    visited: np.ndarray
    aggregated: np.ndarray
    empty_sources: bool = False
    budgets: dict = field(default_factory=dict)

    def score(self, s, v) -> float:
        if not hasattr(self, "_lookup"):
            self._lookup = {(int(a), int(b)): float(x)
                            for (a, b), x in zip(self.pairs, self.values)}
        return self._lookup.get((int(s), int(v)), 0.0)

    def source_scores(self, s) -> dict:
        mask = self.pairs[:, 0] == s
        return dict(zip(self.pairs[mask, 1].tolist(), self.values[mask].tolist()))

    def scaled(self) -> np.ndarray:
        pi = np.zeros(self.n_nodes)
        if len(self.visited) == 0:
            return pi
        top = self.aggregated[self.visited].max()
        if top > 0:
            pi[self.visited] = self.aggregated[self.visited] / top
        return pi


def _run_source(args):
    g, s, cfg = args
    return single_source_ppr(g, s, cfg)


_WORKER_GRAPH = None


def _init_worker(g):
    global _WORKER_GRAPH
    _WORKER_GRAPH = g


def _run_source_in_worker(args):
    s, cfg = args
    r = single_source_ppr(_WORKER_GRAPH, s, cfg)
    return r.source, r.budget, r.scores


def multi_source_ppr(g: TransactionGraph, sources=None, cfg: PPRConfig | None = None,
                     threads=1) -> PPRScoreSet:
    """Approximate PPR from every source and aggregate per node.

    ``sources=None`` uses :func:`~amlrank.graph.identify_sources`. With
    ``threads > 1`` sources are spread over a process pool; each source
    owns its RNG stream so the result equals the sequential run.
    """
    cfg = cfg or PPRConfig()
    if sources is None:
        sources = identify_sources(g)
    sources = np.unique(np.asarray(list(sources), dtype=np.int64))
    for s in sources:
        g.check_node(s)
    if len(sources) == 0:
        log.warning("multi_source_ppr called with an empty source set")
        z = np.zeros(g.n_nodes)
        return PPRScoreSet(g.n_nodes, sources, np.empty((0, 2), dtype=np.int64),
                           np.empty(0), np.empty(0, dtype=np.int64), z, empty_sources=True)

    if threads > 1 and len(sources) > 1:
        g.out_lists()
        chunk = max(1, len(sources) // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(g,)) as pool:
            results = list(pool.map(_run_source_in_worker,
                                    [(int(s), cfg) for s in sources], chunksize=chunk))
    else:
        results = []
        for s in sources.tolist():
            r = single_source_ppr(g, s, cfg)
            results.append((r.source, r.budget, r.scores))

    src_col, node_col, val_col = [], [], []
    budgets = {}
    for s, budget, scores in results:
        budgets[s] = budget
        nodes = sorted(scores)
        src_col.extend([s] * len(nodes))
        node_col.extend(nodes)
        val_col.extend(scores[v] for v in nodes)
    pairs = np.column_stack([np.asarray(src_col, dtype=np.int64),
                             np.asarray(node_col, dtype=np.int64)]).reshape(-1, 2)
    values = np.asarray(val_col, dtype=np.float64)
    aggregated = np.zeros(g.n_nodes)
    # fixed summation order keeps the reduction bit-reproducible
    np.add.at(aggregated, pairs[:, 1], values)

    levels = bfs_levels(g, sources, max_hops=cfg.hop_cap)
    visited = np.flatnonzero(levels >= 0)
    return PPRScoreSet(g.n_nodes, sources, pairs, values, visited, aggregated, budgets=budgets)


def transition_matrix(g: TransactionGraph, dangling_rule="absorb", teleport_to=None):
    """Row-stochastic CSR matrix of the uniform out-edge walk.

    Parallel edges add up. Rows of nodes without out-edges follow the
    dangling rule: a self-loop for ``absorb``, a jump to ``teleport_to``
    for ``teleport``.
    """
    n = g.n_nodes
    deg = g.out_degree.astype(np.float64)
    rows, cols = g.src, g.dst
    data = 1.0 / deg[rows] if len(rows) else np.empty(0)
    sinks = np.flatnonzero(deg == 0)
    if dangling_rule == "absorb":
        target = sinks
    elif dangling_rule == "teleport":
        if teleport_to is None:
            raise ValueError("teleport rule needs a target node")
        target = np.full(len(sinks), int(teleport_to), dtype=np.int64)
    else:
        raise ConfigError(f"unknown dangling rule {dangling_rule!r}")
    rows = np.concatenate([rows, sinks])
    cols = np.concatenate([cols, target])
    data = np.concatenate([data, np.ones(len(sinks))])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def exact_ppr_oracle(g: TransactionGraph, s, alpha=0.5, dangling_rule="absorb",
                     teleport_to=None, tol=1e-12, max_iter=100_000) -> np.ndarray:
    """Exact PPR vector of ``s`` by power iteration.

    Iterates ``pi <- alpha * e_s + (1 - alpha) * pi P`` until the L1 change
    bounds the distance to the fixed point below ``tol``. Under the
    teleport rule dangling nodes jump to ``teleport_to`` (default ``s``).
    """
    s = g.check_node(s)
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    if teleport_to is None:
        teleport_to = s
    PT = transition_matrix(g, dangling_rule, teleport_to).T.tocsr()
    e = np.zeros(g.n_nodes)
    e[s] = 1.0
    pi = alpha * e
    for _ in range(max_iter):
        nxt = alpha * e + (1.0 - alpha) * (PT @ pi)
        delta = np.abs(nxt - pi).sum()
        pi = nxt
        # contraction factor (1 - alpha) bounds the remaining error
        if delta * (1.0 - alpha) / alpha <= tol:
            return pi
    raise OracleError(f"power iteration did not converge in {max_iter} iterations")


def write_ppr_dump(pps: PPRScoreSet, scores_path, svn_path=None):
    with open(scores_path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["source_id", "node_id", "score"])
        for (s, v), x in zip(pps.pairs.tolist(), pps.values.tolist()):
            wr.writerow([s, v, repr(x)])
    if svn_path is not None:
        with open(svn_path, "w", newline="") as fh:
            fh.write("node_id\n")
            fh.writelines(f"{v}\n" for v in pps.visited.tolist())


def read_ppr_dump(scores_path, svn_path, n_nodes, sources=None) -> PPRScoreSet:
    data = np.loadtxt(scores_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.empty((0, 3))
    pairs = data[:, :2].astype(np.int64)
    values = data[:, 2].astype(np.float64)
    visited = read_node_list(svn_path)
    aggregated = np.zeros(n_nodes)
    np.add.at(aggregated, pairs[:, 1], values)
    if sources is None:
        sources = np.unique(pairs[:, 0])
    return PPRScoreSet(n_nodes, np.asarray(sources, dtype=np.int64), pairs, values,
                       visited, aggregated)


def read_node_list(path) -> np.ndarray:
    with open(path) as fh:
        rows = [line.strip() for line in fh]
    return np.array(sorted(int(r) for r in rows[1:] if r), dtype=np.int64)
