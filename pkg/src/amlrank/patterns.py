"""Laundering-pattern generators, injection, and structural statistics.

Six pattern kinds are supported: fan-in, fan-out, gather-scatter,
bipartite, stack (a relay path) and random. Each generated pattern has one
*anchor* role that is merged into an existing background account on
injection; all other pattern nodes are new accounts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .graph import TransactionGraph, bfs_levels, fan_in, fan_out


class PatternKind(str, Enum):
    FAN_IN = "fan_in"
    FAN_OUT = "fan_out"
    GATHER_SCATTER = "gather_scatter"
    BIPARTITE = "bipartite"
    STACK = "stack"
    RANDOM = "random"


# size parameters per kind and their defaults
SIZE_PARAMS = {
    PatternKind.FAN_IN: {"width": 5},
    PatternKind.FAN_OUT: {"width": 5},
    PatternKind.GATHER_SCATTER: {"n_in": 4, "n_out": 4},
    PatternKind.BIPARTITE: {"n_left": 3, "n_right": 3},
    PatternKind.STACK: {"length": 5},
    PatternKind.RANDOM: {"n_nodes": 6},
}


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternSpec:
    """One laundering pattern to generate.

    ``margin`` is the fraction a relaying node keeps (gather-scatter hub,
    stack intermediaries). ``density`` applies to bipartite and random
    patterns. ``random_timing`` spreads timestamps over the whole
    background period instead of a short burst.
    """

    kind: PatternKind
    size: dict = field(default_factory=dict)
    weight_range: tuple = (1.0, 100.0)
    time_range: tuple = (0, 1000)
    seed: int = 0
    margin: float = 0.0
    density: float = 1.0
    random_timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        size = dict(SIZE_PARAMS[self.kind])
        unknown = set(self.size) - set(size)
        if unknown:
            raise PatternError(f"unknown size parameter(s) {sorted(unknown)} for {self.kind.value}")
        size.update({k: int(v) for k, v in self.size.items()})
        object.__setattr__(self, "size", size)
        if any(v < 1 for v in size.values()):
            raise PatternError("size parameters must be >= 1")
        if self.kind is PatternKind.STACK and size["length"] < 2:
            raise PatternError("a stack needs length >= 2")
        if self.kind is PatternKind.RANDOM and size["n_nodes"] < 2:
            raise PatternError("a random pattern needs at least 2 nodes")
        lo, hi = self.weight_range
        if lo < 0 or hi < lo:
            raise PatternError(f"invalid weight range {self.weight_range}")
        t0, t1 = self.time_range
        if t0 < 0 or t1 < t0:
            raise PatternError(f"invalid time range {self.time_range}")
        if not 0.0 <= self.margin < 1.0:
            raise PatternError("margin must lie in [0, 1)")
        if not 0.0 < self.density <= 1.0:
            raise PatternError("density must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class GeneratedPattern:
    """Pattern subgraph on local ids ``0..n_nodes-1``."""

    spec: PatternSpec
    roles: tuple
    anchor: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    timestamp: np.ndarray

    @property
    def n_nodes(self):
        return len(self.roles)

    def to_graph(self) -> TransactionGraph:
        return TransactionGraph.from_edges(self.src, self.dst, self.weight, self.timestamp,
                                           n_nodes=self.n_nodes, addresses=self.roles)


@dataclass(frozen=True, eq=False)
class InjectionRecord:
    pattern: PatternSpec
    injected_nodes: np.ndarray
    injected_edges: np.ndarray
    anchor: int


def _times(rng, spec, n):
    t0, t1 = spec.time_range
    return rng.integers(t0, t1 + 1, size=n)


def _weights(rng, spec, n):
    lo, hi = spec.weight_range
    return rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, float(lo))


def generate_pattern(spec: PatternSpec) -> GeneratedPattern:
    rng = np.random.default_rng([spec.seed, 1])
    k, size = spec.kind, spec.size
    if k is PatternKind.FAN_IN:
        n = size["width"]
        roles = ["hub"] + [f"src{i}" for i in range(n)]
        src, dst = np.arange(1, n + 1), np.zeros(n, dtype=int)
        w, t = _weights(rng, spec, n), _times(rng, spec, n)
    elif k is PatternKind.FAN_OUT:
        n = size["width"]
        roles = ["hub"] + [f"dst{i}" for i in range(n)]
        src, dst = np.zeros(n, dtype=int), np.arange(1, n + 1)
        w, t = _weights(rng, spec, n), _times(rng, spec, n)
    elif k is PatternKind.GATHER_SCATTER:
        a, b = size["n_in"], size["n_out"]
        roles = ["hub"] + [f"src{i}" for i in range(a)] + [f"dst{i}" for i in range(b)]
        src = np.concatenate([np.arange(1, a + 1), np.zeros(b, dtype=int)])
        dst = np.concatenate([np.zeros(a, dtype=int), np.arange(a + 1, a + b + 1)])
        w_in = _weights(rng, spec, a)
        w_out = np.full(b, w_in.sum() * (1.0 - spec.margin) / b)
        w = np.concatenate([w_in, w_out])
        t0, t1 = spec.time_range
        mid = t0 + (t1 - t0) // 2
        t = np.concatenate([rng.integers(t0, mid + 1, size=a),
                            rng.integers(mid, t1 + 1, size=b)])
    elif k is PatternKind.BIPARTITE:
        a, b = size["n_left"], size["n_right"]
        roles = [f"right{j}" for j in range(b)] + [f"left{i}" for i in range(a)]
        pairs = [(b + i, j) for i in range(a) for j in range(b)]
        keep = rng.random(len(pairs)) < spec.density
        for i in range(a):
            # every left node sends at least once
            if not keep[i * b:(i + 1) * b].any():
                keep[i * b + rng.integers(b)] = True
        pairs = np.array(pairs)[keep]
        src, dst = pairs[:, 0], pairs[:, 1]
        w, t = _weights(rng, spec, len(src)), _times(rng, spec, len(src))
    elif k is PatternKind.STACK:
        n = size["length"]
        roles = [f"hop{i}" for i in range(n - 1)] + ["tail"]
        src, dst = np.arange(0, n - 1), np.arange(1, n)
        first = _weights(rng, spec, 1)[0]
        w = first * (1.0 - spec.margin) ** np.arange(n - 1)
        t = np.sort(_times(rng, spec, n - 1))
    else:
        n = size["n_nodes"]
        roles = [f"node{i}" for i in range(n)]
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        off = a != b
        a, b = a[off], b[off]
        keep = rng.random(len(a)) < spec.density
        if not keep.any():
            keep[rng.integers(len(a))] = True
        src, dst = a[keep], b[keep]
        w, t = _weights(rng, spec, len(src)), _times(rng, spec, len(src))
    anchor = roles.index({
        PatternKind.FAN_IN: "hub", PatternKind.FAN_OUT: "dst0",
        PatternKind.GATHER_SCATTER: "dst0", PatternKind.BIPARTITE: "right0",
        PatternKind.STACK: "tail", PatternKind.RANDOM: "node0"}[k])
    return GeneratedPattern(spec, tuple(roles), anchor,
                            np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64),
                            np.asarray(w, dtype=np.float64), np.asarray(t, dtype=np.int64))


def inject(g: TransactionGraph, specs, window_ratio=0.1):
    """Attach generated patterns to randomly chosen existing accounts.

    Each pattern's anchor role is merged into a background node picked with
    the pattern's own seed, and its timestamps are squeezed into a window of
    ``window_ratio`` times the background time span (the whole span when
    ``random_timing`` is set, or when ``window_ratio`` is ``None`` the
    pattern's ``time_range`` is kept). Injected nodes, anchors included, get
    label 1; background nodes keep their labels (0 when the graph has
    none).
    """
    specs = list(specs)
    n_bg = g.n_nodes
    if not specs:
        return g, []
    if len(specs) > n_bg:
        raise PatternError(f"{len(specs)} patterns need anchors but the graph has {n_bg} nodes")
    if g.n_edges:
        tmin, tmax = int(g.timestamp.min()), int(g.timestamp.max())
    else:
        tmin, tmax = 0, 1000
    span = tmax - tmin
    addresses = list(g.addresses)
    known = set(addresses)
    labels = (np.zeros(n_bg, dtype=np.int8) if g.labels is None else g.labels).tolist()
    src, dst = [g.src], [g.dst]
    w, t = [g.weight], [g.timestamp]
    records = []
    for spec in specs:
        rng = np.random.default_rng([spec.seed, 0])
        anchor = int(rng.integers(n_bg))
        if spec.random_timing:
            spec = dataclasses.replace(spec, time_range=(tmin, tmax))
        elif window_ratio is not None:
            width = max(1, int(round(window_ratio * span)))
            start = int(rng.integers(tmin, max(tmin, tmax - width) + 1))
            spec = dataclasses.replace(spec, time_range=(start, start + width))
        pat = generate_pattern(spec)
        local = np.empty(pat.n_nodes, dtype=np.int64)
        for i, role in enumerate(pat.roles):
            if i == pat.anchor:
                local[i] = anchor
                continue
            addr = f"{spec.kind.value}-{spec.seed}-{role}"
            if addr in known:
                raise PatternError(f"duplicate injected address {addr!r}; give each pattern its own seed")
            known.add(addr)
            local[i] = len(addresses)
            addresses.append(addr)
            labels.append(1)
        labels[anchor] = 1
        first_edge = sum(len(s) for s in src)
        src.append(local[pat.src])
        dst.append(local[pat.dst])
        w.append(pat.weight)
        t.append(pat.timestamp)
        records.append(InjectionRecord(spec, np.sort(local), np.arange(first_edge, first_edge + len(pat.src)),
                                       anchor))
    out = TransactionGraph.from_edges(np.concatenate(src), np.concatenate(dst),
                                      np.concatenate(w), np.concatenate(t),
                                      n_nodes=len(addresses), addresses=addresses,
                                      labels=np.asarray(labels, dtype=np.int8))
    return out, records


@dataclass(frozen=True)
class StructuralStats:
    fan_in: float
    fan_out: float
    gather_scatter: float
    random: float
    longest_path: int
    bipartite: bool


def random_score(g: TransactionGraph, v, origins=None, weighted=True) -> float:
    """Weight sent from ``v`` into the next BFS layer, per node of that layer.

    Layers are hop distances from ``origins`` (default ``{v}``, which makes
    the next layer the out-neighbourhood of ``v``).
    """
    v = g.check_node(v)
    level = bfs_levels(g, [v] if origins is None else origins)
    if level[v] < 0:
        return 0.0
    layer = level == level[v] + 1
    size = int(layer.sum())
    if size == 0:
        return 0.0
    edges = g.out_edges[g.out_ptr[v]:g.out_ptr[v + 1]]
    hit = edges[layer[g.dst[edges]]]
    total = g.weight[hit].sum() if weighted else len(hit)
    return float(total) / size


def longest_out_path(g: TransactionGraph, v, max_states=200_000) -> int:
    """Edges on the longest simple directed path starting at ``v``.

    Exact by memoised DFS when the reachable subgraph is acyclic; otherwise
    an exhaustive simple-path search that gives up after ``max_states``
    expansions and returns the best length found.
    """
    v = g.check_node(v)
    out = g.out_lists()
    reach = np.flatnonzero(bfs_levels(g, [v]) >= 0).tolist()
    memo: dict = {}
    colour = dict.fromkeys(reach, 0)
    cyclic = False
    # iterative post-order DFS computing longest paths on a DAG
    stack = [(v, iter(out[v]))]
    colour[v] = 1
    while stack and not cyclic:
        u, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            colour[u] = 2
            memo[u] = max((memo[w] + 1 for w in set(out[u])), default=0)
        elif colour[nxt] == 1:
            cyclic = True
        elif colour[nxt] == 0:
            colour[nxt] = 1
            stack.append((nxt, iter(out[nxt])))
    if not cyclic:
        return memo[v]
    best, states = 0, 0
    path = {v}
    stack = [(v, iter(sorted(set(out[v]))), 0)]
    while stack and states < max_states:
        u, it, depth = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            path.discard(u)
            continue
        if nxt in path:
            continue
        states += 1
        best = max(best, depth + 1)
        path.add(nxt)
        stack.append((nxt, iter(sorted(set(out[nxt]))), depth + 1))
    return best


def bipartite_consistent(g: TransactionGraph, v, radius=2) -> bool:
    """2-colourability of the undirected neighbourhood of ``v`` within ``radius`` hops."""
    v = g.check_node(v)
    level = bfs_levels(g, [v], max_hops=radius, directed=False)
    inside = level >= 0
    mask = inside[g.src] & inside[g.dst]
    a, b = g.src[mask].tolist(), g.dst[mask].tolist()
    adj: dict = {}
    for x, y in zip(a, b):
        if x == y:
            return False
        adj.setdefault(x, []).append(y)
        adj.setdefault(y, []).append(x)
    colour = {v: 0}
    queue = [v]
    for u in queue:
        for w in adj.get(u, ()):
            if w not in colour:
                colour[w] = 1 - colour[u]
                queue.append(w)
            elif colour[w] == colour[u]:
                return False
    return True


def structural_checks(g: TransactionGraph, v, origins=None, weighted=True, radius=2) -> StructuralStats:
    v = g.check_node(v)
    fi, fo = fan_in(g, v, weighted), fan_out(g, v, weighted)
    return StructuralStats(
        fan_in=fi, fan_out=fo, gather_scatter=fi + fo,
        random=random_score(g, v, origins, weighted),
        longest_path=longest_out_path(g, v),
        bipartite=bipartite_consistent(g, v, radius),
    )
