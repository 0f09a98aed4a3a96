"""Synthetic background graphs and seeded laundering benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import config as config_mod
from .graph import TransactionGraph, save_graph
from .patterns import PatternKind, PatternSpec, inject


def background_graph(n_nodes=2000, avg_degree=2.5, source_fraction=0.02, sink_fraction=0.05,
                     time_span=10_000, weight_median=50.0, weight_sigma=1.0,
                     activity_tail=1.5, seed=0) -> TransactionGraph:
    """Sparse heavy-tailed transaction graph of ordinary accounts.

    A ``source_fraction`` of accounts only send (funded off-graph, e.g.
    exchange withdrawals), a ``sink_fraction`` only receive (merchants),
    and every other account both receives and spends. Each account gets
    its minimum transfers first; the rest of the ``avg_degree * n_nodes``
    transfers pick senders and receivers in proportion to Pareto activity
    levels. Amounts are log-normal around ``weight_median``, timestamps
    uniform over ``[0, time_span)``. All nodes are labeled benign.
    """
    if n_nodes < 4:
        raise ValueError("need at least four accounts")
    rng = np.random.default_rng([seed, 7])
    n_src = int(round(source_fraction * n_nodes))
    n_sink = int(round(sink_fraction * n_nodes))
    if n_src + n_sink >= n_nodes - 1:
        raise ValueError("source and sink fractions leave no regular accounts")
    role = np.zeros(n_nodes, dtype=np.int8)
    perm = rng.permutation(n_nodes)
    role[perm[:n_src]] = 1
    role[perm[n_src:n_src + n_sink]] = 2
    can_send = np.flatnonzero(role != 2)
    can_recv = np.flatnonzero(role != 1)
    send = rng.pareto(activity_tail, n_nodes) + 1.0
    recv = rng.pareto(activity_tail, n_nodes) + 1.0
    p_send = send[can_send] / send[can_send].sum()
    p_recv = recv[can_recv] / recv[can_recv].sum()

    senders = can_send
    receivers = can_recv
    src = np.concatenate([senders, rng.choice(can_send, size=len(receivers), p=p_send)])
    dst = np.concatenate([rng.choice(can_recv, size=len(senders), p=p_recv), receivers])
    extra = max(0, int(round(avg_degree * n_nodes)) - len(src))
    src = np.concatenate([src, rng.choice(can_send, size=extra, p=p_send)])
    dst = np.concatenate([dst, rng.choice(can_recv, size=extra, p=p_recv)])
    loops = np.flatnonzero(src == dst)
    while len(loops):
        dst[loops] = rng.choice(can_recv, size=len(loops))
        loops = loops[src[loops] == dst[loops]]
    n_edges = len(src)
    weight = np.round(rng.lognormal(np.log(weight_median), weight_sigma, size=n_edges), 2)
    ts = rng.integers(0, time_span, size=n_edges)
    return TransactionGraph.from_edges(src, dst, weight, ts, n_nodes=n_nodes,
                                       addresses=[f"acct{i}" for i in range(n_nodes)],
                                       labels=np.zeros(n_nodes, dtype=np.int8))


def default_pattern_specs(seed=0, weight_range=(100.0, 1000.0), margin=0.02):
    """The five typologies used by the bundled benchmark (60 labeled accounts)."""
    base = 1000 * (seed + 1)
    common = dict(weight_range=weight_range, margin=margin)
    return [
        PatternSpec(PatternKind.FAN_IN, {"width": 11}, seed=base + 1, **common),
        PatternSpec(PatternKind.FAN_OUT, {"width": 11}, seed=base + 2, **common),
        PatternSpec(PatternKind.GATHER_SCATTER, {"n_in": 8, "n_out": 8}, seed=base + 3, **common),
        PatternSpec(PatternKind.BIPARTITE, {"n_left": 5, "n_right": 4}, seed=base + 4, **common),
        PatternSpec(PatternKind.STACK, {"length": 10}, seed=base + 5, **common),
    ]


def make_benchmark(n_background=2000, seed=0, specs=None, window_ratio=0.1, **background):
    """Background graph plus injected patterns; returns ``(graph, records)``."""
    g = background_graph(n_background, seed=seed, **background)
    if specs is None:
        specs = default_pattern_specs(seed)
    return inject(g, specs, window_ratio=window_ratio)


BACKGROUND_KEYS = {"n_nodes": int, "avg_degree": float, "source_fraction": float,
                   "sink_fraction": float, "time_span": int,
                   "weight_median": float, "weight_sigma": float, "activity_tail": float}


def read_manifest(path):
    """Parse a benchmark manifest.

    Keys: ``benchmark.seed``, ``benchmark.window_ratio``,
    ``background.<param>`` and per pattern ``pattern.<i>.kind``,
    ``pattern.<i>.seed``, ``pattern.<i>.<size param>``,
    ``pattern.<i>.weight_range = lo,hi``, ``pattern.<i>.margin``,
    ``pattern.<i>.density``, ``pattern.<i>.random_timing``. Without
    any ``pattern.*`` keys the default five typologies are used.
    """
    kv = config_mod.read_kv(path)
    seed = int(kv.get("benchmark.seed", 0))
    window = kv.get("benchmark.window_ratio", "0.1")
    window = None if window.lower() == "none" else float(window)
    bg = {k: BACKGROUND_KEYS[k](kv[f"background.{k}"]) for k in BACKGROUND_KEYS
          if f"background.{k}" in kv}
    groups: dict = {}
    for key, value in kv.items():
        parts = key.split(".")
        if parts[0] == "pattern" and len(parts) == 3:
            groups.setdefault(int(parts[1]), {})[parts[2]] = value
    specs = None
    if groups:
        specs = []
        for i in sorted(groups):
            p = dict(groups[i])
            kind = PatternKind(p.pop("kind"))
            kw = {"seed": int(p.pop("seed", 1000 * (seed + 1) + i))}
            if "weight_range" in p:
                kw["weight_range"] = config_mod.floats(p.pop("weight_range"))
            if "time_range" in p:
                kw["time_range"] = tuple(int(x) for x in config_mod.floats(p.pop("time_range")))
            for name in ("margin", "density"):
                if name in p:
                    kw[name] = float(p.pop(name))
            if "random_timing" in p:
                kw["random_timing"] = p.pop("random_timing").lower() in ("1", "true", "yes")
            specs.append(PatternSpec(kind, {k: int(v) for k, v in p.items()}, **kw))
    n = bg.pop("n_nodes", 2000)
    return dict(n_background=n, seed=seed, specs=specs, window_ratio=window, **bg)


def write_manifest(path, n_background=2000, seed=0, specs=None, window_ratio=0.1, **background):
    kv = {"benchmark.seed": seed, "benchmark.window_ratio": window_ratio,
          "background.n_nodes": n_background}
    kv.update({f"background.{k}": v for k, v in background.items()})
    for i, spec in enumerate(specs or default_pattern_specs(seed)):
        pre = f"pattern.{i}."
        kv[pre + "kind"] = spec.kind.value
        kv[pre + "seed"] = spec.seed
        kv[pre + "weight_range"] = ",".join(repr(float(x)) for x in spec.weight_range)
        kv[pre + "margin"] = spec.margin
        kv[pre + "density"] = spec.density
        kv[pre + "random_timing"] = int(spec.random_timing)
        for name, value in spec.size.items():
            kv[pre + name] = value
    config_mod.write_kv({k: str(v) for k, v in kv.items()}, path)


def build_from_manifest(manifest_path, out_dir):
    """Generate a benchmark from a manifest and save it as a graph directory."""
    params = read_manifest(manifest_path)
    g, records = make_benchmark(**params)
    out = save_graph(g, out_dir)
    write_manifest(Path(out) / "manifest.txt", **params)
    return g, records


def bundled_manifest() -> Path:
    """Path of the manifest for the bundled 2,000-node benchmark."""
    return Path(__file__).with_name("data") / "benchmark.txt"
