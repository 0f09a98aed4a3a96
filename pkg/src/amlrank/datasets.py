"""Best-effort adapters for public labeled transaction datasets.

Each adapter reads a directory of CSV files described by a column map.
Public releases differ in file names and headers, so every entry of the
map can be overridden through ``columns``. Edges whose weight column is
absent get weight 1; edges without a time column take the time of their
sender node when the adapter has one.
"""

from __future__ import annotations

import csv
from enum import Enum
from pathlib import Path

import numpy as np

from .graph import UNLABELED, TransactionGraph, load_graph


class DatasetError(ValueError):
    pass


class Adapter(str, Enum):
    ELLIPTIC_PP = "EllipticPP"
    ETHEREUM_FRAUD = "EthereumFraud"
    WORMHOLE = "Wormhole"
    GENERIC = "Generic"


# file and column names per adapter; ``None`` marks an optional column
LAYOUTS = {
    Adapter.ELLIPTIC_PP: dict(
        edges_file="AddrAddr_edgelist.csv", src="input_address", dst="output_address",
        weight=None, time=None,
        nodes_file="wallets_features_classes_combined.csv", node_id="address",
        node_label="class", node_time="Time step",
        illicit="1", licit="2", max_time_step=42,
    ),
    Adapter.ETHEREUM_FRAUD: dict(
        edges_file="edges.csv", src="from_address", dst="to_address",
        weight="value", time="timestamp",
        nodes_file="labels.csv", node_id="address", node_label="flag", node_time=None,
        illicit="1", licit="0", max_time_step=None,
    ),
    Adapter.WORMHOLE: dict(
        edges_file="edges.csv", src="source", dst="target", weight="amount", time="timestamp",
        nodes_file="nodes.csv", node_id="address", node_label="label", node_time=None,
        illicit="1", licit="0", max_time_step=None,
    ),
}


def _read_table(path, required, optional=()) -> dict:
    """Columns of a headed CSV as ``name -> list of strings``."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"missing file {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise DatasetError(f"{path.name}: missing column {col!r}")
        keep = [c for c in [*required, *optional] if c and c in header]
        table = {c: [] for c in keep}
        for row in reader:
            for c in keep:
                table[c].append(row[c])
    return table


def load_dataset(adapter, path, columns=None) -> TransactionGraph:
    """Load a labeled graph from ``path`` through the named adapter.

    ``Generic`` reads the canonical ``edges.csv``/``labels.csv`` pair (a
    graph directory as written by :func:`~amlrank.graph.save_graph`).
    """
    adapter = Adapter(adapter)
    if adapter is Adapter.GENERIC:
        try:
            return load_graph(path)
        except FileNotFoundError as exc:
            raise DatasetError(f"missing file {exc.filename}") from None
    layout = dict(LAYOUTS[adapter])
    unknown = set(columns or {}) - set(layout)
    if unknown:
        raise DatasetError(f"unknown column-map keys {sorted(unknown)}")
    layout.update(columns or {})
    root = Path(path)

    nodes = _read_table(root / layout["nodes_file"],
                        [layout["node_id"], layout["node_label"]], [layout["node_time"]])
    node_ids = nodes.get(layout["node_id"], ())
    node_label = dict(zip(node_ids, nodes.get(layout["node_label"], ())))
    node_time = {}
    if layout["node_time"] and layout["node_time"] in nodes:
        # an address may appear at several time steps; keep its first
        for a, t in zip(node_ids, nodes[layout["node_time"]]):
            t = int(float(t))
            node_time[a] = min(t, node_time.get(a, t))

    edges = _read_table(root / layout["edges_file"], [layout["src"], layout["dst"]],
                        [layout["weight"], layout["time"]])
    src = edges.get(layout["src"], ())
    dst = edges.get(layout["dst"], ())
    n = len(src)
    if layout["weight"] and layout["weight"] in edges:
        weight = np.array([float(x) for x in edges[layout["weight"]]])
    else:
        weight = np.ones(n)
    if layout["time"] and layout["time"] in edges:
        ts = np.array([int(float(x)) for x in edges[layout["time"]]], dtype=np.int64)
    elif node_time:
        missing = [a for a in src if a not in node_time]
        if missing:
            raise DatasetError(f"no time step for sender {missing[0]!r}")
        ts = np.array([node_time[a] for a in src], dtype=np.int64)
    else:
        ts = np.zeros(n, dtype=np.int64)

    keep = np.ones(n, dtype=bool)
    if layout["max_time_step"] is not None:
        keep = ts < int(layout["max_time_step"])
        if node_time:
            cut = int(layout["max_time_step"])
            node_label = {a: y for a, y in node_label.items() if node_time.get(a, 0) < cut}

    index: dict[str, int] = {}
    s_idx, d_idx = [], []
    for i in np.flatnonzero(keep).tolist():
        s_idx.append(index.setdefault(src[i], len(index)))
        d_idx.append(index.setdefault(dst[i], len(index)))
    for a in node_label:
        index.setdefault(a, len(index))
    labels = np.full(len(index), UNLABELED, dtype=np.int8)
    illicit, licit = str(layout["illicit"]), str(layout["licit"])
    for a, y in node_label.items():
        y = str(y).strip()
        if y == illicit:
            labels[index[a]] = 1
        elif y == licit:
            labels[index[a]] = 0
    return TransactionGraph.from_edges(s_idx, d_idx, weight[keep], ts[keep], n_nodes=len(index),
                                       addresses=list(index), labels=labels)
