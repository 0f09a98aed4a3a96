"""Directed, weighted, timestamped transaction multigraph.

Addresses are mapped to dense integer ids on ingestion. Both adjacency
directions are kept in CSR form (``out_ptr``/``out_edges`` and
``in_ptr``/``in_edges`` index into the edge arrays), preserving the input
row order inside every adjacency list.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

EDGES_FILE = "edges.csv"
LABELS_FILE = "labels.csv"
ADDRESS_MAP_FILE = "address_map.csv"

UNLABELED = -1


class GraphError(Exception):
    pass


class EdgeListParseError(GraphError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class GraphValidationError(GraphError, ValueError):
    pass


class UnknownNodeError(GraphError, KeyError):
    pass


@dataclass(frozen=True)
class EdgeListFormat:
    """Column layout of an edge-list file.

    ``header=None`` means auto-detect: the first row is a header when its
    weight field does not parse as a number.
    """

    delimiter: str = ","
    header: bool | None = None
    src_col: int = 0
    dst_col: int = 1
    weight_col: int = 2
    time_col: int = 3
    encoding: str = "utf-8"


def _readonly(a):
    a.setflags(write=False)
    return a


def _csr(keys, n):
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order.astype(np.int64)


@dataclass(frozen=True, eq=False)
class TransactionGraph:
    """Immutable transaction graph.

    Build with :meth:`from_edges`; the constructor does not validate or
    index anything.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    timestamp: np.ndarray
    out_ptr: np.ndarray
    out_edges: np.ndarray
    in_ptr: np.ndarray
    in_edges: np.ndarray
    addresses: tuple
    labels: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_edges(cls, src, dst, weight, timestamp, n_nodes=None,
                   addresses=None, labels=None):
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        weight = np.asarray(weight, dtype=np.float64).reshape(-1)
        timestamp = np.asarray(timestamp, dtype=np.int64).reshape(-1)
        m = len(src)
        if not (len(dst) == len(weight) == len(timestamp) == m):
            raise GraphValidationError("edge arrays must have equal length")
        if n_nodes is None:
            n_nodes = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        if m and (src.min() < 0 or dst.min() < 0
                  or src.max() >= n_nodes or dst.max() >= n_nodes):
            raise GraphValidationError("edge endpoint outside 0..n_nodes-1")
        if m and (weight.min() < 0 or not np.all(np.isfinite(weight))):
            raise GraphValidationError("edge weights must be finite and >= 0")
        if m and timestamp.min() < 0:
            raise GraphValidationError("timestamps must be >= 0")
        if addresses is None:
            addresses = tuple(str(i) for i in range(n_nodes))
        else:
            addresses = tuple(str(a) for a in addresses)
            if len(addresses) != n_nodes:
                raise GraphValidationError("one address per node required")
            if len(set(addresses)) != n_nodes:
                raise GraphValidationError("addresses must be unique")
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int8).reshape(-1)
            if len(labels) != n_nodes:
                raise GraphValidationError("one label per node required")
            if not np.isin(labels, (UNLABELED, 0, 1)).all():
                raise GraphValidationError("labels must be 0, 1 or -1 (unknown)")
            labels = _readonly(labels.copy())
        out_ptr, out_edges = _csr(src, n_nodes)
        in_ptr, in_edges = _csr(dst, n_nodes)
        return cls(
            n_nodes=int(n_nodes),
            src=_readonly(src.copy()), dst=_readonly(dst.copy()),
            weight=_readonly(weight.copy()), timestamp=_readonly(timestamp.copy()),
            out_ptr=_readonly(out_ptr), out_edges=_readonly(out_edges),
            in_ptr=_readonly(in_ptr), in_edges=_readonly(in_edges),
            addresses=addresses, labels=labels,
        )

    @classmethod
    def from_records(cls, records: Iterable[Sequence], labels: Mapping | None = None):
        """Build from ``(src_address, dst_address, weight, timestamp)`` tuples."""
        index: dict[str, int] = {}
        src, dst, w, t = [], [], [], []
        for a, b, weight, ts in records:
            src.append(index.setdefault(str(a), len(index)))
            dst.append(index.setdefault(str(b), len(index)))
            w.append(weight)
            t.append(ts)
        lab = None
        if labels is not None:
            for a in labels:
                index.setdefault(str(a), len(index))
            lab = np.full(len(index), UNLABELED, dtype=np.int8)
            for a, y in labels.items():
                lab[index[str(a)]] = int(y)
        return cls.from_edges(src, dst, w, t, n_nodes=len(index),
                              addresses=list(index), labels=lab)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    @property
    def address_index(self) -> dict:
        if "address_index" not in self._cache:
            self._cache["address_index"] = {a: i for i, a in enumerate(self.addresses)}
        return self._cache["address_index"]

    def node_id(self, address) -> int:
        try:
            return self.address_index[str(address)]
        except KeyError:
            raise UnknownNodeError(f"unknown address {address!r}") from None

    def check_node(self, v) -> int:
        v = int(v)
        if not 0 <= v < self.n_nodes:
            raise UnknownNodeError(f"node id {v} not in 0..{self.n_nodes - 1}")
        return v

    def out_neighbors(self, v) -> np.ndarray:
        v = self.check_node(v)
        return self.dst[self.out_edges[self.out_ptr[v]:self.out_ptr[v + 1]]]

    def in_neighbors(self, v) -> np.ndarray:
        v = self.check_node(v)
        return self.src[self.in_edges[self.in_ptr[v]:self.in_ptr[v + 1]]]

    def out_lists(self) -> list:
        """Per-node out-neighbour lists as plain Python lists (parallel edges repeated)."""
        if "out_lists" not in self._cache:
            dst = self.dst[self.out_edges].tolist()
            ptr = self.out_ptr.tolist()
            self._cache["out_lists"] = [dst[ptr[i]:ptr[i + 1]] for i in range(self.n_nodes)]
        return self._cache["out_lists"]

    def edge_multiset(self) -> list:
        """Sorted ``(src_address, dst_address, weight, timestamp)`` tuples."""
        a = self.addresses
        return sorted(
            (a[s], a[d], w, t) for s, d, w, t in zip(
                self.src.tolist(), self.dst.tolist(),
                self.weight.tolist(), self.timestamp.tolist())
        )

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n_nodes).tobytes())
        for arr in (self.src, self.dst, self.weight, self.timestamp):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update("\n".join(self.addresses).encode())
        if self.labels is not None:
            h.update(self.labels.tobytes())
        return h.hexdigest()

    def with_labels(self, labels) -> "TransactionGraph":
        return TransactionGraph.from_edges(
            self.src, self.dst, self.weight, self.timestamp,
            n_nodes=self.n_nodes, addresses=self.addresses, labels=labels)


def _is_number(text) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_timestamp(text):
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"timestamp {text!r} is not an integer") from None
        return int(value)


def ingest_edge_list(path, fmt: EdgeListFormat | None = None,
                     labels_path=None) -> TransactionGraph:
    """Read a ``src,dst,weight,timestamp`` edge list into a graph.

    Raises
    ------
    EdgeListParseError
        A row has too few fields or a non-numeric weight/timestamp. The
        message carries the 1-based line number.
    GraphValidationError
        A weight or timestamp is negative.
    """
    fmt = fmt or EdgeListFormat()
    path = Path(path)
    need = max(fmt.src_col, fmt.dst_col, fmt.weight_col, fmt.time_col) + 1
    index: dict[str, int] = {}
    src, dst, w, t = [], [], [], []
    with open(path, newline="", encoding=fmt.encoding) as fh:
        reader = csv.reader(fh, delimiter=fmt.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < need:
                raise EdgeListParseError(path, lineno, f"expected {need} fields, got {len(row)}")
            if lineno == 1 and fmt.header is not False:
                if fmt.header or not _is_number(row[fmt.weight_col]):
                    continue
            a, b = row[fmt.src_col].strip(), row[fmt.dst_col].strip()
            try:
                weight = float(row[fmt.weight_col])
                ts = _parse_timestamp(row[fmt.time_col].strip())
            except ValueError as exc:
                raise EdgeListParseError(path, lineno, str(exc)) from None
            if weight < 0 or not np.isfinite(weight):
                raise GraphValidationError(f"{path}:{lineno}: invalid weight {weight}")
            if ts < 0:
                raise GraphValidationError(f"{path}:{lineno}: negative timestamp {ts}")
            src.append(index.setdefault(a, len(index)))
            dst.append(index.setdefault(b, len(index)))
            w.append(weight)
            t.append(ts)
    labels = None
    if labels_path is not None:
        label_map = read_labels(labels_path)
        for a in label_map:
            index.setdefault(a, len(index))
        labels = np.full(len(index), UNLABELED, dtype=np.int8)
        for a, y in label_map.items():
            labels[index[a]] = y
    return TransactionGraph.from_edges(src, dst, w, t, n_nodes=len(index),
                                       addresses=list(index), labels=labels)


def read_labels(path) -> dict:
    """Read an ``address,label`` file; label must be 0 or 1."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise EdgeListParseError(path, lineno, "expected address,label")
            value = row[1].strip()
            if lineno == 1 and value not in ("0", "1"):
                continue
            if value not in ("0", "1"):
                raise EdgeListParseError(path, lineno, f"label must be 0 or 1, got {value!r}")
            out[row[0].strip()] = int(value)
    return out


def write_edge_list(g: TransactionGraph, path, header=True):
    a = g.addresses
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if header:
            wr.writerow(["src", "dst", "weight", "timestamp"])
        for s, d, w, t in zip(g.src.tolist(), g.dst.tolist(),
                              g.weight.tolist(), g.timestamp.tolist()):
            wr.writerow([a[s], a[d], repr(w), t])


def write_labels(g: TransactionGraph, path):
    if g.labels is None:
        raise GraphError("graph has no labels")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["address", "label"])
        for addr, y in zip(g.addresses, g.labels.tolist()):
            if y != UNLABELED:
                wr.writerow([addr, y])


def write_address_map(g: TransactionGraph, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["address", "node_id"])
        for i, addr in enumerate(g.addresses):
            wr.writerow([addr, i])


def save_graph(g: TransactionGraph, directory):
    """Write edges, labels (if any) and the address map into ``directory``.

    Isolated nodes survive the round trip only through the label file, so an
    unlabeled isolated node is lost.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, directory / EDGES_FILE)
    if g.labels is not None:
        write_labels(g, directory / LABELS_FILE)
    write_address_map(g, directory / ADDRESS_MAP_FILE)
    return directory


def load_graph(directory) -> TransactionGraph:
    directory = Path(directory)
    labels = directory / LABELS_FILE
    g = ingest_edge_list(directory / EDGES_FILE,
                         labels_path=labels if labels.exists() else None)
    amap = directory / ADDRESS_MAP_FILE
    if amap.exists():
        g = _apply_address_map(g, amap)
    return g


def _apply_address_map(g, path):
    ids = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        next(rd, None)
        for row in rd:
            if row:
                ids[row[0]] = int(row[1])
    if len(ids) != g.n_nodes or set(ids) != set(g.addresses):
        # map written for a different graph; keep ingestion order
        return g
    perm = np.array([ids[a] for a in g.addresses], dtype=np.int64)
    if np.array_equal(perm, np.arange(g.n_nodes)):
        return g
    addresses = [None] * g.n_nodes
    for a, i in ids.items():
        addresses[i] = a
    labels = None
    if g.labels is not None:
        labels = np.empty_like(g.labels)
        labels[perm] = g.labels
    return TransactionGraph.from_edges(perm[g.src], perm[g.dst], g.weight, g.timestamp,
                                       n_nodes=g.n_nodes, addresses=addresses, labels=labels)


def identify_sources(g: TransactionGraph) -> np.ndarray:
    """Nodes with no incoming edges and at least one outgoing edge, ascending."""
    return np.flatnonzero((g.in_degree == 0) & (g.out_degree > 0))


def fan_in(g: TransactionGraph, v, weighted=True) -> float:
    v = g.check_node(v)
    edges = g.in_edges[g.in_ptr[v]:g.in_ptr[v + 1]]
    return float(g.weight[edges].sum()) if weighted else float(len(edges))


def fan_out(g: TransactionGraph, v, weighted=True) -> float:
    v = g.check_node(v)
    edges = g.out_edges[g.out_ptr[v]:g.out_ptr[v + 1]]
    return float(g.weight[edges].sum()) if weighted else float(len(edges))


def gather_scatter(g: TransactionGraph, v, weighted=True) -> float:
    return fan_in(g, v, weighted) + fan_out(g, v, weighted)


def fan_in_all(g: TransactionGraph, weighted=True) -> np.ndarray:
    w = g.weight if weighted else None
    return np.bincount(g.dst, weights=w, minlength=g.n_nodes).astype(np.float64)


def fan_out_all(g: TransactionGraph, weighted=True) -> np.ndarray:
    w = g.weight if weighted else None
    return np.bincount(g.src, weights=w, minlength=g.n_nodes).astype(np.float64)


def bfs_levels(g: TransactionGraph, origins, max_hops=None, directed=True) -> np.ndarray:
    """Hop distance from the nearest origin; ``-1`` for unreached nodes."""
    level = np.full(g.n_nodes, -1, dtype=np.int64)
    frontier = np.unique(np.asarray(list(origins), dtype=np.int64))
    level[frontier] = 0
    depth = 0
    while len(frontier) and (max_hops is None or depth < max_hops):
        nxt = [_neighbors_of(g, frontier, g.out_ptr, g.out_edges, g.dst)]
        if not directed:
            nxt.append(_neighbors_of(g, frontier, g.in_ptr, g.in_edges, g.src))
        cand = np.unique(np.concatenate(nxt))
        cand = cand[level[cand] < 0]
        depth += 1
        level[cand] = depth
        frontier = cand
    return level


def _neighbors_of(g, nodes, ptr, edges, other):
    starts, ends = ptr[nodes], ptr[nodes + 1]
    lens = ends - starts
    if lens.sum() == 0:
        return np.empty(0, dtype=np.int64)
    idx = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    idx += np.arange(lens.sum())
    return other[edges[idx]]


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("MPO_THREADS", "1")))
    except ValueError:
        return 1
