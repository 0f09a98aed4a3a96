import numpy as np
import pytest

from amlrank.graph import TransactionGraph


def random_digraph(seed, n_nodes, avg_degree):
    """Uniform random directed multigraph without self-loops."""
    rng = np.random.default_rng(seed)
    m = int(round(avg_degree * n_nodes))
    src = rng.integers(0, n_nodes, m)
    dst = (src + rng.integers(1, n_nodes, m)) % n_nodes
    w = np.round(rng.uniform(1, 100, m), 2)
    t = rng.integers(0, 1000, m)
    return TransactionGraph.from_edges(src, dst, w, t, n_nodes=n_nodes)


def edges_graph(edges, n_nodes=None, labels=None):
    """Graph from ``(src, dst[, weight[, time]])`` tuples on integer ids."""
    rows = [tuple(e) + (1.0, 0)[len(e) - 2:] for e in edges]
    src, dst, w, t = (list(c) for c in zip(*rows)) if rows else ([], [], [], [])
    return TransactionGraph.from_edges(src, dst, w, t, n_nodes=n_nodes, labels=labels)


@pytest.fixture
def toy_csv(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("a,b,1,10\nb,c,2,20\na,c,3,15\n")
    return p


# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
