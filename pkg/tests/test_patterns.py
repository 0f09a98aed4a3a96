import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlrank.behavior import weight_scores
from amlrank.graph import fan_in, fan_out
from amlrank.patterns import (PatternError, PatternKind, PatternSpec, bipartite_consistent,
                              generate_pattern, inject, longest_out_path, random_score,
                              structural_checks)
from amlrank.synthetic import background_graph

from conftest import edges_graph, random_digraph


def test_fan_in_shape():
    p = generate_pattern(PatternSpec("fan_in", {"width": 3}, weight_range=(1, 1)))
    g = p.to_graph()
    hub = p.roles.index("hub")
    assert fan_in(g, hub, weighted=False) == 3 and fan_out(g, hub, weighted=False) == 0
    assert structural_checks(g, hub).gather_scatter == 3.0


def test_fan_out_mirrors_fan_in():
    p = generate_pattern(PatternSpec("fan_out", {"width": 4}))
    g = p.to_graph()
    assert fan_out(g, 0, weighted=False) == 4 and fan_in(g, 0, weighted=False) == 0


def test_stack_is_a_timed_path():
    p = generate_pattern(PatternSpec("stack", {"length": 4}))
    g = p.to_graph()
    assert g.n_edges == 3
    for v in (1, 2):
        assert g.in_degree[v] == g.out_degree[v] == 1
    assert np.all(np.diff(p.timestamp) >= 0)


def test_stack_head_longest_path():
    g = generate_pattern(PatternSpec("stack", {"length": 5})).to_graph()
    assert longest_out_path(g, 0) == 4


def test_gather_scatter_balanced_hub():
    spec = PatternSpec("gather_scatter", {"n_in": 3, "n_out": 2}, weight_range=(1, 1))
    p = generate_pattern(spec)
    g = p.to_graph()
    assert p.weight[-2:].tolist() == [1.5, 1.5]
    raw, _ = weight_scores(g, [0])
    assert raw.tolist() == [0.0]
    t_in = p.timestamp[p.dst == 0]
    t_out = p.timestamp[p.src == 0]
    assert t_in.max() <= t_out.min()


def test_bipartite_edges_cross_sets():
    p = generate_pattern(PatternSpec("bipartite", {"n_left": 3, "n_right": 2}, density=0.5, seed=4))
    right = {i for i, r in enumerate(p.roles) if r.startswith("right")}
    assert all(s not in right and d in right for s, d in zip(p.src, p.dst))
    assert set(p.src.tolist()) == set(range(2, 5))


def test_bipartite_flag():
    g = edges_graph([(0, 2), (0, 3), (1, 2), (1, 3)])
    assert bipartite_consistent(g, 0)
    g2 = edges_graph([(0, 2), (0, 3), (1, 2), (1, 3), (0, 1)])
    assert not bipartite_consistent(g2, 0)


def test_random_pattern_density():
    p = generate_pattern(PatternSpec("random", {"n_nodes": 5}, density=1.0))
    assert len(p.src) == 20 and np.all(p.src != p.dst)


def test_random_score():
    g = edges_graph([(0, 1, 4.0, 0), (0, 2, 2.0, 0)])
    assert random_score(g, 0) == 3.0
    assert random_score(g, 2) == 0.0


@pytest.mark.parametrize("bad", [
    dict(kind="fan_in", size={"width": 0}),
    dict(kind="stack", size={"length": 1}),
    dict(kind="fan_in", size={"depth": 3}),
    dict(kind="fan_in", weight_range=(5, 1)),
    dict(kind="fan_in", margin=1.0),
    dict(kind="random", density=0.0),
])
def test_spec_validation(bad):
    with pytest.raises(PatternError):
        PatternSpec(**bad)


def test_inject_counts():
    g = background_graph(100, seed=1)
    out, recs = inject(g, [PatternSpec("fan_in", {"width": 5}, seed=9)])
    assert out.n_nodes - g.n_nodes <= 6
    assert out.n_edges - g.n_edges == 5
    assert out.labels[recs[0].injected_nodes].tolist() == [1] * 6
    assert int(out.labels.sum()) == 6


def test_inject_empty_and_too_many():
    g = random_digraph(0, 3, 1.0)
    same, recs = inject(g, [])
    assert same is g and recs == []
    specs = [PatternSpec("fan_in", seed=i) for i in range(4)]
    with pytest.raises(PatternError):
        inject(g, specs)


def test_inject_deterministic_and_windowed():
    g = background_graph(300, seed=2)
    specs = [PatternSpec(k, seed=50 + i) for i, k in enumerate(PatternKind)]
    a, ra = inject(g, specs)
    b, _ = inject(g, specs)
    assert a.checksum() == b.checksum()
    span = int(g.timestamp.max() - g.timestamp.min())
    for r in ra:
        ts = a.timestamp[r.injected_edges]
        assert ts.max() - ts.min() <= round(0.1 * span)


def test_duplicate_seed_rejected():
    g = background_graph(50, seed=0)
    with pytest.raises(PatternError, match="duplicate"):
        inject(g, [PatternSpec("fan_in", seed=1), PatternSpec("fan_in", seed=1)])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(PatternKind)), st.integers(0, 10**6), st.integers(2, 8))
def test_generated_weights_and_times_in_range(kind, seed, size):
    key = next(iter(PatternSpec(kind).size))
    spec = PatternSpec(kind, {key: size}, weight_range=(10, 20), time_range=(100, 200), seed=seed)
    p = generate_pattern(spec)
    assert np.all((p.timestamp >= 100) & (p.timestamp <= 200))
    assert np.all((p.weight >= 0) & (p.weight <= 20 * size))
    assert np.all(p.src != p.dst)
    assert generate_pattern(spec).weight.tobytes() == p.weight.tobytes()
