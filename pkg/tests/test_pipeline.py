import numpy as np
import pytest

from amlrank.graph import save_graph
from amlrank.metrics import MetricError, auc
from amlrank.pipeline import EvalReport, Mode, detect, evaluate, parse_mode, run_pipeline
from amlrank.synthetic import (background_graph, build_from_manifest, bundled_manifest,
                               make_benchmark, read_manifest, write_manifest)


@pytest.fixture(scope="module")
def bench():
    g, recs = make_benchmark(400, seed=3)
    return g


def test_parse_mode():
    assert parse_mode("TW") is Mode.NORMALIZED_TW
    assert parse_mode("random_only") is Mode.RANDOM_ONLY
    with pytest.raises(ValueError):
        parse_mode("xgboost")


@pytest.mark.parametrize("mode", ["full", "tw", "random"])
def test_modes_rank_every_node(bench, mode):
    det = detect(bench, {}, mode)
    assert sorted(det.scores.ranking.tolist()) == list(range(bench.n_nodes))
    m = evaluate(det, bench.labels)
    assert 0 <= m["auc"] <= 1 and m["k"] == int(bench.labels.sum())


def test_full_sigma_is_pi_over_f(bench):
    det = detect(bench, {}, "full")
    s = det.scores
    nz = s.scored & (s.pi > 0)
    assert np.allclose(s.sigma[nz], s.pi[nz] / s.f_value[nz], rtol=0, atol=0)


def test_tw_ignores_ppr(bench):
    det = detect(bench, {}, "tw")
    assert det.pps is None
    nodes = det.patterns.nodes
    assert np.array_equal(det.scores.sigma[nodes], 1.0 / det.patterns.f_value)


def test_random_mode_is_scaled_ppr(bench):
    det = detect(bench, {}, "random")
    assert np.array_equal(det.scores.sigma, det.pps.scaled())


def test_auc_treats_unscored_as_lowest(bench):
    det = detect(bench, {}, "random")
    m = evaluate(det, bench.labels)
    y = bench.labels.astype(int)
    score = np.where(det.scores.scored, det.scores.sigma, -1.0)
    assert m["auc"] == auc(score, y)


def test_test_fold_protocol(bench):
    det = detect(bench, {"eval.fold": "test"}, "full")
    m = evaluate(det, bench.labels)
    assert m["n_eval"] < bench.n_nodes / 5
    assert det.model is not None


def test_zero_anomalies_is_an_error():
    g = background_graph(200, seed=0)
    with pytest.raises(MetricError):
        run_pipeline(g, {}, "random")


def test_report_deterministic_and_roundtrip(tmp_path, bench):
    a = run_pipeline(bench, {}, "full", out_dir=tmp_path / "a")
    b = run_pipeline(bench, {}, "full", out_dir=tmp_path / "b")
    assert a.to_json(wall_clock=False) == b.to_json(wall_clock=False)
    for name in ("suspects.csv", "config.resolved", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    back = EvalReport.read(tmp_path / "a" / "metrics.json")
    assert back.as_dict(False) == a.as_dict(False)


def test_run_from_directory(tmp_path, bench):
    save_graph(bench, tmp_path / "g")
    a = run_pipeline(tmp_path / "g", {}, "tw", k=10)
    b = run_pipeline(bench, {}, "tw", k=10)
    assert a.as_dict(False) == b.as_dict(False) and a.k == 10


def test_manifest_roundtrip(tmp_path):
    params = read_manifest(bundled_manifest())
    write_manifest(tmp_path / "m.txt", **params)
    again = read_manifest(tmp_path / "m.txt")
    assert [s.size for s in again["specs"]] == [s.size for s in params["specs"]]
    g, recs = build_from_manifest(tmp_path / "m.txt", tmp_path / "out")
    h, _ = make_benchmark(**params)
    assert g.checksum() == h.checksum()
    assert (tmp_path / "out" / "labels.csv").exists()
    assert sum(len(r.injected_nodes) for r in recs) == 60


def test_background_roles():
    g = background_graph(1000, seed=5, source_fraction=0.05, sink_fraction=0.05)
    assert not np.any(g.src == g.dst)
    sources = (g.in_degree == 0) & (g.out_degree > 0)
    assert abs(int(sources.sum()) - 50) <= 5
    assert np.all(g.in_degree + g.out_degree > 0)
