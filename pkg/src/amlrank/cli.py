"""Command-line front end: ``amlrank <subcommand> ...``.

Stage outputs are plain CSV/text, so the chain
``ingest -> ppr -> score -> train -> detect`` can be inspected or replaced
at any step. ``eval`` runs the whole pipeline in one go.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .anomaly import anomaly_scores, write_suspect_report
from .behavior import behavior_scores, read_scores, write_scores
from .classifier import (LogisticModel, features_from_scores, predict_f, read_features,
                         train, write_features)
from .graph import (EdgeListFormat, GraphError, default_threads, ingest_edge_list, load_graph,
                    save_graph)
from .pipeline import parse_mode, run_pipeline
from .ppr import PPRConfig, multi_source_ppr, read_node_list, read_ppr_dump, write_ppr_dump

log = logging.getLogger("amlrank")

PPR_SCORES = "ppr_scores.csv"
SVN_FILE = "svn.csv"
BEHAVIOR_FILE = "behavior_scores.csv"
FEATURES_FILE = "features.csv"


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _threads(args, cfg):
    if getattr(args, "threads", None) is not None:
        return args.threads
    if "run.threads" in cfg and cfg["run.threads"] != config_mod.DEFAULTS["run.threads"]:
        return int(cfg["run.threads"])
    return default_threads()


def _cfg(args, overrides=None):
    return config_mod.resolve(getattr(args, "config", None), overrides)


def cmd_ingest(args):
    fmt = EdgeListFormat(delimiter=args.delimiter)
    g = ingest_edge_list(args.edges, fmt, labels_path=args.labels)
    save_graph(g, args.out)
    print(f"{g.n_nodes} nodes, {g.n_edges} edges -> {args.out}")


def cmd_ppr(args):
    cfg = _cfg(args, {"ppr.alpha": args.alpha, "ppr.epsilon": args.epsilon,
                      "ppr.p_f": args.p_f, "ppr.hop_cap": args.hop_cap, "ppr.seed": args.seed,
                      "ppr.dangling_rule": args.dangling_rule})
    pcfg = PPRConfig.from_mapping(cfg)
    g = load_graph(args.graph)
    pps = multi_source_ppr(g, None, pcfg, threads=_threads(args, cfg))
    out = Path(args.out or args.graph)
    out.mkdir(parents=True, exist_ok=True)
    write_ppr_dump(pps, out / PPR_SCORES, out / SVN_FILE)
    config_mod.write_kv(cfg, out / "ppr.resolved")
    print(f"{len(pps.sources)} sources, {len(pps.visited)} visited nodes -> {out}")


def cmd_score(args):
    g = load_graph(args.graph)
    nodes = read_node_list(args.svn)
    bs = behavior_scores(g, nodes)
    out = Path(args.out or args.graph)
    out.mkdir(parents=True, exist_ok=True)
    write_scores(bs, out / BEHAVIOR_FILE)
    labels = g.labels.astype(int) if g.labels is not None else None
    write_features(features_from_scores(bs, labels), out / FEATURES_FILE)
    print(f"scored {len(bs)} nodes -> {out}")


def cmd_train(args):
    cfg = _cfg(args, {"classifier.split": args.split, "classifier.seed": args.seed})
    feats = read_features(args.features)
    model = train(feats, split=config_mod.floats(cfg["classifier.split"]),
                  seed=int(cfg["classifier.seed"]),
                  reg_grid=config_mod.floats(cfg["classifier.reg_grid"]),
                  iter_cap=int(cfg["classifier.iter_cap"]), tol=float(cfg["classifier.tol"]))
    model.save(args.out)
    print(f"reg_strength={model.reg_strength} -> {args.out}")


def cmd_detect(args):
    g = load_graph(args.graph)
    run_dir = Path(args.graph)
    ppr_path = Path(args.ppr or run_dir / PPR_SCORES)
    svn_path = Path(args.svn or run_dir / SVN_FILE)
    pps = read_ppr_dump(ppr_path, svn_path, g.n_nodes)
    scores_path = Path(args.scores or run_dir / BEHAVIOR_FILE)
    bs = read_scores(scores_path) if scores_path.exists() else behavior_scores(g, pps.visited)
    model = LogisticModel.load(args.model)
    pfs = predict_f(model, features_from_scores(bs))
    sas = anomaly_scores(pps, pfs)
    k = args.k
    if k > len(sas.ranking):
        raise ValueError(f"k={k} exceeds the {len(sas.ranking)} ranked nodes")
    out = Path(args.out or run_dir / "suspects.csv")
    write_suspect_report(sas, out, g.addresses, bs, k=k)
    print(f"top {k} suspects -> {out}")


def cmd_eval(args):
    cfg = _cfg(args, {"eval.fold": args.fold, "ppr.seed": args.seed,
                      "classifier.seed": args.seed})
    threads = _threads(args, cfg)
    report = run_pipeline(args.graph, cfg, parse_mode(args.mode), k=args.k, threads=threads,
                          out_dir=args.out)
    d = report.as_dict()
    for key in ("mode", "fold", "k", "precision_at_k", "recall_at_k", "f1", "accuracy", "auc"):
        print(f"{key} = {d[key]}")


def cmd_synth(args):
    from .synthetic import build_from_manifest
    g, records = build_from_manifest(args.manifest, args.out)
    n_inj = sum(len(r.injected_nodes) for r in records)
    print(f"{g.n_nodes} nodes, {g.n_edges} edges, {len(records)} patterns, "
          f"{n_inj} injected nodes -> {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="amlrank", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, threads=False):
        sp.add_argument("--config", help="flat 'section.key = value' config file")
        if threads:
            sp.add_argument("--threads", type=positive_int,
                            help="worker processes (default: MPO_THREADS or 1)")

    sp = sub.add_parser("ingest", help="edge list (+labels) -> graph directory")
    sp.add_argument("edges")
    sp.add_argument("--labels")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("ppr", help="multi-source PPR dump and visited set")
    sp.add_argument("graph")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--p-f", dest="p_f", type=float)
    sp.add_argument("--hop-cap", type=positive_int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--dangling-rule", choices=["absorb", "teleport"])
    sp.add_argument("-o", "--out", help="output directory (default: the graph directory)")
    common(sp, threads=True)
    sp.set_defaults(func=cmd_ppr)

    sp = sub.add_parser("score", help="NTS/NWS scores and classifier features")
    sp.add_argument("graph")
    sp.add_argument("--svn", required=True, help="visited-node file from 'ppr'")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("train", help="fit the logistic pattern model")
    sp.add_argument("features")
    sp.add_argument("--split")
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--out", default="model.txt")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("detect", help="rank suspects with a trained model")
    sp.add_argument("graph")
    sp.add_argument("--model", required=True)
    sp.add_argument("-k", type=positive_int, required=True)
    sp.add_argument("--ppr", help=f"PPR dump (default: <graph>/{PPR_SCORES})")
    sp.add_argument("--svn", help=f"visited-node file (default: <graph>/{SVN_FILE})")
    sp.add_argument("--scores", help=f"behavior scores (default: <graph>/{BEHAVIOR_FILE})")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("eval", help="run the whole pipeline and report metrics")
    sp.add_argument("graph")
    sp.add_argument("--mode", default="full", choices=["full", "tw", "random"])
    sp.add_argument("-k", type=positive_int)
    sp.add_argument("--fold", choices=["crossfit", "test"])
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--out", help="directory for suspects, metrics and manifest")
    common(sp, threads=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("synth", help="build a seeded benchmark from a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, KeyError, OSError, GraphError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"amlrank {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
