"""Bundled benchmark: where each laundering typology lands in the ranking."""

import numpy as np

from amlrank.pipeline import detect, evaluate
from amlrank.synthetic import bundled_manifest, make_benchmark, read_manifest

g, records = make_benchmark(**read_manifest(bundled_manifest()))
print(f"{g.n_nodes} accounts, {g.n_edges} transfers, {int(g.labels.sum())} labeled laundering")

print("\nmode     AUC    P@K    R@K")
dets = {}
for mode in ("full", "tw", "random"):
    dets[mode] = det = detect(g, {}, mode)
    m = evaluate(det, g.labels)
    print(f"{mode:<7} {m['auc']:.3f}  {m['precision_at_k']:.3f}  {m['recall_at_k']:.3f}")

# per typology: median rank and how many members make the top K
k = int(g.labels.sum())
pos = dets["full"].scores.rank_of()
print(f"\ntypology          members  median rank  in top {k}")
for r in records:
    ranks = pos[r.injected_nodes]
    print(f"{r.pattern.kind.value:<16} {len(ranks):>8} {int(np.median(ranks)):>12} "
          f"{int((ranks < k).sum()):>9}")

# what crowds the top of the list: benign funding accounts share the source self-mass
top = dets["full"].scores.ranking[:k]
src = (g.in_degree == 0) & (g.out_degree > 0)
benign = top[g.labels[top] == 0]
print(f"\nbenign accounts in the top {k}: {len(benign)}, of which sources: {int(src[benign].sum())}")
