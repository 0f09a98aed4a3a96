"""How stable is the mode ordering across benchmark seeds and background shapes?"""

import numpy as np

from amlrank.pipeline import detect, evaluate
from amlrank.synthetic import make_benchmark

MODES = ("full", "tw", "random")

for source_fraction in (0.02, 0.05, 0.1):
    aucs = {m: [] for m in MODES}
    recall = []
    for seed in range(8):
        g, _ = make_benchmark(2000, seed=seed, source_fraction=source_fraction)
        for m in MODES:
            out = evaluate(detect(g, {}, m), g.labels)
            aucs[m].append(out["auc"])
            if m == "full":
                recall.append(out["recall_at_k"])
    a = {m: np.array(v) for m, v in aucs.items()}
    wins_tw = int((a["full"] > a["tw"]).sum())
    wins_rand = int((a["full"] > a["random"]).sum())
    print(f"sources {source_fraction:.0%}: AUC full {a['full'].mean():.3f} "
          f"tw {a['tw'].mean():.3f} random {a['random'].mean():.3f} | "
          f"full beats tw {wins_tw}/8, random {wins_rand}/8 | full R@K {np.mean(recall):.3f}")
