"""Approximate personalized PageRank on a toy graph, checked against power iteration."""

from amlrank.graph import TransactionGraph, identify_sources
from amlrank.ppr import PPRConfig, exact_ppr_oracle, forward_push, single_source_ppr, walk_budget

# a -> b -> c, a -> d -> c, c -> e ; a is the only account with no incoming transfer
edges = [("a", "b", 5.0, 1), ("b", "c", 5.0, 2), ("a", "d", 3.0, 1),
         ("d", "c", 3.0, 3), ("c", "e", 8.0, 4)]
g = TransactionGraph.from_records(edges)
print("addresses:", g.addresses)
print("sources:  ", [g.addresses[v] for v in identify_sources(g)])

# walk budget grows with the source out-degree and shrinks with epsilon
for eps in (0.5, 0.2, 0.1):
    cfg = PPRConfig(epsilon=eps, p_f=0.01)
    print(f"eps={eps}: K(a) = {walk_budget(2, cfg)}")

# push phase: reserves settle, residuals stay below d(u) / (alpha K)
cfg = PPRConfig(epsilon=0.1, p_f=0.01)
res, reserve = forward_push(g, 0, cfg)
print("reserves :", {g.addresses[v]: round(x, 4) for v, x in sorted(reserve.items())})
print("residuals:", {g.addresses[v]: round(x, 4) for v, x in sorted(res.items())})
print("mass     :", sum(reserve.values()) + sum(res.values()))

# walks finish the job; compare with the exact vector
est = single_source_ppr(g, 0, cfg).scores
exact = exact_ppr_oracle(g, 0, cfg.alpha)
print("\nnode  exact    approx   rel.err")
for v in range(g.n_nodes):
    e, a = exact[v], est.get(v, 0.0)
    print(f"{g.addresses[v]:>4}  {e:.4f}   {a:.4f}   {abs(a - e) / e:.3f}")
