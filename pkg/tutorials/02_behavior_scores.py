"""Timestamp and weight asymmetry of a relaying account."""

from amlrank.behavior import behavior_scores
from amlrank.graph import TransactionGraph

# mule m collects two deposits and pays out soon after, keeping 1 unit
edges = [("x", "m", 5.0, 10), ("y", "m", 5.0, 20), ("m", "z", 9.0, 21), ("m", "w", 0.0, 25),
         # an ordinary shop: paid over a long period, one payout at the end
         ("x", "shop", 20.0, 5), ("y", "shop", 30.0, 400), ("shop", "bank", 48.0, 900)]
g = TransactionGraph.from_records(edges)
bs = behavior_scores(g)
print("node    theta  N_theta  omega  N_omega")
for i, v in enumerate(bs.nodes):
    print(f"{g.addresses[v]:<6} {bs.theta_raw[i]:6.0f}  {bs.theta_norm[i]:7.3f} "
          f"{bs.omega_raw[i]:6.1f}  {bs.omega_norm[i]:7.3f}")
# m: in spread 10, out spread 4 -> theta 6 ; in 10, out 9 -> omega 1
