"""Walk through the planted benchmark generator.

Builds a small dynamic network with scripted community events, then prints
what was planted: the community count series, overlap structure, degree
statistics, and how many edges land inside communities.

Run:  python3 demos/benchmark_tour.py
"""
from __future__ import annotations

import numpy as np

from dyncomm import Event, GenConfig, GenSchedule, generate_dynamic


def membership_map(cover):
    out = {}
    for cid, members in cover.communities.items():
        for i in members:
            out.setdefault(i, set()).add(cid)
    return out


def main():
    cfg = GenConfig(n=150, k=5, overlap_nodes=12, memberships_per_overlap=2,
                    mixing=0.15, avg_degree=14, t=5, churn=0.05, seed=20)
    sched = GenSchedule((
        Event(2, "birth", size=14),
        Event(3, "split", community=1),
        Event(4, "merge", community=0, other=2),
        Event(5, "death", community=5),
    ))
    net, truth = generate_dynamic(cfg, sched)

    print("planted community count per snapshot:", truth.k_series)
    print("schedule says:", sched.k_series(cfg.k, cfg.t))
    print()

    for g, cover in zip(net.snapshots, truth.covers):
        by_node = membership_map(cover)
        deg = np.array([g.degrees[i] for i in range(cfg.n)])
        intra = sum(1 for u, v in g.edges if by_node[u] & by_node[v])
        sizes = sorted(len(m) for m in cover.communities.values())
        heavy = sum(1 for cs in by_node.values() if len(cs) > 1)
        print("t=%d  edges=%d  mean_deg=%.1f  max_deg=%d" %
              (g.t, g.m, deg.mean(), deg.max()))
        print("      community sizes:", sizes)
        print("      nodes with several memberships: %d" % heavy)
        print("      edges inside some community: %.1f%%" % (100 * intra / g.m))
    print()
    print("the intra-community share tracks 1 - mixing = %.2f" % (1 - cfg.mixing))


if __name__ == "__main__":
    main()
