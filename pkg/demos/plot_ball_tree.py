"""
Building a ball tree over points
================================

Points are split recursively along the axis with the largest spread until
a node holds at most ``f`` of them.  Every node keeps its pivot (the mean
of its points) and a radius that covers all of them.
"""

import numpy as np
from daskmeans import build, generate_synthetic

data = generate_synthetic(5000, 2, 8, seed=1, spread=0.03)
tree = build(data, 30)

print("points", tree.n, "leaves", tree.leaves, "internal", tree.internals, "depth", tree.depth)

# The default half fill leaves about f/2 points per leaf, never more than f.
sizes = tree.counts()[tree.leaf_nodes()]
print("leaf sizes: min", min(sizes), "max", max(sizes))

# The root ball covers everything.
root_dist = np.linalg.norm(data.points - tree.pivots[0], axis=1)
print("root radius", tree.radii[0], ">= farthest point", root_dist.max())

# A full fill packs f points per leaf instead, halving the leaf count.
full = build(data, 30, fill="full")
print("full-fill leaves", full.leaves)

# The first few lines of the dump: depth, pivot, radius, count.
print("\n".join(tree.dump().splitlines()[:4]))
