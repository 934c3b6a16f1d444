"""
A small data center
===================

Builds the N=72 tree, prints its inventory and looks at hop distances
between compute and storage facets.
"""

# %%
import numpy as np

from ndap import build_topology

dc = build_topology(72, df=2.0)
for k, v in dc.summary().items():
    print(f"{k:>18}: {v}")

# %%
# Hop counts from every CN facet to every SN facet. Compute facets on
# high-end storage nodes sit next to their own SN (0 hops).
hops = dc.cn_sn_hops
values, counts = np.unique(hops, return_counts=True)
for h, c in zip(values, counts):
    print(f"{int(h)} hops: {c} CN/SN pairs")

# %%
# The route between a server and a regular storage node always passes a core
# switch, whatever the server.
server = int(dc.cn_nodes[0])
store = int(dc.sn_nodes[-1])
print([dc.nodes[u].name for u in dc.path(server, store)])
print("distance:", dc.distance(server, store))
