# coding: utf-8

# # Hierarchical node IDs
#
# Every node's ID comes from the chunk of the node that invited it.  This
# walk-through grows a bootstrap tree over a small synthetic social graph
# and looks at how much ID space each depth ends up with.

# In[1]:

import random

import networkx as nx
import numpy as np

from ipersea.graph import graph_stats, parse_edge_list
from ipersea.idspace import build_network, replica_keys, subchunk_size, verify_certificate_chain

G = nx.powerlaw_cluster_graph(600, 5, 0.2, seed=7)
g = parse_edge_list(f"{u} {v}" for u, v in G.edges())
graph_stats(g)


# A sub-chunk is `S ** c_f` IDs of the parent's original chunk of size S,
# so chunks shrink fast with depth.

# In[2]:

for S in (16, 2 ** 20, 2 ** 28, 2 ** 31 // 7):
    print(S, subchunk_size(S, 0.65))


# In[3]:

tree = build_network(g, n_boot=7, rng=random.Random(0))
print(tree.report())

depth = np.array(tree.depth)
length = np.array([c.length for c in tree.chunk], dtype=float)
for d in range(depth.max() + 1):
    sel = depth == d
    print(f"depth {d}: {sel.sum():4d} nodes, median chunk {np.median(length[sel]):.3g} IDs")


# Certificates chain back to the bootstrap nodes.  Tampering with a granted
# range breaks the chain.

# In[4]:

roots = [tree.ids[r] for r in tree.roots]
print(all(verify_certificate_chain(c, roots) for c in tree.cert))

from dataclasses import replace
leaf = max(range(len(tree)), key=tree.depth.__getitem__)
forged = replace(tree.cert[leaf], chunk=replace(tree.cert[leaf].chunk, length=2 ** 30))
print(verify_certificate_chain(forged, roots))


# Values are stored at R keys spread evenly around the ring, one in each
# region.

# In[5]:

keys = replica_keys(5, 7)
print(keys)
print(np.diff(sorted(keys)))
