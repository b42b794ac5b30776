# coding: utf-8

# # Sybils, inspections and filtered lookups
#
# Attack edges let an adversary admit Sybils under honest victims.  Here we
# attach ten Sybils per attack edge, let every honest parent inspect its
# children, and compare plain majority voting with the status filter.

# In[1]:

import random
from collections import Counter

import networkx as nx

from ipersea import experiment as ex
from ipersea.adversary import AdversaryPolicy, spawn_sybils
from ipersea.defense import Verdict, run_inspection_campaign, status_filter, sybil_verdicts
from ipersea.dht import iterative_lookup, majority_vote, replica_responses, replicated_put
from ipersea.graph import parse_edge_list
from ipersea.idspace import build_network
from ipersea.world import World

G = nx.powerlaw_cluster_graph(800, 6, 0.2, seed=3)
g = parse_edge_list(f"{u} {v}" for u, v in G.edges())

rng = random.Random(1)
tree = build_network(g, n_boot=7, rng=rng)
report = spawn_sybils(tree, AdversaryPolicy(attack_edges=len(tree), sybils_per_attack_edge=10), rng)
world = World(tree, rng=rng)
print(len(tree.honest_nodes), "honest,", len(report.attackers), "Sybils")


# Sybils are the large majority of nodes, yet each cluster sits inside the
# small sub-chunk its entry node was given.  Count how often a Sybil owns a
# random key:

# In[2]:

keys = [rng.getrandbits(31) for _ in range(2000)]
owned = Counter(tree.honest[world.owner(k)] for k in keys)
print("Sybil-owned keys:", owned[False] / len(keys))


# In[3]:

campaign = run_inspection_campaign(world, random.Random(2), "trusted", graph=g)
print("FP", campaign.fp_rate, "FN", campaign.fn_rate)
print(Counter(i.role for i in campaign.inspections))
print("mean inspection hops", sum(campaign.inspection_hops) / len(campaign.inspection_hops))

verdicts = sybil_verdicts(tree, campaign.ledger, tree.attacker_nodes)
print(Counter(verdicts.values()))


# Store and fetch a few values, once with majority voting over all
# replicas and once accepting only holders that resolve honest.

# In[4]:

honest = tree.honest_nodes
accept = status_filter(tree, campaign.ledger)
vote_ok = filtered_ok = 0
for i in range(200):
    key = rng.getrandbits(31)
    replicated_put(world, honest[rng.randrange(len(honest))], key, i, node_filter=accept)
    who = honest[rng.randrange(len(honest))]
    plain = [r.value for r in replica_responses(world, who, key) if r.value is not None]
    vote_ok += bool(plain) and majority_vote(plain, rng) == i
    kept = [r.value for r in replica_responses(world, who, key, node_filter=accept)]
    filtered_ok += i in kept
print("majority vote:", vote_ok / 200, " filtered:", filtered_ok / 200)


# The same thing through the experiment harness, averaged over seeds:

# In[5]:

cfg = ex.ExperimentConfig(dataset="demo", gn_ratio=1.0, lookups=200, repeats=2)
print(ex.write_csv([ex.run_experiment(cfg, g),
                    ex.run_experiment(cfg.replace(mode="persea_majority"), g)]))
