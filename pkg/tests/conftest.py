import sys
import random

import networkx as nx
import pytest

from ipersea.adversary import AdversaryPolicy, spawn_sybils
from ipersea.graph import parse_edge_list
from ipersea.idspace import build_network
from ipersea.world import World


def graph_from_nx(G, directed=False):
    return parse_edge_list([f"{u} {v}" for u, v in G.edges()], directed=directed)


def surrogate(n=2426, m=7, p=0.2, seed=1):
    """Power-law clustered stand-in with hamsterster's size and clustering."""
    return graph_from_nx(nx.powerlaw_cluster_graph(n, m, p, seed=seed))


def small_world(n, seed, k=4, p=0.3):
    return graph_from_nx(nx.connected_watts_strogatz_graph(n, k, p, seed=seed))


def attacked_world(g, gn_ratio, seed, per_edge=10, n_boot=7):
    rng = random.Random(seed)
    tree = build_network(g, n_boot=n_boot, rng=rng)
    spawn_sybils(tree, AdversaryPolicy(round(gn_ratio * len(tree)), per_edge), rng)
    return World(tree, rng=rng)


@pytest.fixture(scope="session")
def small_graph():
    return graph_from_nx(nx.powerlaw_cluster_graph(300, 5, 0.2, seed=3))


@pytest.fixture(scope="session")
def surrogate_graph():
    return surrogate()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.verdict_line(n))
