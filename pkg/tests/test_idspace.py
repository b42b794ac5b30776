import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from ipersea.adversary import AdversaryPolicy, spawn_sybils
from ipersea.idspace import (AllocationExhausted, BootstrapTree, Chunk,
                             allocate_bootstrap_chunks, build_network, carve_subchunk, check_id,
                             region_bounds, region_of, replica_keys, subchunk_size,
                             verify_certificate_chain)

from conftest import small_world


def int_root_floor(S, p, q):
    """Largest s with s**q <= S**p, by bisection on integers only."""
    lo, hi = 0, S + 1
    bound = S ** p
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** q <= bound:
            lo = mid
        else:
            hi = mid
    return lo


def test_subchunk_examples():
    assert subchunk_size(16, 0.65) == 6
    assert subchunk_size(2, 0.65) == 1
    assert subchunk_size(2, 0.1) == 1
    assert subchunk_size(1, 0.9) == 1
    s = subchunk_size(1 << 28, 0.65)
    assert s == int_root_floor(1 << 28, 13, 20)
    assert abs(s - 301124) <= 1


@pytest.mark.parametrize("S", [3, 17, 1000, 4096, 1 << 20, (1 << 31) // 7, 306783378])
def test_subchunk_matches_integer_oracle(S):
    assert subchunk_size(S, 0.65) == max(1, int_root_floor(S, 13, 20))


def test_bootstrap_chunks():
    assert allocate_bootstrap_chunks(4, 2) == [Chunk(0, 8), Chunk(8, 8)]
    assert allocate_bootstrap_chunks(4, 1) == [Chunk(0, 16)]
    chunks = allocate_bootstrap_chunks(31, 7)
    assert chunks[1].start == 306783378
    assert sum(c.length for c in chunks) == 1 << 31
    assert max(c.length for c in chunks) - min(c.length for c in chunks) <= 1
    with pytest.raises(ValueError):
        allocate_bootstrap_chunks(4, 0)


def test_admit_child_examples():
    tree = BootstrapTree(b=4, c_f=0.65)
    root = tree.add_root(Chunk(0, 16))
    assert tree.ids[root] == 0
    c1, cert1 = tree.admit_child(root)
    c2, _ = tree.admit_child(root)
    assert (tree.ids[c1], tree.chunk[c1]) == (1, Chunk(1, 6))
    assert (tree.ids[c2], tree.chunk[c2]) == (7, Chunk(7, 6))
    assert verify_certificate_chain(cert1, anchors=[0])
    c3, _ = tree.admit_child(root)
    assert tree.chunk[c3] == Chunk(13, 3)  # short tail
    with pytest.raises(AllocationExhausted):
        tree.admit_child(root)


def test_carve_exhausted():
    with pytest.raises(AllocationExhausted):
        carve_subchunk(Chunk(0, 16), Chunk(16, 0), 0.65)


def test_check_id():
    assert check_id(5, 4) == 5
    with pytest.raises(ValueError):
        check_id(16, 4)


def test_certificate_forgery_rejected():
    tree = BootstrapTree(b=4)
    root = tree.add_root(Chunk(0, 16))
    child, cert = tree.admit_child(root)
    assert verify_certificate_chain(tree.cert[root])
    forged = replace(cert, chunk=Chunk(1, 20))
    assert not verify_certificate_chain(forged)
    wrong_issuer = replace(cert, issuer=9)
    assert not verify_certificate_chain(wrong_issuer)
    assert not verify_certificate_chain(cert, anchors=[8])
    assert not verify_certificate_chain(object())


def test_replica_examples():
    assert replica_keys(0, 4, 4) == [0, 4, 8, 12]
    assert replica_keys(9, 1, 4) == [9]
    keys = replica_keys(5, 7, 31)
    assert keys[:3] == [5, 306783383, 613566761]
    with pytest.raises(ValueError):
        replica_keys(0, 0, 4)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, (1 << 31) - 1), st.integers(1, 64))
def test_replica_gaps(key, R):
    ring = sorted(replica_keys(key, R, 31))
    assert len(set(ring)) == R
    gaps = [b - a for a, b in zip(ring, ring[1:])] + [ring[0] + (1 << 31) - ring[-1]]
    assert max(gaps) - min(gaps) <= 1


@pytest.mark.parametrize("b,R", [(4, 3), (5, 7), (6, 5), (8, 7)])
def test_region_of_exhaustive(b, R):
    for key in range(1 << b):
        lo, hi = region_bounds(region_of(key, R, b), R, b)
        assert lo <= key < hi


def test_replicas_one_per_region():
    rng = random.Random(0)
    for _ in range(200):
        keys = replica_keys(rng.getrandbits(31), 7, 31)
        assert sorted(region_of(k, 7, 31) for k in keys) == list(range(7))


def test_path_graph_build():
    from ipersea.graph import parse_edge_list
    g = parse_edge_list(["0 1", "1 2"])
    tree = build_network(g, n_boot=1, bootstrap_vertices=[0])
    assert tree.vertex == [0, 1, 2]
    assert tree.parent == [-1, 0, 1]
    with pytest.raises(ValueError):
        build_network(g, n_boot=4)
    with pytest.raises(ValueError):
        build_network(g, n_boot=0)


@pytest.mark.parametrize("seed", range(4))
def test_build_invariants(seed):
    g = small_world(400, seed)
    rng = random.Random(seed)
    tree = build_network(g, n_boot=7, rng=rng)
    report = spawn_sybils(tree, AdversaryPolicy(60, 10), rng)
    assert len(tree.roots) == 7
    assert len(set(tree.ids)) == len(tree)
    assert tree.report().admitted + tree.report().dropped == g.node_count
    roots = [tree.ids[r] for r in tree.roots]
    for u in range(len(tree)):
        assert verify_certificate_chain(tree.cert[u], anchors=roots)
        kids = sorted(tree.chunk[c].start for c in tree.children[u])
        spans = sorted((tree.chunk[c].start, tree.chunk[c].end) for c in tree.children[u])
        for (a0, a1), (b0, _) in zip(spans, spans[1:]):
            assert a1 <= b0
        for c in tree.children[u]:
            assert tree.chunk[u].contains(tree.chunk[c])
            assert tree.ids[c] != tree.ids[u]
        assert len(kids) == len(set(kids))
        if tree.parent[u] != -1:
            assert tree.depth[u] == tree.depth[tree.parent[u]] + 1
    # confinement: a whole Sybil cluster sits inside its entry's sub-chunk
    for victim, entry in report.entries:
        for s in tree.subtree(entry):
            assert tree.chunk[entry].contains_id(tree.ids[s])
            assert not tree.honest[s]
