"""Kademlia-style routing state and the replicated iterative lookup.

Distances are XOR distances.  Lookups for a key are confined to the key's
virtual region: inside a lookup, nodes outside the region rank after every
node inside it (``region_metric``).  The owner of a key is the XOR-closest
node inside its region, optionally among nodes passing a filter.
"""

from __future__ import annotations

import heapq
import random
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from .idspace import region_bounds, region_of, replica_keys

NodeFilter = Callable[[int], bool]


class NoResult(LookupError):
    """No replica returned a value."""


def xor_distance(a: int, b: int) -> int:
    return a ^ b


def region_metric(key: int, region: tuple[int, int] | None, b: int) -> Callable[[int], int]:
    """Distance to ``key`` with out-of-region IDs pushed past every in-region one."""
    if region is None:
        return lambda x: x ^ key
    lo, hi = region
    penalty = 1 << b
    return lambda x: (x ^ key) if lo <= x < hi else (x ^ key) | penalty


def _xor_walk(ids: Sequence[int], key: int, lo: int, hi: int, b: int) -> Iterator[int]:
    """Yield positions of ``ids[lo:hi]`` in increasing XOR distance to key.

    ``ids`` must be sorted.  Walks the implicit binary trie over the slice,
    always descending into the half that matches the key's bit first.
    """
    stack = [(lo, hi, b - 1, 0)]
    while stack:
        lo, hi, bit, prefix = stack.pop()
        if hi - lo <= 1 or bit < 0:
            yield from range(lo, hi)
            continue
        one = prefix | (1 << bit)
        mid = bisect_left(ids, one, lo, hi)
        zero_part = (lo, mid, bit - 1, prefix)
        one_part = (mid, hi, bit - 1, one)
        if (key >> bit) & 1:
            stack.append(zero_part)
            stack.append(one_part)
        else:
            stack.append(one_part)
            stack.append(zero_part)


class XorIndex:
    """Sorted ID directory answering nearest-by-XOR queries."""

    def __init__(self, ids: Iterable[int], nodes: Iterable[int] | None = None, b: int = 31):
        ids = list(ids)
        nodes = list(range(len(ids))) if nodes is None else list(nodes)
        order = sorted(range(len(ids)), key=ids.__getitem__)
        self.ids = [ids[i] for i in order]
        self.nodes = [nodes[i] for i in order]
        self.b = b

    def __len__(self) -> int:
        return len(self.ids)

    def span(self, lo: int, hi: int) -> tuple[int, int]:
        """Positions covering IDs in ``[lo, hi)``."""
        return bisect_left(self.ids, lo), bisect_left(self.ids, hi)

    def iter_nearest(self, key: int, region: tuple[int, int] | None = None,
                     inside_only: bool = False) -> Iterator[int]:
        """Node handles in ``region_metric`` order."""
        ids, b = self.ids, self.b
        if region is None:
            for pos in _xor_walk(ids, key, 0, len(ids), b):
                yield self.nodes[pos]
            return
        a, c = self.span(*region)
        for pos in _xor_walk(ids, key, a, c, b):
            yield self.nodes[pos]
        if inside_only:
            return
        outside = heapq.merge(_xor_walk(ids, key, 0, a, b), _xor_walk(ids, key, c, len(ids), b),
                              key=lambda pos: ids[pos] ^ key)
        for pos in outside:
            yield self.nodes[pos]

    def nearest(self, key: int, count: int, region: tuple[int, int] | None = None,
                accept: NodeFilter | None = None, inside_only: bool = False) -> list[int]:
        out: list[int] = []
        if count <= 0:
            return out
        for node in self.iter_nearest(key, region, inside_only):
            if accept is None or accept(node):
                out.append(node)
                if len(out) == count:
                    break
        return out


@dataclass(frozen=True)
class PeerRecord:
    node_id: int
    address: str = ""
    public_key: str = ""


class RoutingTable:
    """b k-buckets; bucket ``i`` (1-indexed) shares exactly ``i-1`` leading bits."""

    def __init__(self, owner_id: int, b: int = 31, k: int = 7):
        self.owner_id = owner_id
        self.b = b
        self.k = k
        self.buckets: list[list[PeerRecord]] = [[] for _ in range(b)]
        self._ids: set[int] = set()

    def bucket_index(self, node_id: int) -> int:
        """1-indexed bucket for ``node_id``."""
        return self.b - (self.owner_id ^ node_id).bit_length() + 1

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._ids

    def __iter__(self) -> Iterator[PeerRecord]:
        for bucket in self.buckets:
            yield from bucket

    def insert(self, peer: PeerRecord) -> bool:
        """Insert ``peer``; a full bucket keeps its entries and refuses it."""
        if peer.node_id == self.owner_id:
            raise ValueError("a routing table cannot hold its owner")
        if peer.node_id in self._ids:
            return False
        bucket = self.buckets[self.bucket_index(peer.node_id) - 1]
        if len(bucket) >= self.k:
            return False
        bucket.append(peer)
        self._ids.add(peer.node_id)
        return True

    def closest(self, key: int, count: int, region: tuple[int, int] | None = None) -> list[PeerRecord]:
        metric = region_metric(key, region, self.b)
        return heapq.nsmallest(count, self, key=lambda p: (metric(p.node_id), p.node_id))


def bucket_insert(table: RoutingTable, peer: PeerRecord) -> RoutingTable:
    table.insert(peer)
    return table


def closest_peers(table: RoutingTable, key: int, count: int,
                  region: tuple[int, int] | None = None) -> list[PeerRecord]:
    return table.closest(key, count, region)


def bucket_interval(owner_id: int, shared_bits: int, b: int) -> tuple[int, int]:
    """ID range of the bucket holding peers sharing exactly ``shared_bits`` bits."""
    shift = b - 1 - shared_bits
    lo = ((owner_id >> shift) ^ 1) << shift
    return lo, lo + (1 << shift)


def fill_routing_tables(tree, nodes: Iterable[int], k: int = 7, rng: random.Random | None = None,
                        samples_per_bucket: int | None = None) -> dict[int, RoutingTable]:
    """Static routing tables for ``nodes``.

    Tree neighbours (parent, children, and fellow roots for bootstrap nodes)
    go in first.  Each bucket then gets up to ``samples_per_bucket``
    (default ``2k``) random IDs drawn from its range, each resolved to the
    node holding authority over it (the deepest node whose chunk contains
    it), until the bucket is full.  A node therefore enters in proportion to
    the ID space it was granted and has not handed on, not by head count,
    so Sybils confined to small chunks stay rare.  Draws landing in space
    held by a node outside the bucket are discarded; a bucket left empty
    that way takes the node XOR-closest to one more random draw.
    """
    rng = rng or random.Random(0)
    samples = 2 * k if samples_per_bucket is None else samples_per_bucket
    b = tree.b
    ids = tree.ids
    index = XorIndex(ids, b=b)
    roots = set(tree.roots)
    tables: dict[int, RoutingTable] = {}
    for u in nodes:
        table = RoutingTable(ids[u], b=b, k=k)
        neighbours = list(tree.children[u])
        if tree.parent[u] != -1:
            neighbours.insert(0, tree.parent[u])
        elif u in roots:
            neighbours = [r for r in tree.roots if r != u] + neighbours
        for v in neighbours:
            table.insert(PeerRecord(ids[v]))
        for shared in range(b):
            lo, hi = bucket_interval(ids[u], shared, b)
            a, c = index.span(lo, hi)
            if a == c:
                continue
            bucket = table.buckets[shared]
            if len(bucket) >= k:
                continue
            if c - a <= k - len(bucket):
                for pos in range(a, c):
                    table.insert(PeerRecord(index.ids[pos]))
                continue
            for _ in range(samples):
                node_id = _authority(tree, index, lo + rng.randrange(hi - lo), a, c)
                if node_id is not None and node_id not in table:
                    table.insert(PeerRecord(node_id))
                    if len(bucket) >= k:
                        break
            if not bucket:
                pos = next(_xor_walk(index.ids, lo + rng.randrange(hi - lo), a, c, b))
                table.insert(PeerRecord(index.ids[pos]))
        tables[u] = table
    return tables


def _authority(tree, index: XorIndex, x: int, a: int, c: int) -> int | None:
    """ID of the node whose own chunk holds ``x``, or None when that node
    is not among positions ``[a, c)`` of ``index``."""
    pos = bisect_right(index.ids, x, a, c) - 1
    if pos < a:
        return None
    node = index.nodes[pos]
    lo = index.ids[a]
    while not tree.chunk[node].contains_id(x):
        node = tree.parent[node]
        if node == -1 or tree.ids[node] < lo:
            return None
    return tree.ids[node]


@dataclass
class LookupTrace:
    initiator: int
    key: int
    rounds: list[list[int]] = field(default_factory=list)
    best_distances: list[int] = field(default_factory=list)
    outcome: str = "stalled"
    owner: int | None = None

    @property
    def hops(self) -> int:
        return len(self.rounds)

    @property
    def found(self) -> bool:
        return self.outcome == "found"


def iterative_lookup(world, initiator: int, key: int, alpha: int | None = None,
                     beta: int | None = None, node_filter: NodeFilter | None = None,
                     target: int | None = None, first_hop: int | None = None) -> LookupTrace:
    """Iterative α/β lookup from ``initiator`` towards ``key``.

    Each round queries the α best unqueried candidates (after filtering)
    and merges their β-node answers.  A key lookup succeeds in the round
    that contacts the key's owner; a node lookup (``target`` given) succeeds
    as soon as some answer names the target, since its ID is recognisable.
    Either way the lookup stalls when a round brings nothing closer than
    the α-th best candidate already known.  ``first_hop`` forces the first
    round to a single given node.
    """
    alpha = world.alpha if alpha is None else alpha
    beta = world.beta if beta is None else beta
    if alpha < 1 or beta < 1:
        raise ValueError("alpha and beta must be >= 1")
    if not 0 <= initiator < len(world.tree):
        raise ValueError(f"unknown initiator {initiator}")

    region = world.region(key)
    ids = world.tree.ids
    metric = region_metric(key, region, world.b)
    owner = target if target is not None else world.owner(key, node_filter)
    trace = LookupTrace(initiator, key, owner=owner)
    if owner == initiator:
        trace.outcome = "found"
        return trace

    known: dict[int, int] = {}
    queried = {initiator}
    if first_hop is not None:
        known[first_hop] = metric(ids[first_hop])
    else:
        for node in world.table_nodes(initiator, key, region):
            if node_filter is None or node_filter(node):
                known[node] = metric(ids[node])
                if len(known) == alpha:
                    break
    node_lookup = target is not None
    if node_lookup and owner in known and first_hop is None:
        trace.outcome = "found"
        return trace
    if not known:
        return trace
    frontier = _frontier(known, alpha)

    while True:
        batch = heapq.nsmallest(alpha, (n for n in known if n not in queried),
                                key=lambda n: (known[n], n))
        if not batch:
            break
        if not node_lookup and owner in batch:
            trace.rounds.append(batch)
            trace.best_distances.append(frontier)
            trace.outcome = "found"
            break
        fresh_best = None
        for q in batch:
            queried.add(q)
            for r in world.respond(q, key, beta, region):
                if r == initiator or r in known:
                    continue
                if node_filter is not None and not node_filter(r):
                    continue
                d = metric(ids[r])
                known[r] = d
                if fresh_best is None or d < fresh_best:
                    fresh_best = d
        trace.rounds.append(batch)
        if node_lookup and owner in known:
            trace.best_distances.append(_frontier(known, alpha))
            trace.outcome = "found"
            break
        if fresh_best is None or fresh_best >= frontier:
            trace.best_distances.append(frontier)
            break
        frontier = _frontier(known, alpha)
        trace.best_distances.append(frontier)
    return trace


def _frontier(known: dict[int, int], alpha: int) -> int:
    """Distance of the α-th best candidate known (or the worst, if fewer)."""
    return heapq.nsmallest(alpha, known.values())[-1]


@dataclass
class ReplicaResponse:
    replica: int
    key: int
    trace: LookupTrace
    holder: int | None
    value: Hashable | None = None


def replicated_put(world, initiator: int, key: int, value: Hashable, R: int | None = None,
                   node_filter: NodeFilter | None = None) -> list[ReplicaResponse]:
    """Store ``value`` at the owner of each replica key that a lookup finds."""
    out = []
    for i, rk in enumerate(replica_keys(key, world.R if R is None else R, world.b)):
        trace = iterative_lookup(world, initiator, rk, node_filter=node_filter)
        holder = trace.owner if trace.found else None
        if holder is not None:
            world.store(holder, key, value)
        out.append(ReplicaResponse(i, rk, trace, holder, value if holder is not None else None))
    return out


def replica_responses(world, initiator: int, key: int, R: int | None = None,
                      node_filter: NodeFilter | None = None) -> list[ReplicaResponse]:
    """One lookup per replica key, then a get to every owner found."""
    out = []
    for i, rk in enumerate(replica_keys(key, world.R if R is None else R, world.b)):
        trace = iterative_lookup(world, initiator, rk, node_filter=node_filter)
        holder = trace.owner if trace.found else None
        value = world.value_response(holder, key) if holder is not None else None
        out.append(ReplicaResponse(i, rk, trace, holder, value))
    return out


def replicated_get(world, initiator: int, key: int, R: int | None = None,
                   node_filter: NodeFilter | None = None) -> list[Hashable]:
    return [r.value for r in replica_responses(world, initiator, key, R, node_filter)
            if r.value is not None]


def majority_vote(results: Sequence[Hashable], rng: random.Random) -> Hashable:
    """Modal value; exact ties broken uniformly at random."""
    if not results:
        raise NoResult("no replica returned a value")
    counts = Counter(results)
    top = max(counts.values())
    tied = [v for v in counts if counts[v] == top]
    if len(tied) == 1:
        return tied[0]
    return tied[rng.randrange(len(tied))]


def owner_in_region(index: XorIndex, key: int, R: int, b: int,
                    accept: NodeFilter | None = None) -> int | None:
    """XOR-closest node to ``key`` inside its region, or None if there is none."""
    region = region_bounds(region_of(key, R, b), R, b)
    found = index.nearest(key, 1, region, accept=accept, inside_only=True)
    return found[0] if found else None
