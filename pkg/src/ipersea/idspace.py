"""Hierarchical ID space: bootstrap chunks, sub-chunk carving, certificates.

Node IDs are plain ``int`` values in ``[0, 2**b)``.  Inside the simulator a
node is addressed by its *index* into the tree's per-node arrays; ``ids``
maps index to ID and ``index_of`` maps back.
"""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

DEFAULT_BITS = 31


class AllocationExhausted(RuntimeError):
    """The inviting node has no unallocated IDs left in its chunk."""


@dataclass(frozen=True)
class Chunk:
    start: int
    length: int
    owner: int | None = None

    @property
    def end(self) -> int:
        return self.start + self.length

    def contains_id(self, node_id: int) -> bool:
        return self.start <= node_id < self.end

    def contains(self, other: "Chunk") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class IdCertificate:
    """Stands in for a parent-signed ID certificate.

    Frozen records are the unforgeable part: the only way to obtain one is
    through ``BootstrapTree`` admission.  Bootstrap certificates are
    self-issued and have no parent.
    """

    subject: int
    chunk: Chunk
    issuer: int
    parent: "IdCertificate | None" = None

    @property
    def is_root(self) -> bool:
        return self.parent is None


def check_id(node_id: int, b: int = DEFAULT_BITS) -> int:
    if not 0 <= node_id < (1 << b):
        raise ValueError(f"node id {node_id} outside [0, 2**{b})")
    return node_id


def allocate_bootstrap_chunks(b: int, n_boot: int) -> list[Chunk]:
    """Evenly spaced bootstrap chunks.

    Chunk ``i`` starts at ``floor(i * 2**b / n_boot)``, so lengths differ by
    at most one and the boundaries coincide with the replication regions
    when ``n_boot == R``.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    space = 1 << b
    if n_boot > space:
        raise ValueError(f"cannot place {n_boot} bootstrap nodes in a {b}-bit space")
    starts = [(i * space) // n_boot for i in range(n_boot + 1)]
    return [Chunk(lo, hi - lo) for lo, hi in zip(starts, starts[1:])]


def subchunk_size(original_length: int, c_f: float) -> int:
    """``max(1, floor(S ** c_f))`` computed exactly.

    The float power is only a first guess; it is corrected against the
    integer inequality ``s**q <= S**p`` where ``c_f = p/q``.
    """
    if original_length < 1:
        raise ValueError("chunk length must be positive")
    ratio = Fraction(c_f).limit_denominator(10_000)
    p, q = ratio.numerator, ratio.denominator
    s = math.floor(original_length ** float(ratio))
    bound = original_length ** p
    while s > 0 and s ** q > bound:
        s -= 1
    while (s + 1) ** q <= bound:
        s += 1
    return max(1, s)


def carve_subchunk(original: Chunk, remaining: Chunk, c_f: float) -> tuple[Chunk, Chunk]:
    """Carve the next sub-chunk from ``remaining``.

    The sub-chunk size derives from the *original* chunk length.  When fewer
    IDs than that are left, the tail is granted as a short final sub-chunk.
    """
    if remaining.length <= 0:
        raise AllocationExhausted(f"chunk at {original.start} is exhausted")
    size = min(subchunk_size(original.length, c_f), remaining.length)
    granted = Chunk(remaining.start, size)
    rest = Chunk(remaining.start + size, remaining.length - size, remaining.owner)
    return granted, rest


def verify_certificate_chain(cert: IdCertificate,
                             anchors: Sequence[int] | None = None) -> bool:
    """Check nesting of every link up to a self-issued root.

    ``anchors`` optionally pins the acceptable root subjects (the bootstrap
    node IDs).
    """
    try:
        link = cert
        while link.parent is not None:
            issuer = link.parent
            if link.issuer != issuer.subject:
                return False
            if not issuer.chunk.contains(link.chunk):
                return False
            if not link.chunk.contains_id(link.subject):
                return False
            link = issuer
        if link.issuer != link.subject or not link.chunk.contains_id(link.subject):
            return False
        return anchors is None or link.subject in anchors
    except AttributeError:
        return False


def replica_keys(key: int, R: int, b: int = DEFAULT_BITS) -> list[int]:
    """R replica keys spread evenly around the ring.

    Offsets are ``floor(i * 2**b / R)`` so that consecutive gaps differ by
    at most one ID.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    space = 1 << b
    check_id(key, b)
    return [(key + (i * space) // R) % space for i in range(R)]


def region_bounds(region: int, R: int, b: int = DEFAULT_BITS) -> tuple[int, int]:
    space = 1 << b
    return (region * space) // R, ((region + 1) * space) // R


def region_of(key: int, R: int, b: int = DEFAULT_BITS) -> int:
    space = 1 << b
    r = (key * R) // space
    if key >= ((r + 1) * space) // R:
        r += 1
    return r


class BootstrapTree:
    """Invitation forest with per-node chunks and certificates.

    Per-node state lives in parallel lists indexed by node index.  Honest
    nodes carry the social-graph vertex they came from in ``vertex``;
    attacker nodes have ``vertex == -1``.
    """

    def __init__(self, b: int = DEFAULT_BITS, c_f: float = 0.65):
        self.b = b
        self.c_f = c_f
        self.ids: list[int] = []
        self.parent: list[int] = []
        self.children: list[list[int]] = []
        self.depth: list[int] = []
        self.honest: list[bool] = []
        self.vertex: list[int] = []
        self.chunk: list[Chunk] = []
        self.free: list[Chunk] = []
        self.cert: list[IdCertificate] = []
        self.roots: list[int] = []
        self.index_of: dict[int, int] = {}
        self.dropped_vertices: list[int] = []

    def __len__(self) -> int:
        return len(self.ids)

    def _append(self, node_id, parent, depth, honest, vertex, chunk, cert) -> int:
        idx = len(self.ids)
        self.ids.append(node_id)
        self.parent.append(parent)
        self.children.append([])
        self.depth.append(depth)
        self.honest.append(honest)
        self.vertex.append(vertex)
        self.chunk.append(chunk)
        self.free.append(Chunk(chunk.start + 1, chunk.length - 1, idx))
        self.cert.append(cert)
        self.index_of[node_id] = idx
        return idx

    def add_root(self, chunk: Chunk, vertex: int = -1) -> int:
        node_id = chunk.start
        cert = IdCertificate(node_id, chunk, node_id)
        idx = self._append(node_id, -1, 0, True, vertex, chunk, cert)
        self.roots.append(idx)
        return idx

    def admit_child(self, parent: int, vertex: int = -1,
                    honest: bool = True) -> tuple[int, IdCertificate]:
        """Admit a new node under ``parent``; returns (child index, cert).

        The child's ID is the first ID of the granted sub-chunk and it keeps
        the rest of that sub-chunk for its own invitations.
        """
        granted, rest = carve_subchunk(self.chunk[parent], self.free[parent], self.c_f)
        self.free[parent] = rest
        node_id = granted.start
        cert = IdCertificate(node_id, granted, self.ids[parent], self.cert[parent])
        idx = self._append(node_id, parent, self.depth[parent] + 1, honest, vertex,
                           Chunk(granted.start, granted.length), cert)
        self.children[parent].append(idx)
        return idx, cert

    def ancestors(self, node: int) -> Iterator[int]:
        p = self.parent[node]
        while p != -1:
            yield p
            p = self.parent[p]

    def subtree(self, node: int) -> Iterator[int]:
        stack = [node]
        while stack:
            u = stack.pop()
            yield u
            stack.extend(self.children[u])

    @property
    def honest_nodes(self) -> list[int]:
        return [i for i, h in enumerate(self.honest) if h]

    @property
    def attacker_nodes(self) -> list[int]:
        return [i for i, h in enumerate(self.honest) if not h]

    def report(self) -> "BuildReport":
        honest = sum(self.honest)
        return BuildReport(
            admitted=honest,
            dropped=len(self.dropped_vertices),
            sybils=len(self) - honest,
            roots=len(self.roots),
            depth_histogram=dict(sorted(Counter(self.depth).items())),
        )


@dataclass(frozen=True)
class BuildReport:
    admitted: int
    dropped: int
    sybils: int
    roots: int
    depth_histogram: dict


def build_network(g, n_boot: int = 7, rng: random.Random | None = None,
                  b: int = DEFAULT_BITS, c_f: float = 0.65,
                  bootstrap_vertices: Sequence[int] | None = None) -> BootstrapTree:
    """Grow the honest bootstrap tree by multi-source BFS over ``g``.

    Bootstrap vertices are drawn uniformly unless given.  A vertex joins
    under the first queued node that discovers it and still has IDs left;
    vertices never reached are recorded in ``dropped_vertices``.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    if n_boot > g.node_count:
        raise ValueError(f"n_boot={n_boot} exceeds node count {g.node_count}")
    rng = rng or random.Random(0)
    if bootstrap_vertices is None:
        bootstrap_vertices = rng.sample(range(g.node_count), n_boot)
    elif len(bootstrap_vertices) != n_boot:
        raise ValueError("bootstrap_vertices must have n_boot entries")

    tree = BootstrapTree(b=b, c_f=c_f)
    admitted = [False] * g.node_count
    queue: deque[int] = deque()
    for vertex, chunk in zip(bootstrap_vertices, allocate_bootstrap_chunks(b, n_boot)):
        queue.append(tree.add_root(chunk, vertex))
        admitted[vertex] = True

    nbrs = g.out_neighbors
    while queue:
        node = queue.popleft()
        for v in nbrs[tree.vertex[node]]:
            if admitted[v]:
                continue
            try:
                child, _ = tree.admit_child(node, vertex=v)
            except AllocationExhausted:
                break
            admitted[v] = True
            queue.append(child)

    tree.dropped_vertices = [v for v in range(g.node_count) if not admitted[v]]
    return tree
