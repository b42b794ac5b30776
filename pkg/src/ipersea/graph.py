"""Social-graph ingestion and topology statistics.

Edge lists follow the SNAP/KONECT text layout: one edge per line, two
integer vertex labels, ``#`` or ``%`` comment lines.  Labels are remapped to
a dense ``0..n-1`` range (sorted by original label) so the rest of the
simulator can index plain arrays.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp


class EdgeListError(ValueError):
    """Raised for malformed or empty edge-list input."""


@dataclass(frozen=True, eq=False)
class SocialGraph:
    node_count: int
    edges: np.ndarray  # (m, 2) int64, sorted rows; u < v when undirected
    directed: bool = False
    labels: np.ndarray = field(default=None, repr=False)  # dense index -> original label

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.directed == other.directed
            and np.array_equal(self.edges, other.edges)
        )

    __hash__ = None

    @cached_property
    def out_neighbors(self) -> list[list[int]]:
        """Neighbors a vertex can invite: out-edges if directed, else all."""
        nbrs: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges.tolist():
            nbrs[u].append(v)
            if not self.directed:
                nbrs[v].append(u)
        for lst in nbrs:
            lst.sort()
        return nbrs

    @cached_property
    def neighbors(self) -> list[list[int]]:
        """Symmetrized adjacency lists."""
        if not self.directed:
            return self.out_neighbors
        adj = _symmetric_adjacency(self)
        return [adj.indices[adj.indptr[i]:adj.indptr[i + 1]].tolist()
                for i in range(self.node_count)]

    def to_edge_list(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edges.tolist())


def parse_edge_list(source: TextIO | str | os.PathLike | Iterable[str],
                    directed: bool = False) -> SocialGraph:
    """Parse an edge list into a SocialGraph.

    ``source`` may be an open text stream, an iterable of lines, or a path.
    Extra columns after the first two (KONECT weights and timestamps) are
    ignored.  Self-loops are dropped and duplicate edges merged; vertices
    are the endpoints of the surviving edges.
    """
    if isinstance(source, (str, os.PathLike)) and not isinstance(source, io.IOBase):
        with open(source, encoding="utf-8") as fh:
            return parse_edge_list(fh, directed=directed)

    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise EdgeListError(f"line {lineno}: expected two vertex ids, got {line!r}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer vertex id in {line!r}") from None
        if u < 0 or v < 0:
            raise EdgeListError(f"line {lineno}: negative vertex id in {line!r}")
        if u != v:
            pairs.append((u, v))

    if not pairs:
        raise EdgeListError("edge list contains no edges")

    raw_edges = np.asarray(pairs, dtype=np.int64)
    labels, dense = np.unique(raw_edges, return_inverse=True)
    dense = dense.reshape(-1, 2)
    if not directed:
        dense.sort(axis=1)
    edges = np.unique(dense, axis=0)
    return SocialGraph(node_count=int(labels.size), edges=edges,
                       directed=directed, labels=labels)


def _symmetric_adjacency(g: SocialGraph) -> sp.csr_matrix:
    n = g.node_count
    u, v = g.edges[:, 0], g.edges[:, 1]
    data = np.ones(2 * g.edge_count, dtype=np.int64)
    adj = sp.csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                        shape=(n, n))
    adj.data[:] = 1  # reciprocal directed pairs collapse to one undirected edge
    adj.sort_indices()
    return adj


def clustering_coefficient(g: SocialGraph) -> float:
    """Average local clustering; vertices of degree < 2 contribute 0."""
    if g.node_count == 0:
        raise EdgeListError("empty graph")
    adj = _symmetric_adjacency(g)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    # closed walks of length 3 through each vertex = 2 * triangles
    tri2 = np.asarray(adj.multiply(adj @ adj).sum(axis=1)).ravel()
    possible = deg * (deg - 1)
    local = np.zeros(g.node_count, dtype=float)
    mask = deg >= 2
    local[mask] = tri2[mask] / possible[mask]
    return float(local.mean())


def mean_degree(g: SocialGraph) -> float:
    """Mean edges per node, 2|E|/|V| (in+out degree sum when directed)."""
    if g.node_count == 0:
        raise EdgeListError("empty graph")
    return 2.0 * g.edge_count / g.node_count


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    mean_degree: float
    clustering: float


def graph_stats(g: SocialGraph) -> GraphStats:
    return GraphStats(g.node_count, g.edge_count, mean_degree(g), clustering_coefficient(g))
