"""Network state shared by lookups: tree, routing tables, attackers, storage."""

from __future__ import annotations

import heapq
import random
from typing import Hashable

from .adversary import AttackerDirectory, attacker_value_response
from .dht import NodeFilter, RoutingTable, XorIndex, fill_routing_tables, owner_in_region, region_metric
from .idspace import BootstrapTree, region_bounds, region_of


class World:
    """Everything a lookup can consult.

    Honest nodes answer from their routing tables; attackers answer from the
    shared attacker directory.  Storage maps holder -> {key: value}.
    """

    def __init__(self, tree: BootstrapTree, *, R: int = 7, k: int = 7, alpha: int = 5,
                 beta: int = 7, colluding: bool = True, rng: random.Random | None = None,
                 samples_per_bucket: int | None = None,
                 tables: dict[int, RoutingTable] | None = None):
        if R < 1:
            raise ValueError("R must be >= 1")
        self.tree = tree
        self.b = tree.b
        self.R, self.k, self.alpha, self.beta = R, k, alpha, beta
        self.colluding = colluding
        self.index = XorIndex(tree.ids, b=tree.b)
        self.directory = AttackerDirectory(tree)
        if tables is None:
            tables = fill_routing_tables(tree, tree.honest_nodes, k=k, rng=rng or random.Random(0),
                                         samples_per_bucket=samples_per_bucket)
        self.tables = tables
        index_of = tree.index_of
        self._entries = {u: [(p.node_id, index_of[p.node_id]) for p in t] for u, t in tables.items()}
        self.storage: dict[int, dict[int, Hashable]] = {}
        self._owners: dict[int, int | None] = {}

    def __len__(self) -> int:
        return len(self.tree)

    def region(self, key: int) -> tuple[int, int]:
        return region_bounds(region_of(key, self.R, self.b), self.R, self.b)

    def owner(self, key: int, node_filter: NodeFilter | None = None) -> int | None:
        if node_filter is not None:
            return owner_in_region(self.index, key, self.R, self.b, node_filter)
        if key not in self._owners:
            self._owners[key] = owner_in_region(self.index, key, self.R, self.b)
        return self._owners[key]

    def table_nodes(self, node: int, key: int, region: tuple[int, int] | None):
        """Routing-table contents of ``node`` in increasing distance to key."""
        if not self.tree.honest[node]:
            return iter(self.directory.index.nearest(key, self.k * self.b, region,
                                                     accept=lambda n: n != node))
        metric = region_metric(key, region, self.b)
        return (n for _, n in sorted(self._entries.get(node, ()), key=lambda e: metric(e[0])))

    def respond(self, node: int, key: int, beta: int, region: tuple[int, int] | None) -> list[int]:
        """Answer to a lookup request for ``key``: up to β node handles."""
        if not self.tree.honest[node]:
            return self.directory.closest(node, key, beta, region)
        metric = region_metric(key, region, self.b)
        best = heapq.nsmallest(beta, self._entries.get(node, ()), key=lambda e: metric(e[0]))
        return [n for _, n in best]

    def store(self, holder: int, key: int, value: Hashable) -> None:
        self.storage.setdefault(holder, {})[key] = value

    def value_response(self, holder: int, key: int) -> Hashable | None:
        """What ``holder`` returns for a get; None means it has no value."""
        if not self.tree.honest[holder]:
            return attacker_value_response(holder, key, self.colluding)
        return self.storage.get(holder, {}).get(key)
