"""Inspection lookups, the status ledger and ancestor-walk filtering.

Parents test each direct child with lookups staged by collaborative
friends.  In the intermediate role a friend routes through the child
towards one of its siblings; in the target role one friend stores a value
at the child and another reads it back.  The verdicts ('+' or '-') are
kept by the parent and consulted by anyone walking the child's chain of
ancestors.
"""

from __future__ import annotations

import enum
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .adversary import lying_friend_report
from .dht import iterative_lookup
from .idspace import BootstrapTree

PLUS = "+"
MINUS = "-"

FRIEND_MODES = ("trusted", "random")
ROLE_SETS = {
    "both": ("intermediate", "target"),
    "intermediate": ("intermediate",),
    "target": ("target",),
}


class Verdict(str, enum.Enum):
    HONEST = "honest"
    MALICIOUS = "malicious"


class StatusLedger:
    """Per-parent record of child statuses.

    A '-' is final: later writes for the same child are ignored.
    """

    def __init__(self, tree: BootstrapTree | None = None):
        self._tree = tree
        self._by_parent: dict[int, dict[int, str]] = {}

    def record(self, parent: int, child: int, status: str) -> str:
        if status not in (PLUS, MINUS):
            raise ValueError(f"status must be '+' or '-', got {status!r}")
        if self._tree is not None and self._tree.parent[child] != parent:
            raise ValueError(f"node {child} is not a direct child of {parent}")
        row = self._by_parent.setdefault(parent, {})
        if row.get(child) != MINUS:
            row[child] = status
        return row[child]

    def status(self, parent: int, child: int) -> str | None:
        """Recorded status, or None while unknown."""
        return self._by_parent.get(parent, {}).get(child)

    def of(self, parent: int) -> dict[int, str]:
        return dict(self._by_parent.get(parent, {}))

    def parents(self) -> list[int]:
        return sorted(self._by_parent)

    def counts(self) -> Counter:
        c = Counter()
        for row in self._by_parent.values():
            c.update(row.values())
        return c

    def __len__(self) -> int:
        return sum(len(row) for row in self._by_parent.values())


@dataclass(frozen=True)
class FriendSet:
    node: int
    mode: str
    friends: tuple[tuple[int, int], ...] = ()  # (ancestor level, friend)

    @property
    def members(self) -> list[int]:
        return [f for _, f in self.friends]

    def __len__(self) -> int:
        return len(self.friends)


class StatusCache(dict):
    """Verdicts remembered by one lookup initiator; never overwritten."""

    def __setitem__(self, node, verdict):
        if node in self:
            return
        super().__setitem__(node, verdict)


def resolve_status(tree: BootstrapTree, ledger: StatusLedger, candidate: int,
                   cache: StatusCache | None = None) -> Verdict:
    """Walk from ``candidate`` up to its bootstrap node looking for a '-'.

    Unknown statuses count as '+'.
    """
    if cache is not None and candidate in cache:
        return cache[candidate]
    verdict = Verdict.HONEST
    node = candidate
    parent = tree.parent
    while parent[node] != -1:
        if ledger.status(parent[node], node) == MINUS:
            verdict = Verdict.MALICIOUS
            break
        node = parent[node]
    if cache is not None:
        cache[candidate] = verdict
    return verdict


class _TreeLayout:
    """Preorder numbering so subtrees are contiguous ranges."""

    def __init__(self, tree: BootstrapTree):
        n = len(tree)
        self.tin = [0] * n
        self.tout = [0] * n
        order = []
        for root in tree.roots:
            stack = [(root, False)]
            while stack:
                u, done = stack.pop()
                if done:
                    self.tout[u] = len(order)
                    continue
                self.tin[u] = len(order)
                order.append(u)
                stack.append((u, True))
                stack.extend((c, False) for c in reversed(tree.children[u]))
        self.order = order
        # honest_before[i] = number of honest nodes among order[:i]
        self.honest_before = [0]
        for u in order:
            self.honest_before.append(self.honest_before[-1] + tree.honest[u])
        self.honest_positions = [i for i, u in enumerate(order) if tree.honest[u]]

    def inside(self, node: int, root: int) -> bool:
        return self.tin[root] <= self.tin[node] < self.tout[root]


class Inspector:
    """Friend selection and inspection lookups over one ``World``.

    ``population`` picks where random-mode ancestors draw friends from:
    ``"contacts"`` (the ancestor's social neighbours and the nodes it
    admitted) or ``"global"`` (every admitted node).
    """

    def __init__(self, world, graph=None, population: str = "contacts"):
        if population not in ("contacts", "global"):
            raise ValueError(f"unknown friend population {population!r}")
        if population == "contacts" and graph is None:
            raise ValueError("contacts population needs the social graph")
        self.world = world
        self.tree = world.tree
        self.graph = graph
        self.population = population
        self.layout = _TreeLayout(self.tree)
        self._node_of_vertex = {v: i for i, v in enumerate(self.tree.vertex) if v >= 0}
        self._attackers = self.tree.attacker_nodes

    # friend selection

    def _sample_honest_subtree(self, ancestor: int, excluded: int, rng: random.Random) -> int:
        """Uniform honest node under ``ancestor`` but outside ``excluded``'s subtree."""
        lay = self.layout
        hb = lay.honest_before
        lo, hi = lay.tin[ancestor], lay.tout[ancestor]
        xlo, xhi = lay.tin[excluded], lay.tout[excluded]
        if not lay.inside(excluded, ancestor):
            xlo = xhi = lo
        left = hb[xlo] - hb[lo]
        total = left + hb[hi] - hb[xhi]
        pick = rng.randrange(total)  # ancestor itself is always counted
        target = hb[lo] + pick if pick < left else hb[xhi] + pick - left
        return lay.order[lay.honest_positions[target]]

    def _sample_global(self, excluded: int, rng: random.Random) -> int:
        lay = self.layout
        n = len(lay.order)
        xlo, xhi = lay.tin[excluded], lay.tout[excluded]
        total = n - (xhi - xlo)
        if total <= 0:
            raise ValueError("no admitted node outside the inspected subtree")
        pick = rng.randrange(total)
        return lay.order[pick if pick < xlo else pick + (xhi - xlo)]

    def contacts(self, ancestor: int) -> list[int]:
        """Nodes an ancestor knows directly: admitted social neighbours,
        its parent and every node it admitted (attack-edge Sybils included)."""
        tree = self.tree
        found = set(tree.children[ancestor])
        if tree.parent[ancestor] != -1:
            found.add(tree.parent[ancestor])
        v = tree.vertex[ancestor]
        if v >= 0:
            for w in self.graph.neighbors[v]:
                node = self._node_of_vertex.get(w)
                if node is not None:
                    found.add(node)
        found.discard(ancestor)
        return sorted(found)

    def _suggest(self, ancestor: int, node: int, mode: str, rng: random.Random) -> int:
        tree = self.tree
        if not tree.honest[ancestor]:
            return self._attackers[rng.randrange(len(self._attackers))]
        if mode == "trusted":
            return self._sample_honest_subtree(ancestor, node, rng)
        if self.population == "global":
            return self._sample_global(node, rng)
        pool = [c for c in self.contacts(ancestor) if not self.layout.inside(c, node)]
        if not pool:
            return ancestor
        return pool[rng.randrange(len(pool))]

    def select_friends(self, node: int, mode: str = "trusted", per_level: int = 1,
                       rng: random.Random | None = None) -> FriendSet:
        """One batch of ``per_level`` friends from each ancestor of ``node``.

        Friends never come from ``node``'s own subtree, so a friend is
        never the inspected child or its sibling target.
        """
        if mode not in FRIEND_MODES:
            raise ValueError(f"unknown friend mode {mode!r}")
        if per_level < 1:
            raise ValueError("per_level must be >= 1")
        rng = rng or random.Random(0)
        picks = []
        for level, anc in enumerate(self.tree.ancestors(node), start=1):
            for _ in range(per_level):
                picks.append((level, self._suggest(anc, node, mode, rng)))
        return FriendSet(node, mode, tuple(picks))

    # inspections

    def _friend(self, parent: int, friends: FriendSet, rng: random.Random) -> int:
        """Uniform pick from the friend set.

        Bootstrap parents have no ancestors to suggest friends; they hand
        the lookup to a fellow bootstrap node, or run it themselves when
        they are the only one.
        """
        members = friends.members
        if not members:
            members = [r for r in self.tree.roots if r != parent] or [parent]
        return members[rng.randrange(len(members))]

    def sibling_targets(self, parent: int, child: int) -> list[int]:
        tree = self.tree
        return [t for t in tree.children[parent] if t != child and tree.honest[t]]

    def inspect_intermediate(self, parent: int, child: int, friends: FriendSet,
                             rng: random.Random) -> tuple[str | None, int | None, int]:
        """Route from a friend through ``child`` towards an honest sibling.

        Returns (status, hops, friend); status is None when there is no
        sibling to aim at, and hops is None when the friend is an attacker
        and skips the lookup.
        """
        targets = self.sibling_targets(parent, child)
        if not targets:
            return None, None, -1
        friend = self._friend(parent, friends, rng)
        target = targets[rng.randrange(len(targets))]
        if not self.tree.honest[friend]:
            ok = lying_friend_report(self.tree, friend, child, False)
            return (PLUS if ok else MINUS), None, friend
        trace = iterative_lookup(self.world, friend, self.tree.ids[target],
                                 target=target, first_hop=child)
        return (PLUS if trace.found else MINUS), trace.hops, friend

    def inspect_target(self, parent: int, child: int, friends: FriendSet,
                       rng: random.Random) -> tuple[str, int]:
        """Store a fresh value at ``child`` and read it back.

        Returns (status, reporting friend).
        """
        world = self.world
        key = self.tree.ids[child]
        f1 = self._friend(parent, friends, rng)
        f2 = self._friend(parent, friends, rng)
        token = ("inspection", parent, child, rng.getrandbits(64))
        held = world.storage.get(child, {})
        previous = held.get(key)
        if self.tree.honest[f1]:
            world.store(child, key, token)
        got = world.value_response(child, key)
        if previous is None:
            world.storage.get(child, {}).pop(key, None)
        else:
            world.storage[child][key] = previous
        ok = lying_friend_report(self.tree, f2, child, got == token)
        return (PLUS if ok else MINUS), f2


@dataclass
class Inspection:
    parent: int
    child: int
    role: str
    status: str | None
    friend: int = -1
    hops: int | None = None
    honest_child: bool = True


@dataclass
class CampaignResult:
    ledger: StatusLedger
    inspections: list[Inspection] = field(default_factory=list)
    friends: dict[int, FriendSet] = field(default_factory=dict)

    def _rate(self, honest: bool, bad: str) -> float | None:
        seen = [i for i in self.inspections if i.status is not None and i.honest_child == honest]
        if not seen:
            return None
        return sum(i.status == bad for i in seen) / len(seen)

    @property
    def fp_rate(self) -> float | None:
        """Share of inspected honest children marked '-'."""
        return self._rate(True, MINUS)

    @property
    def fn_rate(self) -> float | None:
        """Share of inspected malicious children marked '+'."""
        return self._rate(False, PLUS)

    @property
    def inspection_hops(self) -> list[int]:
        return [i.hops for i in self.inspections if i.hops is not None]

    @property
    def deferred(self) -> int:
        return sum(i.status is None for i in self.inspections)


def run_inspection_campaign(world, rng: random.Random, mode: str = "trusted",
                            per_level: int = 1, graph=None, roles: str = "both",
                            population: str = "contacts",
                            fallback_to_target: bool = True) -> CampaignResult:
    """Every honest parent inspects each direct child once.

    The role is drawn uniformly per inspection.  An intermediate-role
    inspection without an honest sibling to aim at falls back to the target
    role (or stays unknown with ``fallback_to_target=False``).  Malicious
    parents skip inspecting and give all their children '+'.
    """
    if roles not in ROLE_SETS:
        raise ValueError(f"unknown role set {roles!r}")
    role_set = ROLE_SETS[roles]
    tree = world.tree
    if population == "contacts" and graph is None:
        population = "global"
    inspector = Inspector(world, graph, population)
    result = CampaignResult(StatusLedger(tree))
    ledger = result.ledger

    for parent in range(len(tree)):
        children = tree.children[parent]
        if not children:
            continue
        if not tree.honest[parent]:
            for child in children:
                ledger.record(parent, child, PLUS)
            continue
        friends = inspector.select_friends(parent, mode, per_level, rng)
        result.friends[parent] = friends
        order = list(children)
        rng.shuffle(order)
        for child in order:
            role = role_set[rng.randrange(len(role_set))]
            status = hops = None
            friend = -1
            if role == "intermediate":
                status, hops, friend = inspector.inspect_intermediate(parent, child, friends, rng)
                if status is None and fallback_to_target:
                    role = "target"
            if role == "target":
                status, friend = inspector.inspect_target(parent, child, friends, rng)
            if status is not None:
                ledger.record(parent, child, status)
            result.inspections.append(Inspection(parent, child, role, status, friend, hops,
                                                 tree.honest[child]))
    return result


def status_filter(tree: BootstrapTree, ledger: StatusLedger, cache: StatusCache | None = None):
    """Node filter for lookups that admits only nodes resolved honest."""
    cache = StatusCache() if cache is None else cache

    def accept(node: int) -> bool:
        return resolve_status(tree, ledger, node, cache) is Verdict.HONEST

    return accept


def sybil_verdicts(tree: BootstrapTree, ledger: StatusLedger,
                   nodes: Iterable[int] | None = None) -> dict[int, Verdict]:
    cache = StatusCache()
    nodes = range(len(tree)) if nodes is None else nodes
    return {n: resolve_status(tree, ledger, n, cache) for n in nodes}
