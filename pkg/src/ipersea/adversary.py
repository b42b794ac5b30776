"""Attack model: Sybils behind attack edges and their protocol behaviour.

Attackers know every other attacker.  Their routing answers come from the
shared directory (never an honest node), their value answers are wrong,
and as collaborative friends they report whatever hurts the inspection.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .dht import PeerRecord, XorIndex
from .idspace import AllocationExhausted, BootstrapTree


@dataclass
class AdversaryPolicy:
    attack_edges: int = 0
    sybils_per_attack_edge: int = 10
    colluding: bool = True
    max_victim_retries: int = 100

    def __post_init__(self):
        if self.attack_edges < 0:
            raise ValueError("attack_edges must be >= 0")
        if self.sybils_per_attack_edge < 1:
            raise ValueError("sybils_per_attack_edge must be >= 1")


@dataclass(frozen=True)
class PoisonedValue:
    """A fabricated answer to a get.

    Colluding attackers share one fabrication per key (``forger`` is None);
    independent attackers sign theirs.
    """

    key: int
    forger: int | None = None


@dataclass
class SybilReport:
    attackers: list[int] = field(default_factory=list)
    entries: list[tuple[int, int]] = field(default_factory=list)  # (victim, entry)
    skipped_edges: int = 0

    @property
    def attack_edges(self) -> int:
        return len(self.entries)


def spawn_sybils(tree: BootstrapTree, policy: AdversaryPolicy,
                 rng: random.Random) -> SybilReport:
    """Attach ``policy.attack_edges`` Sybil clusters to random honest victims.

    Each victim admits one entry Sybil; the entry's cluster then grows to
    ``sybils_per_attack_edge`` nodes, each newcomer invited by a uniformly
    chosen cluster member with IDs to spare.  Victims are drawn with
    replacement; an exhausted victim is redrawn up to
    ``max_victim_retries`` times before the edge is skipped.
    """
    report = SybilReport()
    honest = tree.honest_nodes
    if policy.attack_edges and not honest:
        raise ValueError("cannot place attack edges without honest nodes")
    for _ in range(policy.attack_edges):
        entry = None
        for _ in range(policy.max_victim_retries + 1):
            victim = honest[rng.randrange(len(honest))]
            try:
                entry, _ = tree.admit_child(victim, honest=False)
            except AllocationExhausted:
                continue
            break
        if entry is None:
            report.skipped_edges += 1
            continue
        report.entries.append((victim, entry))
        cluster = [entry]
        for _ in range(policy.sybils_per_attack_edge - 1):
            inviters = [s for s in cluster if tree.free[s].length > 0]
            if not inviters:
                break
            sybil, _ = tree.admit_child(inviters[rng.randrange(len(inviters))], honest=False)
            cluster.append(sybil)
        report.attackers.extend(cluster)
    return report


class AttackerDirectory:
    """The attackers' shared view of each other; stands in for their k-buckets."""

    def __init__(self, tree: BootstrapTree, attackers=None):
        attackers = tree.attacker_nodes if attackers is None else list(attackers)
        self.members = frozenset(attackers)
        self.index = XorIndex((tree.ids[a] for a in attackers), attackers, b=tree.b)

    def __contains__(self, node: int) -> bool:
        return node in self.members

    def __len__(self) -> int:
        return len(self.members)

    def closest(self, attacker: int, key: int, count: int,
                region: tuple[int, int] | None = None) -> list[int]:
        return self.index.nearest(key, count, region, accept=lambda n: n != attacker)


def attacker_route_response(directory: AttackerDirectory, tree: BootstrapTree, attacker: int,
                            key: int, beta: int,
                            region: tuple[int, int] | None = None) -> list[PeerRecord]:
    """The β attackers closest to ``key``, excluding the responder itself."""
    return [PeerRecord(tree.ids[a]) for a in directory.closest(attacker, key, beta, region)]


def attacker_value_response(attacker: int, key: int, colluding: bool = True) -> PoisonedValue:
    return PoisonedValue(key, None if colluding else attacker)


def lying_friend_report(tree: BootstrapTree, friend: int, inspected: int,
                        true_outcome: bool) -> bool:
    """Outcome a collaborative friend reports back to the inspecting parent.

    An attacker reports success exactly when the inspected node is
    malicious; an honest friend passes the real outcome through.
    """
    if tree.honest[friend]:
        return true_outcome
    return not tree.honest[inspected]
