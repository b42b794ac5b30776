"""Closed-form estimates of lookup path length and false-positive rates.

With ``r = a_h / e_p`` the chance that a routing-table entry is an
attacker, the expected number of attackers among the α·β nodes returned
in the first round is

    m_1 = α·r·β + (1 - α·r)·β·r

and each later round follows ``m_{i+1} = m_i + (α - m_i/β)·β·r``:
attackers picked for the next round return β attackers each, the honest
picks return β·r each.  ``q_i = m_i / (α·β)`` is the chance of picking an
attacker in round ``i`` and ``P_j = q_1 ··· q_j`` the chance that a
lookup is still failing after ``j`` rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class DegenerateInputs(ValueError):
    """More attack edges per node than edges per node."""


@dataclass(frozen=True)
class AnalyticInputs:
    e_p: float
    a_h: float
    alpha: int = 5
    beta: int = 7
    l_c: float = 0.001
    l_h: int = 1
    c_nl: int = 1

    def __post_init__(self):
        if self.e_p <= 0:
            raise ValueError("e_p must be positive")
        if self.a_h < 0:
            raise ValueError("a_h must be non-negative")
        if not 0 < self.l_c < 1:
            raise ValueError("l_c must lie in (0, 1)")
        if self.alpha < 1 or self.beta < 1:
            raise ValueError("alpha and beta must be >= 1")

    @property
    def ratio(self) -> float:
        return self.a_h / self.e_p


class MaliceStep(NamedTuple):
    m: float  # expected attackers among the α·β returned nodes
    q: float  # chance of picking an attacker this round
    P: float  # chance the lookup is still failing


class PathLength(NamedTuple):
    hops: int
    capped: bool


def _ratio(inputs: AnalyticInputs) -> float:
    r = inputs.ratio
    if r > 1:
        raise DegenerateInputs(f"a_h={inputs.a_h} exceeds e_p={inputs.e_p}")
    return r


def malice_sequence(inputs: AnalyticInputs, max_iter: int = 50) -> list[MaliceStep]:
    r = _ratio(inputs)
    a, b = inputs.alpha, inputs.beta
    m = (a * r * b) + ((1 - a * r) * b * r)
    P = 1.0
    steps = []
    for _ in range(max_iter):
        q = min(1.0, max(0.0, m / (a * b)))
        P *= q
        steps.append(MaliceStep(m, q, P))
        m = m + (a - m / b) * b * r
    return steps


def analytic_path_length(inputs: AnalyticInputs, max_iter: int = 50) -> PathLength:
    """Fewest rounds ``j`` with ``P_j <= l_c``; capped at ``max_iter``."""
    for j, step in enumerate(malice_sequence(inputs, max_iter), start=1):
        if step.P <= inputs.l_c:
            return PathLength(j, False)
    return PathLength(max_iter, True)


def analytic_fp_trusted(inputs: AnalyticInputs) -> float:
    return malice_sequence(inputs, 1)[0].q


def analytic_fp_random(inputs: AnalyticInputs) -> float:
    """Union of an attacker friend inspecting an honest child and ``q_1``."""
    r = _ratio(inputs)
    u = r * (inputs.e_p - inputs.a_h) / inputs.e_p
    q1 = analytic_fp_trusted(inputs)
    return u + q1 - u * q1


def expected_malicious_friends(inputs: AnalyticInputs) -> float:
    """Expected attackers among the ``l_h·c_nl`` friends of a node."""
    return _ratio(inputs) * inputs.l_h * inputs.c_nl
