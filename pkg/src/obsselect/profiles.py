"""Observation plans and purged profile tables.

A plan assigns observation counts to nodes; it is stored sparse and canonical
(sorted (node_id, count) pairs, counts >= 1), so plans compare and hash cheaply.
A profile table maps discretized quality coordinates to the cheapest plan known
to reach them; insertion prunes dominated entries on the fly.
"""
from __future__ import annotations

import enum
from typing import Iterable, NamedTuple

from .grids import GridSpec

# Sparse canonical plan: sorted ((node_id, count), ...) with count >= 1.
Plan = tuple[tuple[int, int], ...]

EMPTY_PLAN: Plan = ()


def plan_from_counts(counts: dict[int, int]) -> Plan:
    return tuple(sorted((nid, m) for nid, m in counts.items() if m > 0))


def plan_counts(plan: Plan) -> dict[int, int]:
    return dict(plan)


def plan_time(plan: Plan, costs: dict[int, int]) -> int:
    return sum(m * costs[nid] for nid, m in plan)


def merge_plans(plans: Iterable[Plan]) -> Plan:
    """Union of plans over disjoint node sets (subtrees never overlap)."""
    merged: list[tuple[int, int]] = []
    for p in plans:
        merged.extend(p)
    merged.sort()
    return tuple(merged)


class CondPerf(NamedTuple):
    """One achievable performance point: a plan, its total time, and where it
    lands on the (input-quality, output-quality) grids. q_exact carries the
    undiscretized output values for diagnostics only; it never feeds arithmetic.
    """

    plan: Plan
    time: int
    p_cell: int
    q_cells: tuple[int, ...]
    q_exact: tuple[float, ...]


class InsertOutcome(enum.Enum):
    INSERTED = "inserted"
    REPLACED = "replaced"
    REJECTED = "rejected"


class TableStats(NamedTuple):
    """Size diagnostics of one compiled node table."""

    node_id: int
    entries: int
    capacity: int


class InsertResult(NamedTuple):
    outcome: InsertOutcome
    reason: str | None = None


class ProfileTable:
    """Associative table (p_cell, *q_cells) -> cheapest CondPerf.

    Entries over the time budget are never stored (their utility is -inf and
    total time only grows under composition). Ties at equal time keep the
    lexicographically smallest plan, which makes the final table independent
    of insertion order.
    """

    __slots__ = ("grids", "budget", "entries")

    def __init__(self, grids: tuple[GridSpec, ...], budget: int):
        self.grids = grids
        self.budget = budget
        self.entries: dict[tuple[int, ...], CondPerf] = {}

    def insert(self, cp: CondPerf) -> InsertResult:
        if cp.time > self.budget:
            return InsertResult(InsertOutcome.REJECTED, "over budget")
        key = (cp.p_cell, *cp.q_cells)
        old = self.entries.get(key)
        if old is None:
            self.entries[key] = cp
            return InsertResult(InsertOutcome.INSERTED)
        if (cp.time, cp.plan) < (old.time, old.plan):
            self.entries[key] = cp
            return InsertResult(InsertOutcome.REPLACED)
        return InsertResult(InsertOutcome.REJECTED)

    def capacity(self) -> int:
        cap = 1
        for g in self.grids:
            cap *= g.d
        return cap

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, ProfileTable) and self.entries == other.entries

    def items(self):
        return self.entries.items()
