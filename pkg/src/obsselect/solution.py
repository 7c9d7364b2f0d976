"""Solver results and their JSON document form.

Solution files are deterministic functions of the instance and the solver
flags: wall-clock timing is kept on the in-memory object (and reported on
stderr / in comparison CSVs) but never written into the document.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .profiles import Plan, TableStats

FORMAT_VERSION = 1


@dataclass
class Solution:
    kind: str
    subset: Plan
    time_used: int
    predicted_reward: float
    delta_u_bound: float
    grids_used: dict[str, float]
    exact_reward: float | None = None
    solver_millis: int = 0
    table_stats: list[TableStats] = field(default_factory=list, repr=False)

    @property
    def root_table_entries(self) -> int:
        for st in self.table_stats:
            if st.node_id == 1:
                return st.entries
        return 0

    def to_doc(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "subset": [[nid, m] for nid, m in self.subset],
            "time_used": self.time_used,
            "predicted_reward": self.predicted_reward,
            "exact_reward": self.exact_reward,
            "delta_u_bound": self.delta_u_bound,
            "grids_used": self.grids_used,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2) + "\n"


class SolutionError(ValueError):
    """Malformed solution document."""


def parse_solution(text: str) -> Solution:
    """Read a solution document back (timing and table diagnostics are not
    part of the file format and come back zeroed)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SolutionError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise SolutionError("unsupported solution document")
    try:
        subset = tuple((int(nid), int(m)) for nid, m in doc["subset"])
        return Solution(
            kind=doc["kind"],
            subset=subset,
            time_used=int(doc["time_used"]),
            predicted_reward=float(doc["predicted_reward"]),
            delta_u_bound=float(doc["delta_u_bound"]),
            grids_used=dict(doc["grids_used"]),
            exact_reward=None if doc.get("exact_reward") is None
            else float(doc["exact_reward"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SolutionError(f"invalid solution document: {exc}") from exc
