"""Run memory: append-only episodic log plus the cross-run store of settled
optimization outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field

from ranloop.datastore import OptimizationRecord


@dataclass(frozen=True)
class MemoryEntry:
    at: int  # logical clock
    kind: str  # pass | selector | hypothesis | note
    payload: dict


class Memory:
    def __init__(self, cross_run: list[OptimizationRecord] | None = None):
        self._episodic: list[MemoryEntry] = []
        self._clock = 0
        self._cross_run = cross_run if cross_run is not None else []

    def append(self, kind: str, payload: dict) -> MemoryEntry:
        self._clock += 1
        entry = MemoryEntry(at=self._clock, kind=kind, payload=payload)
        self._episodic.append(entry)
        return entry

    def entries(self) -> list[MemoryEntry]:
        return list(self._episodic)

    def __len__(self) -> int:
        return len(self._episodic)

    def issued_selectors(self) -> list[str]:
        return [e.payload["selector_key"] for e in self._episodic if e.kind == "selector"]

    def hypothesis_history(self) -> list[dict]:
        return [e.payload for e in self._episodic if e.kind == "hypothesis"]

    # -- cross-run store -----------------------------------------------------

    def settled_records(self) -> list[OptimizationRecord]:
        return [r for r in self._cross_run if r.outcome in ("confirmed", "rolled_back")]

    def remember_outcome(self, record: OptimizationRecord) -> None:
        if record.outcome in ("confirmed", "rolled_back"):
            self._cross_run.append(record)
