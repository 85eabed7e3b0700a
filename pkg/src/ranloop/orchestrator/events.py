"""Per-run event log: gapless sequence from 1, subscribable with a resume
cursor, closed when the run reaches a terminal status."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator

from ranloop.errors import ValidationError

EVENT_KINDS = (
    "status_change",
    "pass_completed",
    "message_sent",
    "approval_requested",
    "validation_result",
)


@dataclass(frozen=True)
class EventRecord:
    run_id: str
    seq: int  # gapless from 1 per run
    kind: str
    payload: dict
    emitted_at: int  # logical clock == seq (wall time is not determinism-safe)

    def to_payload(self, include_run_id: bool = False) -> dict:
        out = {
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "emitted_at": self.emitted_at,
        }
        if include_run_id:
            out = {"run_id": self.run_id, **out}
        return out


class EventLog:
    def __init__(self, run_id: str):
        self.run_id = run_id
        self._events: list[EventRecord] = []
        self._cond = threading.Condition()
        self._closed = False

    def emit(self, kind: str, payload: dict) -> EventRecord:
        if kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind: {kind}", field_path="kind")
        with self._cond:
            seq = len(self._events) + 1
            rec = EventRecord(run_id=self.run_id, seq=seq, kind=kind,
                              payload=payload, emitted_at=seq)
            self._events.append(rec)
            self._cond.notify_all()
            return rec

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def events_from(self, from_seq: int = 1) -> list[EventRecord]:
        with self._cond:
            return [e for e in self._events if e.seq >= from_seq]

    def __len__(self) -> int:
        with self._cond:
            return len(self._events)

    def stream(self, from_seq: int = 1, poll_timeout: float = 30.0) -> Iterator[EventRecord]:
        """All events with seq >= from_seq, in order, without gaps; blocks for
        new ones until the log closes (run terminal)."""
        next_seq = max(1, from_seq)
        while True:
            with self._cond:
                while len(self._events) < next_seq and not self._closed:
                    self._cond.wait(timeout=poll_timeout)
                batch = self._events[next_seq - 1 :]
                closed = self._closed
            for e in batch:
                yield e
                next_seq = e.seq + 1
            if closed and next_seq > len(self):
                return
