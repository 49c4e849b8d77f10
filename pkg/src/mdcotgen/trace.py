"""Append-only run trace: every LLM call, gate draw, score and weight change.

Events are kept in memory and, when a path is given, mirrored line by line to
a UTF-8 JSONL file that is flushed after every record.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ProjectIOError

EVENT_KINDS = (
    "Generate",
    "GateDraw",
    "Verify",
    "Rectify",
    "Attenuate",
    "ConflictDetect",
    "ConflictResolve",
    "Error",
)

# manifest call_counts key -> event kind
CALL_COUNT_KINDS = {
    "generation": "Generate",
    "verification": "Verify",
    "rectification": "Rectify",
    "conflict_detect": "ConflictDetect",
    "conflict_resolve": "ConflictResolve",
}


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    dimension: str | None = None
    unit: str | None = None
    payload: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "dimension": self.dimension,
            "unit": self.unit,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TraceEvent":
        return cls(
            int(data["seq"]),
            data["kind"],
            data.get("dimension"),
            data.get("unit"),
            dict(data.get("payload") or {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


class TraceWriter:
    """Line-delimited JSON sink; rejects events whose seq does not increase."""

    def __init__(self, path: str | os.PathLike, *, append: bool = False):
        self.path = Path(path)
        self._last_seq: int | None = None
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if append and self.path.exists():
                for event in read_events(self.path):
                    self._last_seq = event.seq
            self._handle = self.path.open("a" if append else "w", encoding="utf-8")
        except OSError as exc:
            raise ProjectIOError(self.path, exc) from exc

    def append(self, event: TraceEvent) -> None:
        if self._last_seq is not None and event.seq <= self._last_seq:
            raise ValueError(
                f"trace seq must strictly increase (got {event.seq} after {self._last_seq})"
            )
        try:
            self._handle.write(event.to_json() + "\n")
            self._handle.flush()
        except OSError as exc:
            raise ProjectIOError(self.path, exc) from exc
        self._last_seq = event.seq

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def append_trace(writer: TraceWriter, event: TraceEvent) -> None:
    writer.append(event)


class RunTrace:
    """Ordered events with automatic sequence numbers."""

    def __init__(self, writer: TraceWriter | None = None):
        self.events: list[TraceEvent] = []
        self.writer = writer

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, RunTrace) and self.events == other.events

    def record(self, kind: str, dimension=None, unit: str | None = None,
               **payload: Any) -> TraceEvent:
        seq = self.events[-1].seq + 1 if self.events else 1
        dim = getattr(dimension, "value", dimension)
        event = TraceEvent(seq, kind, dim, unit, payload)
        self.add(event)
        return event

    def add(self, event: TraceEvent) -> None:
        if self.events and event.seq <= self.events[-1].seq:
            raise ValueError(
                f"trace seq must strictly increase (got {event.seq} after {self.events[-1].seq})"
            )
        if self.writer is not None:
            self.writer.append(event)
        self.events.append(event)

    def of_kind(self, *kinds: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind in kinds]

    def tally(self) -> Counter:
        return Counter(e.kind for e in self.events)

    def call_counts(self) -> dict[str, int]:
        counts = self.tally()
        return {key: counts.get(kind, 0) for key, kind in CALL_COUNT_KINDS.items()}

    def llm_calls(self) -> int:
        return sum(1 for e in self.events if e.payload.get("llm_call"))

    def token_cost(self) -> int:
        return sum(
            int(e.payload.get("prompt_tokens", 0)) + int(e.payload.get("completion_tokens", 0))
            for e in self.events
            if e.payload.get("llm_call")
        )

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)


def read_events(path: str | os.PathLike) -> Iterable[TraceEvent]:
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield TraceEvent.from_dict(json.loads(line))


def read_trace(path: str | os.PathLike) -> RunTrace:
    trace = RunTrace()
    for event in read_events(path):
        trace.add(event)
    return trace


def check_trace(trace: RunTrace) -> list[str]:
    """Structural problems in a trace (empty list when it is well formed)."""
    problems = []
    last = None
    pending_failure: dict[str | None, bool] = {}
    for e in trace.events:
        if last is not None and e.seq <= last:
            problems.append(f"seq {e.seq} does not increase")
        last = e.seq
        if e.kind == "Verify":
            pending_failure[e.unit] = not e.payload.get("passed", False)
        elif e.kind == "Rectify":
            if not pending_failure.get(e.unit):
                problems.append(f"Rectify at seq {e.seq} has no failed Verify for {e.unit!r}")
            pending_failure[e.unit] = False
    return problems
