"""Event-sourced persistence: append-only JSON-lines logs and replay.

One file per session, one record per line, fsync on append. Replaying the
events of a session reconstructs its state exactly, including timestamps,
because every state transition took its clock value from the event record.
Transient "generating" marks are not events; replay yields quiescent state.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import model
from .errors import CorruptLog, SubquestError
from .parsing import OptionSet

LOG_VERSION = 1


class EventKind(str, Enum):
    SESSION_CREATED = "SessionCreated"
    SUBTASKS_GENERATED = "SubtasksGenerated"
    OPTIONS_GENERATED = "OptionsGenerated"
    SELECTION_CHANGED = "SelectionChanged"
    PREFERENCES_UPDATED = "PreferencesUpdated"
    SUMMARY_GENERATED = "SummaryGenerated"
    NODE_ERRORED = "NodeErrored"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    session_id: str
    timestamp: float
    kind: EventKind
    payload: Mapping[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {
                "v": LOG_VERSION,
                "seq": self.seq,
                "session_id": self.session_id,
                "ts": self.timestamp,
                "kind": self.kind.value,
                "payload": dict(self.payload),
            },
            ensure_ascii=False,
        )


def event_from_json(line: str) -> SessionEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLog(f"unparseable event record: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("v") != LOG_VERSION:
        raise CorruptLog(f"event record must declare \"v\": {LOG_VERSION}")
    try:
        kind = EventKind(doc["kind"])
        seq = doc["seq"]
        session_id = doc["session_id"]
        timestamp = doc["ts"]
        payload = doc["payload"]
    except (KeyError, ValueError) as exc:
        raise CorruptLog(f"bad event record: {exc}") from exc
    if not isinstance(seq, int) or not isinstance(timestamp, (int, float)):
        raise CorruptLog("seq must be an int and ts a number")
    if not isinstance(session_id, str) or not isinstance(payload, dict):
        raise CorruptLog("session_id must be a string and payload an object")
    return SessionEvent(
        seq=seq,
        session_id=session_id,
        timestamp=float(timestamp),
        kind=kind,
        payload=payload,
    )


class EventLog:
    """Append-only per-session log files under one data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def append(self, event: SessionEvent) -> None:
        with open(self.path_for(event.session_id), "a", encoding="utf-8") as fh:
            fh.write(event.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, session_id: str) -> list[SessionEvent]:
        return read_log(self.path_for(session_id))

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.jsonl"))


def read_log(path: str | Path) -> list[SessionEvent]:
    path = Path(path)
    if not path.exists():
        return []
    events = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(event_from_json(line))
    return events


# --- replay -------------------------------------------------------------------


def apply_event(state: model.SessionState | None, event: SessionEvent) -> model.SessionState:
    """Fold one event into the state. Raises CorruptLog on any violation."""
    p = event.payload
    ts = event.timestamp
    try:
        if event.kind is EventKind.SESSION_CREATED:
            if state is not None:
                raise CorruptLog("SessionCreated after the session already exists")
            return model.initial_state(
                session_id=event.session_id,
                query=p["query"],
                max_depth=p["max_depth"],
                user_context=p.get("user_context"),
                now=ts,
            )
        if state is None:
            raise CorruptLog(f"{event.kind.value} before SessionCreated")
        if event.kind is EventKind.SUBTASKS_GENERATED:
            new = model.attach_children(state, p["titles"], now=ts)
            return model.root_ready(new, now=ts)
        if event.kind is EventKind.OPTIONS_GENERATED:
            option_set = OptionSet(
                recommended=p["recommended"],
                options=tuple(p["options"]),
                warnings=tuple(p.get("warnings", ())),
            )
            return model.set_options(state, model.NodeId(p["node_id"]), option_set, now=ts)
        if event.kind is EventKind.SELECTION_CHANGED:
            return model.set_selection(state, model.NodeId(p["node_id"]), p["indices"], now=ts)
        if event.kind is EventKind.PREFERENCES_UPDATED:
            return model.update_context(state, p["text"], now=ts)
        if event.kind is EventKind.SUMMARY_GENERATED:
            return model.set_summary(state, p["text"], now=ts)
        if event.kind is EventKind.NODE_ERRORED:
            node_id = model.NodeId(p["node_id"])
            if p.get("severity") == "warning":
                return model.set_warning(state, node_id, p["detail"], now=ts)
            return model.mark_error(state, node_id, p["detail"], now=ts)
    except CorruptLog:
        raise
    except (SubquestError, KeyError, TypeError, ValueError) as exc:
        raise CorruptLog(f"event {event.seq} ({event.kind.value}) unappliable: {exc}") from exc
    raise CorruptLog(f"unknown event kind {event.kind!r}")


def replay(events: Iterable[SessionEvent]) -> model.SessionState:
    """Rebuild the state a gap-free event sequence describes."""
    state: model.SessionState | None = None
    expected_seq = 1
    session_id: str | None = None
    for event in events:
        if event.seq != expected_seq:
            raise CorruptLog(f"seq gap: expected {expected_seq}, got {event.seq}")
        if session_id is None:
            session_id = event.session_id
        elif event.session_id != session_id:
            raise CorruptLog("log mixes sessions")
        if expected_seq == 1 and event.kind is not EventKind.SESSION_CREATED:
            raise CorruptLog(f"log must start with SessionCreated, got {event.kind.value}")
        state = apply_event(state, event)
        expected_seq += 1
    if state is None:
        raise CorruptLog("empty log: no SessionCreated")
    return state
