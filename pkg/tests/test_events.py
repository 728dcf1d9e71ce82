"""Event records, the append-only store, and replay validation."""

from __future__ import annotations

import json

import pytest

from subquest.errors import CorruptLog
from subquest.events import (
    EventKind,
    EventLog,
    SessionEvent,
    apply_event,
    event_from_json,
    read_log,
    replay,
)
from subquest.model import NodeStatus


def event(seq, kind, payload, *, sid="s1", ts=100.0):
    return SessionEvent(seq=seq, session_id=sid, timestamp=ts + seq, kind=kind, payload=payload)


def created(seq=1, query="plan a trip", user_context=None):
    return event(
        seq,
        EventKind.SESSION_CREATED,
        {"query": query, "max_depth": 2, "user_context": user_context},
    )


def subtasks(seq, titles):
    return event(seq, EventKind.SUBTASKS_GENERATED, {"titles": titles, "warnings": []})


OPTIONS_PAYLOAD = {
    "node_id": "n0.1",
    "recommended": "rec",
    "options": ["a", "b", "c", "d", "e"],
    "warnings": [],
}


class TestSerialization:
    def test_round_trip(self):
        original = created()
        line = original.to_json()
        assert json.loads(line)["v"] == 1
        assert event_from_json(line) == original

    def test_rejects_wrong_version(self):
        doc = json.loads(created().to_json())
        doc["v"] = 99
        with pytest.raises(CorruptLog):
            event_from_json(json.dumps(doc))

    def test_rejects_unknown_kind(self):
        doc = json.loads(created().to_json())
        doc["kind"] = "SomethingElse"
        with pytest.raises(CorruptLog):
            event_from_json(json.dumps(doc))

    def test_rejects_non_json(self):
        with pytest.raises(CorruptLog):
            event_from_json("{oops")

    def test_rejects_bad_field_types(self):
        doc = json.loads(created().to_json())
        doc["seq"] = "one"
        with pytest.raises(CorruptLog):
            event_from_json(json.dumps(doc))


class TestEventLog:
    def test_append_and_read(self, tmp_path):
        store = EventLog(tmp_path)
        first, second = created(), subtasks(2, ["a", "b"])
        store.append(first)
        store.append(second)
        assert store.read("s1") == [first, second]
        assert store.session_ids() == ["s1"]
        lines = store.path_for("s1").read_text().splitlines()
        assert len(lines) == 2

    def test_missing_session_reads_empty(self, tmp_path):
        assert EventLog(tmp_path).read("ghost") == []

    def test_read_log_of_missing_path(self, tmp_path):
        assert read_log(tmp_path / "none.jsonl") == []


class TestReplayValidation:
    def test_empty_log(self):
        with pytest.raises(CorruptLog, match="empty log"):
            replay([])

    def test_seq_gap(self):
        with pytest.raises(CorruptLog, match="gap"):
            replay([created(), subtasks(3, ["a"])])

    def test_must_start_with_session_created(self):
        with pytest.raises(CorruptLog, match="SessionCreated"):
            replay([subtasks(1, ["a"])])

    def test_duplicate_session_created(self):
        with pytest.raises(CorruptLog):
            replay([created(), created(2)])

    def test_mixed_sessions(self):
        second = SessionEvent(
            seq=2,
            session_id="other",
            timestamp=102.0,
            kind=EventKind.SUBTASKS_GENERATED,
            payload={"titles": ["a"], "warnings": []},
        )
        with pytest.raises(CorruptLog, match="mixes"):
            replay([created(), second])

    def test_unappliable_payload(self):
        bad = event(2, EventKind.OPTIONS_GENERATED, {"node_id": "n0.9", "oops": True})
        with pytest.raises(CorruptLog, match="unappliable"):
            replay([created(), bad])

    def test_selection_before_options_is_corrupt(self):
        bad = event(3, EventKind.SELECTION_CHANGED, {"node_id": "n0.1", "indices": [0]})
        with pytest.raises(CorruptLog):
            replay([created(), subtasks(2, ["a"]), bad])


class TestApply:
    def test_full_session_rebuild(self):
        log = [
            created(user_context="vegetarian"),
            subtasks(2, ["alpha", "beta"]),
            event(3, EventKind.OPTIONS_GENERATED, OPTIONS_PAYLOAD),
            event(4, EventKind.SELECTION_CHANGED, {"node_id": "n0.1", "indices": [0, 2]}),
            event(5, EventKind.PREFERENCES_UPDATED, {"text": "vegan now"}),
            event(6, EventKind.SUBTASKS_GENERATED, {"titles": ["gamma"], "warnings": []}),
            event(7, EventKind.SUMMARY_GENERATED, {"text": "the summary"}),
        ]
        state = replay(log)
        assert state.session_id == "s1"
        assert state.root.status is NodeStatus.READY
        assert state.context.text == "vegan now"
        assert state.context.revision == 2  # creation context + one update
        assert [c.title for c in state.children] == ["gamma"]
        assert state.children[0].selected == frozenset()  # replaced children
        assert state.summary == "the summary"
        assert state.created_at == log[0].timestamp
        assert state.updated_at == log[-1].timestamp

    def test_created_with_context_sets_revision_one(self):
        state = apply_event(None, created(user_context="with a toddler"))
        assert state.context.revision == 1
        assert state.context.text == "with a toddler"
        assert state.regen_pending

    def test_created_without_context_is_revision_zero(self):
        state = apply_event(None, created())
        assert state.context.revision == 0
        assert not state.regen_pending

    def test_node_error_severities(self):
        base = replay([created(), subtasks(2, ["a"])])
        fatal = apply_event(
            base,
            event(3, EventKind.NODE_ERRORED, {"node_id": "n0.1", "detail": "boom", "severity": "error"}),
        )
        assert fatal.node(base.children[0].id).status is NodeStatus.ERROR
        assert fatal.node(base.children[0].id).error_detail == "boom"

        warned = apply_event(
            base,
            event(3, EventKind.NODE_ERRORED, {"node_id": "n0", "detail": "hiccup", "severity": "warning"}),
        )
        assert warned.root.status is base.root.status
        assert warned.root.error_detail == "hiccup"

    def test_subtasks_clear_root_warning(self):
        warned = replay(
            [
                created(),
                event(2, EventKind.NODE_ERRORED, {"node_id": "n0", "detail": "x", "severity": "warning"}),
            ]
        )
        assert warned.root.error_detail == "x"
        cleared = apply_event(warned, subtasks(3, ["a"]))
        assert cleared.root.error_detail is None
        assert cleared.root.status is NodeStatus.READY
