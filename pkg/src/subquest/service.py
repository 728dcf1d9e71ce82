"""Session orchestration: decomposition, options, preferences, summary.

Concurrency contract: mutations to one session are serialized by a
per-session lock; distinct sessions are fully parallel. Provider calls run
outside the lock with the target node pre-marked "generating", and
completion re-acquires the lock to commit both the new state and its event.
Event sequence numbers are allocated under the lock, so logs are gap-free.

Every committed transition reuses the event's timestamp, which is what
makes replay(log) structurally equal to the live state.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable, Iterable

from . import model
from .errors import (
    DecompositionFailed,
    EmptyQuery,
    GenerationFailed,
    NodeBusy,
    OptionsNotReady,
    ParseFailed,
    SchemaMismatch,
    SubquestError,
    UnknownNode,
    UnknownSession,
)
from .events import EventKind, EventLog, SessionEvent, replay
from .gateway import Gateway, GatewayConfig, GatewayRequest, DEFAULT_TEMPERATURE
from .model import NodeId, NodeStatus, SessionState
from .parsing import OptionSet, SubTaskList, parse_options, parse_subtasks
from .prompts import PromptBindings, PromptKind, load_template, render

# (session_id, node_id, status) callback; invoked on every committed status
# transition. Must be cheap and must not call back into the service.
StatusObserver = Callable[[str, str, str], None]


@dataclass(frozen=True)
class NodeStatusView:
    id: str
    title: str
    status: str
    option_count: int | None
    selected: tuple[int, ...]
    error_detail: str | None = None


def view_of(node: model.ExplorationNode) -> NodeStatusView:
    count = len(node.option_set.selectable()) if node.option_set is not None else None
    return NodeStatusView(
        id=node.id.value,
        title=node.title,
        status=node.status.value,
        option_count=count,
        selected=tuple(sorted(node.selected)),
        error_detail=node.error_detail,
    )


class SessionService:
    def __init__(
        self,
        gateway: Gateway,
        store: EventLog,
        *,
        config: GatewayConfig | None = None,
        clock: Callable[[], float] = time.time,
        status_observer: StatusObserver | None = None,
    ):
        self.gateway = gateway
        self.store = store
        self._config = config or GatewayConfig()
        self._clock = clock
        self._observer = status_observer
        self._sessions: dict[str, SessionState] = {}
        self._next_seq: dict[str, int] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry = threading.Lock()

    # --- lifecycle -------------------------------------------------------

    def restore(self) -> int:
        """Hydrate sessions from existing logs; returns how many loaded."""
        loaded = 0
        for session_id in self.store.session_ids():
            events = self.store.read(session_id)
            state = replay(events)
            with self._lock_for(session_id):
                self._sessions[session_id] = state
                self._next_seq[session_id] = len(events) + 1
            loaded += 1
        return loaded

    def create_session(self, query: str, user_context: str | None = None) -> SessionState:
        if not query.strip():
            raise EmptyQuery("query is blank")
        session_id = uuid.uuid4().hex
        ts = self._clock()
        state = model.initial_state(
            session_id=session_id,
            query=query,
            max_depth=2,
            user_context=user_context,
            now=ts,
        )
        lock = self._lock_for(session_id)
        with lock:
            self._sessions[session_id] = state
            self._next_seq[session_id] = 1
            self._append(
                session_id,
                EventKind.SESSION_CREATED,
                {"query": query, "max_depth": 2, "user_context": user_context},
                ts,
            )
            self._observe(session_id, state.root.id, NodeStatus.IDLE)
            bindings = self._bindings_for(state, PromptKind.DECOMPOSE, text=query)
            self._commit_generating(session_id, state.root.id)

        self._run_decomposition(session_id, bindings, failure_is_fatal=True)
        return self.get_session(session_id)

    def get_session(self, session_id: str) -> SessionState:
        with self._lock_for(session_id):
            return self._session(session_id)

    # --- node operations ---------------------------------------------------

    def expand_node(
        self, session_id: str, node_id: str, *, force: bool = False
    ) -> tuple[NodeStatusView, OptionSet]:
        nid = self._node_id(session_id, node_id)
        if nid.is_root:
            raise OptionsNotReady("the root node does not hold options")
        lock = self._lock_for(session_id)
        with lock:
            state = self._session(session_id)
            node = state.node(nid)
            if node.status is NodeStatus.GENERATING:
                raise NodeBusy(f"node {nid.value} is already generating")
            if node.status is NodeStatus.READY and node.option_set is not None and not force:
                return view_of(node), node.option_set
            title_snapshot = node.title
            bindings = self._bindings_for(
                state, PromptKind.OPTIONS, text=node.title, context=state.root.title
            )
            self._commit_generating(session_id, nid)

        prompt = render(load_template(PromptKind.OPTIONS), bindings)
        try:
            option_set = self._generate_options(prompt)
        except SubquestError as exc:
            detail = str(exc)
            with lock:
                current = self._session(session_id)
                if self._node_intact(current, nid, title_snapshot):
                    ts = self._clock()
                    current = model.mark_error(current, nid, detail, now=ts)
                    self._sessions[session_id] = current
                    self._append(
                        session_id,
                        EventKind.NODE_ERRORED,
                        {"node_id": nid.value, "detail": detail, "severity": "error"},
                        ts,
                    )
                    self._observe(session_id, nid, NodeStatus.ERROR)
            raise GenerationFailed(detail) from exc

        with lock:
            current = self._session(session_id)
            if not self._node_intact(current, nid, title_snapshot):
                # Sub-tasks were regenerated while this call was in flight;
                # the result belongs to a node that no longer exists.
                raise GenerationFailed("sub-tasks changed while options were generating")
            ts = self._clock()
            current = model.set_options(current, nid, option_set, now=ts)
            self._sessions[session_id] = current
            self._append(
                session_id,
                EventKind.OPTIONS_GENERATED,
                {
                    "node_id": nid.value,
                    "recommended": option_set.recommended,
                    "options": list(option_set.options),
                    "warnings": list(option_set.warnings),
                },
                ts,
            )
            self._observe(session_id, nid, NodeStatus.READY)
            return view_of(current.node(nid)), option_set

    def set_node_selection(
        self, session_id: str, node_id: str, indices: Iterable[int]
    ) -> NodeStatusView:
        nid = self._node_id(session_id, node_id)
        with self._lock_for(session_id):
            state = self._session(session_id)
            ts = self._clock()
            # Validation happens inside the transition; on failure nothing
            # is committed and no event is appended.
            new_state = model.set_selection(state, nid, indices, now=ts)
            self._sessions[session_id] = new_state
            self._append(
                session_id,
                EventKind.SELECTION_CHANGED,
                {"node_id": nid.value, "indices": sorted(new_state.node(nid).selected)},
                ts,
            )
            return view_of(new_state.node(nid))

    def update_preferences(self, session_id: str, text: str) -> SessionState:
        lock = self._lock_for(session_id)
        with lock:
            state = self._session(session_id)
            if state.root.status is NodeStatus.GENERATING:
                raise NodeBusy("the root node is busy; retry when it settles")
            ts = self._clock()
            state = model.update_context(state, text, now=ts)
            self._sessions[session_id] = state
            self._append(session_id, EventKind.PREFERENCES_UPDATED, {"text": text}, ts)
            # The regeneration prompt carries the digest of the selections
            # that exist right now; they only disappear once the new
            # sub-tasks arrive and replace the children.
            bindings = self._bindings_for(state, PromptKind.DECOMPOSE, text=state.root.title)
            prior_status = state.root.status
            self._commit_generating(session_id, state.root.id)

        self._run_decomposition(
            session_id, bindings, failure_is_fatal=False, restore_status=prior_status
        )
        return self.get_session(session_id)

    def summarize(self, session_id: str) -> str:
        lock = self._lock_for(session_id)
        with lock:
            state = self._session(session_id)
            if state.root.status is NodeStatus.GENERATING:
                raise NodeBusy("the root node is busy; retry when it settles")
            prior_status = state.root.status
            bindings = self._bindings_for(state, PromptKind.SUMMARIZE, text=state.root.title)
            self._commit_generating(session_id, state.root.id)

        prompt = render(load_template(PromptKind.SUMMARIZE), bindings)
        try:
            response = self.gateway.complete(self._request(prompt, PromptKind.SUMMARIZE))
        except SubquestError as exc:
            with lock:
                current = self._session(session_id)
                current = model.mark_status(current, current.root.id, prior_status)
                self._sessions[session_id] = current
                self._observe(session_id, current.root.id, prior_status)
            raise GenerationFailed(str(exc)) from exc

        with lock:
            current = self._session(session_id)
            ts = self._clock()
            current = model.mark_status(current, current.root.id, prior_status)
            current = model.set_summary(current, response.raw_text, now=ts)
            self._sessions[session_id] = current
            self._append(
                session_id, EventKind.SUMMARY_GENERATED, {"text": response.raw_text}, ts
            )
            self._observe(session_id, current.root.id, prior_status)
            return response.raw_text

    def node_views(self, session_id: str) -> list[NodeStatusView]:
        with self._lock_for(session_id):
            state = self._session(session_id)
            return [view_of(node) for node in state.all_nodes()]

    # --- internals -------------------------------------------------------

    def _run_decomposition(
        self,
        session_id: str,
        bindings: PromptBindings,
        *,
        failure_is_fatal: bool,
        restore_status: NodeStatus = NodeStatus.IDLE,
    ) -> None:
        """Shared back half of create_session and update_preferences.

        Expects the root to be pre-marked generating. On success commits the
        new children; on failure commits either a fatal root error (session
        creation) or a root warning with the previous children retained.
        """
        lock = self._lock_for(session_id)
        prompt = render(load_template(PromptKind.DECOMPOSE), bindings)
        root_id = NodeId.root()
        try:
            subtasks = self._decompose(prompt)
        except SubquestError as exc:
            detail = str(exc)
            with lock:
                current = self._session(session_id)
                ts = self._clock()
                if failure_is_fatal:
                    current = model.mark_error(current, root_id, detail, now=ts)
                    severity = "error"
                    final_status = NodeStatus.ERROR
                else:
                    current = model.mark_status(current, root_id, restore_status)
                    current = model.set_warning(current, root_id, detail, now=ts)
                    severity = "warning"
                    final_status = restore_status
                self._sessions[session_id] = current
                self._append(
                    session_id,
                    EventKind.NODE_ERRORED,
                    {"node_id": root_id.value, "detail": detail, "severity": severity},
                    ts,
                )
                self._observe(session_id, root_id, final_status)
            raise DecompositionFailed(detail, session_id=session_id) from exc

        with lock:
            current = self._session(session_id)
            ts = self._clock()
            current = model.attach_children(current, subtasks.titles, now=ts)
            current = model.root_ready(current, now=ts)
            self._sessions[session_id] = current
            self._append(
                session_id,
                EventKind.SUBTASKS_GENERATED,
                {"titles": list(subtasks.titles), "warnings": list(subtasks.warnings)},
                ts,
            )
            self._observe(session_id, root_id, NodeStatus.READY)
            for child in current.children:
                self._observe(session_id, child.id, NodeStatus.IDLE)

    def _decompose(self, prompt: str) -> SubTaskList:
        last: SubquestError | None = None
        for _ in range(2):  # one retry on malformed output
            response = self.gateway.complete(self._request(prompt, PromptKind.DECOMPOSE))
            try:
                return parse_subtasks(response.raw_text)
            except (ParseFailed, SchemaMismatch) as exc:
                last = exc
        assert last is not None
        raise last

    def _generate_options(self, prompt: str) -> OptionSet:
        first_usable: OptionSet | None = None
        last: SubquestError | None = None
        for _ in range(2):  # one retry on malformed output or a thin set
            response = self.gateway.complete(self._request(prompt, PromptKind.OPTIONS))
            try:
                parsed = parse_options(response.raw_text)
            except (ParseFailed, SchemaMismatch) as exc:
                last = exc
                continue
            if not any(w.startswith("low_option_count") for w in parsed.warnings):
                return parsed
            if first_usable is None:
                first_usable = parsed
        if first_usable is not None:
            return first_usable
        assert last is not None
        raise last

    def _bindings_for(
        self,
        state: SessionState,
        kind: PromptKind,
        *,
        text: str,
        context: str | None = None,
    ) -> PromptBindings:
        return PromptBindings(
            text=text,
            selected_options=model.digest_text(state),
            user_context=state.context.text,
            context=context if kind is PromptKind.OPTIONS else None,
        )

    def _request(self, prompt: str, kind: PromptKind) -> GatewayRequest:
        return GatewayRequest(
            prompt=prompt,
            kind=kind,
            temperature=DEFAULT_TEMPERATURE[kind],
            timeout=self._config.timeout,
            max_attempts=self._config.max_attempts,
        )

    def _commit_generating(self, session_id: str, node_id: NodeId) -> None:
        """Mark a node generating and commit; caller holds the session lock."""
        state = self._sessions[session_id]
        self._sessions[session_id] = model.mark_status(
            state, node_id, NodeStatus.GENERATING
        )
        self._observe(session_id, node_id, NodeStatus.GENERATING)

    @staticmethod
    def _node_intact(state: SessionState, nid: NodeId, title: str) -> bool:
        try:
            return state.node(nid).title == title
        except UnknownNode:
            return False

    def _node_id(self, session_id: str, node_id: str) -> NodeId:
        try:
            return NodeId(node_id)
        except ValueError as exc:
            raise UnknownNode(f"malformed node id {node_id!r}") from exc

    def _session(self, session_id: str) -> SessionState:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None

    def _lock_for(self, session_id: str) -> threading.RLock:
        with self._registry:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def _append(self, session_id: str, kind: EventKind, payload: dict, ts: float) -> None:
        seq = self._next_seq[session_id]
        event = SessionEvent(
            seq=seq, session_id=session_id, timestamp=ts, kind=kind, payload=payload
        )
        self.store.append(event)
        self._next_seq[session_id] = seq + 1

    def _observe(self, session_id: str, node_id: NodeId, status: NodeStatus) -> None:
        if self._observer is not None:
            self._observer(session_id, node_id.value, status.value)
