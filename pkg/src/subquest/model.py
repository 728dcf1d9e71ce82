"""Exploration-tree session state: pure values and deterministic transitions.

Everything here is immutable; a transition returns a new SessionState. The
service layer owns sequencing and persistence and passes the event timestamp
into each transition so that replaying a log rebuilds byte-identical state.

Tree shape is fixed at two levels: the root node holds the original query
(and never options), children hold one sub-task each, at most eight of them.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .errors import (
    EmptyQuery,
    IndexOutOfRange,
    OptionsNotReady,
    TooManyChildren,
    UnknownNode,
)
from .parsing import OptionSet

MAX_CHILDREN = 8
ROOT_ID_VALUE = "n0"
EMPTY_DIGEST_TEXT = "None"


@dataclass(frozen=True)
class NodeId:
    """Dot-separated tree path: root is "n0", its k-th child "n0.k" (1-based)."""

    value: str

    def __post_init__(self) -> None:
        segments = self.value.split(".")
        if segments[0] != ROOT_ID_VALUE:
            raise ValueError(f"node id must start with {ROOT_ID_VALUE!r}: {self.value!r}")
        for seg in segments[1:]:
            if not seg.isdigit() or int(seg) < 1:
                raise ValueError(f"bad node id segment {seg!r} in {self.value!r}")

    @classmethod
    def root(cls) -> NodeId:
        return cls(ROOT_ID_VALUE)

    @classmethod
    def child(cls, k: int) -> NodeId:
        return cls(f"{ROOT_ID_VALUE}.{k}")

    @property
    def is_root(self) -> bool:
        return self.value == ROOT_ID_VALUE

    @property
    def depth(self) -> int:
        # Root is level 1, children level 2; must stay <= SessionState.max_depth.
        return len(self.value.split("."))

    @property
    def parent(self) -> NodeId | None:
        if self.is_root:
            return None
        return NodeId(self.value.rsplit(".", 1)[0])

    def sort_key(self) -> tuple[int, ...]:
        segments = self.value.split(".")
        return (0, *(int(seg) for seg in segments[1:]))


class NodeStatus(str, Enum):
    IDLE = "idle"
    GENERATING = "generating"
    READY = "ready"
    ERROR = "error"


@dataclass(frozen=True)
class ExplorationNode:
    """One unit of interaction: a sub-task (or the root query) with its options."""

    id: NodeId
    title: str
    status: NodeStatus = NodeStatus.IDLE
    option_set: OptionSet | None = None
    selected: frozenset[int] = frozenset()
    error_detail: str | None = None

    def __post_init__(self) -> None:
        if self.option_set is None and self.selected:
            raise ValueError("selections require an option set")
        if self.option_set is not None:
            limit = len(self.option_set.selectable())
            for index in self.selected:
                if not 0 <= index < limit:
                    raise ValueError(f"selected index {index} out of range 0..{limit - 1}")
        if (
            self.status is NodeStatus.READY
            and self.option_set is None
            and not self.id.is_root
        ):
            raise ValueError("non-root node cannot be ready without options")

    def selected_texts(self) -> tuple[str, ...]:
        """Selected option texts in index order; index 0 is the recommended entry."""
        if self.option_set is None:
            return ()
        entries = self.option_set.selectable()
        return tuple(entries[i] for i in sorted(self.selected))


@dataclass(frozen=True)
class PersonalContext:
    """Global free-form preference text, shared by every prompt."""

    text: str = ""
    revision: int = 0


@dataclass(frozen=True)
class SessionState:
    session_id: str
    root: ExplorationNode
    created_at: float
    updated_at: float
    children: tuple[ExplorationNode, ...] = ()
    context: PersonalContext = field(default_factory=PersonalContext)
    max_depth: int = 2
    summary: str | None = None
    regen_pending: bool = False

    def __post_init__(self) -> None:
        if len(self.children) > MAX_CHILDREN:
            raise ValueError(f"at most {MAX_CHILDREN} children, got {len(self.children)}")
        for node in (self.root, *self.children):
            if node.id.depth > self.max_depth:
                raise ValueError(f"node {node.id.value} beyond max depth {self.max_depth}")

    def node(self, node_id: NodeId) -> ExplorationNode:
        if node_id == self.root.id:
            return self.root
        for child in self.children:
            if child.id == node_id:
                return child
        raise UnknownNode(f"no node {node_id.value!r} in session {self.session_id}")

    def all_nodes(self) -> tuple[ExplorationNode, ...]:
        return (self.root, *self.children)


@dataclass(frozen=True)
class SelectionDigest:
    """All selected options across the tree, in (node id, option index) order."""

    entries: tuple[tuple[str, str], ...]

    def serialize(self) -> str:
        if not self.entries:
            return EMPTY_DIGEST_TEXT
        return "\n".join(f"- {title}: {text}" for title, text in self.entries)


# --- transitions --------------------------------------------------------------


def new_session(
    query: str,
    max_depth: int = 2,
    *,
    session_id: str | None = None,
    now: float | None = None,
) -> SessionState:
    """Fresh session: root node titled with the query, no children yet."""
    if not query.strip():
        raise EmptyQuery("query is blank")
    if max_depth < 2:
        raise ValueError(f"max_depth must be >= 2, got {max_depth}")
    ts = time.time() if now is None else now
    return SessionState(
        session_id=session_id or uuid.uuid4().hex,
        root=ExplorationNode(id=NodeId.root(), title=query),
        created_at=ts,
        updated_at=ts,
        max_depth=max_depth,
    )


def initial_state(
    session_id: str,
    query: str,
    max_depth: int,
    user_context: str | None,
    now: float,
) -> SessionState:
    """Creation-time state, with the optional first preference update applied."""
    state = new_session(query, max_depth, session_id=session_id, now=now)
    if user_context is not None:
        state = update_context(state, user_context, now=now)
    return state


def attach_children(
    state: SessionState, titles: Iterable[str], *, now: float | None = None
) -> SessionState:
    """Replace all children with fresh idle nodes, one per title, in order.

    Previous children and their selections are discarded: regenerated
    sub-tasks need not correspond to the old ones, and carrying selections
    over would mis-attribute preferences.
    """
    title_list = list(titles)
    if not title_list:
        raise ValueError("at least one sub-task title required")
    if len(title_list) > MAX_CHILDREN:
        raise TooManyChildren(f"{len(title_list)} titles exceed the limit of {MAX_CHILDREN}")
    children = tuple(
        ExplorationNode(id=NodeId.child(k), title=title)
        for k, title in enumerate(title_list, start=1)
    )
    ts = time.time() if now is None else now
    return replace(state, children=children, regen_pending=False, updated_at=ts)


def set_selection(
    state: SessionState,
    node_id: NodeId,
    indices: Iterable[int],
    *,
    now: float | None = None,
) -> SessionState:
    """Replace a node's selection set (idempotent; empty set clears)."""
    node = state.node(node_id)
    if node.option_set is None:
        raise OptionsNotReady(f"node {node_id.value} has no options yet")
    chosen = frozenset(indices)
    limit = len(node.option_set.selectable())
    for index in chosen:
        if not 0 <= index < limit:
            raise IndexOutOfRange(f"index {index} not in 0..{limit - 1}")
    ts = time.time() if now is None else now
    return _swap_node(state, replace(node, selected=chosen), now=ts)


def selection_digest(state: SessionState) -> SelectionDigest:
    """Deterministic digest of every selection, ordered by node id then index."""
    entries: list[tuple[str, str]] = []
    for node in sorted(state.all_nodes(), key=lambda n: n.id.sort_key()):
        for text in node.selected_texts():
            entries.append((node.title, text))
    return SelectionDigest(entries=tuple(entries))


def digest_text(state: SessionState) -> str:
    return selection_digest(state).serialize()


def update_context(
    state: SessionState, text: str, *, now: float | None = None
) -> SessionState:
    """Replace the preference text and flag the children as stale."""
    ts = time.time() if now is None else now
    return replace(
        state,
        context=PersonalContext(text=text, revision=state.context.revision + 1),
        regen_pending=True,
        updated_at=ts,
    )


# --- node-level plumbing used by the service and by event replay --------------


def mark_status(state: SessionState, node_id: NodeId, status: NodeStatus) -> SessionState:
    """Transient status flip (e.g. generating); does not bump updated_at."""
    node = state.node(node_id)
    return _swap_node(state, replace(node, status=status), now=state.updated_at)


def set_options(
    state: SessionState, node_id: NodeId, option_set: OptionSet, *, now: float
) -> SessionState:
    """Commit generated options: node becomes ready, stale selections drop."""
    node = state.node(node_id)
    node = replace(
        node,
        status=NodeStatus.READY,
        option_set=option_set,
        selected=frozenset(),
        error_detail=None,
    )
    return _swap_node(state, node, now=now)


def mark_error(
    state: SessionState, node_id: NodeId, detail: str, *, now: float
) -> SessionState:
    """Commit a generation failure: status error, options kept if present."""
    node = state.node(node_id)
    return _swap_node(
        state, replace(node, status=NodeStatus.ERROR, error_detail=detail), now=now
    )


def set_warning(
    state: SessionState, node_id: NodeId, detail: str, *, now: float
) -> SessionState:
    """Attach a non-fatal warning to a node without changing its status."""
    node = state.node(node_id)
    return _swap_node(state, replace(node, error_detail=detail), now=now)


def set_summary(state: SessionState, text: str, *, now: float) -> SessionState:
    return replace(state, summary=text, updated_at=now)


def root_ready(state: SessionState, *, now: float) -> SessionState:
    """Root settles after a successful decomposition; stale warnings clear."""
    root = replace(state.root, status=NodeStatus.READY, error_detail=None)
    return replace(state, root=root, updated_at=now)


def _swap_node(state: SessionState, node: ExplorationNode, *, now: float) -> SessionState:
    if node.id == state.root.id:
        return replace(state, root=node, updated_at=now)
    children = tuple(node if child.id == node.id else child for child in state.children)
    return replace(state, children=children, updated_at=now)
