"""subquest: decompose a complex query into a steerable tree of sub-tasks.

The service builds a two-level exploration tree from one user query,
generates selectable options per sub-task, threads globally shared
preferences and selections through every downstream prompt, and produces a
personalized summary on demand. State is event-sourced: replaying a session
log reconstructs it exactly.
"""

from .errors import SubquestError
from .model import (
    ExplorationNode,
    NodeId,
    NodeStatus,
    PersonalContext,
    SelectionDigest,
    SessionState,
)
from .parsing import OptionSet, SubTaskList
from .service import SessionService

__version__ = "0.1.0"

__all__ = [
    "ExplorationNode",
    "NodeId",
    "NodeStatus",
    "OptionSet",
    "PersonalContext",
    "SelectionDigest",
    "SessionService",
    "SessionState",
    "SubTaskList",
    "SubquestError",
    "__version__",
]
