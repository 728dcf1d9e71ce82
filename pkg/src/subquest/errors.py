"""Exception taxonomy shared across the package.

Every error raised by subquest code derives from SubquestError so callers
can catch the whole family at API boundaries.
"""

from __future__ import annotations


class SubquestError(Exception):
    """Base class for all subquest errors."""


# --- session tree -----------------------------------------------------------


class EmptyQuery(SubquestError):
    """The root query is blank after trimming."""


class TooManyChildren(SubquestError):
    """More than 8 sub-task titles were attached to the root."""


class UnknownSession(SubquestError):
    """No session with the given id."""


class UnknownNode(SubquestError):
    """No node with the given id in this session."""


class OptionsNotReady(SubquestError):
    """Selection attempted on a node that has no option set."""


class IndexOutOfRange(SubquestError):
    """Selection index outside the selectable range (0..option count)."""


class NodeBusy(SubquestError):
    """A generation call for this node is already in flight."""


# --- prompt rendering -------------------------------------------------------


class MissingBinding(SubquestError):
    """A placeholder required by the template kind has no binding."""

    def __init__(self, placeholder: str):
        super().__init__(f"missing binding: {placeholder}")
        self.placeholder = placeholder


class UnexpectedBinding(SubquestError):
    """A binding was supplied that the template kind does not accept."""

    def __init__(self, placeholder: str):
        super().__init__(f"unexpected binding: {placeholder}")
        self.placeholder = placeholder


# --- gateway ----------------------------------------------------------------


class GatewayError(SubquestError):
    """Base class for provider-call failures."""


class GatewayTimeout(GatewayError):
    """The provider did not answer within the request timeout."""


class TransportError(GatewayError):
    """Connection-level failure, raised after retries are exhausted."""


class ProviderRefusal(GatewayError):
    """The provider answered with a non-success status."""


class NoScriptMatch(GatewayError):
    """No scripted rule matched the prompt; fixtures must be explicit."""


class ConfigInvalid(SubquestError):
    """Provider or service configuration is incomplete or unreadable."""


# --- structured output parsing ----------------------------------------------


class ExtractionError(SubquestError):
    """Base class for object-extraction failures."""


class NoObjectFound(ExtractionError):
    """The text contains no opening brace."""


class UnbalancedObject(ExtractionError):
    """End of input reached before the opening brace was matched."""


class ParseFailed(SubquestError):
    """The extraction/JSON stage of the parse pipeline failed.

    Carries the raw provider text and the stage ("extract" or "json") so
    failures can be logged and retried with full context.
    """

    def __init__(self, message: str, *, raw: str, stage: str):
        super().__init__(message)
        self.raw = raw
        self.stage = stage


class SchemaMismatch(SubquestError):
    """Parsed JSON does not satisfy the expected output schema."""


# --- orchestration ----------------------------------------------------------


class DecompositionFailed(SubquestError):
    """Sub-task generation failed after the retry budget.

    Carries the session id: on creation the session still exists with the
    root in error status, and on preference updates the context change was
    kept, so callers need the id to fetch the partial result.
    """

    def __init__(self, message: str, *, session_id: str | None = None):
        super().__init__(message)
        self.session_id = session_id


class GenerationFailed(SubquestError):
    """Options or summary generation failed."""


class CorruptLog(SubquestError):
    """Event log is unreadable: gap, unknown kind, or bad payload."""


class ScenarioInvalid(SubquestError):
    """Scenario file is unreadable or structurally invalid."""


class BindFailed(SubquestError):
    """The serve command could not bind its listen address."""
