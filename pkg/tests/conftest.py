"""Shared fixtures: scripted providers, service factories, failure injection."""

from __future__ import annotations

import threading
from pathlib import Path

import pytest

from subquest.errors import TransportError
from subquest.events import EventLog
from subquest.gateway import (
    Gateway,
    GatewayRequest,
    ScenarioScript,
    ScriptRule,
    ScriptedProvider,
    load_script,
)
from subquest.prompts import PromptKind
from subquest.service import SessionService

FIXTURES = Path(__file__).parent / "fixtures"
FLIGHT_SCRIPT = FIXTURES / "flight_tokyo.script.json"
FLIGHT_SCENARIO = FIXTURES / "flight_tokyo.scenario.json"

TOKYO_QUERY = "I want to book a flight to Tokyo"
TODDLER_CONTEXT = "I am traveling with a toddler"


def rule(kind: str, match: str, response: str, latency_ms: int = 0) -> ScriptRule:
    return ScriptRule(
        kind=PromptKind(kind), match=match, response=response, latency=latency_ms / 1000.0
    )


def script_of(*rules: ScriptRule) -> ScenarioScript:
    return ScenarioScript(rules=tuple(rules))


# Permissive script for randomized/property runs: every kind has a
# catch-all rule, so any prompt gets a deterministic answer.
PERMISSIVE_RULES = (
    rule(
        "decompose",
        "",
        '{"sub_problems": ["Scope the problem", "Gather material", "Compare approaches", "Draft a plan"]}',
    ),
    rule(
        "options",
        "",
        '{"recommended": "the balanced default choice", "options": '
        '["a frugal variant", "a premium variant", "a fast variant", '
        '"a scenic variant", "a local favorite"]}',
    ),
    rule("summarize", "", "A short summary of the journey so far."),
)


class FlakyProvider:
    """Wraps a provider, injecting transport failures before delegating."""

    def __init__(self, inner, failures: int):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.remaining = failures

    def invoke(self, request: GatewayRequest) -> str:
        if self.remaining > 0:
            self.remaining -= 1
            raise TransportError("injected connection failure")
        return self.inner.invoke(request)


class StatusRecorder:
    """Thread-safe observer collecting per-node status sequences."""

    def __init__(self):
        self._lock = threading.Lock()
        self.transitions: list[tuple[str, str, str]] = []

    def __call__(self, session_id: str, node_id: str, status: str) -> None:
        with self._lock:
            self.transitions.append((session_id, node_id, status))

    def sequence(self, node_id: str) -> list[str]:
        with self._lock:
            return [s for _, n, s in self.transitions if n == node_id]


def make_service(
    tmp_path: Path,
    script: ScenarioScript | None = None,
    *,
    observer: StatusRecorder | None = None,
    backoff_base: float = 0.001,
) -> SessionService:
    if script is None:
        script = load_script(FLIGHT_SCRIPT)
    gateway = Gateway(ScriptedProvider(script), backoff_base=backoff_base)
    store = EventLog(tmp_path / "events")
    return SessionService(gateway, store, status_observer=observer)


@pytest.fixture
def flight_service(tmp_path) -> SessionService:
    return make_service(tmp_path)


@pytest.fixture
def recorder() -> StatusRecorder:
    return StatusRecorder()
