"""Provider-agnostic completion gateway.

Two providers ship: an HTTP provider speaking the common chat-completions
shape, and a scripted provider that replays canned responses matched by
(kind, prompt substring) for offline, deterministic runs. The Gateway wraps
a provider with transport retries, an in-flight cap, and a transcript of
every prompt sent, which tests use to assert propagation byte-for-byte.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from .errors import (
    ConfigInvalid,
    GatewayTimeout,
    NoScriptMatch,
    ProviderRefusal,
    TransportError,
)
from .prompts import PromptKind

SCRIPT_VERSION = 1

# Decomposition and summary want stability; options benefit from variety.
DEFAULT_TEMPERATURE: dict[PromptKind, float] = {
    PromptKind.DECOMPOSE: 0.2,
    PromptKind.OPTIONS: 0.7,
    PromptKind.SUMMARIZE: 0.3,
}

DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_MAX_IN_FLIGHT = 4


@dataclass(frozen=True)
class GatewayRequest:
    prompt: str
    kind: PromptKind
    temperature: float
    timeout: float = DEFAULT_TIMEOUT
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt is empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 1 <= self.max_attempts <= 5:
            raise ValueError("max_attempts must be in 1..5")


@dataclass(frozen=True)
class GatewayResponse:
    raw_text: str
    latency: float
    attempt: int
    provider_id: str


@dataclass(frozen=True)
class GatewayCall:
    """One provider invocation, recorded before the attempt runs."""

    kind: PromptKind
    prompt: str
    attempt: int


class Provider(Protocol):
    provider_id: str

    def invoke(self, request: GatewayRequest) -> str: ...


@dataclass(frozen=True)
class ScriptRule:
    kind: PromptKind
    match: str
    response: str
    latency: float = 0.0


@dataclass(frozen=True)
class ScenarioScript:
    """Ordered rules; the first (kind, substring) match wins."""

    rules: tuple[ScriptRule, ...]

    def find(self, kind: PromptKind, prompt: str) -> ScriptRule | None:
        for rule in self.rules:
            if rule.kind is kind and rule.match in prompt:
                return rule
        return None


def load_script(path: str | Path) -> ScenarioScript:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read script {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"script {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("v") != SCRIPT_VERSION:
        raise ConfigInvalid(f"script {path} must declare \"v\": {SCRIPT_VERSION}")
    rules = []
    for i, entry in enumerate(doc.get("rules", [])):
        try:
            rules.append(
                ScriptRule(
                    kind=PromptKind(entry["kind"]),
                    match=entry["match"],
                    response=entry["response"],
                    latency=entry.get("latency_ms", 0) / 1000.0,
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigInvalid(f"script rule {i} invalid: {exc}") from exc
    if not rules:
        raise ConfigInvalid(f"script {path} has no rules")
    return ScenarioScript(rules=tuple(rules))


class ScriptedProvider:
    """Deterministic provider: identical (script, prompt) gives identical text."""

    def __init__(self, script: ScenarioScript, provider_id: str = "scripted"):
        self.script = script
        self.provider_id = provider_id

    def invoke(self, request: GatewayRequest) -> str:
        rule = self.script.find(request.kind, request.prompt)
        if rule is None:
            head = request.prompt.splitlines()[0] if request.prompt else ""
            raise NoScriptMatch(
                f"no {request.kind.value} rule matches prompt starting {head!r}"
            )
        if rule.latency > 0:
            # Simulate slowness, but never sleep past the caller's budget.
            time.sleep(min(rule.latency, request.timeout))
            if rule.latency > request.timeout:
                raise GatewayTimeout(
                    f"scripted latency {rule.latency}s exceeds timeout {request.timeout}s"
                )
        return rule.response


class HttpProvider:
    """Chat-completions-style HTTP provider."""

    def __init__(self, base_url: str, model: str, token: str):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token = token
        self.provider_id = f"http:{model}"
        self._client = httpx.Client()

    def invoke(self, request: GatewayRequest) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.token}"},
                timeout=request.timeout,
            )
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code >= 400:
            raise ProviderRefusal(
                f"provider returned {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise ProviderRefusal(f"malformed provider response: {exc}") from exc

    def close(self) -> None:
        self._client.close()


class Gateway:
    """Retry, concurrency-cap, and transcript wrapper around a provider.

    Only connection-level failures retry (exponential backoff); timeouts and
    refusals surface immediately. The transcript records the exact prompt of
    every attempt, so callers can verify prompts were sent unmodified.
    """

    def __init__(
        self,
        provider: Provider,
        *,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        backoff_base: float = 0.05,
    ):
        self.provider = provider
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._backoff_base = backoff_base
        self._transcript: list[GatewayCall] = []
        self._transcript_lock = threading.Lock()

    @property
    def transcript(self) -> tuple[GatewayCall, ...]:
        with self._transcript_lock:
            return tuple(self._transcript)

    def calls_for(self, kind: PromptKind) -> tuple[GatewayCall, ...]:
        return tuple(call for call in self.transcript if call.kind is kind)

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        last_error: TransportError | None = None
        with self._slots:
            for attempt in range(1, request.max_attempts + 1):
                with self._transcript_lock:
                    self._transcript.append(
                        GatewayCall(kind=request.kind, prompt=request.prompt, attempt=attempt)
                    )
                started = time.monotonic()
                try:
                    raw = self.provider.invoke(request)
                except TransportError as exc:
                    last_error = exc
                    if attempt < request.max_attempts:
                        time.sleep(self._backoff_base * (2 ** (attempt - 1)))
                    continue
                return GatewayResponse(
                    raw_text=raw,
                    latency=time.monotonic() - started,
                    attempt=attempt,
                    provider_id=self.provider.provider_id,
                )
        raise TransportError(
            f"gave up after {request.max_attempts} attempts: {last_error}"
        )

    def request(
        self,
        prompt: str,
        kind: PromptKind,
        *,
        timeout: float = DEFAULT_TIMEOUT,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    ) -> GatewayRequest:
        """Request with the per-kind default temperature."""
        return GatewayRequest(
            prompt=prompt,
            kind=kind,
            temperature=DEFAULT_TEMPERATURE[kind],
            timeout=timeout,
            max_attempts=max_attempts,
        )


@dataclass(frozen=True)
class GatewayConfig:
    timeout: float = DEFAULT_TIMEOUT
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT


ENV_PREFIX = "SUBQUEST_"


def provider_from_config(config: Mapping[str, str]) -> Provider:
    """Build a provider from an env-style mapping.

    Keys (all SUBQUEST_-prefixed): PROVIDER = http | scripted; http needs
    BASE_URL, MODEL, API_TOKEN; scripted needs SCRIPT (path to rules file).
    """
    kind = config.get(f"{ENV_PREFIX}PROVIDER", "").strip().lower()
    if kind == "scripted":
        path = config.get(f"{ENV_PREFIX}SCRIPT", "")
        if not path:
            raise ConfigInvalid("scripted provider needs SUBQUEST_SCRIPT")
        return ScriptedProvider(load_script(path))
    if kind == "http":
        base_url = config.get(f"{ENV_PREFIX}BASE_URL", "")
        model = config.get(f"{ENV_PREFIX}MODEL", "")
        token = config.get(f"{ENV_PREFIX}API_TOKEN", "")
        if not base_url:
            raise ConfigInvalid("http provider needs SUBQUEST_BASE_URL")
        if not model:
            raise ConfigInvalid("http provider needs SUBQUEST_MODEL")
        if not token:
            raise ConfigInvalid("http provider needs SUBQUEST_API_TOKEN")
        return HttpProvider(base_url=base_url, model=model, token=token)
    raise ConfigInvalid(
        f"SUBQUEST_PROVIDER must be 'http' or 'scripted', got {kind!r}"
    )


def gateway_config_from(config: Mapping[str, str]) -> GatewayConfig:
    def _positive_float(key: str, default: float) -> float:
        raw = config.get(f"{ENV_PREFIX}{key}")
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigInvalid(f"{ENV_PREFIX}{key} must be a number: {raw!r}") from exc
        if value <= 0:
            raise ConfigInvalid(f"{ENV_PREFIX}{key} must be positive")
        return value

    return GatewayConfig(
        timeout=_positive_float("TIMEOUT", DEFAULT_TIMEOUT),
        max_attempts=int(_positive_float("MAX_ATTEMPTS", DEFAULT_MAX_ATTEMPTS)),
        max_in_flight=int(_positive_float("MAX_IN_FLIGHT", DEFAULT_MAX_IN_FLIGHT)),
    )
