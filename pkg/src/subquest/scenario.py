"""Scripted end-to-end scenarios, run in-process against a fresh service.

A scenario file pairs a provider script with ordered API-level steps and
assertions. Steps address children by 1-based index against the
then-current tree, so fixtures survive title edits and regeneration.

Scenario format (JSON, versioned):
    {
      "v": 1,
      "script": "relative/path/to/provider-script.json",
      "steps": [
        {"op": "create", "query": "...", "expect": {"children_count": 5}},
        {"op": "expand", "child": 2, "expect": {"options_at_least": 5}},
        {"op": "select", "child": 2, "indices": [0]},
        {"op": "preferences", "text": "...",
         "expect": {"child_titles_contain": ["..."]}},
        {"op": "summarize", "expect": {"summary_contains": ["..."]}}
      ]
    }

Supported expectations: children_count, child_titles_contain,
options_at_least, recommended_contains, summary_contains,
last_prompt_contains, selected.
"""

from __future__ import annotations

import json
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi.testclient import TestClient

from .api import create_app
from .errors import ScenarioInvalid, SubquestError
from .events import EventLog
from .gateway import Gateway, ScriptedProvider, load_script
from .service import SessionService

SCENARIO_VERSION = 1

_OPS = {"create", "expand", "select", "preferences", "summarize"}


@dataclass
class StepResult:
    index: int
    op: str
    ok: bool
    latency_ms: float
    detail: str = ""

    def line(self) -> str:
        mark = "ok" if self.ok else "FAIL"
        suffix = f"  {self.detail}" if self.detail else ""
        return f"step {self.index:2d} {self.op:<12s} {self.latency_ms:7.1f} ms  {mark}{suffix}"


@dataclass
class ScenarioReport:
    steps: list[StepResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(step.ok for step in self.steps)

    def lines(self) -> list[str]:
        out = [step.line() for step in self.steps]
        out.append("PASS" if self.ok else "FAIL")
        return out


def load_scenario(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioInvalid(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("v") != SCENARIO_VERSION:
        raise ScenarioInvalid(f"scenario must declare \"v\": {SCENARIO_VERSION}")
    if "script" not in doc or not isinstance(doc.get("steps"), list):
        raise ScenarioInvalid("scenario needs a \"script\" path and a \"steps\" list")
    for i, step in enumerate(doc["steps"]):
        if not isinstance(step, dict) or step.get("op") not in _OPS:
            raise ScenarioInvalid(f"step {i} has no valid \"op\"")
    return doc


class ScenarioRunner:
    def __init__(self, scenario_path: str | Path, *, data_dir: str | Path | None = None):
        self.scenario_path = Path(scenario_path)
        self.doc = load_scenario(self.scenario_path)
        script_path = self.scenario_path.parent / self.doc["script"]
        try:
            script = load_script(script_path)
        except SubquestError as exc:
            raise ScenarioInvalid(str(exc)) from exc
        store = EventLog(data_dir or tempfile.mkdtemp(prefix="subquest-scenario-"))
        self.gateway = Gateway(ScriptedProvider(script))
        self.service = SessionService(self.gateway, store)
        self.client = TestClient(create_app(self.service), raise_server_exceptions=False)
        self.session_id: str | None = None

    def run(self) -> ScenarioReport:
        report = ScenarioReport()
        for index, step in enumerate(self.doc["steps"], start=1):
            started = time.monotonic()
            try:
                payload = self._execute(step)
                failure = self._check(step.get("expect", {}), payload)
            except ScenarioInvalid:
                raise
            except Exception as exc:  # surfaced as a failed step, not a crash
                failure = f"{type(exc).__name__}: {exc}"
            latency_ms = (time.monotonic() - started) * 1000
            report.steps.append(
                StepResult(
                    index=index,
                    op=step["op"],
                    ok=failure is None,
                    latency_ms=latency_ms,
                    detail=failure or "",
                )
            )
            if failure is not None:
                break
        return report

    # --- step execution ----------------------------------------------------

    def _execute(self, step: dict) -> dict:
        op = step["op"]
        if op == "create":
            body = {"query": step["query"]}
            if "user_context" in step:
                body["user_context"] = step["user_context"]
            response = self.client.post("/sessions", json=body)
            self._raise_for(response)
            self.session_id = response.json()["session_id"]
            return response.json()
        if self.session_id is None:
            raise ScenarioInvalid(f"step {op!r} before any create step")
        if op == "expand":
            node_id = self._child_id(step["child"])
            params = {"force": "true"} if step.get("force") else {}
            response = self.client.post(
                f"/sessions/{self.session_id}/nodes/{node_id}/expand", params=params
            )
            self._raise_for(response)
            return response.json()
        if op == "select":
            node_id = self._child_id(step["child"])
            response = self.client.put(
                f"/sessions/{self.session_id}/nodes/{node_id}/selection",
                json={"indices": step["indices"]},
            )
            self._raise_for(response)
            return response.json()
        if op == "preferences":
            response = self.client.put(
                f"/sessions/{self.session_id}/preferences", json={"text": step["text"]}
            )
            self._raise_for(response)
            return response.json()["session"]
        if op == "summarize":
            response = self.client.post(f"/sessions/{self.session_id}/summary")
            self._raise_for(response)
            return response.json()
        raise ScenarioInvalid(f"unknown op {op!r}")

    def _child_id(self, index: int) -> str:
        response = self.client.get(f"/sessions/{self.session_id}")
        self._raise_for(response)
        children = response.json()["children"]
        if not 1 <= index <= len(children):
            raise AssertionError(f"child {index} out of range 1..{len(children)}")
        return children[index - 1]["id"]

    @staticmethod
    def _raise_for(response) -> None:
        if response.status_code >= 400:
            raise AssertionError(f"HTTP {response.status_code}: {response.text}")

    # --- assertions ----------------------------------------------------------

    def _check(self, expect: dict, payload: dict) -> str | None:
        session = self.client.get(f"/sessions/{self.session_id}").json()
        if "children_count" in expect:
            got = len(session["children"])
            if got != expect["children_count"]:
                return f"expected {expect['children_count']} children, got {got}"
        for needle in expect.get("child_titles_contain", []):
            titles = [child["title"] for child in session["children"]]
            if not any(needle in title for title in titles):
                return f"no child title contains {needle!r}; titles: {titles}"
        if "options_at_least" in expect:
            options = payload.get("options", {}).get("options", [])
            if len(options) < expect["options_at_least"]:
                return f"expected >= {expect['options_at_least']} options, got {len(options)}"
        if "recommended_contains" in expect:
            recommended = payload.get("options", {}).get("recommended", "")
            if expect["recommended_contains"] not in recommended:
                return f"recommended {recommended!r} lacks {expect['recommended_contains']!r}"
        for needle in expect.get("summary_contains", []):
            summary = payload.get("summary") or ""
            if needle not in summary:
                return f"summary lacks {needle!r}"
        for needle in expect.get("last_prompt_contains", []):
            transcript = self.gateway.transcript
            last_prompt = transcript[-1].prompt if transcript else ""
            if needle not in last_prompt:
                return f"last prompt lacks {needle!r}"
        if "selected" in expect:
            got = payload.get("node", {}).get("selected")
            if got != expect["selected"]:
                return f"expected selection {expect['selected']}, got {got}"
        return None


def run_scenario(path: str | Path) -> ScenarioReport:
    return ScenarioRunner(path).run()
