"""Gateway: scripted provider, retries, HTTP provider against a stub server."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from conftest import FlakyProvider, rule, script_of
from subquest.errors import (
    ConfigInvalid,
    GatewayTimeout,
    NoScriptMatch,
    ProviderRefusal,
    TransportError,
)
from subquest.gateway import (
    DEFAULT_TEMPERATURE,
    Gateway,
    GatewayRequest,
    HttpProvider,
    ScriptedProvider,
    gateway_config_from,
    load_script,
    provider_from_config,
)
from subquest.prompts import PromptKind

TOKYO_DECOMPOSITION = (
    '{"sub_problems":["Decide on dates and duration",'
    '"Make hotel and flight arrangements","Check travel documents"]}'
)


def make_request(prompt="a prompt", kind=PromptKind.DECOMPOSE, **kwargs):
    defaults = dict(temperature=0.2, timeout=5.0, max_attempts=3)
    defaults.update(kwargs)
    return GatewayRequest(prompt=prompt, kind=kind, **defaults)


class TestScriptedProvider:
    def test_canned_decomposition(self):
        script = script_of(rule("decompose", "trip to Tokyo", TOKYO_DECOMPOSITION))
        gateway = Gateway(ScriptedProvider(script))
        response = gateway.complete(
            make_request("please decompose: I want to plan a trip to Tokyo")
        )
        assert response.raw_text == TOKYO_DECOMPOSITION
        assert response.attempt == 1
        assert response.provider_id == "scripted"

    def test_deterministic_across_runs(self):
        script = script_of(rule("decompose", "", '{"sub_problems":["a"]}'))
        provider = ScriptedProvider(script)
        first = provider.invoke(make_request("same prompt"))
        second = provider.invoke(make_request("same prompt"))
        assert first == second

    def test_first_matching_rule_wins(self):
        script = script_of(
            rule("decompose", "special", '{"sub_problems":["special"]}'),
            rule("decompose", "", '{"sub_problems":["generic"]}'),
        )
        provider = ScriptedProvider(script)
        assert "special" in provider.invoke(make_request("a special case"))
        assert "generic" in provider.invoke(make_request("anything else"))

    def test_kind_filters_rules(self):
        script = script_of(rule("options", "", '{"recommended":"x","options":[]}'))
        provider = ScriptedProvider(script)
        with pytest.raises(NoScriptMatch):
            provider.invoke(make_request("anything", kind=PromptKind.DECOMPOSE))

    def test_unmatched_prompt_is_explicit(self):
        script = script_of(rule("decompose", "only this", "{}"))
        with pytest.raises(NoScriptMatch):
            Gateway(ScriptedProvider(script)).complete(make_request("something else"))

    def test_slow_rule_times_out(self):
        script = script_of(rule("decompose", "", "{}", latency_ms=50))
        gateway = Gateway(ScriptedProvider(script))
        with pytest.raises(GatewayTimeout):
            gateway.complete(make_request(timeout=0.001))


class TestRetries:
    def test_attempts_equal_one_plus_failures(self):
        script = script_of(rule("decompose", "", "{}"))
        provider = FlakyProvider(ScriptedProvider(script), failures=2)
        gateway = Gateway(provider, backoff_base=0.001)
        response = gateway.complete(make_request(max_attempts=3))
        assert response.attempt == 3
        assert len(gateway.transcript) == 3

    def test_exhaustion_raises_transport_error(self):
        script = script_of(rule("decompose", "", "{}"))
        provider = FlakyProvider(ScriptedProvider(script), failures=5)
        gateway = Gateway(provider, backoff_base=0.001)
        with pytest.raises(TransportError):
            gateway.complete(make_request(max_attempts=2))
        assert len(gateway.transcript) == 2

    def test_timeout_does_not_retry(self):
        script = script_of(rule("decompose", "", "{}", latency_ms=50))
        gateway = Gateway(ScriptedProvider(script))
        with pytest.raises(GatewayTimeout):
            gateway.complete(make_request(timeout=0.001, max_attempts=3))
        assert len(gateway.transcript) == 1


class TestRequestValidation:
    def test_kind_temperatures(self):
        assert DEFAULT_TEMPERATURE[PromptKind.DECOMPOSE] == 0.2
        assert DEFAULT_TEMPERATURE[PromptKind.OPTIONS] == 0.7
        assert DEFAULT_TEMPERATURE[PromptKind.SUMMARIZE] == 0.3

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(temperature=2.5),
            dict(temperature=-0.1),
            dict(timeout=0),
            dict(max_attempts=0),
            dict(max_attempts=6),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            make_request(**kwargs)

    def test_rejects_empty_prompt(self):
        with pytest.raises(ValueError):
            make_request(prompt="")


class TestInFlightCap:
    def test_cap_of_one_serializes_calls(self):
        active = []
        peak = []
        lock = threading.Lock()

        class SlowProvider:
            provider_id = "slow"

            def invoke(self, request):
                with lock:
                    active.append(1)
                    peak.append(len(active))
                time.sleep(0.03)
                with lock:
                    active.pop()
                return "{}"

        gateway = Gateway(SlowProvider(), max_in_flight=1)
        threads = [
            threading.Thread(target=lambda: gateway.complete(make_request()))
            for _ in range(3)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert max(peak) == 1


class _StubHandler(BaseHTTPRequestHandler):
    captured: list[dict] = []
    behavior = "ok"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = self.rfile.read(length)
        type(self).captured.append(
            {
                "path": self.path,
                "auth": self.headers.get("Authorization"),
                "body": body,
            }
        )
        if type(self).behavior == "refuse":
            self.send_response(429)
            self.end_headers()
            self.wfile.write(b"rate limited")
            return
        if type(self).behavior == "garbage":
            payload = b"not json"
        else:
            content = json.loads(body)["messages"][0]["content"]
            payload = json.dumps(
                {"choices": [{"message": {"content": f"echo: {content}"}}]}
            ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.captured = []
    _StubHandler.behavior = "ok"
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestHttpProvider:
    def test_request_carries_model_token_and_unmodified_prompt(self, stub_server):
        provider = HttpProvider(base_url=stub_server, model="test-model", token="tok123")
        prompt = "line one\nline two with unicode é and {braces}"
        raw = provider.invoke(make_request(prompt, kind=PromptKind.OPTIONS, temperature=0.7))
        assert raw == f"echo: {prompt}"
        call = _StubHandler.captured[0]
        assert call["path"] == "/chat/completions"
        assert call["auth"] == "Bearer tok123"
        sent = json.loads(call["body"])
        assert sent["model"] == "test-model"
        assert sent["temperature"] == 0.7
        # Prompt bytes exactly as rendered; no mutation in transit.
        assert sent["messages"][0]["content"] == prompt
        provider.close()

    def test_refusal_status_maps_to_provider_refusal(self, stub_server):
        _StubHandler.behavior = "refuse"
        provider = HttpProvider(base_url=stub_server, model="m", token="t")
        with pytest.raises(ProviderRefusal, match="429"):
            provider.invoke(make_request())
        provider.close()

    def test_malformed_body_maps_to_provider_refusal(self, stub_server):
        _StubHandler.behavior = "garbage"
        provider = HttpProvider(base_url=stub_server, model="m", token="t")
        with pytest.raises(ProviderRefusal):
            provider.invoke(make_request())
        provider.close()

    def test_connection_refused_maps_to_transport_error(self):
        provider = HttpProvider(base_url="http://127.0.0.1:9", model="m", token="t")
        with pytest.raises(TransportError):
            provider.invoke(make_request(timeout=1.0))
        provider.close()


class TestConfig:
    def test_scripted_from_config(self, tmp_path):
        script_path = tmp_path / "rules.json"
        script_path.write_text(
            json.dumps(
                {"v": 1, "rules": [{"kind": "decompose", "match": "", "response": "{}"}]}
            )
        )
        provider = provider_from_config(
            {"SUBQUEST_PROVIDER": "scripted", "SUBQUEST_SCRIPT": str(script_path)}
        )
        assert provider.invoke(make_request()) == "{}"

    def test_http_requires_token(self):
        with pytest.raises(ConfigInvalid, match="API_TOKEN"):
            provider_from_config(
                {
                    "SUBQUEST_PROVIDER": "http",
                    "SUBQUEST_BASE_URL": "http://x",
                    "SUBQUEST_MODEL": "m",
                }
            )

    def test_unknown_provider_kind(self):
        with pytest.raises(ConfigInvalid):
            provider_from_config({"SUBQUEST_PROVIDER": "quantum"})

    def test_unreadable_script(self):
        with pytest.raises(ConfigInvalid):
            provider_from_config(
                {"SUBQUEST_PROVIDER": "scripted", "SUBQUEST_SCRIPT": "/nope/missing.json"}
            )

    def test_script_version_enforced(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"v": 2, "rules": []}')
        with pytest.raises(ConfigInvalid, match='"v"'):
            load_script(bad)

    def test_gateway_config_defaults_and_overrides(self):
        config = gateway_config_from({})
        assert config.timeout == 30.0
        assert config.max_in_flight == 4
        config = gateway_config_from(
            {"SUBQUEST_TIMEOUT": "2.5", "SUBQUEST_MAX_IN_FLIGHT": "2"}
        )
        assert config.timeout == 2.5
        assert config.max_in_flight == 2
        with pytest.raises(ConfigInvalid):
            gateway_config_from({"SUBQUEST_TIMEOUT": "banana"})
