from __future__ import annotations

import json

import pytest
import requests

from graphgarden.gateway import (
    AuthError,
    CannedGateway,
    ChatMessage,
    ChatRequest,
    ExpectationFailed,
    FileScriptGateway,
    GatewayConfig,
    HttpGateway,
    ProtocolError,
    ScriptExhausted,
    Sampling,
    TransportError,
    build_gateway,
    request_for,
    scripted_mock,
)


def simple_request(text: str = "hi") -> ChatRequest:
    return ChatRequest((ChatMessage("user", text),))


class FakeResponse:
    def __init__(self, status_code: int, payload=None, text: str = ""):
        self.status_code = status_code
        self._payload = payload
        self.text = text or json.dumps(payload or {})

    def json(self):
        if self._payload is None:
            raise ValueError("no json")
        return self._payload


class FakeSession:
    """Scripted fault-injection transport."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls += 1
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def ok_payload(content: str = "OK"):
    return {
        "choices": [{"message": {"content": content}}],
        "usage": {"prompt_tokens": 3, "completion_tokens": 1},
    }


def make_gateway(outcomes, monkeypatch, max_attempts=3):
    monkeypatch.setenv("KEY_VAR", "secret")
    cfg = GatewayConfig(
        base_url="http://host/v1", api_key_env="KEY_VAR", max_attempts=max_attempts,
        backoff_base=0.25,
    )
    sleeps: list[float] = []
    gw = HttpGateway(cfg, sleeper=sleeps.append, session=FakeSession(outcomes))
    return gw, sleeps


def test_success_passthrough(monkeypatch):
    gw, sleeps = make_gateway([FakeResponse(200, ok_payload())], monkeypatch)
    response = gw.complete(simple_request())
    assert response.content == "OK"
    assert response.attempts == 1
    assert sleeps == []


def test_retry_on_500_then_success(monkeypatch):
    gw, sleeps = make_gateway(
        [FakeResponse(500), FakeResponse(500), FakeResponse(200, ok_payload())],
        monkeypatch,
    )
    response = gw.complete(simple_request())
    assert response.content == "OK"
    assert response.attempts == 3
    # backoff delays nondecreasing
    assert sleeps == sorted(sleeps) and len(sleeps) == 2


def test_transport_error_after_exhausted_retries(monkeypatch):
    gw, sleeps = make_gateway(
        [requests.ConnectionError("down")] * 3, monkeypatch, max_attempts=3
    )
    with pytest.raises(TransportError) as excinfo:
        gw.complete(simple_request())
    assert excinfo.value.attempts == 3
    assert len(sleeps) == 2


def test_missing_key_raises_auth_error_before_any_call(monkeypatch):
    monkeypatch.delenv("GPFO_API_KEY", raising=False)
    session = FakeSession([])
    cfg = GatewayConfig(base_url="http://host/v1")
    gw = HttpGateway(cfg, sleeper=lambda s: None, session=session)
    with pytest.raises(AuthError):
        gw.complete(simple_request())
    assert session.calls == 0


def test_401_is_auth_error_not_retried(monkeypatch):
    gw, sleeps = make_gateway([FakeResponse(401)], monkeypatch)
    with pytest.raises(AuthError):
        gw.complete(simple_request())
    assert sleeps == []


def test_malformed_payload_is_protocol_error(monkeypatch):
    gw, _ = make_gateway([FakeResponse(200, {"nope": 1})], monkeypatch)
    with pytest.raises(ProtocolError):
        gw.complete(simple_request())


def test_request_invariants():
    with pytest.raises(ValueError):
        ChatRequest(())
    with pytest.raises(ValueError):
        ChatRequest((ChatMessage("assistant", "a"), ChatMessage("assistant", "b")))
    with pytest.raises(ValueError):
        ChatMessage("robot", "x")


def test_scripted_mock_passthrough_and_transcript():
    mock = scripted_mock([("critique the thought process", "Needs depth")])
    response = mock.complete(simple_request("please critique the thought process now"))
    assert response.content == "Needs depth"
    assert len(mock.transcript) == 1


def test_scripted_mock_exhaustion():
    mock = scripted_mock([("a", "1")])
    mock.complete(simple_request("a"))
    with pytest.raises(ScriptExhausted):
        mock.complete(simple_request("a"))


def test_scripted_mock_expectation_failure_names_missing_text():
    mock = scripted_mock([("needle", "1")])
    with pytest.raises(ExpectationFailed) as excinfo:
        mock.complete(simple_request("haystack"))
    assert "needle" in str(excinfo.value)


def test_scripted_mock_requires_nonempty_script():
    with pytest.raises(ValueError):
        scripted_mock([])


def test_build_gateway_resolves_mock_schemes(tmp_path):
    assert isinstance(build_gateway(GatewayConfig(base_url="mock:")), CannedGateway)
    script = tmp_path / "script.json"
    script.write_text(json.dumps([{"expect": "x", "reply": "y"}]))
    gw = build_gateway(GatewayConfig(base_url=f"mock:{script}"))
    assert isinstance(gw, FileScriptGateway)
    assert gw.complete(simple_request("x")).content == "y"
    assert isinstance(
        build_gateway(GatewayConfig(base_url="http://h")), HttpGateway
    )


def test_canned_gateway_is_deterministic_and_structured():
    gw = CannedGateway()
    first = gw.complete(simple_request("Discuss bio-inspired materials."))
    second = gw.complete(simple_request("Discuss bio-inspired materials."))
    assert first.content == second.content
    assert "<|thinking|>" in first.content
    assert "**Knowledge Graph:**" in first.content
    other = gw.complete(simple_request("A different task"))
    assert other.content != first.content


def test_canned_gateway_followup_mentions_first_topic():
    gw = CannedGateway()
    prompt = (
        "Original list of topics/keywords:\n\nMusic, Material\n\nThe new question is:"
    )
    reply = gw.complete(simple_request(prompt)).content
    assert "Music" in reply


def test_request_for_profiles():
    cfg = GatewayConfig()
    cfg.agents["critic"] = cfg.agents["critic"].__class__(
        model_name="critic-model", sampling=Sampling(temperature=0.2)
    )
    req = request_for("critic", cfg, "hello")
    assert req.model_name == "critic-model"
    assert req.sampling.temperature == 0.2
    primed = request_for("reasoner", cfg, "t", primer="<|thinking|>")
    assert primed.messages[-1].role == "assistant"


def test_per_profile_endpoint_override(monkeypatch):
    from graphgarden.gateway import AgentProfile

    monkeypatch.setenv("KEY_VAR", "secret")
    cfg = GatewayConfig(base_url="http://main/v1", api_key_env="KEY_VAR")
    cfg.agents["critic"] = AgentProfile(base_url="http://critic-host/v1")

    seen_urls = []

    class UrlRecordingSession:
        def post(self, url, json=None, headers=None, timeout=None):
            seen_urls.append(url)
            return FakeResponse(200, ok_payload())

    gw = HttpGateway(cfg, sleeper=lambda s: None, session=UrlRecordingSession())
    gw.complete(request_for("reasoner", cfg, "x"))
    gw.complete(request_for("critic", cfg, "y"))
    assert seen_urls == [
        "http://main/v1/chat/completions",
        "http://critic-host/v1/chat/completions",
    ]


def test_config_from_file(tmp_path, monkeypatch):
    path = tmp_path / "gateway.json"
    path.write_text(
        json.dumps(
            {
                "base_url": "http://local:8000/v1",
                "api_key_env": "",
                "retry": {"max_attempts": 5, "backoff_base": 0.1},
                "agents": {
                    "reasoner": {"model": "graph-model", "temperature": 0.6},
                    "critic": {"model": "plain-model"},
                },
            }
        )
    )
    monkeypatch.delenv("GPFO_BASE_URL", raising=False)
    cfg = GatewayConfig.from_env(str(path))
    assert cfg.base_url == "http://local:8000/v1"
    assert cfg.max_attempts == 5
    assert cfg.profile("reasoner").model_name == "graph-model"
    assert cfg.profile("reasoner").sampling.temperature == 0.6


def test_trace_logging(tmp_path, monkeypatch):
    trace = tmp_path / "trace.jsonl"
    monkeypatch.setenv("KEY_VAR", "secret")
    cfg = GatewayConfig(
        base_url="http://host/v1", api_key_env="KEY_VAR", trace_path=str(trace)
    )
    gw = HttpGateway(cfg, sleeper=lambda s: None, session=FakeSession([FakeResponse(200, ok_payload())]))
    gw.complete(simple_request())
    lines = trace.read_text().strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["response"] == "OK"
