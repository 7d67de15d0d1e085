from __future__ import annotations

import os

import httpx
import pytest

import tomforge as tf
from tomforge.render import EndpointConfig, parse_rendered, render_llm, render_template
from tomforge.scoring import HardnessReport

from conftest import random_story, run_script


def binding_sequence(trace: tf.StoryTrace):
    return [
        (e.action_id, (e.actor, *[e.arguments[r] for r in tf.action_spec(e.action_id).role_slots]))
        for e in trace.events
    ]


def test_move_object_sentence_shape(two_agent_spec):
    trace = run_script(two_agent_spec, [("move_object", ("Ana", "ball", "bin"))])
    text = render_template(trace)
    assert text == "Ana moved the ball from the roomA to the bin."


def test_visibility_clause_names_the_unaware(sally_anne_trace):
    text = render_template(sally_anne_trace)
    lines = text.splitlines()
    assert "unnoticed by Sally" in lines[1]  # Anne hides while Sally is away


def test_render_is_deterministic():
    trace = random_story(seed=3, length=10)
    assert render_template(trace) == render_template(trace)


def test_round_trip_over_random_episodes():
    for seed in range(30):
        trace = random_story(seed=seed, length=12)
        assert parse_rendered(render_template(trace)) == binding_sequence(trace)


def test_parse_rejects_alien_lines():
    with pytest.raises(ValueError):
        parse_rendered("Something nobody ever wrote.")


def high_report() -> HardnessReport:
    return HardnessReport(True, 1.0, 1.0, 1.0, 1.0, 1.0, 4, 1.0)


def low_report() -> HardnessReport:
    return HardnessReport(True, 0.1, 0.1, 0.1, 0.1, 0.1, 2, 0.1)


def test_llm_gate_blocks_low_hardness(monkeypatch):
    monkeypatch.setenv("OSCT_API_KEY", "key")
    trace = random_story(seed=1, length=6)

    def handler(request):  # pragma: no cover - must never run
        raise AssertionError("below-gate trace was dispatched")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    result = render_llm(trace, low_report(), EndpointConfig(), client=client)
    assert result.mode == "template"
    assert result.fallback_reason == "below_hardness_gate"
    assert result.text == render_template(trace)


def test_llm_missing_credential_falls_back(monkeypatch):
    monkeypatch.delenv("OSCT_API_KEY", raising=False)
    trace = random_story(seed=2, length=6)
    result = render_llm(trace, high_report(), EndpointConfig())
    assert result.mode == "template"
    assert result.fallback_reason == "missing_credential"


def test_llm_success_returns_endpoint_prose(monkeypatch):
    monkeypatch.setenv("OSCT_API_KEY", "key")
    trace = random_story(seed=4, length=6)
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        seen["url"] = str(request.url)
        return httpx.Response(200, json={
            "choices": [{"message": {"content": "Rewritten tale."}}]
        })

    client = httpx.Client(transport=httpx.MockTransport(handler))
    result = render_llm(trace, high_report(), EndpointConfig(), client=client)
    assert result.mode == "llm"
    assert result.text == "Rewritten tale."
    assert seen["auth"] == "Bearer key"
    assert seen["url"].endswith("/chat/completions")
    assert result.request["messages"][1]["content"]
    assert result.response["choices"]


def test_llm_endpoint_failure_falls_back_with_reason(monkeypatch):
    monkeypatch.setenv("OSCT_API_KEY", "key")
    trace = random_story(seed=5, length=6)

    def handler(request):
        return httpx.Response(500, text="boom")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    result = render_llm(trace, high_report(), EndpointConfig(max_retries=2), client=client)
    assert result.mode == "template"
    assert result.fallback_reason.startswith("endpoint_failure")
    assert result.text == render_template(trace)


def test_endpoint_config_load(tmp_path):
    path = tmp_path / "endpoint.json"
    path.write_text('{"base_url": "http://localhost:9", "model": "m", "hardness_gate": 0.9}')
    config = EndpointConfig.load(path)
    assert config.base_url == "http://localhost:9"
    assert config.hardness_gate == 0.9
    assert config.api_key_env == "OSCT_API_KEY"
