"""Prose rendering: deterministic templates, plus an optional LLM pass.

The template renderer is the offline path and the ground for the
round-trip guarantee: every rendered line parses back to its event's
action and role bindings. The LLM renderer talks to an OpenAI-compatible
chat-completions endpoint and is gated to high-hardness traces; any
failure falls back to the template text with a recorded reason.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import httpx

from .catalog import action_spec, catalog
from .epistemic import StoryTrace
from .scoring import HardnessReport

_CLAUSE = ", unnoticed by {names}"
_CLAUSE_RE = r"(?:, unnoticed by [^.]+)?"

# One sentence template per action. Role slots appear in catalog order so
# a parsed match rebuilds the binding directly.
_TEMPLATES: dict[str, str] = {
    "enter_room": "{actor} entered the {room}",
    "leave_room": "{actor} slipped away to the {room}",
    "move_object": "{actor} moved the {object} from the {source} to the {location}",
    "hide_object": "{actor} hid the {object} inside the {container}",
    "place_object": "{actor} put the {object} into the {container}",
    "peek_into_container": "{actor} peeked into the {container}",
    "observe_room": "{actor} took a long look around the room",
    "tell_location_truthfully": "{actor} told {hearer} honestly where the {object} was",
    "ask_location": "{actor} asked {target} where the {object} was",
    "announce_publicly": "{actor} announced to the whole room where the {object} was",
    "witness_silently": "{actor} watched everything without a word",
    "lie_about_location": "{actor} lied to {hearer} and claimed the {object} was at the {location}",
    "one_way_mirror_observation": "{actor} studied the {room} through the one-way mirror",
    "double_bluff": (
        "{actor} fed {intermediary} a false story that the {object} was at the {location}, "
        "counting on it reaching {final_target}"
    ),
    "fake_memory_implant": (
        "{actor} planted a false memory in {target} that the {object} was at the {location}"
    ),
}

_TOKEN = r"[\w'-]+"


def _compile(template: str, roles: tuple[str, ...]) -> re.Pattern:
    pattern = re.escape(template)
    for slot in ("actor", "source", *roles):
        pattern = pattern.replace(
            re.escape("{%s}" % slot), f"(?P<{slot}>{_TOKEN})"
        )
    return re.compile(pattern + _CLAUSE_RE + r"\.")


_PARSERS: list[tuple[int, tuple[str, ...], re.Pattern]] = [
    (spec.action_id, spec.role_slots, _compile(_TEMPLATES[spec.name], spec.role_slots))
    for spec in catalog()
]


def render_template(trace: StoryTrace) -> str:
    """Deterministic prose: one sentence per event, in story order."""
    cast = set(trace.world_spec.agents)
    sources = {t.step_index: t.source for t in trace.truth_transitions}
    lines = []
    for event in trace.events:
        spec = action_spec(event.action_id)
        fields = {"actor": event.actor, **event.arguments}
        if "{source}" in _TEMPLATES[spec.name]:
            fields["source"] = sources.get(event.step_index, "somewhere")
        sentence = _TEMPLATES[spec.name].format(**fields)
        unaware = sorted(cast - set(event.visibility))
        if unaware:
            sentence += _CLAUSE.format(names=_join_names(unaware))
        lines.append(sentence + ".")
    return "\n".join(lines)


def _join_names(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def parse_rendered(text: str) -> list[tuple[int, tuple[str, ...]]]:
    """Recover the (action_id, binding) sequence from template prose."""
    out: list[tuple[int, tuple[str, ...]]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        for action_id, roles, pattern in _PARSERS:
            match = pattern.fullmatch(line)
            if match:
                binding = (match.group("actor"), *(match.group(r) for r in roles))
                out.append((action_id, binding))
                break
        else:
            raise ValueError(f"unparseable story line: {line!r}")
    return out


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach the chat-completions endpoint."""

    base_url: str = "https://openrouter.ai/api/v1"
    model: str = "meta-llama/llama-3.3-70b-instruct"
    timeout: float = 30.0
    max_retries: int = 2
    hardness_gate: float = 0.85
    api_key_env: str = "OSCT_API_KEY"

    @classmethod
    def from_dict(cls, data: Mapping) -> "EndpointConfig":
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "EndpointConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class RenderResult:
    text: str
    mode: str  # "template" | "llm"
    fallback_reason: str | None = None
    request: dict | None = None
    response: dict | None = None


_SYSTEM_PROMPT = (
    "You rewrite symbolic multi-agent story traces as natural English prose. "
    "Keep every event, in order. Preserve who perceives what: deceptions, "
    "private observations, and information asymmetries must stay explicit. "
    "Do not add events, beliefs, or outcomes that are not in the trace."
)


def render_llm(
    trace: StoryTrace,
    report: HardnessReport,
    config: EndpointConfig,
    client: httpx.Client | None = None,
) -> RenderResult:
    """LLM prose for high-hardness traces; template fallback otherwise.

    Traces at or below the hardness gate are never dispatched. The symbolic
    trace stays the source of truth regardless of what comes back.
    """
    template_text = render_template(trace)
    if report.composite_h <= config.hardness_gate:
        return RenderResult(template_text, "template", fallback_reason="below_hardness_gate")
    api_key = os.environ.get(config.api_key_env, "")
    if not api_key:
        return RenderResult(template_text, "template", fallback_reason="missing_credential")

    request_body = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": _SYSTEM_PROMPT},
            {"role": "user", "content": json.dumps(trace.to_dict(), sort_keys=True)},
        ],
    }
    owns_client = client is None
    if owns_client:
        client = httpx.Client(timeout=config.timeout)
    try:
        last_error = "unknown"
        for _attempt in range(max(1, config.max_retries)):
            try:
                response = client.post(
                    config.base_url.rstrip("/") + "/chat/completions",
                    json=request_body,
                    headers={"Authorization": f"Bearer {api_key}"},
                )
                response.raise_for_status()
                payload = response.json()
                text = payload["choices"][0]["message"]["content"]
                return RenderResult(text, "llm", request=request_body, response=payload)
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
        return RenderResult(
            template_text, "template",
            fallback_reason=f"endpoint_failure: {last_error}", request=request_body,
        )
    finally:
        if owns_client:
            client.close()
