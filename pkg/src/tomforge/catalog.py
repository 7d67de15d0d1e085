"""The fixed 15-action alphabet: ids, role slots, and tags.

Semantics live in `actions`; this module is pure metadata so that the
independent replay oracle can share names without sharing update code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

PHYSICAL = "physical"
COMMUNICATION = "communication"
DECEPTIVE = "deceptive"
OBSERVATION = "observation"


@dataclass(frozen=True)
class ActionSpec:
    """Static description of one catalog action."""

    action_id: int
    name: str
    role_slots: tuple[str, ...]  # parameter roles beyond the actor, in order
    tags: frozenset[str]

    @property
    def deceptive(self) -> bool:
        return DECEPTIVE in self.tags

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "name": self.name,
            "role_slots": list(self.role_slots),
            "tags": sorted(self.tags),
            "deceptive": self.deceptive,
        }


def _spec(action_id: int, name: str, roles: tuple[str, ...], *tags: str) -> ActionSpec:
    return ActionSpec(action_id, name, roles, frozenset(tags))


_CATALOG: tuple[ActionSpec, ...] = (
    _spec(0, "enter_room", ("room",), PHYSICAL),
    _spec(1, "leave_room", ("room",), PHYSICAL),
    _spec(2, "move_object", ("object", "location"), PHYSICAL),
    _spec(3, "hide_object", ("object", "container"), PHYSICAL),
    _spec(4, "place_object", ("object", "container"), PHYSICAL),
    _spec(5, "peek_into_container", ("container",), OBSERVATION),
    _spec(6, "observe_room", (), OBSERVATION),
    _spec(7, "tell_location_truthfully", ("hearer", "object"), COMMUNICATION),
    _spec(8, "ask_location", ("target", "object"), COMMUNICATION),
    _spec(9, "announce_publicly", ("object",), COMMUNICATION),
    _spec(10, "witness_silently", (), OBSERVATION),
    _spec(11, "lie_about_location", ("hearer", "object", "location"), COMMUNICATION, DECEPTIVE),
    _spec(12, "one_way_mirror_observation", ("room",), OBSERVATION),
    _spec(13, "double_bluff", ("intermediary", "final_target", "object", "location"), COMMUNICATION, DECEPTIVE),
    _spec(14, "fake_memory_implant", ("target", "object", "location"), DECEPTIVE),
)

N_ACTIONS = len(_CATALOG)

_BY_NAME = {spec.name: spec for spec in _CATALOG}


def catalog() -> list[ActionSpec]:
    """The fixed catalog, ids dense 0..14."""
    return list(_CATALOG)


def action_spec(action: int | str) -> ActionSpec:
    if isinstance(action, str):
        try:
            return _BY_NAME[action]
        except KeyError:
            raise KeyError(f"unknown action name: {action!r}") from None
    if not 0 <= action < N_ACTIONS:
        raise KeyError(f"action id out of range: {action!r}")
    return _CATALOG[action]


def catalog_json() -> str:
    """The catalog as a JSON reference document for dataset consumers."""
    return json.dumps([spec.to_dict() for spec in _CATALOG], indent=2, sort_keys=True)
