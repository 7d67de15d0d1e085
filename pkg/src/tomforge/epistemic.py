"""Ground-truth world model and nested belief tracking.

The world is a set of agents, rooms, containers, and objects. The only
propositions tracked are locative: "object o is at location l", where a
location is either a room or a container anchored in a room.

Beliefs are stored per agent chain. A chain ``(i,)`` holds agent i's own
first-order picture of object locations; a chain ``(i, j)`` holds what i
attributes to j; and so on up to length 4. Unset entries read back as
``UNKNOWN`` rather than raising, so question generation can query any
chain totally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class WorldError(ValueError):
    """A world spec or placement is malformed."""


class ChainError(ValueError):
    """A belief chain is empty, too deep, or has adjacent duplicates."""


class IllegalActionError(ValueError):
    """An event's preconditions do not hold in the current state."""


MAX_CHAIN_DEPTH = 4


class _Unknown:
    """Singleton belief value for unset chains; falsy and JSON-null."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Unknown"

    def __bool__(self) -> bool:
        return False


UNKNOWN = _Unknown()

#: A believed location: a room/container id, or UNKNOWN.
BeliefValue = Union[str, _Unknown]

#: An agent chain, innermost observer first: (i, j) reads "i's model of j".
Chain = tuple[str, ...]


def normalize_chain(chain: Iterable[str]) -> Chain:
    """Collapse adjacent duplicate agents: (i, i, j) becomes (i, j).

    An agent's model of its own belief is its belief, so duplicate-adjacent
    links add no depth.
    """
    out: list[str] = []
    for agent in chain:
        if not out or out[-1] != agent:
            out.append(agent)
    return tuple(out)


def validate_chain(chain: Chain) -> None:
    if len(chain) == 0:
        raise ChainError("belief chain is empty")
    if len(chain) > MAX_CHAIN_DEPTH:
        raise ChainError(f"belief chain longer than {MAX_CHAIN_DEPTH}: {chain!r}")
    for a, b in zip(chain, chain[1:]):
        if a == b:
            raise ChainError(f"adjacent duplicate agent in chain: {chain!r}")


@dataclass(frozen=True)
class Proposition:
    """A locative atom: ``object`` is at ``location``."""

    object: str
    location: str


@dataclass(frozen=True)
class WorldSpec:
    """Fully concrete description of an initial world.

    All sampling (names, layouts, placements) happens upstream in the
    context pool; a spec materializes deterministically.
    """

    agents: tuple[str, ...]
    rooms: tuple[str, ...]
    containers: Mapping[str, str]  # container id -> room id
    objects: tuple[str, ...]
    object_placement: Mapping[str, str]  # object id -> room or container id
    agent_rooms: Mapping[str, str]  # agent id -> room id

    def to_dict(self) -> dict:
        return {
            "agents": list(self.agents),
            "rooms": list(self.rooms),
            "containers": dict(self.containers),
            "objects": list(self.objects),
            "object_placement": dict(self.object_placement),
            "agent_rooms": dict(self.agent_rooms),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorldSpec":
        return cls(
            agents=tuple(data["agents"]),
            rooms=tuple(data["rooms"]),
            containers=dict(data["containers"]),
            objects=tuple(data["objects"]),
            object_placement=dict(data["object_placement"]),
            agent_rooms=dict(data["agent_rooms"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "WorldSpec":
        return cls.from_dict(json.loads(text))


@dataclass
class WorldState:
    """Ground truth: who is where, and where every object sits."""

    agents: frozenset[str]
    rooms: frozenset[str]
    objects: frozenset[str]
    containers: dict[str, str]  # container -> room
    object_location: dict[str, str]  # object -> room or container
    agent_location: dict[str, str]  # agent -> room

    def copy(self) -> "WorldState":
        return WorldState(
            agents=self.agents,
            rooms=self.rooms,
            objects=self.objects,
            containers=dict(self.containers),
            object_location=dict(self.object_location),
            agent_location=dict(self.agent_location),
        )

    @property
    def locations(self) -> list[str]:
        """All valid object locations (rooms then containers), sorted."""
        return sorted(self.rooms) + sorted(self.containers)

    def room_of(self, location: str) -> str:
        """Resolve a location (room or container) to its room."""
        if location in self.rooms:
            return location
        if location in self.containers:
            return self.containers[location]
        raise WorldError(f"unknown location: {location!r}")

    def object_room(self, obj: str) -> str:
        return self.room_of(self.object_location[obj])

    def agents_in(self, room: str) -> frozenset[str]:
        return frozenset(a for a in self.agents if self.agent_location[a] == room)

    def visible_objects(self, room: str) -> frozenset[str]:
        """Objects lying directly in the room (contents of containers are hidden)."""
        return frozenset(o for o in self.objects if self.object_location[o] == room)

    def objects_in_container(self, container: str) -> frozenset[str]:
        return frozenset(o for o in self.objects if self.object_location[o] == container)

    def check_invariants(self) -> None:
        for obj, loc in self.object_location.items():
            if obj not in self.objects:
                raise WorldError(f"placed object not declared: {obj!r}")
            self.room_of(loc)
        for agent, room in self.agent_location.items():
            if agent not in self.agents:
                raise WorldError(f"located agent not declared: {agent!r}")
            if room not in self.rooms:
                raise WorldError(f"agent {agent!r} in unknown room {room!r}")
        missing_objs = self.objects - set(self.object_location)
        if missing_objs:
            raise WorldError(f"objects without a location: {sorted(missing_objs)}")
        missing_agents = self.agents - set(self.agent_location)
        if missing_agents:
            raise WorldError(f"agents without a room: {sorted(missing_agents)}")
        for container, room in self.containers.items():
            if room not in self.rooms:
                raise WorldError(f"container {container!r} in unknown room {room!r}")

    def to_dict(self) -> dict:
        return {
            "agents": sorted(self.agents),
            "rooms": sorted(self.rooms),
            "objects": sorted(self.objects),
            "containers": dict(sorted(self.containers.items())),
            "object_location": dict(sorted(self.object_location.items())),
            "agent_location": dict(sorted(self.agent_location.items())),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorldState":
        return cls(
            agents=frozenset(data["agents"]),
            rooms=frozenset(data["rooms"]),
            objects=frozenset(data["objects"]),
            containers=dict(data["containers"]),
            object_location=dict(data["object_location"]),
            agent_location=dict(data["agent_location"]),
        )


_CHAIN_SEP = "|"


class BeliefState:
    """Attributed object locations per agent chain, depth 1..4.

    Writes performed while applying events are remembered separately from
    writes done at world initialization; the depth scorer only counts
    event-driven attributions.
    """

    def __init__(self) -> None:
        self._table: dict[Chain, dict[str, str]] = {}
        self._event_set: set[tuple[Chain, str]] = set()

    def copy(self) -> "BeliefState":
        dup = BeliefState()
        dup._table = {chain: dict(layer) for chain, layer in self._table.items()}
        dup._event_set = set(self._event_set)
        return dup

    def get(self, chain: Chain, obj: str) -> BeliefValue:
        layer = self._table.get(chain)
        if layer is None:
            return UNKNOWN
        return layer.get(obj, UNKNOWN)

    def set(self, chain: Iterable[str], obj: str, value: str, *, from_event: bool = True) -> None:
        chain = normalize_chain(chain)
        validate_chain(chain)
        self._table.setdefault(chain, {})[obj] = value
        if from_event:
            self._event_set.add((chain, obj))

    def entries(self) -> Iterator[tuple[Chain, str, str]]:
        """All set (chain, object, value) triples, in canonical order."""
        for chain in sorted(self._table):
            layer = self._table[chain]
            for obj in sorted(layer):
                yield chain, obj, layer[obj]

    def event_set_entries(self) -> Iterator[tuple[Chain, str, str]]:
        """Set triples whose current value was written by an event."""
        for chain, obj, value in self.entries():
            if (chain, obj) in self._event_set:
                yield chain, obj, value

    def agents_touched(self) -> frozenset[str]:
        return frozenset(a for chain in self._table for a in chain)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BeliefState):
            return NotImplemented
        return self._table == other._table and self._event_set == other._event_set

    def to_dict(self) -> dict:
        table = {
            _CHAIN_SEP.join(chain): dict(sorted(layer.items()))
            for chain, layer in sorted(self._table.items())
        }
        event_set = sorted(_CHAIN_SEP.join(chain) + ":" + obj for chain, obj in self._event_set)
        return {"table": table, "event_set": event_set}

    @classmethod
    def from_dict(cls, data: Mapping) -> "BeliefState":
        beliefs = cls()
        for chain_key, layer in data["table"].items():
            chain = tuple(chain_key.split(_CHAIN_SEP))
            beliefs._table[chain] = dict(layer)
        for key in data["event_set"]:
            chain_key, obj = key.rsplit(":", 1)
            beliefs._event_set.add((tuple(chain_key.split(_CHAIN_SEP)), obj))
        return beliefs


def query_belief(beliefs: BeliefState, chain: Iterable[str], prop: Union[Proposition, str]) -> BeliefValue:
    """Read the location attributed along ``chain`` for an object.

    ``prop`` may be a Proposition (its subject is used) or a bare object id.
    Unset chains read back as UNKNOWN; malformed chains raise ChainError.
    """
    chain = tuple(chain)
    validate_chain(chain)
    obj = prop.object if isinstance(prop, Proposition) else prop
    return beliefs.get(chain, obj)


@dataclass(frozen=True)
class StoryEvent:
    """One applied action: who did what, with what, and who perceived it."""

    step_index: int
    action_id: int
    actor: str
    arguments: Mapping[str, str]  # role -> id, roles fixed per action
    visibility: frozenset[str]
    tags: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "action_id": self.action_id,
            "actor": self.actor,
            "arguments": dict(self.arguments),
            "visibility": sorted(self.visibility),
            "tags": sorted(self.tags),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StoryEvent":
        return cls(
            step_index=data["step_index"],
            action_id=data["action_id"],
            actor=data["actor"],
            arguments=dict(data["arguments"]),
            visibility=frozenset(data["visibility"]),
            tags=frozenset(data["tags"]),
        )


@dataclass(frozen=True)
class TruthTransition:
    """A ground-truth object move caused by an event."""

    step_index: int
    object: str
    source: str
    destination: str

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "object": self.object,
            "source": self.source,
            "destination": self.destination,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TruthTransition":
        return cls(data["step_index"], data["object"], data["source"], data["destination"])


@dataclass
class StoryTrace:
    """The full record of one story: spec, events, and final state.

    Carries everything the scorers and question generator need without
    re-simulation; `truth_transitions` logs every ground-truth object move.
    """

    world_spec: WorldSpec
    events: list[StoryEvent]
    final_world: WorldState
    final_beliefs: BeliefState
    truth_transitions: list[TruthTransition] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "world_spec": self.world_spec.to_dict(),
            "events": [e.to_dict() for e in self.events],
            "final_world": self.final_world.to_dict(),
            "final_beliefs": self.final_beliefs.to_dict(),
            "truth_transitions": [t.to_dict() for t in self.truth_transitions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "StoryTrace":
        return cls(
            world_spec=WorldSpec.from_dict(data["world_spec"]),
            events=[StoryEvent.from_dict(e) for e in data["events"]],
            final_world=WorldState.from_dict(data["final_world"]),
            final_beliefs=BeliefState.from_dict(data["final_beliefs"]),
            truth_transitions=[TruthTransition.from_dict(t) for t in data["truth_transitions"]],
        )

    @classmethod
    def from_json(cls, text: str) -> "StoryTrace":
        return cls.from_dict(json.loads(text))


def init_world(spec: WorldSpec) -> tuple[WorldState, BeliefState]:
    """Materialize a world spec and seed first-order beliefs.

    Agents know the initial location of every object placed in their own
    room (containers included: they watched the setup). Objects elsewhere
    start UNKNOWN. No higher-order attributions are made at init.
    """
    for name, seq in (("agents", spec.agents), ("rooms", spec.rooms), ("objects", spec.objects)):
        if len(set(seq)) != len(seq):
            raise WorldError(f"duplicate ids in {name}: {seq!r}")
    if len(spec.agents) < 2:
        raise WorldError("need at least 2 agents")
    if len(spec.rooms) < 2:
        raise WorldError("need at least 2 rooms")
    if len(spec.objects) < 1:
        raise WorldError("need at least 1 object")
    all_ids = set(spec.agents) | set(spec.rooms) | set(spec.objects) | set(spec.containers)
    if len(all_ids) != len(spec.agents) + len(spec.rooms) + len(spec.objects) + len(spec.containers):
        raise WorldError("agent/room/object/container ids overlap")

    world = WorldState(
        agents=frozenset(spec.agents),
        rooms=frozenset(spec.rooms),
        objects=frozenset(spec.objects),
        containers=dict(spec.containers),
        object_location=dict(spec.object_placement),
        agent_location=dict(spec.agent_rooms),
    )
    world.check_invariants()

    beliefs = BeliefState()
    for agent in spec.agents:
        room = world.agent_location[agent]
        for obj in spec.objects:
            if world.object_room(obj) == room:
                beliefs.set((agent,), obj, world.object_location[obj], from_event=False)
    return world, beliefs
