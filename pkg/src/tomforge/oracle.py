"""Brute-force re-simulation used as ground truth in tests.

Unlike the incremental tracker, the oracle keeps one flat dictionary over
the *entire* chain universe (every adjacent-distinct agent chain of depth
1..4 crossed with every object) and re-derives each event's effect as a
filter over that universe. Slow and blunt on purpose.
"""

from __future__ import annotations

from .catalog import action_spec
from .epistemic import (
    BeliefState,
    IllegalActionError,
    MAX_CHAIN_DEPTH,
    StoryEvent,
    WorldSpec,
    WorldState,
)

Chain = tuple[str, ...]


def chain_universe(agents: list[str]) -> list[Chain]:
    """Every adjacent-distinct chain of depth 1..4 over the full cast."""
    chains: list[Chain] = [(a,) for a in sorted(agents)]
    frontier = list(chains)
    for _ in range(MAX_CHAIN_DEPTH - 1):
        nxt = []
        for chain in frontier:
            for agent in sorted(agents):
                if agent != chain[-1]:
                    nxt.append(chain + (agent,))
        chains.extend(nxt)
        frontier = nxt
    return chains


class _Sim:
    def __init__(self, spec: WorldSpec) -> None:
        self.spec = spec
        self.truth = dict(spec.object_placement)
        self.agent_room = dict(spec.agent_rooms)
        self.container_room = dict(spec.containers)
        self.universe = chain_universe(list(spec.agents))
        self.belief: dict[tuple[Chain, str], str] = {}
        self.written: set[tuple[Chain, str]] = set()
        for agent in spec.agents:
            for obj in spec.objects:
                if self._room_of(self.truth[obj]) == self.agent_room[agent]:
                    self.belief[((agent,), obj)] = self.truth[obj]

    def _room_of(self, location: str) -> str:
        if location in self.spec.rooms:
            return location
        return self.container_room[location]

    def _occupants(self, room: str) -> set[str]:
        return {a for a, r in self.agent_room.items() if r == room}

    def _floor_objects(self, room: str) -> dict[str, str]:
        return {o: loc for o, loc in self.truth.items() if loc == room}

    def _write(self, chain: Chain, obj: str, value: str) -> None:
        self.belief[(chain, obj)] = value
        self.written.add((chain, obj))

    def _write_subset(self, perceivers: set[str], learned: dict[str, str], skip: Chain | None = None) -> None:
        for chain in self.universe:
            if skip is not None and chain == skip:
                continue
            if not set(chain) <= perceivers:
                continue
            for obj, value in learned.items():
                self._write(chain, obj, value)

    def step(self, event: StoryEvent) -> None:
        name = action_spec(event.action_id).name
        actor = event.actor
        args = event.arguments
        here = self.agent_room[actor]

        if name == "enter_room":
            self.agent_room[actor] = args["room"]
            self._write_subset(self._occupants(args["room"]), self._floor_objects(args["room"]))
        elif name == "leave_room":
            self.agent_room[actor] = args["room"]
        elif name == "move_object":
            obj, dest = args["object"], args["location"]
            if self._room_of(self.truth[obj]) != here:
                raise IllegalActionError(f"{obj} out of reach of {actor}")
            source_room = self._room_of(self.truth[obj])
            self.truth[obj] = dest
            perceivers = self._occupants(source_room) | self._occupants(self._room_of(dest))
            self._write_subset(perceivers, {obj: dest})
        elif name == "hide_object":
            obj = args["object"]
            if self._room_of(self.truth[obj]) != here:
                raise IllegalActionError(f"{obj} out of reach of {actor}")
            self.truth[obj] = args["container"]
            self._write_subset({actor}, {obj: args["container"]})
        elif name == "place_object":
            obj = args["object"]
            if self._room_of(self.truth[obj]) != here:
                raise IllegalActionError(f"{obj} out of reach of {actor}")
            self.truth[obj] = args["container"]
            self._write_subset(self._occupants(here), {obj: args["container"]})
        elif name == "peek_into_container":
            container = args["container"]
            learned = {o: loc for o, loc in self.truth.items() if loc == container}
            self._write_subset({actor}, learned)
        elif name == "observe_room":
            self._write_subset(self._occupants(here), self._floor_objects(here))
        elif name == "witness_silently":
            self._write_subset({actor}, self._floor_objects(here))
        elif name == "tell_location_truthfully":
            value = self.belief[((actor,), args["object"])]
            self._write_subset({actor, args["hearer"]}, {args["object"]: value})
        elif name == "ask_location":
            value = self.belief[((args["target"],), args["object"])]
            self._write_subset({actor, args["target"]}, {args["object"]: value})
        elif name == "announce_publicly":
            value = self.belief[((actor,), args["object"])]
            self._write_subset(self._occupants(here), {args["object"]: value})
        elif name == "lie_about_location":
            self._write_subset(
                {actor, args["hearer"]}, {args["object"]: args["location"]}, skip=(actor,)
            )
        elif name == "one_way_mirror_observation":
            self._write_subset({actor}, self._floor_objects(args["room"]))
        elif name == "double_bluff":
            obj, claimed = args["object"], args["location"]
            mid, end = args["intermediary"], args["final_target"]
            self._write_subset({actor, mid}, {obj: claimed}, skip=(actor,))
            self._write_subset({mid, end}, {obj: claimed})
            self._write((actor, end), obj, claimed)
            self._write((actor, mid, end), obj, claimed)
        elif name == "fake_memory_implant":
            obj, planted = args["object"], args["location"]
            self._write((args["target"],), obj, planted)
            self._write((actor, args["target"]), obj, planted)
        else:  # pragma: no cover - catalog is closed
            raise IllegalActionError(f"oracle has no semantics for {name}")

    def export(self) -> tuple[WorldState, BeliefState]:
        world = WorldState(
            agents=frozenset(self.spec.agents),
            rooms=frozenset(self.spec.rooms),
            objects=frozenset(self.spec.objects),
            containers=dict(self.spec.containers),
            object_location=dict(self.truth),
            agent_location=dict(self.agent_room),
        )
        beliefs = BeliefState()
        for (chain, obj), value in sorted(self.belief.items()):
            beliefs.set(chain, obj, value, from_event=(chain, obj) in self.written)
        return world, beliefs


def replay_oracle(spec: WorldSpec, events: list[StoryEvent]) -> tuple[WorldState, BeliefState]:
    """Recompute the final state of a story from scratch."""
    sim = _Sim(spec)
    for event in events:
        sim.step(event)
    return sim.export()
