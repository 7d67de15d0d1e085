"""Legality predicates and state-update semantics for the 15 DSL actions.

Shared perception creates mutual knowledge: when a set of agents all
perceive a truth-affecting event, every belief chain threaded through
those perceivers (up to depth 4) is set to the new truth. The deceptive
operators override that rule with their own targeted writes and never
touch ground truth.

A binding is ``(actor, *role_values)`` with roles in catalog order.
"""

from __future__ import annotations

from typing import Iterator, Mapping

from .catalog import ActionSpec, action_spec, catalog
from .epistemic import (
    BeliefState,
    IllegalActionError,
    MAX_CHAIN_DEPTH,
    StoryEvent,
    TruthTransition,
    UNKNOWN,
    WorldState,
)

Binding = tuple[str, ...]


def chains_over(agents: frozenset[str] | set[str]) -> list[tuple[str, ...]]:
    """All adjacent-distinct chains of depth 1..4 over a perceiver set."""
    ordered = sorted(agents)
    chains: list[tuple[str, ...]] = []

    def extend(prefix: tuple[str, ...]) -> None:
        if prefix:
            chains.append(prefix)
        if len(prefix) == MAX_CHAIN_DEPTH:
            return
        for agent in ordered:
            if not prefix or prefix[-1] != agent:
                extend(prefix + (agent,))

    extend(())
    return chains


def _mutual_update(beliefs: BeliefState, perceivers: frozenset[str], updates: Mapping[str, str]) -> None:
    if not updates:
        return
    for chain in chains_over(perceivers):
        for obj, value in updates.items():
            beliefs.set(chain, obj, value)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise IllegalActionError(message)


def _known(beliefs: BeliefState, agent: str, obj: str) -> str:
    value = beliefs.get((agent,), obj)
    _require(value is not UNKNOWN, f"{agent} has no belief about {obj}")
    return value  # type: ignore[return-value]


def _check_ids(world: WorldState, actor: str, args: Mapping[str, str]) -> None:
    _require(actor in world.agents, f"unknown actor {actor!r}")
    for role, value in args.items():
        if role in ("hearer", "target", "intermediary", "final_target"):
            _require(value in world.agents, f"unknown agent {value!r} for {role}")
        elif role == "object":
            _require(value in world.objects, f"unknown object {value!r}")
        elif role == "room":
            _require(value in world.rooms, f"unknown room {value!r}")
        elif role == "container":
            _require(value in world.containers, f"unknown container {value!r}")
        elif role == "location":
            _require(
                value in world.rooms or value in world.containers,
                f"unknown location {value!r}",
            )


def check_legal(world: WorldState, beliefs: BeliefState, actor: str, spec: ActionSpec, args: Mapping[str, str]) -> None:
    """Raise IllegalActionError unless the binding satisfies the action's preconditions."""
    _check_ids(world, actor, args)
    here = world.agent_location[actor]
    name = spec.name

    if name in ("enter_room", "leave_room"):
        _require(args["room"] != here, f"{actor} is already in {here}")
    elif name == "move_object":
        obj, dest = args["object"], args["location"]
        _require(world.object_room(obj) == here, f"{obj} is not in {actor}'s room")
        _require(world.object_location[obj] != dest, f"{obj} is already at {dest}")
    elif name in ("hide_object", "place_object"):
        obj, container = args["object"], args["container"]
        _require(world.object_room(obj) == here, f"{obj} is not in {actor}'s room")
        _require(world.containers[container] == here, f"{container} is not in {actor}'s room")
        _require(world.object_location[obj] != container, f"{obj} is already in {container}")
    elif name == "peek_into_container":
        _require(world.containers[args["container"]] == here, "container out of reach")
    elif name in ("observe_room", "witness_silently"):
        pass
    elif name == "tell_location_truthfully":
        hearer = args["hearer"]
        _require(hearer != actor, "cannot tell oneself")
        _require(world.agent_location[hearer] == here, f"{hearer} is not present")
        _known(beliefs, actor, args["object"])
    elif name == "ask_location":
        target = args["target"]
        _require(target != actor, "cannot ask oneself")
        _require(world.agent_location[target] == here, f"{target} is not present")
        _known(beliefs, target, args["object"])
    elif name == "announce_publicly":
        _require(len(world.agents_in(here)) >= 2, "no audience present")
        _known(beliefs, actor, args["object"])
    elif name == "lie_about_location":
        hearer = args["hearer"]
        _require(hearer != actor, "cannot lie to oneself")
        _require(world.agent_location[hearer] == here, f"{hearer} is not present")
        believed = _known(beliefs, actor, args["object"])
        _require(args["location"] != believed, "claimed location must differ from the liar's belief")
    elif name == "one_way_mirror_observation":
        _require(args["room"] != here, "mirror observation is cross-room only")
    elif name == "double_bluff":
        mid, end = args["intermediary"], args["final_target"]
        _require(len({actor, mid, end}) == 3, "bluff needs three distinct agents")
        _require(world.agent_location[mid] == here, f"{mid} is not present to receive the lie")
        believed = _known(beliefs, actor, args["object"])
        _require(args["location"] != believed, "claimed location must differ from the actor's belief")
    elif name == "fake_memory_implant":
        target = args["target"]
        _require(target != actor, "cannot implant oneself")
        _require(world.agent_location[target] == here, f"{target} is not present")
    else:  # pragma: no cover - catalog is closed
        raise IllegalActionError(f"no semantics for {name}")


def _apply_semantics(
    world: WorldState, beliefs: BeliefState, actor: str, spec: ActionSpec, args: Mapping[str, str]
) -> tuple[WorldState, BeliefState, frozenset[str]]:
    """Apply a legal action to copies of the state; returns the perceiver set."""
    world = world.copy()
    beliefs = beliefs.copy()
    here = world.agent_location[actor]
    name = spec.name

    if name == "enter_room":
        world.agent_location[actor] = args["room"]
        visibility = world.agents_in(args["room"])
        _mutual_update(
            beliefs, visibility,
            {o: world.object_location[o] for o in world.visible_objects(args["room"])},
        )
    elif name == "leave_room":
        visibility = world.agents_in(here)
        world.agent_location[actor] = args["room"]
    elif name == "move_object":
        obj, dest = args["object"], args["location"]
        source_room = world.object_room(obj)
        world.object_location[obj] = dest
        visibility = world.agents_in(source_room) | world.agents_in(world.room_of(dest))
        _mutual_update(beliefs, visibility, {obj: dest})
    elif name == "hide_object":
        obj, container = args["object"], args["container"]
        world.object_location[obj] = container
        visibility = frozenset({actor})
        _mutual_update(beliefs, visibility, {obj: container})
    elif name == "place_object":
        obj, container = args["object"], args["container"]
        world.object_location[obj] = container
        visibility = world.agents_in(here)
        _mutual_update(beliefs, visibility, {obj: container})
    elif name == "peek_into_container":
        container = args["container"]
        visibility = frozenset({actor})
        for obj in world.objects_in_container(container):
            beliefs.set((actor,), obj, container)
    elif name == "observe_room":
        visibility = world.agents_in(here)
        _mutual_update(
            beliefs, visibility,
            {o: world.object_location[o] for o in world.visible_objects(here)},
        )
    elif name == "witness_silently":
        visibility = frozenset({actor})
        for obj in world.visible_objects(here):
            beliefs.set((actor,), obj, world.object_location[obj])
    elif name in ("tell_location_truthfully", "ask_location", "announce_publicly"):
        obj = args["object"]
        if name == "tell_location_truthfully":
            value = _known(beliefs, actor, obj)
            visibility = frozenset({actor, args["hearer"]})
        elif name == "ask_location":
            value = _known(beliefs, args["target"], obj)
            visibility = frozenset({actor, args["target"]})
        else:
            value = _known(beliefs, actor, obj)
            visibility = world.agents_in(here)
        _mutual_update(beliefs, visibility, {obj: value})
    elif name == "lie_about_location":
        obj, claimed = args["object"], args["location"]
        hearer = args["hearer"]
        visibility = frozenset({actor, hearer})
        for chain in chains_over(visibility):
            if chain == (actor,):
                continue  # the liar stays grounded in their own belief
            beliefs.set(chain, obj, claimed)
    elif name == "one_way_mirror_observation":
        visibility = frozenset({actor})
        watched = args["room"]
        for obj in world.visible_objects(watched):
            beliefs.set((actor,), obj, world.object_location[obj])
    elif name == "double_bluff":
        obj, claimed = args["object"], args["location"]
        mid, end = args["intermediary"], args["final_target"]
        visibility = frozenset({actor, mid, end})
        # Initial lie to the intermediary.
        for chain in chains_over(frozenset({actor, mid})):
            if chain != (actor,):
                beliefs.set(chain, obj, claimed)
        # Implicit sincere relay from intermediary to the final target.
        for chain in chains_over(frozenset({mid, end})):
            beliefs.set(chain, obj, claimed)
        # The actor anticipates the relay landing.
        beliefs.set((actor, end), obj, claimed)
        beliefs.set((actor, mid, end), obj, claimed)
    elif name == "fake_memory_implant":
        obj, planted = args["object"], args["location"]
        target = args["target"]
        visibility = frozenset({actor})  # the target never perceives the event
        beliefs.set((target,), obj, planted)
        beliefs.set((actor, target), obj, planted)
    else:  # pragma: no cover - catalog is closed
        raise IllegalActionError(f"no semantics for {name}")

    return world, beliefs, visibility


def apply(
    action_id: int,
    binding: Binding,
    world: WorldState,
    beliefs: BeliefState,
    *,
    step_index: int = 0,
) -> tuple[WorldState, BeliefState, StoryEvent]:
    """Apply a bound action, returning new state and the recorded event."""
    spec = action_spec(action_id)
    actor, role_values = binding[0], binding[1:]
    if len(role_values) != len(spec.role_slots):
        raise IllegalActionError(
            f"{spec.name} takes roles {spec.role_slots}, got {len(role_values)} values"
        )
    args = dict(zip(spec.role_slots, role_values))
    check_legal(world, beliefs, actor, spec, args)
    new_world, new_beliefs, visibility = _apply_semantics(world, beliefs, actor, spec, args)
    event = StoryEvent(
        step_index=step_index,
        action_id=spec.action_id,
        actor=actor,
        arguments=args,
        visibility=visibility,
        tags=spec.tags,
    )
    return new_world, new_beliefs, event


def apply_event(world: WorldState, beliefs: BeliefState, event: StoryEvent) -> tuple[WorldState, BeliefState]:
    """Re-apply a recorded event; semantics are recomputed from its arguments."""
    spec = action_spec(event.action_id)
    check_legal(world, beliefs, event.actor, spec, event.arguments)
    new_world, new_beliefs, _ = _apply_semantics(world, beliefs, event.actor, spec, event.arguments)
    return new_world, new_beliefs


def diff_object_locations(before: WorldState, after: WorldState, step_index: int) -> list[TruthTransition]:
    """Ground-truth object moves between two world states."""
    return [
        TruthTransition(step_index, obj, before.object_location[obj], after.object_location[obj])
        for obj in sorted(before.objects)
        if before.object_location[obj] != after.object_location[obj]
    ]


def _others_in_room(world: WorldState, actor: str) -> list[str]:
    here = world.agent_location[actor]
    return sorted(world.agents_in(here) - {actor})


def legal_bindings(action_id: int, world: WorldState, beliefs: BeliefState) -> list[Binding]:
    """All bindings of one action that are legal in the current state, sorted."""
    spec = action_spec(action_id)
    return sorted(_generate_bindings(spec, world, beliefs))


def legal_actions(world: WorldState, beliefs: BeliefState) -> set[tuple[int, Binding]]:
    """Every (action_id, binding) applicable in the current state."""
    out: set[tuple[int, Binding]] = set()
    for spec in catalog():
        for binding in _generate_bindings(spec, world, beliefs):
            out.add((spec.action_id, binding))
    return out


def _generate_bindings(spec: ActionSpec, world: WorldState, beliefs: BeliefState) -> Iterator[Binding]:
    name = spec.name
    agents = sorted(world.agents)
    locations = world.locations

    for actor in agents:
        here = world.agent_location[actor]
        if name in ("enter_room", "leave_room"):
            for room in sorted(world.rooms):
                if room != here:
                    yield (actor, room)
        elif name == "move_object":
            for obj in sorted(world.objects):
                if world.object_room(obj) != here:
                    continue
                current = world.object_location[obj]
                for dest in locations:
                    if dest != current:
                        yield (actor, obj, dest)
        elif name in ("hide_object", "place_object"):
            local_containers = sorted(c for c, r in world.containers.items() if r == here)
            for obj in sorted(world.objects):
                if world.object_room(obj) != here:
                    continue
                for container in local_containers:
                    if world.object_location[obj] != container:
                        yield (actor, obj, container)
        elif name == "peek_into_container":
            for container in sorted(c for c, r in world.containers.items() if r == here):
                yield (actor, container)
        elif name in ("observe_room", "witness_silently"):
            yield (actor,)
        elif name == "tell_location_truthfully":
            known = [o for o in sorted(world.objects) if beliefs.get((actor,), o) is not UNKNOWN]
            for hearer in _others_in_room(world, actor):
                for obj in known:
                    yield (actor, hearer, obj)
        elif name == "ask_location":
            for target in _others_in_room(world, actor):
                for obj in sorted(world.objects):
                    if beliefs.get((target,), obj) is not UNKNOWN:
                        yield (actor, target, obj)
        elif name == "announce_publicly":
            if _others_in_room(world, actor):
                for obj in sorted(world.objects):
                    if beliefs.get((actor,), obj) is not UNKNOWN:
                        yield (actor, obj)
        elif name == "lie_about_location":
            for hearer in _others_in_room(world, actor):
                for obj in sorted(world.objects):
                    believed = beliefs.get((actor,), obj)
                    if believed is UNKNOWN:
                        continue
                    for loc in locations:
                        if loc != believed:
                            yield (actor, hearer, obj, loc)
        elif name == "one_way_mirror_observation":
            for room in sorted(world.rooms):
                if room != here:
                    yield (actor, room)
        elif name == "double_bluff":
            for mid in _others_in_room(world, actor):
                for end in agents:
                    if end in (actor, mid):
                        continue
                    for obj in sorted(world.objects):
                        believed = beliefs.get((actor,), obj)
                        if believed is UNKNOWN:
                            continue
                        for loc in locations:
                            if loc != believed:
                                yield (actor, mid, end, obj, loc)
        elif name == "fake_memory_implant":
            for target in _others_in_room(world, actor):
                for obj in sorted(world.objects):
                    for loc in locations:
                        yield (actor, target, obj, loc)
