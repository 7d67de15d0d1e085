from __future__ import annotations

import numpy as np
import pytest

import tomforge as tf
from tomforge.actions import diff_object_locations


def run_script(spec: tf.WorldSpec, script: list[tuple[str, tuple[str, ...]]]) -> tf.StoryTrace:
    """Apply a list of (action name, binding) pairs and build the trace."""
    world, beliefs = tf.init_world(spec)
    events, transitions = [], []
    for i, (name, binding) in enumerate(script):
        action_id = tf.action_spec(name).action_id
        before = world
        world, beliefs, event = tf.apply(action_id, binding, world, beliefs, step_index=i)
        transitions.extend(diff_object_locations(before, world, i))
        events.append(event)
    return tf.StoryTrace(spec, events, world, beliefs, transitions)


def random_story(seed: int, length: int = 12, pool: tf.ContextPool | None = None) -> tf.StoryTrace:
    """A random legal story: uniform over the full legal (action, binding) set."""
    pool = pool or tf.ContextPool.default()
    rng = np.random.default_rng(seed)
    spec = pool.sample(rng)
    world, beliefs = tf.init_world(spec)
    events, transitions = [], []
    for step in range(length):
        legal = sorted(tf.legal_actions(world, beliefs))
        action_id, binding = legal[int(rng.integers(len(legal)))]
        before = world
        world, beliefs, event = tf.apply(action_id, binding, world, beliefs, step_index=step)
        transitions.extend(diff_object_locations(before, world, step))
        events.append(event)
    return tf.StoryTrace(spec, events, world, beliefs, transitions)


@pytest.fixture
def sally_anne_spec() -> tf.WorldSpec:
    return tf.WorldSpec(
        agents=("Sally", "Anne"),
        rooms=("parlor", "hallway"),
        containers={"basket": "parlor", "box": "parlor"},
        objects=("marble",),
        object_placement={"marble": "basket"},
        agent_rooms={"Sally": "parlor", "Anne": "parlor"},
    )


@pytest.fixture
def sally_anne_trace(sally_anne_spec) -> tf.StoryTrace:
    """The classic four-event false-belief script.

    Sally leaves, Anne hides the marble in the box, Sally returns and looks
    around; the marble is out of sight, so her belief stays stale.
    """
    return run_script(
        sally_anne_spec,
        [
            ("leave_room", ("Sally", "hallway")),
            ("hide_object", ("Anne", "marble", "box")),
            ("enter_room", ("Sally", "parlor")),
            ("observe_room", ("Sally",)),
        ],
    )


@pytest.fixture
def lie_spec() -> tf.WorldSpec:
    return tf.WorldSpec(
        agents=("Vera", "Max"),
        rooms=("den", "attic"),
        containers={"chest": "den", "crate": "attic"},
        objects=("gem",),
        object_placement={"gem": "chest"},
        agent_rooms={"Vera": "den", "Max": "den"},
    )


@pytest.fixture
def lie_trace(lie_spec) -> tf.StoryTrace:
    return run_script(lie_spec, [("lie_about_location", ("Vera", "Max", "gem", "crate"))])


@pytest.fixture
def bluff_spec() -> tf.WorldSpec:
    return tf.WorldSpec(
        agents=("Iris", "Paul", "Dana"),
        rooms=("den", "hall"),
        containers={"chest": "den", "basket": "hall"},
        objects=("coin",),
        object_placement={"coin": "den"},
        agent_rooms={"Iris": "den", "Paul": "den", "Dana": "den"},
    )


@pytest.fixture
def bluff_trace(bluff_spec) -> tf.StoryTrace:
    """Six-event double-bluff script: the coin is hidden, then the lie is
    relayed through Paul while Iris stays grounded in the truth."""
    return run_script(
        bluff_spec,
        [
            ("leave_room", ("Dana", "hall")),
            ("hide_object", ("Iris", "coin", "chest")),
            ("double_bluff", ("Iris", "Paul", "Dana", "coin", "basket")),
            ("enter_room", ("Dana", "den")),
            ("observe_room", ("Paul",)),
            ("witness_silently", ("Iris",)),
        ],
    )


@pytest.fixture
def two_agent_spec() -> tf.WorldSpec:
    """Two co-located agents, one object in reach, a second room available."""
    return tf.WorldSpec(
        agents=("Ana", "Ben"),
        rooms=("roomA", "roomB"),
        containers={"bin": "roomA"},
        objects=("ball",),
        object_placement={"ball": "roomA"},
        agent_rooms={"Ana": "roomA", "Ben": "roomA"},
    )
