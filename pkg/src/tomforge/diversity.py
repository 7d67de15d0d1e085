"""Mode-collapse auditing: action coverage, uniqueness, cast diversity.

Story uniqueness is judged on a name-canonicalized signature, so two
episodes that differ only by who is called what count as duplicates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .catalog import N_ACTIONS, action_spec
from .env import ToMStoryEnv
from .epistemic import StoryTrace


def structural_signature(trace: StoryTrace) -> str:
    """Digest of the action/role structure with entities slot-indexed.

    Agents, objects, rooms, and containers are renamed to positional slots
    in order of first appearance, so consistent renamings collide.
    """
    spec = trace.world_spec
    kind = {}
    for agent in spec.agents:
        kind[agent] = "A"
    for room in spec.rooms:
        kind[room] = "R"
    for container in spec.containers:
        kind[container] = "C"
    for obj in spec.objects:
        kind[obj] = "O"

    slots: dict[str, str] = {}
    counters: dict[str, int] = {"A": 0, "R": 0, "C": 0, "O": 0}

    def canonical(entity: str) -> str:
        if entity not in slots:
            prefix = kind[entity]
            slots[entity] = f"{prefix}{counters[prefix]}"
            counters[prefix] += 1
        return slots[entity]

    sequence = []
    for event in trace.events:
        roles = action_spec(event.action_id).role_slots
        sequence.append(
            (
                event.action_id,
                canonical(event.actor),
                tuple(canonical(event.arguments[r]) for r in roles),
            )
        )
    blob = json.dumps(sequence, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class DiversityThresholds:
    min_action_coverage: float = 0.8
    min_uniqueness: float = 1.0
    min_character_diversity: float = 0.6


@dataclass
class DiversityReport:
    episodes: int
    action_coverage: float
    per_action_counts: dict[str, int]
    unique_story_count: int
    length_mean: float
    length_std: float
    character_diversity: float
    unique_characters: int
    total_character_slots: int
    thresholds: DiversityThresholds
    verdict: str

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "action_coverage": self.action_coverage,
            "per_action_counts": dict(self.per_action_counts),
            "unique_story_count": self.unique_story_count,
            "length_mean": self.length_mean,
            "length_std": self.length_std,
            "character_diversity": self.character_diversity,
            "unique_characters": self.unique_characters,
            "total_character_slots": self.total_character_slots,
            "thresholds": {
                "min_action_coverage": self.thresholds.min_action_coverage,
                "min_uniqueness": self.thresholds.min_uniqueness,
                "min_character_diversity": self.thresholds.min_character_diversity,
            },
            "verdict": self.verdict,
        }

    def to_table(self) -> str:
        rows = [
            f"episodes                {self.episodes}",
            f"action coverage         {self.action_coverage:.3f}",
            f"unique stories          {self.unique_story_count}/{self.episodes}",
            f"story length            {self.length_mean:.2f} ± {self.length_std:.2f}",
            f"character diversity     {self.character_diversity:.3f} "
            f"({self.unique_characters}/{self.total_character_slots})",
            f"verdict                 {self.verdict}",
        ]
        width = max(len(r) for r in rows)
        bar = "-" * width
        return "\n".join([bar, *rows, bar])


def compute_report(traces: list[StoryTrace], thresholds: DiversityThresholds) -> DiversityReport:
    counts = {spec.name: 0 for spec in map(action_spec, range(N_ACTIONS))}
    signatures = set()
    lengths = []
    characters: set[str] = set()
    slots = 0
    for trace in traces:
        for event in trace.events:
            counts[action_spec(event.action_id).name] += 1
        signatures.add(structural_signature(trace))
        lengths.append(len(trace.events))
        characters.update(trace.world_spec.agents)
        slots += len(trace.world_spec.agents)

    coverage = sum(1 for c in counts.values() if c > 0) / N_ACTIONS
    uniqueness = len(signatures) / len(traces) if traces else 0.0
    diversity = len(characters) / slots if slots else 0.0
    verdict = (
        "PASS"
        if coverage >= thresholds.min_action_coverage
        and uniqueness >= thresholds.min_uniqueness
        and diversity >= thresholds.min_character_diversity
        else "FAIL"
    )
    return DiversityReport(
        episodes=len(traces),
        action_coverage=coverage,
        per_action_counts=counts,
        unique_story_count=len(signatures),
        length_mean=float(np.mean(lengths)) if lengths else 0.0,
        length_std=float(np.std(lengths)) if lengths else 0.0,
        character_diversity=diversity,
        unique_characters=len(characters),
        total_character_slots=slots,
        thresholds=thresholds,
        verdict=verdict,
    )


def randomization_test(
    policy,
    env: ToMStoryEnv,
    episodes: int = 20,
    eval_epsilon: float = 0.05,
    seed: int = 0,
    thresholds: DiversityThresholds | None = None,
) -> DiversityReport:
    """Roll independent episodes and audit their structural diversity."""
    thresholds = thresholds or DiversityThresholds()
    rng = np.random.default_rng(seed)
    traces = []
    for i in range(episodes):
        obs = env.reset(seed=seed + i)
        done = False
        info: Mapping = {}
        while not done:
            action = policy.act(obs, eval_epsilon, rng)
            obs, _reward, done, info = env.step(action)
        traces.append(info["trace"])
    return compute_report(traces, thresholds)
