"""Exact symbolic evaluation of the six cognitive story dimensions.

Every dimension is computed deterministically from the trace: the final
belief table and ground truth fully determine false-belief presence,
recursion depth, observer-self conflicts, and the three density scores.
The composite weighs observer-self conflict and depth at 70% combined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .catalog import COMMUNICATION, DECEPTIVE
from .epistemic import StoryTrace, UNKNOWN

W_OSCT = 0.40
W_DEPTH = 0.30
W_DEC = 0.15
W_SOC = 0.075
W_TEMP = 0.075

#: Event argument roles that name agents (for the active-cast count).
_AGENT_ROLES = ("hearer", "target", "intermediary", "final_target")


@dataclass(frozen=True)
class HardnessReport:
    """The six dimension scores, the validity gate, and the composite."""

    has_false_belief: bool
    s_osct: float
    s_depth: float
    s_dec: float
    s_soc: float
    s_temp: float
    max_tom_order: int
    composite_h: float

    @property
    def valid(self) -> bool:
        """Stories without any false belief are rejected as non-ToM."""
        return self.has_false_belief

    def to_dict(self) -> dict:
        return {
            "has_false_belief": self.has_false_belief,
            "valid": self.valid,
            "s_osct": self.s_osct,
            "s_depth": self.s_depth,
            "s_dec": self.s_dec,
            "s_soc": self.s_soc,
            "s_temp": self.s_temp,
            "max_tom_order": self.max_tom_order,
            "composite_h": self.composite_h,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HardnessReport":
        return cls(
            has_false_belief=data["has_false_belief"],
            s_osct=data["s_osct"],
            s_depth=data["s_depth"],
            s_dec=data["s_dec"],
            s_soc=data["s_soc"],
            s_temp=data["s_temp"],
            max_tom_order=data["max_tom_order"],
            composite_h=data["composite_h"],
        )


def detect_false_belief(trace: StoryTrace) -> bool:
    """True iff some agent's first-order belief contradicts ground truth."""
    world, beliefs = trace.final_world, trace.final_beliefs
    for agent in world.agents:
        for obj in world.objects:
            believed = beliefs.get((agent,), obj)
            if believed is not UNKNOWN and believed != world.object_location[obj]:
                return True
    return False


def tom_depth(trace: StoryTrace) -> tuple[int, float]:
    """Deepest belief chain written by an event, mapped linearly to [0, 1].

    Attributions that exist only from world initialization do not count;
    depth 1 is the floor, depth 4 scores 1.0.
    """
    max_order = 1
    for chain, _obj, _value in trace.final_beliefs.event_set_entries():
        if len(chain) > max_order:
            max_order = len(chain)
    return max_order, (max_order - 1) / 3.0


def deception_density(trace: StoryTrace) -> float:
    if len(trace) == 0:
        return 0.0
    deceptive = sum(1 for e in trace.events if DECEPTIVE in e.tags)
    return min(1.0, deceptive / len(trace))


def active_agents(trace: StoryTrace) -> frozenset[str]:
    """Agents that act in, or are a named party to, at least one event."""
    cast: set[str] = set()
    for event in trace.events:
        cast.add(event.actor)
        for role in _AGENT_ROLES:
            if role in event.arguments:
                cast.add(event.arguments[role])
    return frozenset(cast)


def social_complexity(trace: StoryTrace) -> float:
    cast = active_agents(trace)
    if not cast:
        return 0.0
    comm = sum(1 for e in trace.events if COMMUNICATION in e.tags)
    return min(1.0, comm / (2 * len(cast)))


def temporal_complexity(trace: StoryTrace, target: str) -> float:
    """Fraction of steps that moved an object the target ends up believing about."""
    if target not in trace.final_world.agents:
        raise ValueError(f"unknown target agent: {target!r}")
    if len(trace) == 0:
        return 0.0
    beliefs = trace.final_beliefs
    relevant = {
        obj for obj in trace.final_world.objects if beliefs.get((target,), obj) is not UNKNOWN
    }
    moves = sum(1 for t in trace.truth_transitions if t.object in relevant)
    return min(1.0, moves / len(trace))


def max_temporal_complexity(trace: StoryTrace) -> float:
    return max(
        (temporal_complexity(trace, agent) for agent in sorted(trace.final_world.agents)),
        default=0.0,
    )


def detect_osct(trace: StoryTrace) -> tuple[bool, float]:
    """Observer-self conflict: an observer who knows reality attributes a
    different belief to someone else.

    Confidence is the conflicting fraction of (observer, observed, object)
    triples where both the observer's own belief and the attribution are set.
    """
    conflicting, defined = _osct_counts(trace)
    confidence = conflicting / defined if defined else 0.0
    return conflicting > 0, confidence


def osct_triples(trace: StoryTrace) -> list[tuple[str, str, str]]:
    """The conflicting (observer, observed, object) triples, sorted."""
    world, beliefs = trace.final_world, trace.final_beliefs
    out = []
    for observer in sorted(world.agents):
        for observed in sorted(world.agents):
            if observed == observer:
                continue
            for obj in sorted(world.objects):
                own = beliefs.get((observer,), obj)
                attributed = beliefs.get((observer, observed), obj)
                if own is UNKNOWN or attributed is UNKNOWN:
                    continue
                if own == world.object_location[obj] and attributed != own:
                    out.append((observer, observed, obj))
    return out


def _osct_counts(trace: StoryTrace) -> tuple[int, int]:
    world, beliefs = trace.final_world, trace.final_beliefs
    conflicting = 0
    defined = 0
    for observer in world.agents:
        for observed in world.agents:
            if observed == observer:
                continue
            for obj in world.objects:
                own = beliefs.get((observer,), obj)
                attributed = beliefs.get((observer, observed), obj)
                if own is UNKNOWN or attributed is UNKNOWN:
                    continue
                defined += 1
                if own == world.object_location[obj] and attributed != own:
                    conflicting += 1
    return conflicting, defined


def composite_hardness(s_osct: float, s_depth: float, s_dec: float, s_soc: float, s_temp: float) -> float:
    for name, score in (("s_osct", s_osct), ("s_depth", s_depth), ("s_dec", s_dec),
                        ("s_soc", s_soc), ("s_temp", s_temp)):
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"{name} out of [0, 1]: {score}")
    return W_OSCT * s_osct + W_DEPTH * s_depth + W_DEC * s_dec + W_SOC * s_soc + W_TEMP * s_temp


def score_trace(trace: StoryTrace) -> HardnessReport:
    """Run all six evaluators and assemble the report."""
    has_fb = detect_false_belief(trace)
    max_order, s_depth = tom_depth(trace)
    s_dec = deception_density(trace)
    s_soc = social_complexity(trace)
    s_temp = max_temporal_complexity(trace)
    _present, s_osct = detect_osct(trace)
    return HardnessReport(
        has_false_belief=has_fb,
        s_osct=s_osct,
        s_depth=s_depth,
        s_dec=s_dec,
        s_soc=s_soc,
        s_temp=s_temp,
        max_tom_order=max_order,
        composite_h=composite_hardness(s_osct, s_depth, s_dec, s_soc, s_temp),
    )
