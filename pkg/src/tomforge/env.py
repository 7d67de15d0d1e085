"""The episodic story-generation MDP.

Each episode samples a world, rolls a fixed number of discrete action
choices, and pays a single terminal reward blending story hardness,
action diversity, and validity under the current curriculum phase. The
policy picks only the action id; a seeded binder resolves arguments
uniformly over the legal bindings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import actions
from .catalog import N_ACTIONS
from .contexts import ContextPool
from .epistemic import (
    BeliefState,
    StoryEvent,
    StoryTrace,
    TruthTransition,
    UNKNOWN,
    WorldState,
    init_world,
)
from .scoring import HardnessReport, score_trace

OBSERVATION_DIM = 256

# Fixed observation layout.
_SLOT_PREV_REPORT = 3  # six slots: gate, osct, depth, dec, soc, temp
_SLOT_ACTION_HIST = 9  # 15 slots
_SLOT_DIVERGENCE = 24  # the rest: belief-divergence summary, zero-padded
_MAX_ENCODED_AGENTS = 8

DEFAULT_PHASE_WEIGHTS = (
    (0.2, 0.2, 0.6),
    (0.5, 0.2, 0.3),
    (0.8, 0.1, 0.1),
)


@dataclass(frozen=True)
class CurriculumPhase:
    """Reward blend for one training phase; weights sum to 1."""

    phase: int
    w_hardness: float
    w_diversity: float
    w_validity: float


def curriculum_weights(
    global_step: int,
    total_steps: int,
    schedule: tuple[tuple[float, float, float], ...] = DEFAULT_PHASE_WEIGHTS,
) -> CurriculumPhase:
    """Phase for a training position: thirds of the budget, validity first."""
    if not 0 <= global_step <= total_steps:
        raise ValueError(f"global_step {global_step} outside [0, {total_steps}]")
    index = min(len(schedule) - 1, (len(schedule) * global_step) // max(total_steps, 1))
    w_h, w_d, w_v = schedule[index]
    return CurriculumPhase(phase=index + 1, w_hardness=w_h, w_diversity=w_d, w_validity=w_v)


@dataclass(frozen=True)
class EnvConfig:
    episode_length: int = 15
    illegal_penalty: float = 0.05
    gate_failure_reward: float = -1.0
    phase_weights: tuple[tuple[float, float, float], ...] = DEFAULT_PHASE_WEIGHTS
    curriculum_total_steps: int | None = None  # None: stay in `fixed_phase`
    fixed_phase: int = 3

    @classmethod
    def from_dict(cls, data: Mapping) -> "EnvConfig":
        kwargs = dict(data)
        if "phase_weights" in kwargs:
            kwargs["phase_weights"] = tuple(tuple(w) for w in kwargs["phase_weights"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "EnvConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class _Episode:
    world_spec: object
    world: WorldState
    beliefs: BeliefState
    events: list[StoryEvent] = field(default_factory=list)
    transitions: list[TruthTransition] = field(default_factory=list)
    steps_taken: int = 0
    action_counts: np.ndarray = field(default_factory=lambda: np.zeros(N_ACTIONS))
    touched_agents: set = field(default_factory=set)
    touched_objects: set = field(default_factory=set)
    done: bool = False


class ToMStoryEnv:
    """Discrete 15-way MDP over the story DSL with terminal scoring."""

    def __init__(
        self,
        pool: ContextPool | None = None,
        config: EnvConfig | None = None,
        seed: int | None = None,
    ) -> None:
        self.pool = pool or ContextPool.default()
        self.config = config or EnvConfig()
        self._seed_seq = np.random.SeedSequence(seed)
        self._rng = np.random.default_rng(self._seed_seq.spawn(1)[0])
        self.global_step = 0
        self.phase = self._phase_for(0)
        self._prev_report: HardnessReport | None = None
        self._episode: _Episode | None = None

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    def _phase_for(self, global_step: int) -> CurriculumPhase:
        total = self.config.curriculum_total_steps
        if total is None:
            w_h, w_d, w_v = self.config.phase_weights[self.config.fixed_phase - 1]
            return CurriculumPhase(self.config.fixed_phase, w_h, w_d, w_v)
        return curriculum_weights(min(global_step, total), total, self.config.phase_weights)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is None:
            episode_seed = self._seed_seq.spawn(1)[0]
        else:
            episode_seed = np.random.SeedSequence(seed)
        self._rng = np.random.default_rng(episode_seed)
        spec = self.pool.sample(self._rng)
        world, beliefs = init_world(spec)
        self._episode = _Episode(world_spec=spec, world=world, beliefs=beliefs)
        self.phase = self._phase_for(self.global_step)
        return self._observation()

    def step(self, action_index: int) -> tuple[np.ndarray, float, bool, dict]:
        ep = self._episode
        if ep is None:
            raise RuntimeError("reset() the environment before stepping")
        if ep.done:
            raise RuntimeError("episode is done; call reset()")
        if not 0 <= action_index < N_ACTIONS:
            raise ValueError(f"action index out of range: {action_index}")

        info: dict = {"illegal": False}
        bindings = actions.legal_bindings(action_index, ep.world, ep.beliefs)
        reward = 0.0
        if not bindings:
            info["illegal"] = True
            reward -= self.config.illegal_penalty
        else:
            binding = bindings[int(self._rng.integers(len(bindings)))]
            before = ep.world
            ep.world, ep.beliefs, event = actions.apply(
                action_index, binding, ep.world, ep.beliefs, step_index=len(ep.events)
            )
            ep.transitions.extend(
                actions.diff_object_locations(before, ep.world, event.step_index)
            )
            ep.events.append(event)
            ep.action_counts[action_index] += 1
            ep.touched_agents.add(event.actor)
            for role in ("hearer", "target", "intermediary", "final_target"):
                if role in event.arguments:
                    ep.touched_agents.add(event.arguments[role])
            if "object" in event.arguments:
                ep.touched_objects.add(event.arguments["object"])
            info["event"] = event

        ep.steps_taken += 1
        self.global_step += 1
        if ep.steps_taken >= self.config.episode_length:
            ep.done = True
            trace = self.episode_trace()
            report = score_trace(trace)
            reward += self._terminal_reward(report, trace)
            reward = float(np.clip(reward, -1.0, 1.0))
            self._prev_report = report
            info["report"] = report
            info["trace"] = trace

        return self._observation(), float(reward), ep.done, info

    def _terminal_reward(self, report: HardnessReport, trace: StoryTrace) -> float:
        if not report.valid:
            return self.config.gate_failure_reward
        distinct = len({e.action_id for e in trace.events})
        diversity = distinct / N_ACTIONS
        return (
            self.phase.w_hardness * report.composite_h
            + self.phase.w_diversity * diversity
            + self.phase.w_validity * 1.0
        )

    def episode_trace(self) -> StoryTrace:
        ep = self._episode
        if ep is None or not ep.done:
            raise RuntimeError("episode_trace() is only available once the episode is done")
        return StoryTrace(
            world_spec=ep.world_spec,
            events=list(ep.events),
            final_world=ep.world.copy(),
            final_beliefs=ep.beliefs.copy(),
            truth_transitions=list(ep.transitions),
        )

    def last_report(self) -> HardnessReport | None:
        return self._prev_report

    def _observation(self) -> np.ndarray:
        ep = self._episode
        assert ep is not None
        obs = np.zeros(OBSERVATION_DIM)
        obs[0] = ep.steps_taken / self.config.episode_length
        obs[1] = min(1.0, len(ep.touched_agents) / self.pool.max_agents)
        obs[2] = min(1.0, len(ep.touched_objects) / self.pool.max_objects)
        if self._prev_report is not None:
            rep = self._prev_report
            obs[_SLOT_PREV_REPORT : _SLOT_PREV_REPORT + 6] = (
                float(rep.has_false_belief), rep.s_osct, rep.s_depth,
                rep.s_dec, rep.s_soc, rep.s_temp,
            )
        obs[_SLOT_ACTION_HIST : _SLOT_ACTION_HIST + N_ACTIONS] = (
            ep.action_counts / self.config.episode_length
        )
        self._write_divergence_summary(obs, ep.world, ep.beliefs)
        return obs

    def _write_divergence_summary(self, obs: np.ndarray, world: WorldState, beliefs: BeliefState) -> None:
        """Fixed-layout belief-divergence features.

        Per agent: fraction of objects believed somewhere other than the
        truth. Per unordered pair: fraction where both first-order beliefs
        are set and differ. Per ordered pair: fraction where the attributed
        belief is set and differs from the observer's own.
        """
        cast = sorted(world.agents)[:_MAX_ENCODED_AGENTS]
        objects = sorted(world.objects)
        n_obj = max(1, len(objects))
        cursor = _SLOT_DIVERGENCE

        for agent in cast:
            wrong = sum(
                1
                for o in objects
                if beliefs.get((agent,), o) not in (UNKNOWN, world.object_location[o])
            )
            obs[cursor] = wrong / n_obj
            cursor += 1
        cursor = _SLOT_DIVERGENCE + _MAX_ENCODED_AGENTS

        for i, a in enumerate(cast):
            for b in cast[i + 1 :]:
                differ = sum(
                    1
                    for o in objects
                    if beliefs.get((a,), o) is not UNKNOWN
                    and beliefs.get((b,), o) is not UNKNOWN
                    and beliefs.get((a,), o) != beliefs.get((b,), o)
                )
                obs[cursor] = differ / n_obj
                cursor += 1
        cursor = _SLOT_DIVERGENCE + _MAX_ENCODED_AGENTS + (_MAX_ENCODED_AGENTS * (_MAX_ENCODED_AGENTS - 1)) // 2

        for a in cast:
            for b in cast:
                if a == b:
                    continue
                conflicted = sum(
                    1
                    for o in objects
                    if beliefs.get((a, b), o) is not UNKNOWN
                    and beliefs.get((a,), o) is not UNKNOWN
                    and beliefs.get((a, b), o) != beliefs.get((a,), o)
                )
                obs[cursor] = conflicted / n_obj
                cursor += 1
