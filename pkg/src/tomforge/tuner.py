"""Seeded random search over the 11 DQN hyperparameters.

Divergence is a recorded trial outcome, not an error: trials that blow up
are kept in the report with their reason, mirroring how unstable
configurations (small replay buffers with aggressive learning rates)
should surface during tuning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .contexts import ContextPool
from .dqn import DqnConfig, evaluate_policy, train
from .env import EnvConfig, ToMStoryEnv


@dataclass(frozen=True)
class SearchSpace:
    """Ranges for every tunable parameter; log-scale where it matters."""

    learning_rate: tuple[float, float] = (1e-5, 1e-2)  # log-uniform
    buffer_size: tuple[int, ...] = (1_000, 5_000, 10_000, 50_000, 100_000)
    gamma: tuple[float, float] = (0.85, 0.999)
    tau: tuple[float, float] = (0.001, 0.1)  # log-uniform
    epsilon_start: tuple[float, float] = (0.9, 1.0)
    epsilon_end: tuple[float, float] = (0.01, 0.1)
    exploration_fraction: tuple[float, float] = (0.1, 0.5)
    batch_size: tuple[int, ...] = (32, 64, 128)
    train_frequency: tuple[int, ...] = (1, 4, 8, 16)
    gradient_steps: tuple[int, int] = (1, 10)
    hidden_width: tuple[int, ...] = (64, 128, 256)

    def sample(self, rng: np.random.Generator) -> DqnConfig:
        def log_uniform(low: float, high: float) -> float:
            return float(np.exp(rng.uniform(np.log(low), np.log(high))))

        width = int(rng.choice(self.hidden_width))
        return DqnConfig(
            learning_rate=log_uniform(*self.learning_rate),
            buffer_size=int(rng.choice(self.buffer_size)),
            gamma=float(rng.uniform(*self.gamma)),
            tau=log_uniform(*self.tau),
            train_frequency=int(rng.choice(self.train_frequency)),
            gradient_steps=int(rng.integers(self.gradient_steps[0], self.gradient_steps[1] + 1)),
            epsilon_start=float(rng.uniform(*self.epsilon_start)),
            epsilon_end=float(rng.uniform(*self.epsilon_end)),
            exploration_fraction=float(rng.uniform(*self.exploration_fraction)),
            batch_size=int(rng.choice(self.batch_size)),
            hidden_dims=(width, width),
        )


@dataclass
class TrialResult:
    index: int
    config: dict
    seed: int
    diverged: bool
    divergence_reason: str | None
    mean_reward: float | None  # None when the trial diverged
    mean_hardness: float | None
    loss_variance: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "config": self.config,
            "seed": self.seed,
            "diverged": self.diverged,
            "divergence_reason": self.divergence_reason,
            "mean_reward": self.mean_reward,
            "mean_hardness": self.mean_hardness,
            "loss_variance": self.loss_variance,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrialResult":
        return cls(**data)


@dataclass
class TunerReport:
    seed: int
    steps_per_trial: int
    eval_episodes: int
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def best_index(self) -> int | None:
        scored = [t for t in self.trials if not t.diverged and t.mean_reward is not None]
        if not scored:
            return None
        return max(scored, key=lambda t: t.mean_reward).index

    @property
    def best_trial(self) -> TrialResult | None:
        index = self.best_index
        return None if index is None else self.trials[index]

    def divergent_trials(self) -> list[TrialResult]:
        return [t for t in self.trials if t.diverged]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "steps_per_trial": self.steps_per_trial,
            "eval_episodes": self.eval_episodes,
            "best_index": self.best_index,
            "trials": [t.to_dict() for t in self.trials],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "TunerReport":
        report = cls(
            seed=data["seed"],
            steps_per_trial=data["steps_per_trial"],
            eval_episodes=data["eval_episodes"],
        )
        for entry in data["trials"]:
            report.trials.append(TrialResult.from_dict(entry))
        return report

    @classmethod
    def load(cls, path: str | Path) -> "TunerReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_trial(
    config: DqnConfig,
    seed: int,
    steps: int,
    eval_episodes: int,
    pool: ContextPool | None = None,
    env_config: EnvConfig | None = None,
    index: int = 0,
) -> TrialResult:
    """Train one configuration and evaluate it; deterministic per seed."""
    pool = pool or ContextPool.small()
    env = ToMStoryEnv(pool, env_config or EnvConfig(), seed=seed)
    log, policy = train(env, config, total_steps=steps, seed=seed)
    if log.diverged:
        return TrialResult(
            index=index, config=config.to_dict(), seed=seed, diverged=True,
            divergence_reason=log.divergence_reason, mean_reward=None,
            mean_hardness=None, loss_variance=log.loss_variance(),
        )
    eval_env = ToMStoryEnv(pool, env_config or EnvConfig(), seed=seed + 1)
    mean_reward, mean_hardness = evaluate_policy(eval_env, policy, eval_episodes, seed=seed + 1)
    return TrialResult(
        index=index, config=config.to_dict(), seed=seed, diverged=False,
        divergence_reason=None, mean_reward=mean_reward,
        mean_hardness=mean_hardness, loss_variance=log.loss_variance(),
    )


def random_search(
    space: SearchSpace,
    n_trials: int,
    steps_per_trial: int,
    eval_episodes: int,
    seed: int,
    pool: ContextPool | None = None,
    env_config: EnvConfig | None = None,
) -> TunerReport:
    """Sample and score `n_trials` configurations from the space."""
    rng = np.random.default_rng(seed)
    report = TunerReport(seed=seed, steps_per_trial=steps_per_trial, eval_episodes=eval_episodes)
    for i in range(n_trials):
        config = space.sample(rng)
        trial_seed = int(rng.integers(2**31))
        report.trials.append(
            run_trial(config, trial_seed, steps_per_trial, eval_episodes,
                      pool=pool, env_config=env_config, index=i)
        )
    return report
