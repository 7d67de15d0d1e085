"""Deep Q-learning over the story environment, in plain numpy.

The value network is a small fully-connected ReLU net with a hand-written
backward pass in float64, which keeps runs bit-reproducible from a single
seed and lets tests check the analytic TD-loss gradient against central
finite differences. Replay is uniform with FIFO eviction; the target
network follows the online one by a soft factor per training event (a
hard copy interval is available behind config).
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .catalog import N_ACTIONS
from .env import OBSERVATION_DIM, ToMStoryEnv

_HUBER_DELTA = 1.0
_CHECKPOINT_MAGIC = b"TFCKPT01"


@dataclass(frozen=True)
class DqnConfig:
    learning_rate: float = 5.95e-4
    buffer_size: int = 100_000
    gamma: float = 0.902
    tau: float = 0.019
    train_frequency: int = 8
    gradient_steps: int = 5
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    exploration_fraction: float = 0.2
    batch_size: int = 64
    hidden_dims: tuple[int, ...] = (256, 256)
    target_update_mode: str = "soft"  # "soft": tau per training event; "hard": copy on interval
    target_update_interval: int = 500
    q_explosion_threshold: float = 1e3  # |Q| beyond this counts as divergence

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.buffer_size < self.batch_size:
            raise ValueError("buffer_size must be at least batch_size")
        if self.target_update_mode not in ("soft", "hard"):
            raise ValueError(f"unknown target_update_mode: {self.target_update_mode!r}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["hidden_dims"] = list(self.hidden_dims)
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "DqnConfig":
        kwargs = dict(data)
        if "hidden_dims" in kwargs:
            kwargs["hidden_dims"] = tuple(kwargs["hidden_dims"])
        return cls(**kwargs)


class QNetwork:
    """Fully-connected ReLU net mapping observations to 15 action values."""

    def __init__(
        self,
        input_dim: int = OBSERVATION_DIM,
        output_dim: int = N_ACTIONS,
        hidden_dims: Iterable[int] = (256, 256),
        rng: np.random.Generator | None = None,
    ) -> None:
        rng = rng or np.random.default_rng(0)
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden_dims = tuple(hidden_dims)
        dims = [input_dim, *self.hidden_dims, output_dim]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        q, _ = self._forward_cached(np.atleast_2d(x))
        return q

    def q_values(self, observation: np.ndarray) -> np.ndarray:
        return self.forward(observation)[0]

    def _forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        activations = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.maximum(z, 0.0)
            activations.append(h)
        return h, activations

    def backward(self, activations: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients w.r.t. all parameters, ordered [W0, b0, W1, b1, ...]."""
        grads: list[np.ndarray] = []
        delta = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append(delta.sum(axis=0))  # bias
            grads.append(activations[i].T @ delta)  # weight
            if i > 0:
                delta = (delta @ self.weights[i].T) * (activations[i] > 0)
        grads.reverse()
        return grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_flat(self, flat: np.ndarray) -> None:
        cursor = 0
        for p in self.parameters():
            p[...] = flat[cursor : cursor + p.size].reshape(p.shape)
            cursor += p.size

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def copy(self) -> "QNetwork":
        dup = QNetwork.__new__(QNetwork)
        dup.input_dim = self.input_dim
        dup.output_dim = self.output_dim
        dup.hidden_dims = self.hidden_dims
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    def soft_update_from(self, other: "QNetwork", tau: float) -> None:
        """Move parameters toward `other` by exactly factor tau."""
        for mine, theirs in zip(self.parameters(), other.parameters()):
            mine *= 1.0 - tau
            mine += tau * theirs


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


class ReplayBuffer:
    """Uniform-sampling transition store with FIFO eviction."""

    def __init__(self, capacity: int, obs_dim: int = OBSERVATION_DIM,
                 rng: np.random.Generator | None = None) -> None:
        self.capacity = capacity
        self.rng = rng or np.random.default_rng(0)
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity)
        self.done = np.zeros(capacity)
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, obs: np.ndarray, action: int, reward: float,
            next_obs: np.ndarray, done: bool) -> None:
        i = self._cursor
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self._cursor = (self._cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> dict[str, np.ndarray]:
        idx = self.rng.integers(self._size, size=batch_size)
        return {
            "obs": self.obs[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "next_obs": self.next_obs[idx],
            "done": self.done[idx],
        }


def huber(errors: np.ndarray, delta: float = _HUBER_DELTA) -> np.ndarray:
    small = np.abs(errors) <= delta
    return np.where(small, 0.5 * errors**2, delta * (np.abs(errors) - 0.5 * delta))


def huber_grad(errors: np.ndarray, delta: float = _HUBER_DELTA) -> np.ndarray:
    return np.clip(errors, -delta, delta)


def td_loss(network: QNetwork, target: QNetwork, batch: Mapping[str, np.ndarray],
            gamma: float) -> float:
    """Mean Huber TD loss of a frozen batch (no gradient)."""
    loss, _, _ = td_loss_and_grad(network, target, batch, gamma)
    return loss


def td_loss_and_grad(
    network: QNetwork, target: QNetwork, batch: Mapping[str, np.ndarray], gamma: float
) -> tuple[float, list[np.ndarray], float]:
    """Loss, analytic parameter gradients, and the largest |Q| seen."""
    q_all, cache = network._forward_cached(batch["obs"])
    rows = np.arange(len(batch["action"]))
    q_taken = q_all[rows, batch["action"]]
    next_q = target.forward(batch["next_obs"]).max(axis=1)
    targets = batch["reward"] + gamma * (1.0 - batch["done"]) * next_q
    errors = q_taken - targets
    loss = float(huber(errors).mean())

    grad_out = np.zeros_like(q_all)
    grad_out[rows, batch["action"]] = huber_grad(errors) / len(rows)
    grads = network.backward(cache, grad_out)
    q_extreme = float(max(np.abs(q_all).max(), np.abs(next_q).max()))
    return loss, grads, q_extreme


def act(network: QNetwork, observation: np.ndarray, epsilon: float,
        rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties break toward the lowest id."""
    observation = np.asarray(observation)
    if observation.shape != (network.input_dim,):
        raise ValueError(f"observation must have shape ({network.input_dim},)")
    if rng.random() < epsilon:
        return int(rng.integers(network.output_dim))
    return int(np.argmax(network.q_values(observation)))


@dataclass(frozen=True)
class DqnPolicy:
    """A Q-network plus the act() convention, for rollout consumers."""

    network: QNetwork

    def act(self, observation: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
        return act(self.network, observation, epsilon, rng)


@dataclass(frozen=True)
class UniformRandomPolicy:
    """Baseline policy: uniform over the action alphabet, epsilon ignored."""

    n_actions: int = N_ACTIONS

    def act(self, observation: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_actions))


def epsilon_schedule(step: int, total_steps: int, config: DqnConfig) -> float:
    horizon = max(1, int(config.exploration_fraction * total_steps))
    frac = min(1.0, step / horizon)
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


@dataclass
class EpisodeRecord:
    episode: int
    env_step: int
    reward: float
    hardness: float
    loss: float
    epsilon: float


@dataclass
class TrainingLog:
    config: DqnConfig
    seed: int
    total_steps: int
    episodes: list[EpisodeRecord] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    status: str = "completed"
    divergence_reason: str | None = None

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"

    def loss_variance(self, warmup_fraction: float = 0.25) -> float:
        """Variance of per-update losses after the initial transient.

        The first quarter of updates is the learning transient; variance
        beyond it measures how (un)settled the regression stays.
        """
        start = int(len(self.losses) * warmup_fraction)
        tail = self.losses[start:]
        if len(tail) < 2:
            return 0.0
        return float(np.var(tail))

    def mean_episode_reward(self, last: int | None = None) -> float:
        records = self.episodes[-last:] if last else self.episodes
        if not records:
            return 0.0
        return float(np.mean([r.reward for r in records]))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "env_step", "reward", "hardness", "loss", "epsilon"])
            for r in self.episodes:
                writer.writerow([r.episode, r.env_step, r.reward, r.hardness, r.loss, r.epsilon])


class DivergenceError(RuntimeError):
    """Raised internally when Q-values or the loss blow up."""


def train(env: ToMStoryEnv, config: DqnConfig, total_steps: int, seed: int) -> tuple[TrainingLog, DqnPolicy]:
    """Run epsilon-greedy DQN training; returns the log and final policy.

    All randomness (init, exploration, replay sampling, episode resets)
    derives from `seed`, so identical calls produce identical logs.
    """
    ss = np.random.SeedSequence(seed)
    init_ss, act_ss, sample_ss, reset_ss = ss.spawn(4)
    network = QNetwork(OBSERVATION_DIM, N_ACTIONS, config.hidden_dims,
                       np.random.default_rng(init_ss))
    target = network.copy()
    optimizer = Adam(network.parameters(), config.learning_rate)
    buffer = ReplayBuffer(config.buffer_size, OBSERVATION_DIM,
                          np.random.default_rng(sample_ss))
    act_rng = np.random.default_rng(act_ss)
    reset_rng = np.random.default_rng(reset_ss)

    log = TrainingLog(config=config, seed=seed, total_steps=total_steps)
    obs = env.reset(seed=int(reset_rng.integers(2**31)))
    episode_reward = 0.0
    episode_index = 0
    losses_since_episode: list[float] = []

    def _update_batch() -> None:
        for _ in range(config.gradient_steps):
            batch = buffer.sample(config.batch_size)
            loss, grads, q_extreme = td_loss_and_grad(network, target, batch, config.gamma)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite TD loss at step {step}")
            if q_extreme > config.q_explosion_threshold:
                raise DivergenceError(
                    f"Q-values exploded (|Q| = {q_extreme:.3g}) at step {step}"
                )
            optimizer.step(grads)
            log.losses.append(loss)
            losses_since_episode.append(loss)

    for step in range(total_steps):
        epsilon = epsilon_schedule(step, total_steps, config)
        action = act(network, obs, epsilon, act_rng)
        next_obs, reward, done, info = env.step(action)
        buffer.add(obs, action, reward, next_obs, done)
        episode_reward += reward
        obs = next_obs

        if done:
            report = info["report"]
            mean_loss = float(np.mean(losses_since_episode)) if losses_since_episode else 0.0
            log.episodes.append(EpisodeRecord(
                episode=episode_index, env_step=step + 1, reward=episode_reward,
                hardness=report.composite_h, loss=mean_loss, epsilon=epsilon,
            ))
            episode_index += 1
            episode_reward = 0.0
            losses_since_episode = []
            obs = env.reset(seed=int(reset_rng.integers(2**31)))

        if (step + 1) % config.train_frequency == 0 and len(buffer) >= config.batch_size:
            try:
                _update_batch()
            except DivergenceError as exc:
                log.status = "diverged"
                log.divergence_reason = str(exc)
                return log, DqnPolicy(network)
            if config.target_update_mode == "soft":
                target.soft_update_from(network, config.tau)

        if config.target_update_mode == "hard" and (step + 1) % config.target_update_interval == 0:
            target = network.copy()

    return log, DqnPolicy(network)


def evaluate_policy(
    env: ToMStoryEnv,
    policy: DqnPolicy,
    episodes: int,
    epsilon: float = 0.02,
    seed: int = 0,
) -> tuple[float, float]:
    """Mean episode reward and mean hardness over near-greedy rollouts."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    rewards = []
    hardness = []
    for i in range(episodes):
        obs = env.reset(seed=seed + i)
        total = 0.0
        done = False
        while not done:
            action = policy.act(obs, epsilon, rng)
            obs, reward, done, info = env.step(action)
            total += reward
        rewards.append(total)
        hardness.append(info["report"].composite_h)
    return float(np.mean(rewards)), float(np.mean(hardness))


def save_checkpoint(path: str | Path, policy: DqnPolicy, config: DqnConfig,
                    metadata: Mapping | None = None) -> None:
    """Versioned binary: magic, JSON header, then raw float64 parameters."""
    network = policy.network
    arrays = network.parameters()
    header = {
        "config": config.to_dict(),
        "metadata": dict(metadata or {}),
        "network": {
            "input_dim": network.input_dim,
            "output_dim": network.output_dim,
            "hidden_dims": list(network.hidden_dims),
        },
        "arrays": [list(a.shape) for a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=np.float64).tobytes())


def load_checkpoint(path: str | Path) -> tuple[DqnPolicy, DqnConfig, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(_CHECKPOINT_MAGIC))
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len))
        net_info = header["network"]
        network = QNetwork(net_info["input_dim"], net_info["output_dim"],
                           net_info["hidden_dims"])
        for param, shape in zip(network.parameters(), header["arrays"]):
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(count * 8), dtype=np.float64).reshape(shape)
            param[...] = data
    config = DqnConfig.from_dict(header["config"])
    return DqnPolicy(network), config, header["metadata"]


def checkpoint_id(path: str | Path) -> str:
    """Short content hash identifying a checkpoint in dataset metadata."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digest[:12]
