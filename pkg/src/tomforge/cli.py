"""Single entry point: seeded, reproducible pipeline subcommands.

Exit codes: 0 success, 2 usage error (argparse), 3 unreadable or invalid
config/context file, 4 missing or invalid checkpoint, 5 invalid input
data (trace or corpus), 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as dataset_mod
from . import diversity as diversity_mod
from .contexts import ContextPool
from .dqn import (
    DqnConfig,
    UniformRandomPolicy,
    checkpoint_id,
    evaluate_policy,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .env import EnvConfig, ToMStoryEnv
from .epistemic import StoryTrace
from .render import EndpointConfig, render_llm, render_template
from .scoring import score_trace
from .tuner import SearchSpace, random_search

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECKPOINT = 4
EXIT_DATA = 5

_EPILOG = """exit codes:
  0  success
  2  usage error (unknown flag or subcommand)
  3  unreadable or invalid config/context file
  4  missing or invalid checkpoint
  5  invalid input data (trace or corpus)
  1  any other failure
"""


class ConfigError(Exception):
    pass


class CheckpointError(Exception):
    pass


class DataError(Exception):
    pass


def _load_pool(args) -> ContextPool:
    if getattr(args, "contexts", None):
        try:
            return ContextPool.load(args.contexts)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load context pool {args.contexts}: {exc}") from exc
    if getattr(args, "pool", "default") == "small":
        return ContextPool.small()
    return ContextPool.default()


def _load_env_config(args) -> EnvConfig:
    path = getattr(args, "env_config", None)
    if not path:
        return EnvConfig()
    try:
        return EnvConfig.load(path)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"cannot load env config {path}: {exc}") from exc


def _load_dqn_config(args) -> DqnConfig:
    path = getattr(args, "dqn_config", None)
    if not path:
        return DqnConfig()
    try:
        return DqnConfig.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot load DQN config {path}: {exc}") from exc


def _load_policy(args):
    path = getattr(args, "checkpoint", None)
    if not path:
        return UniformRandomPolicy(), None
    try:
        policy, _config, _meta = load_checkpoint(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
    return policy, checkpoint_id(path)


def _load_trace(path: str) -> StoryTrace:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return StoryTrace.from_json(text)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load trace {path}: {exc}") from exc


def _load_endpoint(args) -> EndpointConfig:
    path = getattr(args, "endpoint_config", None)
    if not path:
        return EndpointConfig()
    try:
        return EndpointConfig.load(path)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot load endpoint config {path}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_generate(args) -> int:
    pool = _load_pool(args)
    policy, _ = _load_policy(args)
    config = EnvConfig(episode_length=args.steps)
    env = ToMStoryEnv(pool, config, seed=args.seed)
    trace, _report = dataset_mod.rollout_episode(env, policy, args.epsilon, args.seed)
    _emit(trace.to_json(), args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    trace = _load_trace(args.trace)
    report = score_trace(trace)
    _emit(json.dumps(report.to_dict(), indent=2, sort_keys=True), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    pool = _load_pool(args)
    env_config = _load_env_config(args)
    if args.curriculum:
        env_config = EnvConfig(
            episode_length=env_config.episode_length,
            illegal_penalty=env_config.illegal_penalty,
            gate_failure_reward=env_config.gate_failure_reward,
            phase_weights=env_config.phase_weights,
            curriculum_total_steps=args.steps,
            fixed_phase=env_config.fixed_phase,
        )
    config = _load_dqn_config(args)
    env = ToMStoryEnv(pool, env_config, seed=args.seed)
    log, policy = train(env, config, total_steps=args.steps, seed=args.seed)
    save_checkpoint(args.out, policy, config, metadata={"seed": args.seed, "steps": args.steps})
    if args.log:
        log.to_csv(args.log)
    summary = {
        "status": log.status,
        "divergence_reason": log.divergence_reason,
        "episodes": len(log.episodes),
        "mean_reward_last_100": log.mean_episode_reward(last=100),
        "checkpoint": str(args.out),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if log.status == "completed" else EXIT_ERROR


def cmd_tune(args) -> int:
    pool = _load_pool(args)
    report = random_search(
        SearchSpace(),
        n_trials=args.trials,
        steps_per_trial=args.steps_per_trial,
        eval_episodes=args.eval_episodes,
        seed=args.seed,
        pool=pool,
    )
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_dataset(args) -> int:
    pool = _load_pool(args)
    policy, ckpt_id = _load_policy(args)
    metadata = {
        "checkpoint_id": ckpt_id,
        "render_mode_requested": args.render,
        "generator": "dqn" if ckpt_id else "random",
    }
    records = dataset_mod.generate_corpus(
        count=args.count, seed=args.seed, pool=pool, policy=policy,
        epsilon=args.epsilon, metadata=metadata,
    )
    if args.render == "llm":
        endpoint = _load_endpoint(args)
        dataset_mod.apply_llm_rendering(records, endpoint, audit_path=args.audit)
    dataset_mod.assign_tiers(records)
    out = Path(args.out)
    dataset_mod.emit_jsonl(records, out)
    dataset_mod.emit_catalog_reference(out.parent)
    stats = dataset_mod.corpus_stats(records)
    dataset_mod.write_stats(stats, out.with_suffix(".stats.json"), out.with_suffix(".stats.csv"))
    if args.emit_splits:
        stage1, stage2 = dataset_mod.split_curriculum(records)
        dataset_mod.emit_jsonl(stage1, out.with_suffix(".stage1.jsonl"))
        dataset_mod.emit_jsonl(stage2, out.with_suffix(".stage2.jsonl"))
    print(json.dumps({"records": len(records), "out": str(out)}, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    pool = _load_pool(args)
    policy, _ = _load_policy(args)
    env = ToMStoryEnv(pool, EnvConfig(), seed=args.seed)
    report = diversity_mod.randomization_test(
        policy, env, episodes=args.episodes, eval_epsilon=args.epsilon, seed=args.seed
    )
    if args.json:
        _emit(json.dumps(report.to_dict(), indent=2, sort_keys=True), args.out)
    else:
        _emit(report.to_table(), args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        records = dataset_mod.load_jsonl(args.corpus)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load corpus {args.corpus}: {exc}") from exc
    if not records:
        raise DataError(f"corpus {args.corpus} is empty")
    stats = dataset_mod.corpus_stats(records)
    if args.out:
        prefix = Path(args.out)
        dataset_mod.write_stats(stats, prefix.with_suffix(".json"), prefix.with_suffix(".csv"))
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_render(args) -> int:
    trace = _load_trace(args.trace)
    if args.mode == "template":
        _emit(render_template(trace), args.out)
        return EXIT_OK
    endpoint = _load_endpoint(args)
    result = render_llm(trace, score_trace(trace), endpoint)
    _emit(result.text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomforge",
        description="Adversarial theory-of-mind story synthesis pipeline",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, checkpoint=False):
        p.add_argument("--seed", type=int, default=0, help="master seed for the run")
        p.add_argument("--contexts", help="context pool JSON file")
        p.add_argument("--pool", choices=("default", "small"), default="default",
                       help="built-in context pool when --contexts is not given")
        if checkpoint:
            p.add_argument("--checkpoint", help="policy checkpoint (omit for a random policy)")

    p = sub.add_parser("generate", help="roll one seeded episode and print its trace")
    add_common(p, checkpoint=True)
    p.add_argument("--steps", type=int, default=15, help="episode length")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="score a trace JSON into a hardness report")
    p.add_argument("--trace", required=True, help="trace JSON path, or - for stdin")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the DQN generator")
    add_common(p)
    p.add_argument("--steps", type=int, default=50_000)
    p.add_argument("--dqn-config", help="DQN config JSON file")
    p.add_argument("--env-config", help="environment config JSON file")
    p.add_argument("--curriculum", action="store_true",
                   help="enable the three-phase scheduler over the run")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log", help="training log CSV output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="random search over DQN hyperparameters")
    add_common(p)
    p.add_argument("--trials", type=int, default=12)
    p.add_argument("--steps-per-trial", type=int, default=5_000)
    p.add_argument("--eval-episodes", type=int, default=10)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("dataset", help="generate a tiered QA corpus as JSON Lines")
    add_common(p, checkpoint=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--render", choices=("template", "llm"), default="template")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--endpoint-config", help="endpoint config JSON (llm render)")
    p.add_argument("--audit", help="LLM request/response audit JSONL path")
    p.add_argument("--emit-splits", action="store_true",
                   help="also write curriculum stage1/stage2 JSONL files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("validate", help="run the randomization/diversity audit")
    add_common(p, checkpoint=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="summarize an existing corpus JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="output file prefix for stats JSON/CSV")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="render a trace to prose")
    p.add_argument("--trace", required=True, help="trace JSON path, or - for stdin")
    p.add_argument("--mode", choices=("template", "llm"), default="template")
    p.add_argument("--endpoint-config")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - single CLI backstop
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
