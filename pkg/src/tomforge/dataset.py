"""Corpus construction: rollout, gating, tiering, splitting, emission.

Every emitted record passed the false-belief validity gate, carries at
least one question, and stores the symbolic trace alongside the prose so
answers stay re-checkable forever.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .catalog import catalog_json
from .contexts import ContextPool
from .env import EnvConfig, ToMStoryEnv
from .epistemic import StoryTrace
from .questions import QAItem, generate_questions, verify_answers
from .render import EndpointConfig, RenderResult, render_llm, render_template
from .scoring import HardnessReport
from .dqn import UniformRandomPolicy

SCHEMA_VERSION = 1

TIER_PERCENTILES = (20, 40, 60, 80)


class CorpusError(ValueError):
    """A corpus is too small or malformed for the requested operation."""


@dataclass
class DatasetRecord:
    story_id: str
    trace: StoryTrace
    rendered_text: str
    render_mode: str
    qa_items: list[QAItem]
    report: HardnessReport
    tier: int | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "story_id": self.story_id,
            "rendered_text": self.rendered_text,
            "render_mode": self.render_mode,
            "qa_items": [q.to_dict() for q in self.qa_items],
            "hardness_report": self.report.to_dict(),
            "difficulty_tier": self.tier,
            "metadata": dict(self.metadata),
            "trace": self.trace.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DatasetRecord":
        return cls(
            story_id=data["story_id"],
            trace=StoryTrace.from_dict(data["trace"]),
            rendered_text=data["rendered_text"],
            render_mode=data["render_mode"],
            qa_items=[QAItem.from_dict(q) for q in data["qa_items"]],
            report=HardnessReport.from_dict(data["hardness_report"]),
            tier=data["difficulty_tier"],
            metadata=dict(data["metadata"]),
        )


def rollout_episode(env: ToMStoryEnv, policy, epsilon: float, episode_seed: int) -> tuple[StoryTrace, HardnessReport]:
    """Roll one full episode and return its trace and report."""
    rng = np.random.default_rng(episode_seed)
    obs = env.reset(seed=episode_seed)
    done = False
    info: dict = {}
    while not done:
        action = policy.act(obs, epsilon, rng)
        obs, _reward, done, info = env.step(action)
    return info["trace"], info["report"]


def generate_corpus(
    count: int,
    seed: int,
    pool: ContextPool | None = None,
    policy=None,
    epsilon: float = 0.05,
    env_config: EnvConfig | None = None,
    metadata: Mapping | None = None,
    max_attempts_factor: int = 50,
) -> list[DatasetRecord]:
    """Generate `count` gate-passing records; invalid episodes are resampled."""
    pool = pool or ContextPool.default()
    policy = policy or UniformRandomPolicy()
    env = ToMStoryEnv(pool, env_config or EnvConfig(), seed=seed)
    base_meta = dict(metadata or {})
    base_meta.setdefault("seed", seed)
    base_meta.setdefault("policy_epsilon", epsilon)

    records: list[DatasetRecord] = []
    attempts = 0
    max_attempts = max(count, 1) * max_attempts_factor
    seed_stream = np.random.default_rng(seed)
    while len(records) < count:
        if attempts >= max_attempts:
            raise CorpusError(
                f"gave up after {attempts} attempts; only {len(records)}/{count} "
                "episodes passed the validity gate"
            )
        attempts += 1
        episode_seed = int(seed_stream.integers(2**31))
        trace, report = rollout_episode(env, policy, epsilon, episode_seed)
        if not report.valid:
            continue
        qa_items = generate_questions(trace)
        if not qa_items:
            continue
        if not verify_answers(trace, qa_items):  # pragma: no cover - by construction
            raise CorpusError("generated answers failed re-verification")
        story_id = f"story-{seed}-{len(records):05d}"
        records.append(
            DatasetRecord(
                story_id=story_id,
                trace=trace,
                rendered_text=render_template(trace),
                render_mode="template",
                qa_items=qa_items,
                report=report,
                metadata={**base_meta, "episode_seed": episode_seed},
            )
        )
    return records


def apply_llm_rendering(
    records: Sequence[DatasetRecord],
    endpoint: EndpointConfig,
    client=None,
    audit_path: str | Path | None = None,
) -> list[RenderResult]:
    """Re-render records through the endpoint where the hardness gate allows.

    QA answers are untouched: the symbolic trace remains ground truth. A
    request/response audit line is written per story when a path is given.
    """
    results = []
    audit_lines = []
    for record in records:
        result = render_llm(record.trace, record.report, endpoint, client=client)
        if result.mode == "llm":
            record.rendered_text = result.text
            record.render_mode = "llm"
        else:
            record.metadata["render_fallback"] = result.fallback_reason
        audit_lines.append(
            {
                "story_id": record.story_id,
                "mode": result.mode,
                "fallback_reason": result.fallback_reason,
                "request": result.request,
                "response": result.response,
            }
        )
        results.append(result)
    if audit_path is not None:
        with open(audit_path, "w") as fh:
            for line in audit_lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
    return results


def tier_thresholds(records: Sequence[DatasetRecord]) -> list[float]:
    scores = [r.report.composite_h for r in records]
    return [float(t) for t in np.percentile(scores, TIER_PERCENTILES)]


def assign_tiers(records: Sequence[DatasetRecord]) -> list[DatasetRecord]:
    """Label each record 1..5 by corpus hardness percentile.

    A score exactly on a threshold goes to the lower tier.
    """
    if len(records) < 5:
        raise CorpusError(f"need at least 5 records to tier, got {len(records)}")
    thresholds = tier_thresholds(records)
    for record in records:
        h = record.report.composite_h
        record.tier = 1 + sum(1 for t in thresholds if h > t)
    return list(records)


def split_curriculum(records: Sequence[DatasetRecord]) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Foundation stage keeps only records (and items) of order <= 2; the
    mastery stage is the full corpus."""
    stage1 = []
    for record in records:
        low_order = [q for q in record.qa_items if q.tom_order <= 2]
        if low_order:
            stage1.append(dataclasses.replace(record, qa_items=low_order))
    return stage1, list(records)


def emit_jsonl(records: Sequence[DatasetRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def load_jsonl(path: str | Path) -> list[DatasetRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(DatasetRecord.from_dict(json.loads(line)))
    return records


def emit_catalog_reference(directory: str | Path) -> Path:
    """Write the action alphabet next to a corpus for its consumers."""
    path = Path(directory) / "actions.json"
    path.write_text(catalog_json())
    return path


def corpus_stats(records: Sequence[DatasetRecord]) -> dict:
    """Tier histogram, 20-bin hardness histogram, and per-dimension means."""
    if not records:
        raise CorpusError("empty corpus")
    scores = np.array([r.report.composite_h for r in records])
    counts, edges = np.histogram(scores, bins=20, range=(0.0, 1.0))
    tiers: dict[str, int] = {str(t): 0 for t in range(1, 6)}
    for record in records:
        if record.tier is not None:
            tiers[str(record.tier)] += 1
    qa_per_order = {str(k): 0 for k in (1, 2, 3, 4)}
    for record in records:
        for item in record.qa_items:
            qa_per_order[str(item.tom_order)] += 1
    dims = {
        name: float(np.mean([getattr(r.report, name) for r in records]))
        for name in ("s_osct", "s_depth", "s_dec", "s_soc", "s_temp")
    }
    return {
        "records": len(records),
        "tier_histogram": tiers,
        "hardness_histogram": {
            "bin_edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
        "dimension_means": dims,
        "qa_per_order": qa_per_order,
        "mean_story_length": float(np.mean([len(r.trace) for r in records])),
        "valid_fraction": float(np.mean([r.report.valid for r in records])),
    }


def write_stats(stats: Mapping, json_path: str | Path, csv_path: str | Path) -> None:
    Path(json_path).write_text(json.dumps(stats, indent=2, sort_keys=True))
    lines = ["metric,value"]
    lines.append(f"records,{stats['records']}")
    for tier, count in sorted(stats["tier_histogram"].items()):
        lines.append(f"tier_{tier},{count}")
    for name, value in sorted(stats["dimension_means"].items()):
        lines.append(f"mean_{name},{value}")
    for order, count in sorted(stats["qa_per_order"].items()):
        lines.append(f"qa_order_{order},{count}")
    lines.append(f"mean_story_length,{stats['mean_story_length']}")
    Path(csv_path).write_text("\n".join(lines) + "\n")
