from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

import tomforge as tf
from tomforge.dataset import (
    CorpusError,
    DatasetRecord,
    apply_llm_rendering,
    assign_tiers,
    corpus_stats,
    emit_catalog_reference,
    emit_jsonl,
    generate_corpus,
    load_jsonl,
    split_curriculum,
    tier_thresholds,
    write_stats,
)
from tomforge.questions import generate_questions
from tomforge.render import EndpointConfig
from tomforge.scoring import HardnessReport

from conftest import random_story


def make_record(h: float, index: int = 0, orders=(1, 2)) -> DatasetRecord:
    trace = random_story(seed=index, length=6)
    report = HardnessReport(
        has_false_belief=True, s_osct=h, s_depth=h, s_dec=h, s_soc=h, s_temp=h,
        max_tom_order=2, composite_h=h,
    )
    items = [q for q in generate_questions(trace) if q.tom_order in orders]
    return DatasetRecord(
        story_id=f"story-{index:05d}", trace=trace, rendered_text="text",
        render_mode="template", qa_items=items, report=report,
    )


def test_uniform_hardness_distributes_twenty_per_tier():
    records = []
    idx = 0
    for value in [round(0.1 * k, 1) for k in range(1, 11)]:
        for _ in range(10):
            records.append(make_record(value, idx))
            idx += 1
    assign_tiers(records)
    counts = {t: 0 for t in range(1, 6)}
    for record in records:
        counts[record.tier] += 1
    assert counts == {1: 20, 2: 20, 3: 20, 4: 20, 5: 20}


def test_all_equal_hardness_goes_to_tier_one():
    records = [make_record(0.5, i) for i in range(8)]
    assign_tiers(records)
    assert all(record.tier == 1 for record in records)


def test_threshold_ties_go_to_lower_tier():
    # 10 records, H = 0.0 .. 0.9; P20 falls between ranks.
    records = [make_record(i / 10, i) for i in range(10)]
    thresholds = tier_thresholds(records)
    assign_tiers(records)
    for record in records:
        h = record.report.composite_h
        expected = 1 + sum(1 for t in thresholds if h > t)
        assert record.tier == expected
    assert thresholds == sorted(thresholds)


def test_tiering_requires_five_records():
    records = [make_record(0.5, i) for i in range(4)]
    with pytest.raises(CorpusError):
        assign_tiers(records)


def test_split_curriculum_rules():
    low = make_record(0.4, 1, orders=(1, 2))
    mixed = make_record(0.5, 2, orders=(1, 2, 3, 4))
    high_only = make_record(0.6, 3, orders=(3, 4))
    if not high_only.qa_items:
        high_only.qa_items = [
            dataclasses.replace(q, tom_order=3, agent_chain=("a", "b", "c"))
            for q in make_record(0.6, 4, orders=(1,)).qa_items
        ]
    corpus = [low, mixed, high_only]
    stage1, stage2 = split_curriculum(corpus)
    stage1_ids = {r.story_id for r in stage1}
    assert high_only.story_id not in stage1_ids
    assert low.story_id in stage1_ids
    assert [r.story_id for r in stage2] == [r.story_id for r in corpus]
    for record in stage1:
        assert record.qa_items
        assert all(q.tom_order <= 2 for q in record.qa_items)
    # stage1 is a filtered view; stage2 keeps every item.
    mixed_in_stage2 = next(r for r in stage2 if r.story_id == mixed.story_id)
    assert any(q.tom_order > 2 for q in mixed_in_stage2.qa_items)
    assert stage1_ids <= {r.story_id for r in stage2}


def test_emit_and_reload_round_trip(tmp_path):
    records = [make_record(0.3, 1), make_record(0.6, 2), make_record(0.8, 3),
               make_record(0.2, 4), make_record(0.9, 5)]
    assign_tiers(records)
    path = tmp_path / "corpus.jsonl"
    emit_jsonl(records, path)
    loaded = load_jsonl(path)
    assert [r.to_dict() for r in loaded] == [r.to_dict() for r in records]
    # Emission is deterministic.
    second = tmp_path / "again.jsonl"
    emit_jsonl(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_generate_corpus_all_records_pass_gate_and_are_sound():
    records = generate_corpus(count=12, seed=3, pool=tf.ContextPool.default())
    assert len(records) == 12
    for record in records:
        assert record.report.has_false_belief
        assert record.qa_items
        assert all(
            tf.query_belief(record.trace.final_beliefs, q.agent_chain, q.object) == q.answer
            for q in record.qa_items
        )
        assert record.render_mode == "template"
        assert record.metadata["seed"] == 3
    assert len({r.story_id for r in records}) == 12


def test_generate_corpus_is_deterministic():
    a = generate_corpus(count=4, seed=9)
    b = generate_corpus(count=4, seed=9)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_corpus_stats_shapes(tmp_path):
    records = [make_record(h, i) for i, h in enumerate(np.linspace(0.05, 0.95, 12))]
    assign_tiers(records)
    stats = corpus_stats(records)
    assert stats["records"] == 12
    assert sum(stats["tier_histogram"].values()) == 12
    assert sum(stats["hardness_histogram"]["counts"]) == 12
    assert len(stats["hardness_histogram"]["counts"]) == 20
    assert all(0.0 <= v <= 1.0 for v in stats["dimension_means"].values())
    json_path, csv_path = tmp_path / "s.json", tmp_path / "s.csv"
    write_stats(stats, json_path, csv_path)
    assert json.loads(json_path.read_text())["records"] == 12
    assert csv_path.read_text().startswith("metric,value")


def test_catalog_reference_emitted_for_consumers(tmp_path):
    path = emit_catalog_reference(tmp_path)
    entries = json.loads(path.read_text())
    assert path.name == "actions.json"
    assert len(entries) == 15


def test_llm_rendering_below_gate_never_dispatches(tmp_path):
    calls = []

    import httpx

    def handler(request):
        calls.append(request)
        return httpx.Response(200, json={
            "choices": [{"message": {"content": "A polished story."}}]
        })

    records = [make_record(0.5, i) for i in range(3)]  # H=0.5 <= 0.85 gate
    client = httpx.Client(transport=httpx.MockTransport(handler))
    import os

    os.environ["OSCT_API_KEY"] = "test-key"
    try:
        audit = tmp_path / "audit.jsonl"
        results = apply_llm_rendering(records, EndpointConfig(), client=client, audit_path=audit)
    finally:
        del os.environ["OSCT_API_KEY"]
    assert calls == []
    assert all(r.mode == "template" for r in results)
    assert all(rec.render_mode == "template" for rec in records)
    lines = [json.loads(l) for l in audit.read_text().splitlines()]
    assert len(lines) == 3
    assert all(l["fallback_reason"] == "below_hardness_gate" for l in lines)


def test_llm_rendering_above_gate_uses_endpoint_and_audits(tmp_path):
    import httpx
    import os

    def handler(request):
        return httpx.Response(200, json={
            "choices": [{"message": {"content": "A polished story."}}]
        })

    record = make_record(0.95, 7)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    os.environ["OSCT_API_KEY"] = "test-key"
    try:
        audit = tmp_path / "audit.jsonl"
        results = apply_llm_rendering([record], EndpointConfig(), client=client, audit_path=audit)
    finally:
        del os.environ["OSCT_API_KEY"]
    assert results[0].mode == "llm"
    assert record.rendered_text == "A polished story."
    assert record.render_mode == "llm"
    line = json.loads(audit.read_text().splitlines()[0])
    assert line["story_id"] == record.story_id
    assert line["request"]["model"]
    assert line["response"]["choices"]
    # Answers still come from the symbolic trace.
    assert all(
        tf.query_belief(record.trace.final_beliefs, q.agent_chain, q.object) == q.answer
        for q in record.qa_items
    )
