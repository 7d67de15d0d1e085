from __future__ import annotations

import tomforge as tf
from tomforge.questions import MAX_QUESTIONS_PER_ORDER, generate_questions, verify_answers

from conftest import random_story, run_script


def test_at_most_five_items_per_order():
    for seed in range(25):
        trace = random_story(seed=seed, length=12)
        items = generate_questions(trace)
        for order in (1, 2, 3, 4):
            assert sum(1 for q in items if q.tom_order == order) <= MAX_QUESTIONS_PER_ORDER


def test_answers_match_belief_queries_exactly():
    for seed in range(25):
        trace = random_story(seed=seed, length=12)
        items = generate_questions(trace)
        assert verify_answers(trace, items)
        for item in items:
            assert item.tom_order == len(item.agent_chain)
            assert tf.query_belief(trace.final_beliefs, item.agent_chain, item.object) == item.answer


def test_sally_anne_yields_divergent_first_order_question(sally_anne_trace):
    items = generate_questions(sally_anne_trace)
    first_order = [q for q in items if q.tom_order == 1]
    assert first_order
    top = first_order[0]
    # Divergent chains rank first: Sally's stale belief about the marble.
    assert top.agent_chain == ("Sally",)
    assert top.answer == "basket"
    assert top.answer_is_ground_truth_divergent


def test_divergent_answers_rank_before_truthful_ones(lie_trace):
    items = generate_questions(lie_trace)
    by_order = {}
    for item in items:
        by_order.setdefault(item.tom_order, []).append(item)
    for order_items in by_order.values():
        seen_truthful = False
        for item in order_items:
            if not item.answer_is_ground_truth_divergent:
                seen_truthful = True
            else:
                assert not seen_truthful, "divergent item ranked after a truthful one"


def test_trace_with_no_set_beliefs_yields_no_questions():
    spec = tf.WorldSpec(
        agents=("Ada", "Bo"),
        rooms=("east", "west"),
        containers={},
        objects=("kite",),
        object_placement={"kite": "east"},
        agent_rooms={"Ada": "west", "Bo": "west"},
    )
    world, beliefs = tf.init_world(spec)
    trace = tf.StoryTrace(spec, [], world, beliefs, [])
    assert generate_questions(trace) == []


def test_question_text_templates_per_order(bluff_trace):
    items = generate_questions(bluff_trace)
    for item in items:
        assert item.question_text.startswith("Where does ")
        assert item.object in item.question_text
        assert item.question_text.count("think") == max(0, item.tom_order - 1)


def test_qa_item_serialization_round_trip(bluff_trace):
    items = generate_questions(bluff_trace)
    for item in items:
        clone = tf.QAItem.from_dict(item.to_dict())
        assert clone == item
