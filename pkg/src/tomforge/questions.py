"""Question-answer extraction from final belief tables.

Answers are read verbatim from the trace's belief state, never from any
rendered prose, so a record can be re-verified by replaying the query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .epistemic import StoryTrace, query_belief

MAX_QUESTIONS_PER_ORDER = 5

_TEMPLATES = {
    1: "Where does {0} believe the {obj} is?",
    2: "Where does {0} think {1} believes the {obj} is?",
    3: "Where does {0} think {1} thinks {2} believes the {obj} is?",
    4: "Where does {0} think {1} thinks {2} thinks {3} believes the {obj} is?",
}


@dataclass(frozen=True)
class QAItem:
    tom_order: int
    agent_chain: tuple[str, ...]
    object: str
    question_text: str
    answer: str
    answer_is_ground_truth_divergent: bool

    def to_dict(self) -> dict:
        return {
            "tom_order": self.tom_order,
            "agent_chain": list(self.agent_chain),
            "object": self.object,
            "question_text": self.question_text,
            "answer": self.answer,
            "answer_is_ground_truth_divergent": self.answer_is_ground_truth_divergent,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "QAItem":
        return cls(
            tom_order=data["tom_order"],
            agent_chain=tuple(data["agent_chain"]),
            object=data["object"],
            question_text=data["question_text"],
            answer=data["answer"],
            answer_is_ground_truth_divergent=data["answer_is_ground_truth_divergent"],
        )


def generate_questions(trace: StoryTrace, per_order: int = MAX_QUESTIONS_PER_ORDER) -> list[QAItem]:
    """Up to `per_order` QA pairs per recursion order, false beliefs first."""
    truth = trace.final_world.object_location
    by_order: dict[int, list[tuple[tuple[str, ...], str, str]]] = {1: [], 2: [], 3: [], 4: []}
    for chain, obj, value in trace.final_beliefs.entries():
        by_order[len(chain)].append((chain, obj, value))

    items: list[QAItem] = []
    for order in (1, 2, 3, 4):
        candidates = by_order[order]
        # Divergence-from-truth ranks first; chain/object order breaks ties.
        candidates.sort(key=lambda entry: (entry[2] == truth[entry[1]], entry[0], entry[1]))
        for chain, obj, value in candidates[:per_order]:
            items.append(
                QAItem(
                    tom_order=order,
                    agent_chain=chain,
                    object=obj,
                    question_text=_TEMPLATES[order].format(*chain, obj=obj),
                    answer=value,
                    answer_is_ground_truth_divergent=value != truth[obj],
                )
            )
    return items


def verify_answers(trace: StoryTrace, items: list[QAItem]) -> bool:
    """Re-check every answer against the belief query; True iff all match."""
    return all(
        query_belief(trace.final_beliefs, item.agent_chain, item.object) == item.answer
        for item in items
    )
