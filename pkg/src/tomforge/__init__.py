"""tomforge: adversarial theory-of-mind story synthesis.

Symbolic nested-belief tracking over a 15-action story DSL, exact
cognitive scoring, a DQN-guided episodic generator, and a tiered
question-answer corpus pipeline.
"""

from .actions import apply, apply_event, legal_actions, legal_bindings
from .catalog import ActionSpec, N_ACTIONS, action_spec, catalog, catalog_json
from .contexts import ContextPool, Layout
from .dataset import (
    DatasetRecord,
    assign_tiers,
    corpus_stats,
    emit_jsonl,
    generate_corpus,
    load_jsonl,
    split_curriculum,
)
from .diversity import DiversityReport, DiversityThresholds, randomization_test, structural_signature
from .dqn import (
    DqnConfig,
    DqnPolicy,
    QNetwork,
    ReplayBuffer,
    TrainingLog,
    UniformRandomPolicy,
    act,
    evaluate_policy,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .env import CurriculumPhase, EnvConfig, OBSERVATION_DIM, ToMStoryEnv, curriculum_weights
from .epistemic import (
    BeliefState,
    ChainError,
    IllegalActionError,
    Proposition,
    StoryEvent,
    StoryTrace,
    UNKNOWN,
    WorldError,
    WorldSpec,
    WorldState,
    init_world,
    normalize_chain,
    query_belief,
)
from .oracle import replay_oracle
from .questions import QAItem, generate_questions, verify_answers
from .render import EndpointConfig, RenderResult, parse_rendered, render_llm, render_template
from .scoring import (
    HardnessReport,
    composite_hardness,
    deception_density,
    detect_false_belief,
    detect_osct,
    osct_triples,
    score_trace,
    social_complexity,
    temporal_complexity,
    tom_depth,
)
from .tuner import SearchSpace, TrialResult, TunerReport, random_search, run_trial

__version__ = "0.1.0"
