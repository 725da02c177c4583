"""Interpretable topic prioritization and isolated-learner synthesis from classroom feedback."""

__version__ = "0.1.0"

from .core import (
    Codebook,
    CodedSegment,
    CohortDataset,
    HelpEvent,
    KnowledgeGraph,
    QuestionRecord,
    SurveyItem,
    SurveyItemMap,
    SurveyResponse,
    Topic,
    validate_cohort,
    validate_graph,
)
from .mediation import (
    DEFAULT_PROFILE,
    HIGHER_DISAGREEMENT_PROFILE,
    DecisionRecord,
    WeightProfile,
    compute_disagreement,
    compute_priority,
    rank_topics,
    sensitivity_sweep,
)
from .signals import GapConfig, TopicSignals, compute_friction, compute_gap_prevalence, compute_survey_difficulty
from .synthesis import (
    ChannelWeights,
    LearnerRiskProfile,
    SynthesisConfig,
    classify_learners,
    compute_channels,
    compute_exposure_scores,
    compute_sigma,
)

__all__ = [
    "__version__",
    "Codebook",
    "CodedSegment",
    "CohortDataset",
    "HelpEvent",
    "KnowledgeGraph",
    "QuestionRecord",
    "SurveyItem",
    "SurveyItemMap",
    "SurveyResponse",
    "Topic",
    "validate_cohort",
    "validate_graph",
    "DEFAULT_PROFILE",
    "HIGHER_DISAGREEMENT_PROFILE",
    "DecisionRecord",
    "WeightProfile",
    "compute_disagreement",
    "compute_priority",
    "rank_topics",
    "sensitivity_sweep",
    "ChannelWeights",
    "LearnerRiskProfile",
    "SynthesisConfig",
    "classify_learners",
    "compute_channels",
    "compute_exposure_scores",
    "compute_sigma",
    "GapConfig",
    "TopicSignals",
    "compute_friction",
    "compute_gap_prevalence",
    "compute_survey_difficulty",
]
