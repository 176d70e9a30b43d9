"""Discourse relation recognition by connective prediction in cloze prompts.

The pipeline: ingest annotated argument pairs (corpus), render them into a
prompt with one masked slot (prompt), score candidate connectives at the
mask with a pluggable backend (scorer), fine-tune against gold answer
words (train), and map the winning word back to a relation label and
measure it (verbalizer, evaluation).
"""

from .corpus import (
    CONLL15,
    Dataset,
    PDTB_SECOND11,
    PDTB_SECOND_EXPLICIT,
    PDTB_TOP4,
    PDTB_TOP_EXPLICIT,
    RelationInstance,
    RelationType,
    SenseLabel,
    SenseScheme,
    Split,
    assign_split,
    corpus_stats,
    parse_conll16,
    parse_normalized,
    resolve_gold_sense,
    scheme_by_id,
    serialize_normalized,
)
from .evaluation import (
    MetricsReport,
    PredictionRecord,
    case_study,
    evaluate,
    predict,
    predict_all,
    predict_pair,
    template_search,
)
from .prompt import (
    RenderedPrompt,
    Template,
    builtin_templates,
    load_template_file,
    mask_position,
    render,
)
from .scorer import (
    FeatureConfig,
    MockScorer,
    ReferenceScorer,
    RemoteConfig,
    RemoteScorer,
    Scorer,
    ScoreVector,
    TrainStepConfig,
)
from .train import (
    SelectionMetric,
    TrainConfig,
    TrainRun,
    fit,
    make_training_pair,
    smoothed_cross_entropy,
)
from .verbalizer import (
    AnswerSet,
    Verbalizer,
    builtin_verbalizer,
    derive_top_level,
    gold_answer,
    induce_answer_sets,
    label_of,
    validate,
)

__version__ = "0.1.0"
